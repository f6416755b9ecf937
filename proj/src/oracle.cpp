#include "sagaqnet/oracle.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>

namespace sqn::oracle {

namespace {
const Cd kI(0.0, 1.0);
}

int qubit_count_of_dim(Eigen::Index dim) {
    int n = 0;
    while ((Eigen::Index(1) << n) < dim) ++n;
    if ((Eigen::Index(1) << n) != dim) throw OracleError("dimension is not a power of two");
    return n;
}

Mat pauli_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Mat pauli_y() {
    Mat m(2, 2);
    m << 0, -kI, kI, 0;
    return m;
}

Mat pauli_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Mat hadamard() {
    Mat m(2, 2);
    m << 1, 1, 1, -1;
    return m / std::sqrt(2.0);
}

Mat rx(double theta) {
    return std::cos(theta / 2) * Mat::Identity(2, 2) - kI * std::sin(theta / 2) * pauli_x();
}

Mat phase_z(double theta) {
    Mat m = Mat::Identity(2, 2);
    m(1, 1) = std::exp(kI * theta);
    return m;
}

Mat embed1(int n, int q, const Mat& u) {
    Mat out = Mat::Identity(1, 1);
    for (int i = 0; i < n; ++i) {
        Mat f = (i == q) ? u : Mat::Identity(2, 2);
        out = Eigen::kroneckerProduct(out, f).eval();
    }
    return out;
}

Mat embed_cnot(int n, int c, int t) {
    Mat p0(2, 2), p1(2, 2);
    p0 << 1, 0, 0, 0;
    p1 << 0, 0, 0, 1;
    return embed1(n, c, p0) + embed1(n, c, p1) * embed1(n, t, pauli_x());
}

Mat embed_cz(int n, int a, int b) {
    Mat p0(2, 2), p1(2, 2);
    p0 << 1, 0, 0, 0;
    p1 << 0, 0, 0, 1;
    return embed1(n, a, p0) + embed1(n, a, p1) * embed1(n, b, pauli_z());
}

std::vector<VertexRef> qubit_order(const GraphState& g) {
    return {g.vertices().begin(), g.vertices().end()};
}

Vec graph_to_state(const GraphState& g) {
    int n = int(g.vertices().size());
    if (n > kMaxPureQubits) throw OracleError("too many qubits for the dense oracle");
    Eigen::Index dim = Eigen::Index(1) << n;
    Vec psi = Vec::Constant(dim, Cd(1.0 / std::sqrt(double(dim)), 0.0));
    auto order = qubit_order(g);
    auto index_of = [&](const VertexRef& v) {
        return int(std::lower_bound(order.begin(), order.end(), v) - order.begin());
    };
    for (const auto& e : g.edges()) {
        int a = index_of(e.a), b = index_of(e.b);
        // CZ flips the sign where both qubits are 1
        for (Eigen::Index i = 0; i < dim; ++i) {
            bool ba = (i >> (n - 1 - a)) & 1;
            bool bb = (i >> (n - 1 - b)) & 1;
            if (ba && bb) psi[i] = -psi[i];
        }
    }
    return psi;
}

bool equal_up_to_phase(const Vec& u, const Vec& v, double tol) {
    if (u.size() != v.size()) return false;
    Eigen::Index pivot = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        double m = std::abs(u[i]);
        if (m > best) {
            best = m;
            pivot = i;
        }
    }
    if (pivot < 0) return v.norm() <= tol;
    if (std::abs(v[pivot]) < 1e-15) return false;
    Cd phase = u[pivot] / v[pivot];
    phase /= std::abs(phase);
    return (u - phase * v).lpNorm<Eigen::Infinity>() <= tol;
}

Mat density_of(const Vec& psi) { return psi * psi.adjoint(); }

Mat depolarize_qubit(const Mat& rho, int q_index, double q, int n) {
    if (q < 0.0 || q > 1.0) throw OracleError("depolarizing weight out of range");
    Mat x = embed1(n, q_index, pauli_x());
    Mat y = embed1(n, q_index, pauli_y());
    Mat z = embed1(n, q_index, pauli_z());
    return (1.0 - q) * rho + (q / 4.0) * (rho + x * rho * x + y * rho * y + z * rho * z);
}

Vec bell_state(int which) {
    double s = 1.0 / std::sqrt(2.0);
    Vec v = Vec::Zero(4);
    switch (which) {
        case 0: v[0] = s; v[3] = s; break;   // Phi+
        case 1: v[0] = s; v[3] = -s; break;  // Phi-
        case 2: v[1] = s; v[2] = s; break;   // Psi+
        case 3: v[1] = s; v[2] = -s; break;  // Psi-
        default: throw OracleError("bell_state index out of range");
    }
    return v;
}

namespace {

// Projector onto bell_state(which) on qubits (qa, qb) of an n-qubit register.
Mat bell_projector(int n, int qa, int qb, int which) {
    Vec b = bell_state(which);
    Mat proj2 = b * b.adjoint();
    Eigen::Index dim = Eigen::Index(1) << n;
    Mat out = Mat::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        int ia = (i >> (n - 1 - qa)) & 1;
        int ib = (i >> (n - 1 - qb)) & 1;
        for (Eigen::Index j = 0; j < dim; ++j) {
            int ja = (j >> (n - 1 - qa)) & 1;
            int jb = (j >> (n - 1 - qb)) & 1;
            Eigen::Index mask = (Eigen::Index(1) << (n - 1 - qa)) | (Eigen::Index(1) << (n - 1 - qb));
            if ((i & ~mask) != (j & ~mask)) continue;
            out(i, j) = proj2(ia * 2 + ib, ja * 2 + jb);
        }
    }
    return out;
}

}  // namespace

BellProjection bell_project(const Mat& rho, int qa, int qb, int outcome) {
    int n = qubit_count_of_dim(rho.rows());
    Mat P = bell_projector(n, qa, qb, outcome);
    Mat post = P * rho * P;
    double prob = post.trace().real();
    BellProjection bp;
    bp.probability = prob;
    if (prob > 1e-15)
        bp.post = post / prob;
    else
        bp.post = Mat();  // zero-probability outcome: no state
    return bp;
}

Mat partial_trace_keep(const Mat& rho, const std::vector<int>& keep, int n) {
    int k = int(keep.size());
    Eigen::Index dk = Eigen::Index(1) << k;
    std::vector<int> traced;
    for (int q = 0; q < n; ++q)
        if (std::find(keep.begin(), keep.end(), q) == keep.end()) traced.push_back(q);
    int m = int(traced.size());
    Eigen::Index dm = Eigen::Index(1) << m;
    auto full_index = [&](Eigen::Index kept_bits, Eigen::Index traced_bits) {
        Eigen::Index idx = 0;
        for (int i = 0; i < k; ++i)
            if ((kept_bits >> (k - 1 - i)) & 1) idx |= Eigen::Index(1) << (n - 1 - keep[i]);
        for (int i = 0; i < m; ++i)
            if ((traced_bits >> (m - 1 - i)) & 1) idx |= Eigen::Index(1) << (n - 1 - traced[i]);
        return idx;
    };
    Mat out = Mat::Zero(dk, dk);
    for (Eigen::Index a = 0; a < dk; ++a)
        for (Eigen::Index b = 0; b < dk; ++b)
            for (Eigen::Index t = 0; t < dm; ++t) out(a, b) += rho(full_index(a, t), full_index(b, t));
    return out;
}

BellDiag bell_diag_of(const Mat& rho2) {
    if (rho2.rows() != 4) throw OracleError("bell_diag_of expects a two-qubit state");
    BellDiag bd;
    for (int i = 0; i < 4; ++i) {
        Vec b = bell_state(i);
        bd.p[i] = (b.adjoint() * rho2 * b).real()(0, 0);
    }
    // clamp and renormalize; off-diagonals in the Bell basis are dropped
    for (int i = 0; i < 4; ++i) bd.p[i] = std::max(0.0, bd.p[i]);
    double s = bd.p.sum();
    if (s > 0) bd.p /= s;
    return bd;
}

Mat bell_diag_density(const BellDiag& bd) {
    Mat rho = Mat::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
        Vec b = bell_state(i);
        rho += bd.p[i] * (b * b.adjoint());
    }
    return rho;
}

}  // namespace sqn::oracle
