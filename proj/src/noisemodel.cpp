#include "sagaqnet/noisemodel.hpp"

#include <cmath>

namespace sqn {

bool BellDiag::valid(double tol) const {
    for (int i = 0; i < 4; ++i)
        if (p[i] < -tol) return false;
    return std::abs(p.sum() - 1.0) <= tol;
}

namespace {

void check_prob(double q, const char* what) {
    if (q < 0.0 || q > 1.0) throw NoiseError(std::string(what) + " out of [0,1]");
}

}  // namespace

BellDiag werner(double f) {
    if (f < 0.25 || f > 1.0) throw NoiseError("werner fidelity out of [1/4,1]");
    double r = (1.0 - f) / 3.0;
    return BellDiag{{f, r, r, r}};
}

BellDiag depolarize(const BellDiag& bd, double q) {
    check_prob(q, "depolarizing probability");
    BellDiag out;
    out.p = (1.0 - q) * bd.p + Eigen::Vector4d::Constant(q / 4.0);
    return out;
}

BellDiag decay(const BellDiag& bd, double dt, double t_mem) {
    if (dt < 0.0) throw NoiseError("negative decay time");
    if (t_mem <= 0.0) throw NoiseError("t_mem must be positive");
    double q = 1.0 - std::exp(-dt / t_mem);
    return depolarize(depolarize(bd, q), q);
}

BellDiag swap_map(const BellDiag& a, const BellDiag& b, const NoiseParams& noise) {
    // index bits: x = i>>1 (bit flip), z = i&1 (phase flip); the joint
    // Bell measurement XORs the error labels of the two pairs.
    BellDiag out;
    out.p.setZero();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out.p[i ^ j] += a.p[i] * b.p[j];
    out.p /= out.p.sum();
    return depolarize(out, noise.p_meas);
}

PurifyResult purify_map(const BellDiag& a, const BellDiag& b, const NoiseParams& noise,
                        PurifyMode /*mode*/) {
    BellDiag an = depolarize(a, noise.p_gate);
    BellDiag bn = depolarize(b, noise.p_gate);

    // DEJMPS: bilateral Rx rotations swap Phi- and Psi-, i.e. (x,z)->(x^z,z),
    // then bilateral CNOT and a parity check of the target pair's X label.
    auto rotate = [](const BellDiag& p) {
        Eigen::Vector4d out = Eigen::Vector4d::Zero();
        for (int i = 0; i < 4; ++i) {
            int x = i >> 1, z = i & 1;
            out[((x ^ z) << 1) | z] += p.p[i];
        }
        return out;
    };
    Eigen::Vector4d pa = rotate(an);
    Eigen::Vector4d pb = rotate(bn);

    Eigen::Vector4d succ = Eigen::Vector4d::Zero();
    Eigen::Vector4d fail = Eigen::Vector4d::Zero();
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            int x1 = i >> 1, z1 = i & 1;
            int x2 = j >> 1, z2 = j & 1;
            int k = (x1 << 1) | (z1 ^ z2);
            if (x1 == x2)
                succ[k] += pa[i] * pb[j];
            else
                fail[k] += pa[i] * pb[j];
        }
    }
    PurifyResult res;
    res.p_succ = succ.sum();
    if (res.p_succ > 0.0)
        res.out = depolarize(BellDiag{succ / res.p_succ}, noise.p_meas);
    else
        res.out = BellDiag{Eigen::Vector4d::Constant(0.25)};
    double p_fail = fail.sum();
    if (p_fail > 0.0)
        res.out_fail = depolarize(BellDiag{fail / p_fail}, noise.p_meas);
    else
        res.out_fail = BellDiag{Eigen::Vector4d::Constant(0.25)};
    return res;
}

double multi_fidelity_compose(double f1, double f2, int k_ops, const NoiseParams& noise) {
    double f = f1 * f2 * std::pow(1.0 - noise.p_gate, k_ops);
    return std::clamp(f, 0.0, 1.0);
}

}  // namespace sqn
