#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "sagaqnet/graphstate.hpp"
#include "sagaqnet/noisemodel.hpp"

// Small dense quantum simulator; ground truth for the graph rules and the
// Bell-diagonal noise maps. Test-facing only.
namespace sqn::oracle {

using Cd = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

struct OracleError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline constexpr int kMaxPureQubits = 10;
inline constexpr int kMaxMixedQubits = 5;

int qubit_count_of_dim(Eigen::Index dim);

Mat pauli_x();
Mat pauli_y();
Mat pauli_z();
Mat hadamard();
/// exp(-i theta X / 2)
Mat rx(double theta);
/// exp(i theta Z / 2) phase-style rotation; rz(theta) = diag(1, e^{i theta}) up to phase
Mat phase_z(double theta);

/// Single-qubit unitary embedded on qubit q of an n-qubit register
/// (qubit 0 is the most significant bit of the basis index).
Mat embed1(int n, int q, const Mat& u);
/// Controlled-X with control c and target t.
Mat embed_cnot(int n, int c, int t);
/// Controlled-Z between qubits a and b.
Mat embed_cz(int n, int a, int b);

/// |+>^n with CZ per edge; qubit order follows the sorted vertex set.
Vec graph_to_state(const GraphState& g);
std::vector<VertexRef> qubit_order(const GraphState& g);

/// True if u = c*v for some unit-modulus c, amplitudewise within tol.
bool equal_up_to_phase(const Vec& u, const Vec& v, double tol = 1e-9);

Mat density_of(const Vec& psi);

/// Kraus application of a single-qubit depolarizing channel with weight q.
Mat depolarize_qubit(const Mat& rho, int q_index, double q, int n);

/// The four Bell states in order (Phi+, Phi-, Psi+, Psi-) on qubits (a,b)
/// of an n-qubit register, as projectors or state vectors on 2 qubits.
Vec bell_state(int which);

struct BellProjection {
    double probability = 0.0;
    Mat post;  // normalized post-measurement state (density matrix)
};

/// Project qubits (qa, qb) of rho onto Bell state `outcome`; the measured
/// qubits are left in the projected Bell state.
BellProjection bell_project(const Mat& rho, int qa, int qb, int outcome);

/// Partial trace keeping the listed qubits (in the given order).
Mat partial_trace_keep(const Mat& rho, const std::vector<int>& keep, int n);

/// Bell-basis diagonal of a two-qubit density matrix.
BellDiag bell_diag_of(const Mat& rho2);

Mat bell_diag_density(const BellDiag& bd);

}  // namespace sqn::oracle
