#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

namespace sqn {

struct NoiseError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Bell-diagonal two-qubit state, probabilities ordered
/// (Phi+, Phi-, Psi+, Psi-). Fidelity is the Phi+ component.
struct BellDiag {
    Eigen::Vector4d p{1.0, 0.0, 0.0, 0.0};

    double fidelity() const { return p[0]; }
    bool valid(double tol = 1e-12) const;

    bool operator==(const BellDiag& o) const { return (p.array() == o.p.array()).all(); }
};

/// Per-node / per-channel noise knobs.
struct NoiseParams {
    double q_channel = 0.0;  // depolarizing per transmission
    double p_loss = 0.0;     // loss per transmission
    double p_gate = 0.0;     // depolarizing per local two-qubit op
    double p_meas = 0.0;     // depolarizing per measurement
    double t_mem = 1.0;      // memory time constant, seconds

    auto operator<=>(const NoiseParams&) const = default;
};

/// (f, (1-f)/3, (1-f)/3, (1-f)/3), f in [1/4, 1].
BellDiag werner(double f);

/// One-sided depolarizing: p' = (1-q) p + q/4.
BellDiag depolarize(const BellDiag& bd, double q);

/// Memory decay over dt, charged once per stored qubit side (both sides
/// stored, so the per-side map is applied twice) with q = 1 - exp(-dt/t_mem).
BellDiag decay(const BellDiag& bd, double dt, double t_mem);

/// Bell measurement joining two pairs: Klein four-group convolution of the
/// coefficient vectors, then a depolarizing charge of p_meas.
BellDiag swap_map(const BellDiag& a, const BellDiag& b, const NoiseParams& noise);

enum class PurifyMode { Purify, Pump };

struct PurifyResult {
    double p_succ = 0.0;
    BellDiag out;       // success branch, normalized
    BellDiag out_fail;  // failure branch, normalized (pump keeps this)
};

/// DEJMPS two-pair recurrence. p_gate is charged to each input pair before
/// the map; p_succ is the ideal success probability of the noisy inputs;
/// p_meas depolarizes both output branches. In pump mode `a` is the kept
/// pair and `b` the fresh one (the map itself is symmetric).
PurifyResult purify_map(const BellDiag& a, const BellDiag& b, const NoiseParams& noise,
                        PurifyMode mode = PurifyMode::Purify);

/// Scalar fidelity estimate for multipartite records:
/// f1 * f2 * (1 - p_gate)^k_ops, clamped to [0, 1].
double multi_fidelity_compose(double f1, double f2, int k_ops, const NoiseParams& noise);

}  // namespace sqn
