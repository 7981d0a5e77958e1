#pragma once

#include "isac/scene.hpp"
#include "isac/types.hpp"

#include <optional>

namespace isac {

/// W = [W_c, W_s]. W_s may have zero columns.
struct Beamformer {
    CMatrix comm;     // N_t x K
    CMatrix sensing;  // N_t x N_s
    double power_budget = 1.0;

    int num_tx() const { return static_cast<int>(comm.rows()); }
    int num_users() const { return static_cast<int>(comm.cols()); }
    int sensing_streams() const { return static_cast<int>(sensing.cols()); }

    CMatrix stacked() const;
    double power() const { return comm.squaredNorm() + sensing.squaredNorm(); }
    bool feasible() const { return power() <= power_budget * (1.0 + 1e-12); }
    bool on_sphere(double rel_tol = 1e-9) const;

    /// Splits a stacked N_t x (K + N_s) matrix after its first `users` columns.
    static Beamformer from_stacked(const CMatrix& w, int users, double power_budget);

    void validate(const Scene& scene) const;
};

struct Weights {
    double comm = 0.25;     // delta_c
    double sensing = 1.0;   // delta_s

    void validate() const;
};

/// Real symmetric 4M x 4M Fisher information, parameter order
/// (theta_1..M, phi_1..M, Re alpha_1..M, Im alpha_1..M).
struct FisherInfo {
    RMatrix matrix;

    int num_targets() const { return static_cast<int>(matrix.rows() / 4); }
};

double user_rate(const Scene& scene, const Beamformer& w, int k);
double sum_rate(const Scene& scene, const Beamformer& w);

FisherInfo fim(const Scene& scene, const SteeringSet& steering, const Beamformer& w);

/// Default jitter used when F is not numerically positive definite.
double default_fisher_jitter(const FisherInfo& fi);

/// (F + jitter I)^-1. Without an explicit jitter the plain matrix is tried
/// first and default_fisher_jitter is added only if the Cholesky factorization
/// fails. Throws SingularFisherError if it still fails.
RMatrix fisher_inverse(const FisherInfo& fi, std::optional<double> jitter = std::nullopt);

/// tr((F + jitter I)^-1), same jitter policy as fisher_inverse.
double crlb_trace(const FisherInfo& fi, std::optional<double> jitter = std::nullopt);

/// delta_c * sum rate - delta_s * tr(F^-1). The FIM is not evaluated when
/// delta_s is zero.
double objective(const Scene& scene, const SteeringSet& steering, const Beamformer& w, const Weights& weights);

}  // namespace isac
