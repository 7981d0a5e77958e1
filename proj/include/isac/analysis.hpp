#pragma once

#include "isac/metrics.hpp"
#include "isac/scene.hpp"
#include "isac/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace isac {

/// Stationarity diagnostics of a beamformer against the first-order
/// optimality structure. All residuals are relative.
struct ObsReport {
    double multiplier = 0.0;         // mu, with grad f ~ 2 mu W
    double stationarity = 0.0;       // |grad f - 2 mu W| / |grad f|
    double comm_residual = 0.0;      // |W_c - (mu I + C)^-1 delta_c H Sigma1^H| / |W_c|
    /// |(C + mu I) W_s| / (|mu| |W|): the sensing block's share of the
    /// stationarity defect. 0 when N_s = 0.
    double sensing_residual = 0.0;
    /// Same numerator over |mu| |W_s|. Not meaningful when the optimal W_s
    /// vanishes, which is the usual case with K >= M.
    double sensing_residual_own = 0.0;
    int sensing_rank = 0;
};

/// Least-squares multiplier Re<W, grad> / (2 P) where P = |W|_F^2.
double recover_multiplier(const CMatrix& w, const CMatrix& gradient);
double recover_multiplier(const Beamformer& w, const CMatrix& gradient);

ObsReport obs_residuals(const Scene& scene, const SteeringSet& steering, const Beamformer& w,
                        const Weights& weights);

/// Number of singular values above threshold_ratio times the largest.
int rank_check(const CMatrix& w_s, double threshold_ratio = 1e-6);

/// Fourth-order central differences of the objective over the real and
/// imaginary part of every entry, returned as df/dRe(W) + j df/dIm(W).
/// step = 0 picks 1e-2 times the RMS entry magnitude of W, which keeps
/// round-off small when tr(F^-1) is large.
CMatrix fd_gradient(const Scene& scene, const SteeringSet& steering, const Beamformer& w, const Weights& weights,
                    double step = 0.0);

/// FIM rebuilt from central differences of the noise-free echo B U A^H x
/// with respect to (theta, phi, Re alpha, Im alpha), the steering vectors
/// being recomputed at every perturbed angle. With signal_draws = 0 the
/// signal second moment is the exact W W^H; otherwise it is the sample
/// average over signal_draws CN(0, I) symbol vectors.
RMatrix fd_fim(const Scene& scene, const SteeringSet& steering, const Beamformer& w, double step = 1e-6,
               int signal_draws = 0, std::uint64_t seed = 7);

/// One line of a verification report.
struct CheckRecord {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string detail;
};

struct VerificationReport {
    std::vector<CheckRecord> records;

    void add(std::string name, double value, double threshold, bool pass, std::string detail = {});
    bool passed() const;
    int failures() const;
};

}  // namespace isac
