#pragma once

#include "isac/metrics.hpp"
#include "isac/model.hpp"
#include "isac/scene.hpp"
#include "isac/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace isac {

/// Communication auxiliaries of the log-rate minorant at the expansion point:
/// xi_k (SINR), eta_k = xi_k / (h_k^H w_k), beta_k = xi_k / (total received power).
struct CommAux {
    RVector sinr;   // xi
    CVector eta;
    RVector beta;
};

/// Sensing auxiliaries: Phi = F^-2 and the matrix Q(Phi) with
/// tr(Phi^T F(W)) = Re tr(W W^H Q).
struct SensingAux {
    RMatrix phi;
    CMatrix q;
    RMatrix fisher;
    RMatrix fisher_inverse;
};

enum class InitMode { MatchedFilter, Random, UserSupplied };
enum class PowerConstraint { Total, PerAntenna };

/// How the low-dimensional solver adds its shift term. Gram uses
/// lambda * N^H N, the image of lambda * I under W = N P; Identity adds
/// lambda * I directly in coefficient space.
enum class LowDimShift { Gram, Identity };

struct PowerIterationSettings {
    int max_iters = 200;
    double rel_tol = 1e-8;
    std::uint64_t seed = 0x5EED;
};

struct SolverConfig {
    int max_iters = 5000;
    double tol_objective = 1e-4;
    InitMode init_mode = InitMode::MatchedFilter;
    PowerConstraint power_constraint = PowerConstraint::Total;
    double lambda_safety = 1.1;
    double lambda_floor = 1e-8;
    PowerIterationSettings power_iteration;

    /// Number of dedicated sensing streams N_s; negative means N_t.
    /// The low-dimensional solver always uses 3M.
    int sensing_streams = -1;

    std::uint64_t init_seed = 1;
    std::optional<Beamformer> initial;   // for InitMode::UserSupplied

    /// Doubles lambda and retries a step that lowers the objective by more
    /// than monotone_slack relative. 0 disables the guard.
    int max_backtracks = 30;
    double monotone_slack = 1e-12;

    /// Throw NonConvergenceError instead of returning MaxIterations.
    bool strict = false;

    LowDimShift lowdim_shift = LowDimShift::Gram;
    QMutation q_mutation = QMutation::None;

    void validate() const;
};

enum class SolveStatus { Converged, MaxIterations };

struct PhaseTimings {
    double linearize_ms = 0.0;  // auxiliaries, FIM, Phi, Q, objective
    double shift_ms = 0.0;      // power iteration for lambda
    double step_ms = 0.0;       // C1 + C2 W and projection
    double total_ms = 0.0;
};

struct SolveResult {
    Beamformer beamformer;
    std::vector<double> objective_trace;  // entry 0 is the initial point
    std::vector<double> lambda_trace;
    double objective = 0.0;
    double sum_rate = 0.0;
    double crlb_trace = 0.0;   // +inf if the final FIM is singular
    int iterations = 0;
    int backtracks = 0;
    SolveStatus status = SolveStatus::MaxIterations;
    PhaseTimings timings;
    std::optional<CMatrix> coefficients;  // P, low-dimensional solver only

    bool converged() const { return status == SolveStatus::Converged; }
    double ms_per_iteration() const { return iterations > 0 ? timings.total_ms / iterations : 0.0; }
};

// --- auxiliaries -----------------------------------------------------------

CommAux comm_aux(const Scene& scene, const Beamformer& w);
SensingAux sensing_aux(const Scene& scene, const SteeringSet& steering, const Beamformer& w,
                       std::optional<double> jitter = std::nullopt);

/// Communication surrogate r_k(W) built at the expansion point behind `aux`.
double comm_surrogate(const Scene& scene, const CommAux& aux, const Beamformer& w, int k);

// --- surrogate bounds -----------------------------------------------------

/// Minorant of log(1 + |z|^2 / d) tangent at (z0, d0).
double log_rate_minorant(cd z, double d, cd z0, double d0);

/// Majorant of -tr(Z^-1) tangent at Z0 (both SPD): tr(Z0^-1 Z Z0^-1) - 2 tr(Z0^-1).
double trace_inverse_majorant(const RMatrix& z, const RMatrix& z0);

/// Minorant of tr(W W^H C) tangent at W0 for PSD C: 2 Re tr(W0 W^H C) - tr(W0 W0^H C).
double quadratic_minorant(const CMatrix& w, const CMatrix& w0, const CMatrix& c);

// --- shift parameter and projections -------------------------------------

/// |dominant eigenvalue| of a Hermitian matrix by power iteration on its
/// Hermitian part.
double dominant_eigenvalue_magnitude(const CMatrix& m, const PowerIterationSettings& settings);

/// delta_c H Sigma2 H^H - (delta_s / 2)(Q + Q^H).
CMatrix curvature_matrix(const CMatrix& channels, const CommAux& aux, const CMatrix& q, const Weights& weights);

/// lambda = max(floor, safety * |dominant eigenvalue of the curvature matrix|).
double shift_parameter(const Scene& scene, const CommAux& aux, const SensingAux& saux, const Weights& weights,
                       const SolverConfig& cfg);

CMatrix project_total_power(const CMatrix& x, double power_budget);
CMatrix project_per_antenna(const CMatrix& x, double power_budget);

// --- iteration ---------------------------------------------------------------

struct StepResult {
    Beamformer next;
    double lambda = 0.0;
};

/// One update W <- Pi(C1 + C2 W) with C2 = lambda I - curvature.
StepResult sca_step(const Scene& scene, const SteeringSet& steering, const Beamformer& w, const Weights& weights,
                    const SolverConfig& cfg);

/// 2 C1 + (delta_s (Q + Q^H) - 2 delta_c H Sigma2 H^H) W, i.e. df/dRe(W) + j df/dIm(W).
CMatrix analytic_gradient(const Scene& scene, const SteeringSet& steering, const Beamformer& w,
                          const Weights& weights);

/// Matched-filter start: h_k / |h_k| for users and the target steering vectors
/// (cycled) for sensing streams, then one projection.
Beamformer initial_beamformer(const Scene& scene, const SteeringSet& steering, int sensing_streams,
                              const SolverConfig& cfg);

SolveResult solve(const Scene& scene, const Weights& weights, const SolverConfig& cfg = {});

namespace core {

CommAux comm_aux(const IsacModel& model, const CMatrix& w);
SensingAux sensing_aux(const IsacModel& model, const CMatrix& w, std::optional<double> jitter = std::nullopt,
                       QMutation mutation = QMutation::None);

/// Everything the update needs at one expansion point, including the
/// objective value there.
struct Linearization {
    CommAux comm;
    std::optional<SensingAux> sensing;
    CMatrix c1;         // [delta_c H Sigma1^H, 0]
    CMatrix curvature;  // delta_c H Sigma2 H^H - (delta_s/2)(Q + Q^H)
    double sum_rate = 0.0;
    double crlb_trace = 0.0;
    double objective = 0.0;

    CMatrix gradient(const CMatrix& w) const { return 2.0 * c1 - 2.0 * curvature * w; }
};

Linearization linearize(const IsacModel& model, const CMatrix& w, const Weights& weights,
                        QMutation mutation = QMutation::None);

}  // namespace core

}  // namespace isac
