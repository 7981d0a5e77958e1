#include "isac/sca_solver.hpp"

#include "isac/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace isac {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

CMatrix project(const CMatrix& x, double power_budget, PowerConstraint constraint) {
    return constraint == PowerConstraint::Total ? project_total_power(x, power_budget)
                                                : project_per_antenna(x, power_budget);
}

CVector random_unit_vector(Eigen::Index n, std::uint64_t seed) {
    CounterRng rng(seed, 3);
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cd(rng.uniform01() - 0.5, rng.uniform01() - 0.5);
    return v.normalized();
}

}  // namespace

void SolverConfig::validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(tol_objective >= 0.0)) throw std::invalid_argument("tol_objective must be nonnegative");
    if (!(lambda_safety >= 1.0)) throw std::invalid_argument("lambda_safety must be >= 1");
    if (!(lambda_floor > 0.0)) throw std::invalid_argument("lambda_floor must be positive");
    if (power_iteration.max_iters < 1 || !(power_iteration.rel_tol > 0.0))
        throw std::invalid_argument("invalid power-iteration settings");
    if (max_backtracks < 0) throw std::invalid_argument("max_backtracks must be >= 0");
    if (init_mode == InitMode::UserSupplied && !initial)
        throw std::invalid_argument("user-supplied init mode needs an initial beamformer");
}

namespace core {

CommAux comm_aux(const IsacModel& model, const CMatrix& w) {
    const int k_users = model.num_users();
    const CMatrix g = model.channels.adjoint() * w;
    CommAux aux{RVector(k_users), CVector(k_users), RVector(k_users)};
    for (int k = 0; k < k_users; ++k) {
        const cd s = g(k, k);
        const double desired = std::norm(s);
        const double interference = g.row(k).squaredNorm() - desired + model.noise_comm(k);
        const double total = interference + desired;
        aux.sinr(k) = desired / interference;
        aux.eta(k) = std::conj(s) / interference;  // = xi / s, and 0 when s = 0
        aux.beta(k) = aux.sinr(k) / total;
    }
    return aux;
}

SensingAux sensing_aux(const IsacModel& model, const CMatrix& w, std::optional<double> jitter,
                       QMutation mutation) {
    SensingAux s;
    s.fisher = fisher_matrix(model, w);
    s.fisher_inverse = fisher_inverse(FisherInfo{s.fisher}, jitter);
    const RMatrix phi = s.fisher_inverse * s.fisher_inverse;
    s.phi = 0.5 * (phi + phi.transpose());
    s.q = sensing_q(model, s.phi, mutation);
    return s;
}

Linearization linearize(const IsacModel& model, const CMatrix& w, const Weights& weights, QMutation mutation) {
    Linearization lin;
    const int k_users = model.num_users();
    lin.comm = comm_aux(model, w);
    lin.sum_rate = 0.0;
    for (int k = 0; k < k_users; ++k) lin.sum_rate += std::log1p(lin.comm.sinr(k));

    const CMatrix& h = model.channels;
    lin.c1 = CMatrix::Zero(w.rows(), w.cols());
    lin.c1.leftCols(k_users) = weights.comm * h * lin.comm.eta.conjugate().asDiagonal();
    lin.curvature = weights.comm * h * lin.comm.beta.cast<cd>().asDiagonal() * h.adjoint();

    lin.crlb_trace = std::numeric_limits<double>::quiet_NaN();
    if (weights.sensing != 0.0) {
        lin.sensing = sensing_aux(model, w, std::nullopt, mutation);
        lin.crlb_trace = lin.sensing->fisher_inverse.trace();
        lin.curvature -= 0.5 * weights.sensing * (lin.sensing->q + lin.sensing->q.adjoint());
    }
    lin.objective = weights.comm * lin.sum_rate;
    if (weights.sensing != 0.0) lin.objective -= weights.sensing * lin.crlb_trace;
    return lin;
}

}  // namespace core

CommAux comm_aux(const Scene& scene, const Beamformer& w) {
    w.validate(scene);
    IsacModel m;
    m.channels = scene.channels;
    m.noise_comm = scene.noise_comm;
    return core::comm_aux(m, w.stacked());
}

SensingAux sensing_aux(const Scene& scene, const SteeringSet& steering, const Beamformer& w,
                       std::optional<double> jitter) {
    w.validate(scene);
    return core::sensing_aux(make_model(scene, steering), w.stacked(), jitter);
}

double comm_surrogate(const Scene& scene, const CommAux& aux, const Beamformer& w, int k) {
    w.validate(scene);
    if (k < 0 || k >= scene.num_users()) throw std::invalid_argument("user index out of range");
    const CVector hk = scene.channels.col(k);
    const double received = (hk.adjoint() * w.comm).squaredNorm() + (hk.adjoint() * w.sensing).squaredNorm() +
                            scene.noise_comm(k);
    const cd hw = hk.dot(w.comm.col(k));
    return std::log1p(aux.sinr(k)) + 2.0 * std::real(hw * aux.eta(k)) - aux.sinr(k) - aux.beta(k) * received;
}

double log_rate_minorant(cd z, double d, cd z0, double d0) {
    const double p0 = std::norm(z0);
    return std::log1p(p0 / d0) + 2.0 * std::real(std::conj(z0) * z) / d0 - p0 / (d0 * (d0 + p0)) * (std::norm(z) + d) -
           p0 / d0;
}

double trace_inverse_majorant(const RMatrix& z, const RMatrix& z0) {
    const RMatrix z0_inv = Eigen::LLT<RMatrix>(z0).solve(RMatrix::Identity(z0.rows(), z0.cols()));
    return (z0_inv * z * z0_inv).trace() - 2.0 * z0_inv.trace();
}

double quadratic_minorant(const CMatrix& w, const CMatrix& w0, const CMatrix& c) {
    return 2.0 * std::real((w0 * w.adjoint() * c).trace()) - std::real((w0 * w0.adjoint() * c).trace());
}

double dominant_eigenvalue_magnitude(const CMatrix& m, const PowerIterationSettings& settings) {
    if (m.rows() != m.cols()) throw std::invalid_argument("power iteration needs a square matrix");
    if (m.rows() == 0) return 0.0;
    const CMatrix herm = 0.5 * (m + m.adjoint());
    CVector v = random_unit_vector(m.rows(), settings.seed);
    double estimate = 0.0;
    for (int it = 0; it < settings.max_iters; ++it) {
        const CVector next = herm * v;
        const double norm = next.norm();
        if (norm == 0.0) return 0.0;
        v = next / norm;
        const bool done = std::abs(norm - estimate) <= settings.rel_tol * norm;
        estimate = norm;
        if (done) break;
    }
    return estimate;
}

CMatrix curvature_matrix(const CMatrix& channels, const CommAux& aux, const CMatrix& q, const Weights& weights) {
    CMatrix c = weights.comm * channels * aux.beta.cast<cd>().asDiagonal() * channels.adjoint();
    if (weights.sensing != 0.0) c -= 0.5 * weights.sensing * (q + q.adjoint());
    return c;
}

double shift_parameter(const Scene& scene, const CommAux& aux, const SensingAux& saux, const Weights& weights,
                       const SolverConfig& cfg) {
    const double dominant =
        dominant_eigenvalue_magnitude(curvature_matrix(scene.channels, aux, saux.q, weights), cfg.power_iteration);
    return std::max(cfg.lambda_floor, cfg.lambda_safety * dominant);
}

CMatrix project_total_power(const CMatrix& x, double power_budget) {
    const double power = x.squaredNorm();
    if (!(power > 0.0) || !std::isfinite(power))
        throw std::invalid_argument("cannot project a zero or non-finite matrix onto the power sphere");
    return std::sqrt(power_budget / power) * x;
}

CMatrix project_per_antenna(const CMatrix& x, double power_budget) {
    const double per_row = power_budget / static_cast<double>(x.rows());
    CMatrix out = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double row_power = x.row(i).squaredNorm();
        if (!(row_power > 0.0) || !std::isfinite(row_power))
            throw std::invalid_argument("per-antenna projection needs every row nonzero (row " + std::to_string(i) +
                                        ")");
        out.row(i) *= std::sqrt(per_row / row_power);
    }
    return out;
}

StepResult sca_step(const Scene& scene, const SteeringSet& steering, const Beamformer& w, const Weights& weights,
                    const SolverConfig& cfg) {
    w.validate(scene);
    weights.validate();
    const IsacModel model = make_model(scene, steering);
    const CMatrix wt = w.stacked();
    const auto lin = core::linearize(model, wt, weights, cfg.q_mutation);
    const double lambda = std::max(cfg.lambda_floor,
                                   cfg.lambda_safety * dominant_eigenvalue_magnitude(lin.curvature, cfg.power_iteration));
    const CMatrix x = lin.c1 + lambda * wt - lin.curvature * wt;
    return {Beamformer::from_stacked(project(x, w.power_budget, cfg.power_constraint), scene.num_users(),
                                     w.power_budget),
            lambda};
}

CMatrix analytic_gradient(const Scene& scene, const SteeringSet& steering, const Beamformer& w,
                          const Weights& weights) {
    w.validate(scene);
    weights.validate();
    const CMatrix wt = w.stacked();
    return core::linearize(make_model(scene, steering), wt, weights).gradient(wt);
}

Beamformer initial_beamformer(const Scene& scene, const SteeringSet& steering, int sensing_streams,
                              const SolverConfig& cfg) {
    const int nt = scene.num_tx();
    const int k_users = scene.num_users();
    if (sensing_streams < 0) sensing_streams = nt;
    CMatrix w(nt, k_users + sensing_streams);

    switch (cfg.init_mode) {
        case InitMode::MatchedFilter: {
            const int m = steering.num_targets();
            for (int k = 0; k < k_users; ++k) {
                const double norm = scene.channels.col(k).norm();
                w.col(k) = norm > 0.0 ? CVector(scene.channels.col(k) / norm) : CVector::Zero(nt);
            }
            for (int i = 0; i < sensing_streams; ++i) {
                if (m > 0) {
                    w.col(k_users + i) = steering.tx.col(i % m);
                } else {
                    w.col(k_users + i) = CVector::Unit(nt, i % nt);
                }
            }
            if (w.squaredNorm() == 0.0) w.col(0) = CVector::Unit(nt, 0);
            break;
        }
        case InitMode::Random: {
            CounterRng rng(cfg.init_seed, 2);
            std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                for (Eigen::Index i = 0; i < w.rows(); ++i) {
                    const double re = gauss(rng);
                    const double im = gauss(rng);
                    w(i, j) = cd(re, im);
                }
            break;
        }
        case InitMode::UserSupplied: {
            if (!cfg.initial) throw std::invalid_argument("no initial beamformer supplied");
            cfg.initial->validate(scene);
            w = cfg.initial->stacked();
            break;
        }
    }
    return Beamformer::from_stacked(project(w, scene.power_budget, cfg.power_constraint), k_users,
                                    scene.power_budget);
}

SolveResult solve(const Scene& scene, const Weights& weights, const SolverConfig& cfg) {
    const auto start = Clock::now();
    scene.validate();
    weights.validate();
    cfg.validate();

    const SteeringSet steering = build_steering_set(scene);
    const IsacModel model = make_model(scene, steering);
    const int k_users = scene.num_users();

    SolveResult result;
    CMatrix w = initial_beamformer(scene, steering, cfg.sensing_streams, cfg).stacked();

    auto t0 = Clock::now();
    auto lin = core::linearize(model, w, weights, cfg.q_mutation);
    result.timings.linearize_ms += elapsed_ms(t0);
    result.objective_trace.push_back(lin.objective);

    for (int it = 1; it <= cfg.max_iters; ++it) {
        t0 = Clock::now();
        double lambda = std::max(cfg.lambda_floor,
                                 cfg.lambda_safety * dominant_eigenvalue_magnitude(lin.curvature, cfg.power_iteration));
        result.timings.shift_ms += elapsed_ms(t0);

        CMatrix next;
        core::Linearization next_lin;
        for (int attempt = 0;; ++attempt) {
            t0 = Clock::now();
            next = project(lin.c1 + lambda * w - lin.curvature * w, scene.power_budget, cfg.power_constraint);
            result.timings.step_ms += elapsed_ms(t0);

            t0 = Clock::now();
            next_lin = core::linearize(model, next, weights, cfg.q_mutation);
            result.timings.linearize_ms += elapsed_ms(t0);

            const bool descended = next_lin.objective < lin.objective - cfg.monotone_slack * std::abs(lin.objective);
            if (!descended || attempt >= cfg.max_backtracks) break;
            lambda *= 2.0;
            ++result.backtracks;
        }

        const double change = std::abs(next_lin.objective - lin.objective);
        w = std::move(next);
        lin = std::move(next_lin);
        result.objective_trace.push_back(lin.objective);
        result.lambda_trace.push_back(lambda);
        result.iterations = it;
        if (change <= cfg.tol_objective) {
            result.status = SolveStatus::Converged;
            break;
        }
    }

    result.beamformer = Beamformer::from_stacked(w, k_users, scene.power_budget);
    result.objective = lin.objective;
    result.sum_rate = lin.sum_rate;
    if (lin.sensing) {
        result.crlb_trace = lin.crlb_trace;
    } else {
        try {
            result.crlb_trace = crlb_trace(FisherInfo{core::fisher_matrix(model, w)});
        } catch (const SingularFisherError&) {
            result.crlb_trace = std::numeric_limits<double>::infinity();
        }
    }
    result.timings.total_ms = elapsed_ms(start);

    if (cfg.strict && !result.converged())
        throw NonConvergenceError("no convergence after " + std::to_string(cfg.max_iters) + " iterations");
    return result;
}

}  // namespace isac
