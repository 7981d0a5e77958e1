#include "isac/lowdim_solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace isac {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

double shift_for(const BasisSet& basis, const CMatrix& curvature, const SolverConfig& cfg) {
    double dominant = 0.0;
    if (cfg.lowdim_shift == LowDimShift::Gram) {
        // |largest generalized eigenvalue| of (curvature, G) via L^-1 C L^-H.
        const auto& l = basis.factor.matrixL();
        const CMatrix half = l.solve(curvature);
        const CMatrix whitened = l.solve(half.adjoint()).adjoint();
        dominant = dominant_eigenvalue_magnitude(whitened, cfg.power_iteration);
    } else {
        dominant = dominant_eigenvalue_magnitude(curvature, cfg.power_iteration);
    }
    return std::max(cfg.lambda_floor, cfg.lambda_safety * dominant);
}

CMatrix update(const BasisSet& basis, const core::Linearization& lin, const CMatrix& p, double lambda,
               double power_budget, LowDimShift shift) {
    const CMatrix shifted = shift == LowDimShift::Gram ? CMatrix(lambda * (basis.gram * p)) : CMatrix(lambda * p);
    return project_ellipsoid(basis, lin.c1 + shifted - lin.curvature * p, power_budget);
}

}  // namespace

BasisSet build_basis(const Scene& scene, const SteeringSet& steering) {
    scene.validate();
    BasisSet b;
    b.users = scene.num_users();
    b.targets = steering.num_targets();
    b.basis.resize(scene.num_tx(), b.users + 3 * b.targets);
    b.basis << scene.channels, steering.tx, steering.tx_dtheta, steering.tx_dphi;
    b.gram = b.basis.adjoint() * b.basis;
    const auto n = b.gram.rows();
    if (n == 0) throw RankDeficientBasisError("empty basis (no users and no targets)");

    auto usable = [](const Eigen::LLT<CMatrix>& f) {
        if (f.info() != Eigen::Success) return false;
        const RVector d = f.matrixLLT().diagonal().real();
        return d.minCoeff() > 1e-7 * d.maxCoeff();
    };
    b.factor.compute(b.gram);
    if (!usable(b.factor)) {
        b.jitter = 1e-10 * b.gram.trace().real() / static_cast<double>(n);
        b.factor.compute(b.gram + b.jitter * CMatrix::Identity(n, n));
        if (!usable(b.factor))
            throw RankDeficientBasisError("basis Gram matrix is singular (" + std::to_string(n) + " columns, N_t = " +
                                          std::to_string(scene.num_tx()) + ")");
    }
    return b;
}

EffectiveChannels effective_channels(const BasisSet& basis) {
    const int k = basis.users;
    const int m = basis.targets;
    return {basis.gram.middleCols(0, k), basis.gram.middleCols(k, m), basis.gram.middleCols(k + m, m),
            basis.gram.middleCols(k + 2 * m, m)};
}

double ellipsoid_power(const BasisSet& basis, const CMatrix& p) {
    return std::real((p.adjoint() * basis.gram * p).trace());
}

CMatrix project_ellipsoid(const BasisSet& basis, const CMatrix& l, double power_budget) {
    const CMatrix direction = basis.solve(l);
    const double power = ellipsoid_power(basis, direction);
    if (!(power > 0.0) || !std::isfinite(power))
        throw std::invalid_argument("cannot project a zero or non-finite matrix onto the power ellipsoid");
    return std::sqrt(power_budget / power) * direction;
}

LdStepResult ld_step(const BasisSet& basis, const IsacModel& effective, const Coefficients& p, double power_budget,
                     const Weights& weights, const SolverConfig& cfg) {
    weights.validate();
    if (p.p.rows() != basis.size()) throw std::invalid_argument("coefficient rows must match the basis size");
    const auto lin = core::linearize(effective, p.p, weights, cfg.q_mutation);
    const double lambda = shift_for(basis, lin.curvature, cfg);
    return {{update(basis, lin, p.p, lambda, power_budget, cfg.lowdim_shift), p.users}, lambda};
}

SolveResult solve_ld(const Scene& scene, const Weights& weights, const SolverConfig& cfg) {
    const auto start = Clock::now();
    scene.validate();
    weights.validate();
    cfg.validate();
    if (cfg.power_constraint != PowerConstraint::Total)
        throw std::invalid_argument("the low-dimensional solver supports the total power constraint only");

    const SteeringSet steering = build_steering_set(scene);
    const BasisSet basis = build_basis(scene, steering);
    const IsacModel effective = effective_model(make_model(scene, steering), basis.basis);
    const int k_users = scene.num_users();
    const double pt = scene.power_budget;

    SolveResult result;
    const CMatrix w0 = initial_beamformer(scene, steering, 3 * basis.targets, cfg).stacked();
    CMatrix p = project_ellipsoid(basis, basis.basis.adjoint() * w0, pt);

    auto t0 = Clock::now();
    auto lin = core::linearize(effective, p, weights, cfg.q_mutation);
    result.timings.linearize_ms += elapsed_ms(t0);
    result.objective_trace.push_back(lin.objective);

    for (int it = 1; it <= cfg.max_iters; ++it) {
        t0 = Clock::now();
        double lambda = shift_for(basis, lin.curvature, cfg);
        result.timings.shift_ms += elapsed_ms(t0);

        CMatrix next;
        core::Linearization next_lin;
        for (int attempt = 0;; ++attempt) {
            t0 = Clock::now();
            next = update(basis, lin, p, lambda, pt, cfg.lowdim_shift);
            result.timings.step_ms += elapsed_ms(t0);

            t0 = Clock::now();
            next_lin = core::linearize(effective, next, weights, cfg.q_mutation);
            result.timings.linearize_ms += elapsed_ms(t0);

            const bool descended = next_lin.objective < lin.objective - cfg.monotone_slack * std::abs(lin.objective);
            if (!descended || attempt >= cfg.max_backtracks) break;
            lambda *= 2.0;
            ++result.backtracks;
        }

        const double change = std::abs(next_lin.objective - lin.objective);
        p = std::move(next);
        lin = std::move(next_lin);
        result.objective_trace.push_back(lin.objective);
        result.lambda_trace.push_back(lambda);
        result.iterations = it;
        if (change <= cfg.tol_objective) {
            result.status = SolveStatus::Converged;
            break;
        }
    }

    result.beamformer = Beamformer::from_stacked(basis.basis * p, k_users, pt);
    result.coefficients = p;
    result.objective = lin.objective;
    result.sum_rate = lin.sum_rate;
    if (lin.sensing) {
        result.crlb_trace = lin.crlb_trace;
    } else {
        try {
            result.crlb_trace = crlb_trace(FisherInfo{core::fisher_matrix(effective, p)});
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
