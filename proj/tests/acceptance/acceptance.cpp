// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "isac/analysis.hpp"
#include "isac/experiments.hpp"
#include "isac/lowdim_solver.hpp"
#include "isac/model.hpp"
#include "isac/rng.hpp"
#include "isac/sca_solver.hpp"

#include <algorithm>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace isac;

namespace {

constexpr std::uint64_t kBaseSeed = 20240611;

struct Outcome {
    bool pass = false;
    std::string summary;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
    char buf[1024];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

CMatrix random_complex(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    CMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            m(i, j) = cd(re, im);
        }
    return m;
}

Beamformer random_beamformer(const Scene& scene, int streams, CounterRng& rng) {
    const CMatrix w = project_total_power(random_complex(scene.num_tx(), scene.num_users() + streams, rng),
                                          scene.power_budget);
    return Beamformer::from_stacked(w, scene.num_users(), scene.power_budget);
}

Scene default_scene(int index) { return sample_scene(derive_seed(kBaseSeed, index), SceneDims{}, ScenePowers{}); }

Scene small_scene(int index, int users, int targets) {
    SceneDims d;
    d.tx = {3, 2};
    d.rx = {3, 2};
    d.users = users;
    d.targets = targets;
    return sample_scene(derive_seed(kBaseSeed + 1, index), d, ScenePowers{});
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1. Reference averages of sum rate and CRLB trace over random scenes.
Outcome reference_averages() {
    const int trials = 100;
    std::vector<double> sr_full, crlb_full, sr_ld, crlb_ld;
    for (int i = 0; i < trials; ++i) {
        const Scene scene = default_scene(i);
        SolverConfig cfg;
        cfg.sensing_streams = 3 * scene.num_targets();
        const SolveResult f = solve(scene, Weights{}, cfg);
        const SolveResult l = solve_ld(scene, Weights{}, cfg);
        sr_full.push_back(f.sum_rate);
        crlb_full.push_back(f.crlb_trace);
        sr_ld.push_back(l.sum_rate);
        crlb_ld.push_back(l.crlb_trace);
    }
    const double a = mean(sr_full), b = mean(crlb_full), c = mean(sr_ld), d = mean(crlb_ld);
    const bool pass = relative(a, 15.07) <= 0.1 && relative(b, 1.13) <= 0.1 && relative(c, 15.04) <= 0.1 &&
                      relative(d, 1.14) <= 0.1;
    return {pass, fmt("%d seeds: full mean (%.3f, %.4g) vs (15.07, 1.13); lowdim mean (%.3f, %.4g) vs (15.04, 1.14); "
                      "full median (%.3f, %.3f)",
                      trials, a, b, c, d, median(sr_full), median(crlb_full))};
}

// 2 and 3. Monotone traces, full power, inward scaling.
std::pair<Outcome, Outcome> monotone_and_full_power() {
    const Weights settings[] = {{1.0, 0.25}, {1.0, 1e-7}, {1e-7, 1.0}};
    double worst_drop = 0.0;
    double worst_gap = 0.0;
    int inward_failures = 0;
    int backtracked = 0;
    const int instances = 100;
    for (int i = 0; i < instances; ++i) {
        const Scene scene = default_scene(1000 + i);
        const SteeringSet st = build_steering_set(scene);
        const Weights& w = settings[i % 3];
        const SolveResult r = solve(scene, w, SolverConfig{});
        if (r.backtracks > 0) ++backtracked;
        for (std::size_t t = 1; t < r.objective_trace.size(); ++t) {
            const double prev = r.objective_trace[t - 1];
            worst_drop = std::max(worst_drop, (prev - r.objective_trace[t]) / std::max(std::abs(prev), 1e-300));
        }
        worst_gap = std::max(worst_gap, std::abs(r.beamformer.power() - scene.power_budget) / scene.power_budget);
        Beamformer inward = r.beamformer;
        inward.comm *= 0.99;
        inward.sensing *= 0.99;
        if (!(objective(scene, st, inward, w) < objective(scene, st, r.beamformer, w))) ++inward_failures;
    }
    return {{worst_drop <= 1e-9, fmt("%d instances, worst relative drop %.3g (slack 1e-9), %d used step retries",
                                     instances, worst_drop, backtracked)},
            {worst_gap <= 1e-9 && inward_failures == 0,
             fmt("worst |tr(WW^H) - Pt|/Pt = %.3g (<= 1e-9); inward scaling failed on %d/%d", worst_gap,
                 inward_failures, instances)}};
}

// 4. Gradient oracle.
Outcome gradient_oracle() {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Scene scene = small_scene(i, 1 + i % 3, 1 + (i / 3) % 2);
        const SteeringSet st = build_steering_set(scene);
        CounterRng rng(derive_seed(kBaseSeed + 2, i), 5);
        const Beamformer w = random_beamformer(scene, 2, rng);
        const CMatrix g = analytic_gradient(scene, st, w, Weights{});
        worst = std::max(worst, (g - fd_gradient(scene, st, w, Weights{})).norm() / g.norm());
    }
    return {worst <= 1e-5, fmt("20 instances (N_t = 6), worst relative error %.3g (<= 1e-5)", worst)};
}

// 5. FIM oracle.
Outcome fim_oracle() {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Scene scene = i < 10 ? small_scene(100 + i, 2, 1 + i % 2) : default_scene(2000 + i);
        const SteeringSet st = build_steering_set(scene);
        CounterRng rng(derive_seed(kBaseSeed + 3, i), 5);
        const Beamformer w = random_beamformer(scene, 2, rng);
        const RMatrix f = fim(scene, st, w).matrix;
        worst = std::max(worst, (f - fd_fim(scene, st, w)).norm() / f.norm());
    }
    return {worst <= 1e-5, fmt("20 instances, M in {1,2}, worst relative error %.3g (<= 1e-5)", worst)};
}

// 6. Adjoint identity.
Outcome adjoint_identity() {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Scene scene = i % 2 ? default_scene(3000 + i) : small_scene(200 + i, 1 + i % 3, 1 + i % 3);
        const SteeringSet st = build_steering_set(scene);
        const IsacModel model = make_model(scene, st);
        CounterRng rng(derive_seed(kBaseSeed + 4, i), 5);
        const CMatrix w = random_complex(scene.num_tx(), scene.num_users() + 3, rng);
        const auto n = 4 * scene.num_targets();
        const RMatrix a = random_complex(n, n, rng).real();
        const RMatrix phi = a + a.transpose();
        const double lhs = (phi.transpose() * core::fisher_matrix(model, w)).trace();
        const double rhs = std::real((w * w.adjoint() * core::sensing_q(model, phi)).trace());
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));
    }
    return {worst <= 1e-8, fmt("100 (W, Phi) pairs, worst relative mismatch %.3g (<= 1e-8)", worst)};
}

// 7. Surrogate tangency.
Outcome surrogate_tangency() {
    CounterRng rng(kBaseSeed + 5, 5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double tangency = 0.0;
    int violations = 0;
    int checks = 0;

    // log(1 + |z|^2 / d)
    for (int i = 0; i < 100; ++i) {
        const cd z0(gauss(rng), gauss(rng));
        const double d0 = 0.1 + std::abs(gauss(rng));
        tangency = std::max(tangency, relative(log_rate_minorant(z0, d0, z0, d0), std::log1p(std::norm(z0) / d0)));
        for (int p = 0; p < 10; ++p) {
            const cd z = z0 + cd(gauss(rng), gauss(rng));
            const double d = 0.05 + std::abs(d0 + gauss(rng));
            ++checks;
            if (log_rate_minorant(z, d, z0, d0) > std::log1p(std::norm(z) / d) + 1e-12) ++violations;
        }
    }
    // Per-user communication surrogate on a real scene.
    for (int i = 0; i < 10; ++i) {
        const Scene scene = default_scene(4000 + i);
        const Beamformer w0 = random_beamformer(scene, 2, rng);
        const CommAux aux = comm_aux(scene, w0);
        for (int k = 0; k < scene.num_users(); ++k)
            tangency = std::max(tangency, relative(comm_surrogate(scene, aux, w0, k), user_rate(scene, w0, k)));
        for (int p = 0; p < 10; ++p) {
            const Beamformer w = random_beamformer(scene, 2, rng);
            for (int k = 0; k < scene.num_users(); ++k) {
                ++checks;
                if (comm_surrogate(scene, aux, w, k) > user_rate(scene, w, k) + 1e-12) ++violations;
            }
        }
    }
    // -tr(Z^-1)
    for (int i = 0; i < 100; ++i) {
        const int n = 2 + i % 6;
        RMatrix a(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) a(r, c) = gauss(rng);
        const RMatrix z0 = a * a.transpose() + 0.1 * RMatrix::Identity(n, n);
        const double exact0 = -Eigen::LLT<RMatrix>(z0).solve(RMatrix::Identity(n, n)).trace();
        tangency = std::max(tangency, relative(trace_inverse_majorant(z0, z0), exact0));
        for (int p = 0; p < 10; ++p) {
            RMatrix b(n, n);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) b(r, c) = gauss(rng);
            const RMatrix z = b * b.transpose() + 0.05 * RMatrix::Identity(n, n);
            const double exact = -Eigen::LLT<RMatrix>(z).solve(RMatrix::Identity(n, n)).trace();
            ++checks;
            if (exact > trace_inverse_majorant(z, z0) + 1e-12 * std::abs(exact)) ++violations;
        }
    }
    // tr(W W^H C)
    for (int i = 0; i < 100; ++i) {
        const int n = 2 + i % 6;
        const CMatrix g = random_complex(n, n, rng);
        const CMatrix c = g * g.adjoint();
        const CMatrix w0 = random_complex(n, 3, rng);
        const double exact0 = std::real((w0 * w0.adjoint() * c).trace());
        tangency = std::max(tangency, relative(quadratic_minorant(w0, w0, c), exact0));
        for (int p = 0; p < 10; ++p) {
            const CMatrix w = w0 + random_complex(n, 3, rng);
            const double exact = std::real((w * w.adjoint() * c).trace());
            ++checks;
            if (quadratic_minorant(w, w0, c) > exact + 1e-12 * std::abs(exact)) ++violations;
        }
    }
    return {tangency <= 1e-9 && violations == 0,
            fmt("worst tangency gap %.3g (<= 1e-9); %d/%d perturbations violate the bound", tangency, violations,
                checks)};
}

// 8. LD/full parity and timing.
Outcome lowdim_parity() {
    double worst = 0.0;
    int beyond = 0;
    for (int i = 0; i < 50; ++i) {
        const Scene scene = default_scene(i);
        SolverConfig cfg;
        cfg.sensing_streams = 3 * scene.num_targets();
        const double f = solve(scene, Weights{}, cfg).objective;
        const double l = solve_ld(scene, Weights{}, cfg).objective;
        const double gap = relative(l, f);
        worst = std::max(worst, gap);
        if (gap > 0.01) ++beyond;
    }
    double full_ms = 0.0, ld_ms = 0.0;
    for (int i = 0; i < 5; ++i) {
        SceneDims dims;
        dims.tx = {8, 8};
        const Scene scene = sample_scene(derive_seed(kBaseSeed + 6, i), dims, ScenePowers{});
        SolverConfig cfg;
        cfg.sensing_streams = 3 * scene.num_targets();
        full_ms += solve(scene, Weights{}, cfg).ms_per_iteration();
        ld_ms += solve_ld(scene, Weights{}, cfg).ms_per_iteration();
    }
    return {beyond == 0 && ld_ms < full_ms,
            fmt("50 seeds: worst objective gap %.3g, %d beyond 1%%; N_t = 64 ms/iter full %.4f vs lowdim %.4f", worst,
                beyond, full_ms / 5, ld_ms / 5)};
}

// 9. Sensing-stream threshold.
Outcome sensing_streams() {
    ExperimentConfig sensing;
    sensing.weights = {0.0, 1.0};
    sensing.dims.targets = 3;
    sensing.dims.slots = 128;
    sensing.sweep_axis = SweepAxis::SensingStreams;
    sensing.sweep_values = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    sensing.trials = 20;
    sensing.seed = kBaseSeed + 7;
    const auto res = run_experiment(sensing);
    const double at3 = res.summaries[3].objective.mean;
    double spread = 0.0;
    for (std::size_t i = 3; i < res.summaries.size(); ++i)
        spread = std::max(spread, relative(res.summaries[i].objective.mean, at3));

    int worst_rank = 0;
    for (int ns : {3, 6, 9})
        for (int t = 0; t < 10; ++t) {
            const Scene scene = make_scene(sensing, ns, t);
            SolverConfig cfg = make_solver_config(sensing, scene, ns);
            worst_rank = std::max(worst_rank, rank_check(solve(scene, sensing.weights, cfg).beamformer.sensing));
        }

    ExperimentConfig isac;
    isac.sweep_axis = SweepAxis::SensingStreams;
    isac.sweep_values = {0, 1, 2, 3, 6};
    isac.trials = 20;
    isac.seed = kBaseSeed + 8;
    const auto res2 = run_experiment(isac);
    const double base = res2.summaries[0].objective.mean;
    double gain = -1e300;
    for (std::size_t i = 1; i < res2.summaries.size(); ++i)
        gain = std::max(gain, (res2.summaries[i].objective.mean - base) / std::abs(base));

    return {spread <= 0.01 && worst_rank <= 9 && gain <= 0.01,
            fmt("sensing-only spread for N_s >= 3: %.3g (<= 1%%); max rank(W_s) %d (<= 9); ISAC best gain over "
                "N_s = 0: %.3g (<= 1%%)",
                spread, worst_rank, gain)};
}

// 10. OBS residuals.
Outcome obs_residuals_check() {
    double worst_stat = 0.0, worst_comm = 0.0, worst_sens = 0.0;
    int failing = 0;
    std::string failed_ids;
    double random_min = 1e300;
    for (int i = 0; i < 20; ++i) {
        const Scene scene = default_scene(i);
        const SteeringSet st = build_steering_set(scene);
        SolverConfig cfg;
        cfg.tol_objective = 1e-8;
        cfg.max_iters = 200000;
        const SolveResult r = solve(scene, Weights{}, cfg);
        const ObsReport o = obs_residuals(scene, st, r.beamformer, Weights{});
        worst_stat = std::max(worst_stat, o.stationarity);
        worst_comm = std::max(worst_comm, o.comm_residual);
        worst_sens = std::max(worst_sens, o.sensing_residual);
        if (std::max({o.stationarity, o.comm_residual, o.sensing_residual}) > 1e-2) {
            ++failing;
            failed_ids += fmt(" %d(crlb %.3g)", i, r.crlb_trace);
        }

        CounterRng rng(derive_seed(kBaseSeed + 9, i), 5);
        const ObsReport rnd = obs_residuals(scene, st, random_beamformer(scene, scene.num_tx(), rng), Weights{});
        random_min = std::min(random_min, rnd.stationarity);
    }
    return {failing == 0 && random_min > 1e-2,
            fmt("20 instances: worst stationarity %.3g, W_c %.3g, W_s %.3g (<= 1e-2); failing:%s%s; random points "
                "min stationarity %.3g (> 1e-2)",
                worst_stat, worst_comm, worst_sens, failing ? "" : " none", failed_ids.c_str(), random_min)};
}

// 11. Tradeoff frontier.
Outcome tradeoff_frontier() {
    ExperimentConfig cfg;
    cfg.sweep_axis = SweepAxis::DeltaC;
    cfg.sweep_values = {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1, 10, 1e2, 1e3, 1e4, 1e5};
    cfg.trials = 20;
    cfg.seed = kBaseSeed + 10;
    const auto res = run_experiment(cfg);

    ExperimentConfig ends = cfg;
    ends.sweep_axis = SweepAxis::None;
    ends.sweep_values.clear();
    ends.weights = {0.0, 1.0};
    const double sensing_only = run_experiment(ends).summaries[0].sum_rate.mean;
    ends.weights = {1.0, 0.0};
    const double comm_only = run_experiment(ends).summaries[0].sum_rate.mean;

    int sr_breaks = 0, crlb_breaks = 0;
    for (std::size_t i = 1; i < res.summaries.size(); ++i) {
        const auto& a = res.summaries[i - 1];
        const auto& b = res.summaries[i];
        if (b.sum_rate.mean < a.sum_rate.mean - std::max(a.sum_rate.stderr_, b.sum_rate.stderr_)) ++sr_breaks;
        if (b.crlb_trace.mean < a.crlb_trace.mean - std::max(a.crlb_trace.stderr_, b.crlb_trace.stderr_))
            ++crlb_breaks;
    }
    const double low = res.summaries.front().sum_rate.mean;
    const double high = res.summaries.back().sum_rate.mean;
    const bool near_low = std::abs(low - sensing_only) <= 0.05 * comm_only;
    const bool near_high = std::abs(high - comm_only) <= 0.05 * comm_only;
    return {sr_breaks == 0 && crlb_breaks == 0 && near_low && near_high,
            fmt("sum rate %.3f -> %.3f (sensing-only %.3f, comm-only %.3f, band 5%% of comm-only); monotonicity "
                "breaks beyond one stderr: sum rate %d, CRLB %d",
                low, high, sensing_only, comm_only, sr_breaks, crlb_breaks)};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::printf("[%s] C%-2d %-28s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.summary.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    };
    auto guarded = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        try {
            report(id, name, fn());
        } catch (const std::exception& e) {
            report(id, name, {false, std::string("exception: ") + e.what()});
        }
    };

    guarded(1, "reference averages", reference_averages);
    try {
        const auto [mono, power] = monotone_and_full_power();
        report(2, "monotone convergence", mono);
        report(3, "full-power property", power);
    } catch (const std::exception& e) {
        report(2, "monotone convergence", {false, std::string("exception: ") + e.what()});
        report(3, "full-power property", {false, std::string("exception: ") + e.what()});
    }
    guarded(4, "gradient oracle", gradient_oracle);
    guarded(5, "FIM oracle", fim_oracle);
    guarded(6, "adjoint identity", adjoint_identity);
    guarded(7, "surrogate tangency", surrogate_tangency);
    guarded(8, "lowdim/full parity", lowdim_parity);
    guarded(9, "sensing-stream threshold", sensing_streams);
    guarded(10, "OBS residuals", obs_residuals_check);
    guarded(11, "tradeoff frontier", tradeoff_frontier);

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
