#include "isac/experiments.hpp"
#include "isac/lowdim_solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitVerify = 2;
constexpr int kExitNonConvergence = 3;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<std::string> out;
    std::optional<std::string> solver;
    std::optional<std::string> power_constraint;
    std::optional<int> threads;
    bool strict = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("--trials", o.trials, "number of seeded trials");
    cmd->add_option("--out", o.out, "output prefix for <out>.csv and <out>.json");
    cmd->add_option("--solver", o.solver, "full, lowdim or both")
        ->check(CLI::IsMember({"full", "lowdim", "both"}));
    cmd->add_option("--power-constraint", o.power_constraint, "total or per-antenna")
        ->check(CLI::IsMember({"total", "per-antenna"}));
    cmd->add_option("--threads", o.threads, "worker threads");
    cmd->add_flag("--strict", o.strict, "treat hitting max_iters as an error");
}

isac::ExperimentConfig build_config(const Overrides& o) {
    isac::ExperimentConfig cfg = o.config.empty() ? isac::ExperimentConfig{} : isac::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    if (o.out) cfg.out = *o.out;
    if (o.solver) cfg.solver = *o.solver == "full" ? isac::SolverChoice::Full
                               : *o.solver == "lowdim" ? isac::SolverChoice::LowDim
                                                       : isac::SolverChoice::Both;
    if (o.power_constraint)
        cfg.power_constraint =
            *o.power_constraint == "total" ? isac::PowerConstraint::Total : isac::PowerConstraint::PerAntenna;
    if (o.threads) cfg.threads = *o.threads;
    if (o.strict) cfg.strict = true;
    cfg.validate();
    return cfg;
}

int run_solve(const isac::ExperimentConfig& cfg, int trial) {
    const double value = cfg.sweep_axis == isac::SweepAxis::None ? 0.0 : cfg.sweep_values.front();
    const isac::Scene scene = isac::make_scene(cfg, value, trial);
    const isac::SolverConfig scfg = isac::make_solver_config(cfg, scene, value);
    const isac::Weights weights = isac::make_weights(cfg, value);

    std::vector<std::pair<std::string, isac::SolveResult>> runs;
    if (cfg.solver != isac::SolverChoice::LowDim) runs.emplace_back("full", isac::solve(scene, weights, scfg));
    if (cfg.solver != isac::SolverChoice::Full) runs.emplace_back("lowdim", isac::solve_ld(scene, weights, scfg));

    for (const auto& [name, r] : runs) {
        std::printf("solver          %s\n", name.c_str());
        std::printf("status          %s\n", r.converged() ? "converged" : "max_iters");
        std::printf("iterations      %d\n", r.iterations);
        std::printf("sum_rate_nats   %.10g\n", r.sum_rate);
        std::printf("crlb_trace      %.10g\n", r.crlb_trace);
        std::printf("objective       %.10g\n", r.objective);
        std::printf("power           %.10g / %.10g\n", r.beamformer.power(), scene.power_budget);
        std::printf("ms_per_iter     %.4f\n", r.ms_per_iteration());
    }
    return kExitOk;
}

int run_sweep(const isac::ExperimentConfig& cfg) {
    const auto result = isac::run_experiment(cfg);
    if (cfg.out.empty()) {
        isac::write_csv(cfg, result, std::cout);
    } else {
        isac::write_outputs(cfg, result);
        std::cerr << "wrote " << cfg.out << ".csv and " << cfg.out << ".json (" << result.records.size()
                  << " rows, " << result.failures() << " failed)\n";
    }
    if (cfg.strict && result.any_status("nonconverged")) return kExitNonConvergence;
    return kExitOk;
}

int run_verify(const isac::ExperimentConfig& cfg) {
    const auto report = isac::verify(cfg);
    for (const auto& r : report.records)
        std::printf("%-4s %-24s value=%-12.4g threshold=%-10.3g %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.value, r.threshold, r.detail.c_str());
    std::printf("%d checks, %d failed\n", static_cast<int>(report.records.size()), report.failures());
    return report.passed() ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ISAC beamforming solver and experiment runner"};
    app.require_subcommand(1);

    Overrides solve_opts, sweep_opts, verify_opts;
    int trial = 0;
    auto* solve_cmd = app.add_subcommand("solve", "solve one seeded instance and print its metrics");
    add_common(solve_cmd, solve_opts);
    solve_cmd->add_option("--trial", trial, "trial index whose seed is used")->check(CLI::NonNegativeNumber);
    auto* sweep_cmd = app.add_subcommand("sweep", "run an experiment sweep and write CSV/JSON");
    add_common(sweep_cmd, sweep_opts);
    auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
    add_common(verify_cmd, verify_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*solve_cmd) return run_solve(build_config(solve_opts), trial);
        if (*sweep_cmd) return run_sweep(build_config(sweep_opts));
        if (*verify_cmd) return run_verify(build_config(verify_opts));
    } catch (const isac::ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kExitConfig;
    } catch (const isac::NonConvergenceError& e) {
        std::cerr << "nonconvergence: " << e.what() << '\n';
        return kExitNonConvergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitVerify;
    }
    return kExitOk;
}
