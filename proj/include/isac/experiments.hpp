#pragma once

#include "isac/analysis.hpp"
#include "isac/metrics.hpp"
#include "isac/model.hpp"
#include "isac/sca_solver.hpp"
#include "isac/scene.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace isac {

/// Raised for malformed or inconsistent experiment configurations.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class SweepAxis { None, DeltaC, SensingStreams, TxAntennas, Users, PowerDbm };
enum class SolverChoice { Full, LowDim, Both };

/// Sensing stream count: a fixed number, N_t, or 3M.
struct StreamSpec {
    enum class Kind { Fixed, Nt, ThreeM } kind = Kind::Nt;
    int value = 0;

    int resolve(int nt, int targets) const;
};

struct ExperimentConfig {
    SceneDims dims;
    ScenePowers powers;
    ElevationSampling elevation = ElevationSampling::Domain;
    std::optional<std::vector<Target>> targets_override;
    StreamSpec sensing_streams;
    Weights weights;

    SweepAxis sweep_axis = SweepAxis::None;
    std::vector<double> sweep_values;
    int trials = 50;
    std::uint64_t seed = 1;
    SolverChoice solver = SolverChoice::Full;

    PowerConstraint power_constraint = PowerConstraint::Total;
    InitMode init_mode = InitMode::MatchedFilter;
    int max_iters = 5000;
    double tol_objective = 1e-4;
    bool strict = false;
    QMutation q_mutation = QMutation::None;

    std::string out;
    bool record_timing = false;
    int threads = 1;

    void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

std::string to_string(SweepAxis axis);
std::string to_string(SolverChoice solver);

/// Scene for trial `trial` at sweep value `value` (ignored when the axis is None).
Scene make_scene(const ExperimentConfig& cfg, double value, int trial);
SolverConfig make_solver_config(const ExperimentConfig& cfg, const Scene& scene, double value);
Weights make_weights(const ExperimentConfig& cfg, double value);

struct TrialRecord {
    double sweep_value = 0.0;
    std::uint64_t seed = 0;
    std::string solver;   // "full" or "lowdim"
    std::string status;   // converged, max_iters, nonconverged, singular_fim, rank_deficient, error
    double sum_rate = 0.0;
    double crlb_trace = 0.0;
    double objective = 0.0;
    int iterations = 0;
    double wall_ms = 0.0;

    bool ok() const { return status == "converged" || status == "max_iters"; }
};

struct Stat {
    double mean = 0.0;
    double stderr_ = 0.0;
};

Stat mean_stderr(const std::vector<double>& values);

struct SweepSummary {
    double sweep_value = 0.0;
    std::string solver;
    int trials = 0;
    int failed = 0;
    Stat sum_rate;
    Stat crlb_trace;
    Stat objective;
    Stat iterations;
};

struct ExperimentResult {
    std::vector<TrialRecord> records;   // sorted by (sweep value, trial, solver)
    std::vector<SweepSummary> summaries;

    int failures() const;
    bool any_status(const std::string& status) const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_csv(const ExperimentConfig& cfg, const ExperimentResult& result, std::ostream& os);
std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Writes <out>.csv and <out>.json when cfg.out is set.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Invariant suite on freshly solved instances drawn from the configuration.
VerificationReport verify(const ExperimentConfig& cfg);

}  // namespace isac
