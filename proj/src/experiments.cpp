#include "isac/experiments.hpp"

#include "isac/lowdim_solver.hpp"
#include "isac/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace isac {

using json = nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {
    "tx_h",          "tx_v",       "rx_h",         "rx_v",          "users",       "targets",
    "slots",         "power_dbm",  "noise_radar_dbm", "noise_comm_dbm", "seed",     "elevation_sampling",
    "targets_override", "sensing_streams", "delta_c", "delta_s",    "sweep_axis",  "sweep_values",
    "trials",        "solver",     "power_constraint", "max_iters",  "tol_objective", "init_mode",
    "strict",        "q_mutation", "out",          "record_timing", "threads"};

template <class T>
T get(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

SweepAxis parse_axis(const std::string& s) {
    if (s == "none") return SweepAxis::None;
    if (s == "delta_c") return SweepAxis::DeltaC;
    if (s == "ns") return SweepAxis::SensingStreams;
    if (s == "nt") return SweepAxis::TxAntennas;
    if (s == "k") return SweepAxis::Users;
    if (s == "pt_dbm") return SweepAxis::PowerDbm;
    throw ConfigError("unknown sweep_axis '" + s + "' (none, delta_c, ns, nt, k, pt_dbm)");
}

SolverChoice parse_solver(const std::string& s) {
    if (s == "full") return SolverChoice::Full;
    if (s == "lowdim") return SolverChoice::LowDim;
    if (s == "both") return SolverChoice::Both;
    throw ConfigError("unknown solver '" + s + "' (full, lowdim, both)");
}

PowerConstraint parse_constraint(const std::string& s) {
    if (s == "total") return PowerConstraint::Total;
    if (s == "per-antenna") return PowerConstraint::PerAntenna;
    throw ConfigError("unknown power_constraint '" + s + "' (total, per-antenna)");
}

InitMode parse_init(const std::string& s) {
    if (s == "matched_filter") return InitMode::MatchedFilter;
    if (s == "random") return InitMode::Random;
    throw ConfigError("unknown init_mode '" + s + "' (matched_filter, random)");
}

ElevationSampling parse_elevation(const std::string& s) {
    if (s == "domain") return ElevationSampling::Domain;
    if (s == "wide") return ElevationSampling::WideClipped;
    throw ConfigError("unknown elevation_sampling '" + s + "' (domain, wide)");
}

QMutation parse_mutation(const std::string& s) {
    if (s == "none") return QMutation::None;
    if (s == "flip_cross_theta_alpha") return QMutation::FlipCrossThetaAlpha;
    throw ConfigError("unknown q_mutation '" + s + "'");
}

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

TrialRecord run_trial(const ExperimentConfig& cfg, double value, int trial, SolverChoice solver) {
    TrialRecord rec;
    rec.sweep_value = value;
    rec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
    rec.solver = solver == SolverChoice::LowDim ? "lowdim" : "full";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.sum_rate = rec.crlb_trace = rec.objective = nan;

    const auto start = std::chrono::steady_clock::now();
    try {
        const Scene scene = make_scene(cfg, value, trial);
        const SolverConfig scfg = make_solver_config(cfg, scene, value);
        const Weights weights = make_weights(cfg, value);
        const SolveResult r = solver == SolverChoice::LowDim ? solve_ld(scene, weights, scfg)
                                                             : solve(scene, weights, scfg);
        rec.status = r.converged() ? "converged" : "max_iters";
        rec.sum_rate = r.sum_rate;
        rec.crlb_trace = r.crlb_trace;
        rec.objective = r.objective;
        rec.iterations = r.iterations;
    } catch (const NonConvergenceError&) {
        rec.status = "nonconverged";
    } catch (const SingularFisherError&) {
        rec.status = "singular_fim";
    } catch (const RankDeficientBasisError&) {
        rec.status = "rank_deficient";
    } catch (const std::exception&) {
        rec.status = "error";
    }
    if (cfg.record_timing)
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

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

}  // namespace

int StreamSpec::resolve(int nt, int targets) const {
    switch (kind) {
        case Kind::Nt: return nt;
        case Kind::ThreeM: return 3 * targets;
        case Kind::Fixed: break;
    }
    return value;
}

void ExperimentConfig::validate() const {
    try {
        dims.tx.validate();
        dims.rx.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (dims.users < 0 || dims.targets < 0) throw ConfigError("users and targets must be >= 0");
    if (dims.slots < 1) throw ConfigError("slots must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(tol_objective >= 0.0)) throw ConfigError("tol_objective must be >= 0");
    if (sensing_streams.kind == StreamSpec::Kind::Fixed && sensing_streams.value < 0)
        throw ConfigError("sensing_streams must be >= 0");
    if (targets_override && static_cast<int>(targets_override->size()) != dims.targets)
        throw ConfigError("targets_override must list exactly `targets` entries");
    if (solver != SolverChoice::Full && power_constraint != PowerConstraint::Total)
        throw ConfigError("the low-dimensional solver supports the total power constraint only");

    if (sweep_axis == SweepAxis::None) {
        if (!sweep_values.empty()) throw ConfigError("sweep_values given without a sweep_axis");
    } else {
        if (sweep_values.empty()) throw ConfigError("sweep_values must be nonempty");
        if (!std::is_sorted(sweep_values.begin(), sweep_values.end()))
            throw ConfigError("sweep_values must be sorted");
        for (double v : sweep_values) {
            if (!std::isfinite(v)) throw ConfigError("sweep_values must be finite");
            const bool integral_axis = sweep_axis == SweepAxis::SensingStreams ||
                                       sweep_axis == SweepAxis::TxAntennas || sweep_axis == SweepAxis::Users;
            if (integral_axis && (!is_integral(v) || v < 0)) throw ConfigError("sweep value must be a count");
            if (sweep_axis == SweepAxis::TxAntennas && v < 1) throw ConfigError("N_t must be >= 1");
            if (sweep_axis == SweepAxis::DeltaC && v < 0) throw ConfigError("delta_c must be >= 0");
        }
    }
    for (double v : sweep_axis == SweepAxis::DeltaC ? sweep_values : std::vector<double>{weights.comm}) {
        try {
            Weights{v, weights.sensing}.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& item : j.items())
        if (!kKnownKeys.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");

    ExperimentConfig c;
    c.dims.tx = {get(j, "tx_h", c.dims.tx.n_horizontal), get(j, "tx_v", c.dims.tx.n_vertical)};
    c.dims.rx = {get(j, "rx_h", c.dims.rx.n_horizontal), get(j, "rx_v", c.dims.rx.n_vertical)};
    c.dims.users = get(j, "users", c.dims.users);
    c.dims.targets = get(j, "targets", c.dims.targets);
    c.dims.slots = get(j, "slots", c.dims.slots);
    c.powers.power_dbm = get(j, "power_dbm", c.powers.power_dbm);
    c.powers.noise_radar_dbm = get(j, "noise_radar_dbm", c.powers.noise_radar_dbm);
    c.powers.noise_comm_dbm = get(j, "noise_comm_dbm", c.powers.noise_comm_dbm);
    c.seed = get<std::uint64_t>(j, "seed", c.seed);
    c.elevation = parse_elevation(get<std::string>(j, "elevation_sampling", "domain"));

    if (j.contains("targets_override")) {
        const json& list = j.at("targets_override");
        if (!list.is_array()) throw ConfigError("targets_override must be an array");
        std::vector<Target> targets;
        for (const auto& t : list) {
            Target tg;
            tg.azimuth = get(t, "azimuth", 0.0);
            tg.elevation = get(t, "elevation", 0.0);
            tg.rcs = cd(get(t, "rcs_re", 0.1), get(t, "rcs_im", 0.0));
            targets.push_back(tg);
        }
        c.targets_override = targets;
    }

    if (j.contains("sensing_streams")) {
        const json& s = j.at("sensing_streams");
        if (s.is_string()) {
            const auto v = s.get<std::string>();
            if (v == "nt") {
                c.sensing_streams.kind = StreamSpec::Kind::Nt;
            } else if (v == "3m") {
                c.sensing_streams.kind = StreamSpec::Kind::ThreeM;
            } else {
                throw ConfigError("sensing_streams must be a count, \"nt\" or \"3m\"");
            }
        } else if (s.is_number_integer()) {
            c.sensing_streams = {StreamSpec::Kind::Fixed, s.get<int>()};
        } else {
            throw ConfigError("sensing_streams must be a count, \"nt\" or \"3m\"");
        }
    }

    c.weights.comm = get(j, "delta_c", c.weights.comm);
    c.weights.sensing = get(j, "delta_s", c.weights.sensing);
    c.sweep_axis = parse_axis(get<std::string>(j, "sweep_axis", "none"));
    c.sweep_values = get(j, "sweep_values", c.sweep_values);
    c.trials = get(j, "trials", c.trials);
    c.solver = parse_solver(get<std::string>(j, "solver", "full"));
    c.power_constraint = parse_constraint(get<std::string>(j, "power_constraint", "total"));
    c.init_mode = parse_init(get<std::string>(j, "init_mode", "matched_filter"));
    c.max_iters = get(j, "max_iters", c.max_iters);
    c.tol_objective = get(j, "tol_objective", c.tol_objective);
    c.strict = get(j, "strict", c.strict);
    c.q_mutation = parse_mutation(get<std::string>(j, "q_mutation", "none"));
    c.out = get(j, "out", c.out);
    c.record_timing = get(j, "record_timing", c.record_timing);
    c.threads = get(j, "threads", c.threads);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::None: return "none";
        case SweepAxis::DeltaC: return "delta_c";
        case SweepAxis::SensingStreams: return "ns";
        case SweepAxis::TxAntennas: return "nt";
        case SweepAxis::Users: return "k";
        case SweepAxis::PowerDbm: return "pt_dbm";
    }
    return "none";
}

std::string to_string(SolverChoice solver) {
    switch (solver) {
        case SolverChoice::Full: return "full";
        case SolverChoice::LowDim: return "lowdim";
        case SolverChoice::Both: return "both";
    }
    return "full";
}

std::string config_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["tx_h"] = c.dims.tx.n_horizontal;
    j["tx_v"] = c.dims.tx.n_vertical;
    j["rx_h"] = c.dims.rx.n_horizontal;
    j["rx_v"] = c.dims.rx.n_vertical;
    j["users"] = c.dims.users;
    j["targets"] = c.dims.targets;
    j["slots"] = c.dims.slots;
    j["power_dbm"] = c.powers.power_dbm;
    j["noise_radar_dbm"] = c.powers.noise_radar_dbm;
    j["noise_comm_dbm"] = c.powers.noise_comm_dbm;
    j["seed"] = c.seed;
    j["elevation_sampling"] = c.elevation == ElevationSampling::Domain ? "domain" : "wide";
    if (c.targets_override) {
        auto list = nlohmann::ordered_json::array();
        for (const auto& t : *c.targets_override)
            list.push_back({{"azimuth", t.azimuth},
                            {"elevation", t.elevation},
                            {"rcs_re", t.rcs.real()},
                            {"rcs_im", t.rcs.imag()}});
        j["targets_override"] = list;
    }
    switch (c.sensing_streams.kind) {
        case StreamSpec::Kind::Nt: j["sensing_streams"] = "nt"; break;
        case StreamSpec::Kind::ThreeM: j["sensing_streams"] = "3m"; break;
        case StreamSpec::Kind::Fixed: j["sensing_streams"] = c.sensing_streams.value; break;
    }
    j["delta_c"] = c.weights.comm;
    j["delta_s"] = c.weights.sensing;
    j["sweep_axis"] = to_string(c.sweep_axis);
    j["sweep_values"] = c.sweep_values;
    j["trials"] = c.trials;
    j["solver"] = to_string(c.solver);
    j["power_constraint"] = c.power_constraint == PowerConstraint::Total ? "total" : "per-antenna";
    j["init_mode"] = c.init_mode == InitMode::Random ? "random" : "matched_filter";
    j["max_iters"] = c.max_iters;
    j["tol_objective"] = c.tol_objective;
    j["strict"] = c.strict;
    j["q_mutation"] = c.q_mutation == QMutation::None ? "none" : "flip_cross_theta_alpha";
    j["out"] = c.out;
    j["record_timing"] = c.record_timing;
    j["threads"] = c.threads;
    return j.dump(2);
}

Scene make_scene(const ExperimentConfig& cfg, double value, int trial) {
    SceneDims dims = cfg.dims;
    ScenePowers powers = cfg.powers;
    switch (cfg.sweep_axis) {
        case SweepAxis::TxAntennas: dims.tx = ArrayGeometry::closest_square(static_cast<int>(value)); break;
        case SweepAxis::Users: dims.users = static_cast<int>(value); break;
        case SweepAxis::PowerDbm: powers.power_dbm = value; break;
        default: break;
    }
    Scene scene =
        sample_scene(derive_seed(cfg.seed, static_cast<std::uint64_t>(trial)), dims, powers, cfg.elevation);
    if (cfg.targets_override) {
        scene.targets = *cfg.targets_override;
        scene.validate();
    }
    return scene;
}

SolverConfig make_solver_config(const ExperimentConfig& cfg, const Scene& scene, double value) {
    SolverConfig s;
    s.max_iters = cfg.max_iters;
    s.tol_objective = cfg.tol_objective;
    s.init_mode = cfg.init_mode;
    s.power_constraint = cfg.power_constraint;
    s.strict = cfg.strict;
    s.q_mutation = cfg.q_mutation;
    s.init_seed = mix64(cfg.seed ^ 0x1217);
    s.sensing_streams = cfg.sweep_axis == SweepAxis::SensingStreams
                            ? static_cast<int>(value)
                            : cfg.sensing_streams.resolve(scene.num_tx(), scene.num_targets());
    return s;
}

Weights make_weights(const ExperimentConfig& cfg, double value) {
    Weights w = cfg.weights;
    if (cfg.sweep_axis == SweepAxis::DeltaC) w.comm = value;
    return w;
}

Stat mean_stderr(const std::vector<double>& values) {
    Stat s;
    const auto n = values.size();
    if (n == 0) {
        s.mean = s.stderr_ = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stderr_ = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return s;
}

int ExperimentResult::failures() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.ok(); }));
}

bool ExperimentResult::any_status(const std::string& status) const {
    return std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.status == status; });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<double> values =
        cfg.sweep_axis == SweepAxis::None ? std::vector<double>{0.0} : cfg.sweep_values;
    std::vector<SolverChoice> solvers;
    if (cfg.solver != SolverChoice::LowDim) solvers.push_back(SolverChoice::Full);
    if (cfg.solver != SolverChoice::Full) solvers.push_back(SolverChoice::LowDim);

    struct Job {
        double value;
        int trial;
        SolverChoice solver;
    };
    std::vector<Job> jobs;
    for (double v : values)
        for (int t = 0; t < cfg.trials; ++t)
            for (auto s : solvers) jobs.push_back({v, t, s});

    ExperimentResult result;
    result.records.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++)
            result.records[i] = run_trial(cfg, jobs[i].value, jobs[i].trial, jobs[i].solver);
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), jobs.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (double v : values)
        for (auto s : solvers) {
            SweepSummary sum;
            sum.sweep_value = v;
            sum.solver = s == SolverChoice::LowDim ? "lowdim" : "full";
            std::vector<double> sr, crlb, obj, its;
            for (const auto& r : result.records) {
                if (r.sweep_value != v || r.solver != sum.solver) continue;
                ++sum.trials;
                if (!r.ok()) {
                    ++sum.failed;
                    continue;
                }
                sr.push_back(r.sum_rate);
                crlb.push_back(r.crlb_trace);
                obj.push_back(r.objective);
                its.push_back(r.iterations);
            }
            sum.sum_rate = mean_stderr(sr);
            sum.crlb_trace = mean_stderr(crlb);
            sum.objective = mean_stderr(obj);
            sum.iterations = mean_stderr(its);
            result.summaries.push_back(sum);
        }
    return result;
}

void write_csv(const ExperimentConfig& cfg, const ExperimentResult& result, std::ostream& os) {
    os << "sweep_axis,sweep_value,seed,solver,status,sum_rate_nats,crlb_trace,objective,iterations,wall_ms\n";
    for (const auto& r : result.records) {
        os << to_string(cfg.sweep_axis) << ',' << fmt(r.sweep_value) << ',' << r.seed << ',' << r.solver << ','
           << r.status << ',' << fmt(r.sum_rate) << ',' << fmt(r.crlb_trace) << ',' << fmt(r.objective) << ','
           << r.iterations << ',' << fmt(r.wall_ms) << '\n';
    }
}

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::parse(config_to_json(cfg));
    auto stat = [](const Stat& s) {
        nlohmann::ordered_json o;
        o["mean"] = s.mean;
        o["stderr"] = s.stderr_;
        return o;
    };
    auto rows = nlohmann::ordered_json::array();
    for (const auto& s : result.summaries) {
        nlohmann::ordered_json o;
        o["sweep_value"] = s.sweep_value;
        o["solver"] = s.solver;
        o["trials"] = s.trials;
        o["failed"] = s.failed;
        o["sum_rate_nats"] = stat(s.sum_rate);
        o["crlb_trace"] = stat(s.crlb_trace);
        o["objective"] = stat(s.objective);
        o["iterations"] = stat(s.iterations);
        rows.push_back(o);
    }
    j["summary"] = rows;
    return j.dump(2) + "\n";
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
    if (cfg.out.empty()) return;
    std::ofstream csv(cfg.out + ".csv");
    if (!csv) throw std::runtime_error("cannot write '" + cfg.out + ".csv'");
    write_csv(cfg, result, csv);
    std::ofstream js(cfg.out + ".json");
    if (!js) throw std::runtime_error("cannot write '" + cfg.out + ".json'");
    js << summary_json(cfg, result);
}

VerificationReport verify(const ExperimentConfig& cfg) {
    cfg.validate();
    VerificationReport report;
    const double first_value = cfg.sweep_axis == SweepAxis::None ? 0.0 : cfg.sweep_values.front();
    const Weights weights = make_weights(cfg, first_value);

    auto guarded = [&](const std::string& name, double threshold, auto&& check) {
        try {
            check();
        } catch (const std::exception& e) {
            report.add(name, std::numeric_limits<double>::quiet_NaN(), threshold, false, e.what());
        }
    };

    // Oracles on small random instances.
    double grad_err = 0.0, fim_err = 0.0, adjoint_err = 0.0, tangency_err = 0.0;
    guarded("oracles", 0.0, [&] {
        for (int i = 0; i < 5; ++i) {
            SceneDims small;
            small.tx = {3, 2};
            small.rx = {3, 2};
            small.users = 2;
            small.targets = 1 + i % 2;
            small.slots = cfg.dims.slots;
            const Scene scene = sample_scene(derive_seed(cfg.seed, 1000 + i), small, cfg.powers, cfg.elevation);
            const SteeringSet st = build_steering_set(scene);
            CounterRng rng(derive_seed(cfg.seed, 2000 + i), 5);
            const CMatrix wt = project_total_power(random_complex(scene.num_tx(), scene.num_users() + 2, rng),
                                                   scene.power_budget);
            const Beamformer w = Beamformer::from_stacked(wt, scene.num_users(), scene.power_budget);

            const CMatrix g = analytic_gradient(scene, st, w, weights);
            grad_err = std::max(grad_err, (g - fd_gradient(scene, st, w, weights)).norm() / g.norm());

            const RMatrix f = fim(scene, st, w).matrix;
            fim_err = std::max(fim_err, (f - fd_fim(scene, st, w)).norm() / f.norm());

            const IsacModel model = make_model(scene, st);
            const RMatrix a = random_complex(f.rows(), f.cols(), rng).real();
            const RMatrix phi = a + a.transpose();
            const double lhs = (phi.transpose() * f).trace();
            const double rhs = std::real((wt * wt.adjoint() * core::sensing_q(model, phi, cfg.q_mutation)).trace());
            adjoint_err = std::max(adjoint_err, relative(rhs, lhs));

            const cd z0 = scene.channels.col(0).dot(wt.col(0));
            const double d0 = 1.0 + std::norm(scene.channels.col(0).dot(wt.col(1)));
            const double log_exact = std::log1p(std::norm(z0) / d0);
            tangency_err = std::max(tangency_err, relative(log_rate_minorant(z0, d0, z0, d0), log_exact));
            const RMatrix z0m = f + RMatrix::Identity(f.rows(), f.cols());
            const double tr_inv = Eigen::LLT<RMatrix>(z0m).solve(RMatrix::Identity(f.rows(), f.cols())).trace();
            tangency_err = std::max(tangency_err, relative(trace_inverse_majorant(z0m, z0m), -tr_inv));
            const CMatrix c = scene.channels * scene.channels.adjoint();
            tangency_err = std::max(tangency_err, relative(quadratic_minorant(wt, wt, c),
                                                           std::real((wt * wt.adjoint() * c).trace())));
        }
        report.add("gradient_oracle", grad_err, 1e-5, grad_err <= 1e-5);
        report.add("fim_oracle", fim_err, 1e-5, fim_err <= 1e-5);
        report.add("adjoint_identity", adjoint_err, 1e-8, adjoint_err <= 1e-8);
        report.add("surrogate_tangency", tangency_err, 1e-9, tangency_err <= 1e-9);
    });

    const int instances = std::min(cfg.trials, 3);
    for (int t = 0; t < instances; ++t) {
        const std::string tag = "[" + std::to_string(t) + "]";
        guarded("instance" + tag, 0.0, [&] {
            const Scene scene = make_scene(cfg, first_value, t);
            const SteeringSet st = build_steering_set(scene);
            SolverConfig scfg = make_solver_config(cfg, scene, first_value);

            SolverConfig strict = scfg;
            strict.strict = true;
            try {
                solve(scene, weights, strict);
                report.add("convergence" + tag, 0.0, cfg.tol_objective, true);
            } catch (const NonConvergenceError& e) {
                report.add("convergence" + tag, cfg.max_iters, cfg.tol_objective, false, e.what());
            }

            const SolveResult r = solve(scene, weights, scfg);
            double worst_drop = 0.0;
            for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
                const double prev = r.objective_trace[i - 1];
                worst_drop = std::max(worst_drop, (prev - r.objective_trace[i]) / std::max(std::abs(prev), 1e-300));
            }
            report.add("monotone" + tag, worst_drop, 1e-9, worst_drop <= 1e-9);

            const Beamformer& w = r.beamformer;
            if (cfg.power_constraint == PowerConstraint::Total) {
                const double gap = std::abs(w.power() - scene.power_budget) / scene.power_budget;
                report.add("full_power" + tag, gap, 1e-9, gap <= 1e-9);
            }
            Beamformer inward = w;
            inward.comm *= 0.99;
            inward.sensing *= 0.99;
            const double f_in = objective(scene, st, inward, weights);
            const double f_w = objective(scene, st, w, weights);
            report.add("inward_scaling" + tag, f_w - f_in, 0.0, f_in < f_w);

            if (cfg.power_constraint == PowerConstraint::Total) {
                const StepResult step = sca_step(scene, st, w, weights, scfg);
                const CMatrix pga = project_total_power(
                    w.stacked() + analytic_gradient(scene, st, w, weights) / (2.0 * step.lambda), scene.power_budget);
                const double diff = (step.next.stacked() - pga).norm() / pga.norm();
                report.add("pga_equivalence" + tag, diff, 1e-10, diff <= 1e-10);
            }

            SolverConfig tight = scfg;
            tight.tol_objective = 1e-8;
            tight.max_iters = std::max(cfg.max_iters, 200000);
            tight.strict = false;
            const SolveResult rt = solve(scene, weights, tight);
            const ObsReport obs = obs_residuals(scene, st, rt.beamformer, weights);
            report.add("stationarity" + tag, obs.stationarity, 1e-2, obs.stationarity <= 1e-2);
            report.add("obs_comm" + tag, obs.comm_residual, 1e-2, obs.comm_residual <= 1e-2);
            report.add("obs_sensing" + tag, obs.sensing_residual, 1e-2, obs.sensing_residual <= 1e-2);
            report.add("rank_bound" + tag, obs.sensing_rank, 3.0 * scene.num_targets(),
                       obs.sensing_rank <= 3 * scene.num_targets());

            if (cfg.power_constraint == PowerConstraint::Total && scene.num_users() + scene.num_targets() > 0) {
                SolverConfig full3m = scfg;
                full3m.sensing_streams = 3 * scene.num_targets();
                const SolveResult a = solve(scene, weights, full3m);
                const SolveResult b = solve_ld(scene, weights, full3m);
                const double gap = relative(b.objective, a.objective);
                report.add("lowdim_parity" + tag, gap, 1e-2, gap <= 1e-2);
            }
        });
    }
    return report;
}

}  // namespace isac
