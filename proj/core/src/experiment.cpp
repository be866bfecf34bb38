#include "kexp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "kexp/environments.hpp"
#include "kexp/errors.hpp"
#include "kexp/random.hpp"

namespace kexp {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::size_t EnvironmentConfig::effective_bins() const {
    if (bins > 0) return bins;
    if (kind == "pendulum") return full_scale ? 10 : 5;
    if (kind == "mountain_car") return full_scale ? 13 : 7;
    return 0;
}

std::string EnvironmentConfig::label() const {
    if (kind == "pendulum" || kind == "mountain_car") {
        const std::size_t b = effective_bins();
        return fmt::format("{}-{}x{}", kind, b, b);
    }
    if (kind == "random") return fmt::format("random-{}x{}", n_states, n_actions);
    return fs::path(kernel_file).stem().string();
}

TransitionKernel build_environment(const EnvironmentConfig& env) {
    if (env.kind == "pendulum") {
        auto spec = pendulum_spec(env.effective_bins());
        if (env.control_repeat > 0) spec.control_repeat = env.control_repeat;
        return build_pendulum(spec, NoiseModel::three_point(env.noise_sigma.value_or(kPendulumNoiseSigma)));
    }
    if (env.kind == "mountain_car") {
        auto spec = mountain_car_spec(env.effective_bins());
        if (env.control_repeat > 0) spec.control_repeat = env.control_repeat;
        return build_mountain_car(spec,
                                  NoiseModel::three_point(env.noise_sigma.value_or(kMountainCarNoiseSigma)));
    }
    if (env.kind == "random") return build_random_mdp(env.n_states, env.n_actions, env.branching, env.seed);
    if (env.kind == "file") return load_kernel(env.kernel_file);
    throw ConfigError("unknown env '" + env.kind + "' (pendulum, mountain_car, random, file)");
}

std::uint64_t default_budget(const EnvironmentConfig& env) {
    if (env.kind == "pendulum") return env.full_scale ? 100000 : 20000;
    if (env.kind == "mountain_car") return env.full_scale ? 1000000 : 100000;
    return 10000;
}

void ExperimentConfig::validate() const {
    if (n_trials < 1) throw ConfigError("trials must be at least 1");
    if (!seeds.empty() && seeds.size() < n_trials) {
        throw ConfigError(fmt::format("{} seeds listed for {} trials", seeds.size(), n_trials));
    }
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (budget && *budget < 1) throw ConfigError("budget must be positive");
    if (policies.empty()) throw ConfigError("no policy configured");
    const auto& e = environment;
    if (e.kind != "pendulum" && e.kind != "mountain_car" && e.kind != "random" && e.kind != "file") {
        throw ConfigError("unknown env '" + e.kind + "' (pendulum, mountain_car, random, file)");
    }
    if (e.kind == "file" && e.kernel_file.empty()) throw ConfigError("env = file needs kernel_file");
    if (e.noise_sigma && !(*e.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be nonnegative");
    if (e.kind == "random" && (e.n_states < 1 || e.n_actions < 1 || e.branching < 1 || e.branching > e.n_states)) {
        throw ConfigError("random env needs states, actions >= 1 and 1 <= branching <= states");
    }
    std::vector<std::string> names;
    for (const auto& p : policies) {
        if (std::find(names.begin(), names.end(), p.name) != names.end()) {
            throw ConfigError("duplicate policy '" + p.name + "'");
        }
        names.push_back(p.name);
        try {
            p.explorer.validate_settings();
        } catch (const InputError& e) {
            throw ConfigError("[" + p.name + "] " + e.what());
        }
    }
}

std::uint64_t ExperimentConfig::resolved_budget() const { return budget.value_or(default_budget(environment)); }

std::uint64_t ExperimentConfig::trial_seed(std::size_t k) const {
    return seeds.empty() ? split_seed(base_seed, k) : seeds.at(k);
}

namespace {

template <class T>
T parse_integer(const std::string& key, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, text));
    return value;
}

double parse_real(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) {
        throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, text));
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const auto lower = boost::algorithm::to_lower_copy(text);
    if (lower == "true" || lower == "1" || lower == "yes" || lower == "on") return true;
    if (lower == "false" || lower == "0" || lower == "no" || lower == "off") return false;
    throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", key, text));
}

bool apply_explorer_key(ExplorerConfig& x, const std::string& key, const std::string& value) {
    try {
        if (key == "algorithm") x.algorithm = parse_algorithm(value);
        else if (key == "horizon") x.horizon = parse_horizon(value);
        else if (key == "kappa") x.kappa = parse_real(key, value);
        else if (key == "eta") x.eta = parse_real(key, value);
        else if (key == "delta") x.delta = parse_real(key, value);
        else if (key == "gamma") x.gamma = parse_real(key, value);
        else if (key == "tau1") x.tau1 = parse_integer<std::uint64_t>(key, value);
        else if (key == "epsilon") x.epsilon_count = parse_real(key, value);
        else if (key == "uniform_mix") x.uniform_mix = parse_real(key, value);
        else if (key == "vi_tolerance") x.vi_tolerance = parse_real(key, value);
        else if (key == "track_gap") x.track_gap = parse_bool(key, value);
        else if (key == "history_interval") x.history_interval = parse_integer<std::uint64_t>(key, value);
        else if (key == "optimum_iterations") x.optimum_iterations = parse_integer<std::size_t>(key, value);
        else return false;
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    return true;
}

bool apply_top_level_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    auto& env = cfg.environment;
    if (key == "env") env.kind = value;
    else if (key == "bins") env.bins = parse_integer<std::size_t>(key, value);
    else if (key == "noise_sigma") env.noise_sigma = parse_real(key, value);
    else if (key == "repeat") env.control_repeat = parse_integer<std::size_t>(key, value);
    else if (key == "states") env.n_states = parse_integer<std::size_t>(key, value);
    else if (key == "actions") env.n_actions = parse_integer<std::size_t>(key, value);
    else if (key == "branching") env.branching = parse_integer<std::size_t>(key, value);
    else if (key == "env_seed") env.seed = parse_integer<std::uint64_t>(key, value);
    else if (key == "kernel_file") env.kernel_file = value;
    else if (key == "full_scale") env.full_scale = parse_bool(key, value);
    else if (key == "trials") cfg.n_trials = parse_integer<std::size_t>(key, value);
    else if (key == "seed") cfg.base_seed = parse_integer<std::uint64_t>(key, value);
    else if (key == "budget") cfg.budget = parse_integer<std::uint64_t>(key, value);
    else if (key == "workers") cfg.workers = parse_integer<std::size_t>(key, value);
    else if (key == "out") cfg.output_dir = value;
    else if (key == "write_traces") cfg.write_traces = parse_bool(key, value);
    else if (key == "seeds") {
        std::vector<std::string> parts;
        boost::algorithm::split(parts, value, boost::algorithm::is_any_of(", "), boost::algorithm::token_compress_on);
        cfg.seeds.clear();
        for (const auto& part : parts) {
            if (!part.empty()) cfg.seeds.push_back(parse_integer<std::uint64_t>(key, part));
        }
    } else {
        return false;
    }
    return true;
}

bool valid_policy_name(const std::string& name) {
    return !name.empty() && std::all_of(name.begin(), name.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
    });
}

}  // namespace

// Section headers in file order. The INI reader drops sections without keys,
// so headers are collected from the raw text.
std::vector<std::string> section_headers(const std::string& text) {
    std::vector<std::string> headers;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto trimmed = boost::algorithm::trim_copy(line);
        if (trimmed.size() < 2 || trimmed.front() != '[' || trimmed.back() != ']') continue;
        auto name = boost::algorithm::trim_copy(trimmed.substr(1, trimmed.size() - 2));
        if (std::find(headers.begin(), headers.end(), name) != headers.end()) {
            throw ConfigError("duplicate policy section [" + name + "]");
        }
        headers.push_back(std::move(name));
    }
    return headers;
}

ExperimentConfig parse_config(std::istream& in) {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const auto headers = section_headers(text);
    boost::property_tree::ptree tree;
    try {
        std::istringstream ini(text);
        boost::property_tree::ini_parser::read_ini(ini, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    ExperimentConfig cfg;
    ExplorerConfig defaults;
    for (const auto& [key, node] : tree) {
        if (!node.empty() || std::find(headers.begin(), headers.end(), key) != headers.end()) continue;
        const std::string value = boost::algorithm::trim_copy(node.data());
        cfg.echo.emplace_back(key, value);
        if (!apply_top_level_key(cfg, key, value) && !apply_explorer_key(defaults, key, value)) {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    for (const auto& name : headers) {
        if (!valid_policy_name(name)) throw ConfigError("policy name '" + name + "' must match [A-Za-z0-9_.-]+");
        PolicyConfig policy{name, defaults};
        if (const auto node = tree.get_child_optional(boost::property_tree::ptree::path_type(name, '\0'))) {
            for (const auto& [key, child] : *node) {
                const std::string value = boost::algorithm::trim_copy(child.data());
                cfg.echo.emplace_back(name + "." + key, value);
                if (!apply_explorer_key(policy.explorer, key, value)) {
                    throw ConfigError("unknown policy key '" + key + "' in [" + name + "]");
                }
            }
        }
        cfg.policies.push_back(std::move(policy));
    }
    if (cfg.policies.empty()) cfg.policies.push_back({to_string(defaults.algorithm), defaults});
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(in);
}

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& o) {
    if (o.seed) {
        cfg.base_seed = *o.seed;
        cfg.seeds.clear();
        cfg.echo.emplace_back("override.seed", std::to_string(*o.seed));
    }
    if (o.trials) {
        cfg.n_trials = *o.trials;
        cfg.echo.emplace_back("override.trials", std::to_string(*o.trials));
    }
    if (o.budget) {
        cfg.budget = *o.budget;
        cfg.echo.emplace_back("override.budget", std::to_string(*o.budget));
    }
    if (o.workers) {
        cfg.workers = *o.workers;
        cfg.echo.emplace_back("override.workers", std::to_string(*o.workers));
    }
    if (o.output_dir) {
        cfg.output_dir = *o.output_dir;
        cfg.echo.emplace_back("override.out", *o.output_dir);
    }
    if (o.full_scale) {
        cfg.environment.full_scale = true;
        cfg.echo.emplace_back("override.full_scale", "true");
    }
    cfg.validate();
}

MetricsReport run_policy(const ExperimentConfig& cfg, const PolicyConfig& policy, const TransitionKernel& env,
                         std::vector<std::optional<RunTrace>>* traces) {
    const std::uint64_t budget = cfg.resolved_budget();
    std::vector<TrialResult> results(cfg.n_trials);
    if (traces) traces->assign(cfg.n_trials, std::nullopt);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    const auto worker = [&] {
        for (std::size_t k = next++; k < cfg.n_trials; k = next++) {
            TrialResult& result = results[k];
            result.index = k;
            result.seed = cfg.trial_seed(k);
            ExplorerConfig x = policy.explorer;
            x.budget = budget;
            x.seed = result.seed;
            try {
                RunTrace trace = run_explorer(env, x);
                result.loss = aggregate(pair_loss(env, trace.counts, budget));
                if (traces) (*traces)[k] = std::move(trace);
            } catch (const std::exception& e) {
                result.error = e.what();
                result.loss.failed = true;
                result.loss.worst = result.loss.avg = std::numeric_limits<double>::infinity();
                std::lock_guard lock(log_mutex);
                std::cerr << fmt::format("trial {} of policy {} crashed: {}\n", k, policy.name, e.what());
            }
        }
    };
    const std::size_t n_threads = std::min(cfg.workers, cfg.n_trials);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return MetricsReport::from_trials(policy.name, cfg.environment.label(), budget, std::move(results));
}

namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json echo_json(const ExperimentConfig& cfg) {
    Json echo = Json::object();
    for (const auto& [key, value] : cfg.echo) echo[key] = value;
    return echo;
}

Json explorer_json(const ExplorerConfig& x, std::size_t n_pairs) {
    return Json{{"algorithm", to_string(x.algorithm)},
                {"kappa", x.kappa},
                {"eta", x.effective_eta(n_pairs)},
                {"delta", x.delta},
                {"gamma", x.gamma},
                {"horizon", to_string(x.horizon)},
                {"tau1", x.tau1},
                {"epsilon", x.epsilon_count},
                {"uniform_mix", x.uniform_mix},
                {"vi_tolerance", x.vi_tolerance},
                {"track_gap", x.track_gap}};
}

Json report_entry(const MetricsReport& r) {
    Json trials = Json::array();
    for (const auto& t : r.per_trial) {
        Json entry{{"trial", t.index},
                   {"seed", t.seed},
                   {"worst", finite_or_null(t.loss.worst)},
                   {"avg", finite_or_null(t.loss.avg)},
                   {"failed", t.loss.failed}};
        if (!t.error.empty()) entry["error"] = t.error;
        trials.push_back(std::move(entry));
    }
    return Json{{"policy", r.policy},
                {"env", r.env},
                {"n_trials", r.per_trial.size()},
                {"budget", r.budget},
                {"failure_rate", r.failure_rate},
                {"worst_mean", optional_json(r.worst_mean)},
                {"avg_mean", optional_json(r.avg_mean)},
                {"trials", std::move(trials)}};
}

void write_file(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << contents;
}

void persist_reports(const ExperimentConfig& cfg, const std::vector<MetricsReport>& reports) {
    std::vector<ReportSummary> rows;
    for (const auto& r : reports) rows.push_back(r.summary());
    std::ostringstream csv;
    write_report_csv(csv, rows);
    const fs::path dir(cfg.output_dir);
    write_file(dir / "report.csv", csv.str());
    write_file(dir / "report.json", report_json(cfg, reports));
}

const PolicyConfig& policy_named(const ExperimentConfig& cfg, const std::string& name) {
    for (const auto& p : cfg.policies) {
        if (p.name == name) return p;
    }
    throw std::logic_error("no policy " + name);
}

void persist_traces(const ExperimentConfig& cfg, const MetricsReport& report,
                    const std::vector<std::optional<RunTrace>>& traces, const fs::path& dir) {
    const PolicyConfig& policy = policy_named(cfg, report.policy);
    for (const auto& result : report.per_trial) {
        const auto& trace = traces[result.index];
        write_file(dir / fmt::format("trace_{}.json", result.index),
                   trace_json(cfg, policy, result, trace ? &*trace : nullptr));
    }
}

}  // namespace

std::string report_json(const ExperimentConfig& cfg, const std::vector<MetricsReport>& reports) {
    Json doc{{"config", echo_json(cfg)},
             {"env", cfg.environment.label()},
             {"budget", cfg.resolved_budget()},
             {"n_trials", cfg.n_trials},
             {"reports", Json::array()}};
    for (const auto& r : reports) doc["reports"].push_back(report_entry(r));
    return doc.dump(2) + "\n";
}

std::string trace_json(const ExperimentConfig& cfg, const PolicyConfig& policy, const TrialResult& result,
                       const RunTrace* trace) {
    Json doc{{"policy", policy.name},
             {"trial", result.index},
             {"seed", result.seed},
             {"env", cfg.environment.label()},
             {"budget", cfg.resolved_budget()},
             {"config", echo_json(cfg)}};
    if (trace) {
        const auto pairs = trace->counts.pairs();
        doc["explorer"] = explorer_json(policy.explorer, pairs.size());
        doc["initial_state"] = trace->initial_state;
        const auto [lo, hi] = std::minmax_element(pairs.begin(), pairs.end());
        doc["counts"] = Json{
            {"total_steps", trace->counts.total_steps()},
            {"visited_pairs", std::count_if(pairs.begin(), pairs.end(), [](std::uint64_t c) { return c > 0; })},
            {"min_pair_count", pairs.empty() ? 0 : *lo},
            {"max_pair_count", pairs.empty() ? 0 : *hi},
            {"pair_counts", std::vector<std::uint64_t>(pairs.begin(), pairs.end())}};
        doc["episodes_completed"] = trace->episodes_completed;
        doc["fallback_episodes"] = trace->fallback_episodes;
    }
    doc["metrics"] = Json{{"worst", finite_or_null(result.loss.worst)},
                          {"avg", finite_or_null(result.loss.avg)},
                          {"failed", result.loss.failed}};
    if (!result.error.empty()) doc["error"] = result.error;
    if (trace && !trace->gap_history.empty()) {
        doc["optimum_value"] = optional_json(trace->optimum_value);
        Json gaps = Json::array();
        for (const auto& [t, gap] : trace->gap_history) gaps.push_back(Json::array({t, gap}));
        doc["gap_history"] = std::move(gaps);
    }
    return doc.dump(2) + "\n";
}

MetricsReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const TransitionKernel env = build_environment(cfg.environment);
    const PolicyConfig& policy = cfg.policies.front();
    const bool persist = !cfg.output_dir.empty();
    std::vector<std::optional<RunTrace>> traces;
    MetricsReport report = run_policy(cfg, policy, env, persist && cfg.write_traces ? &traces : nullptr);
    if (persist) {
        persist_reports(cfg, {report});
        if (cfg.write_traces) persist_traces(cfg, report, traces, cfg.output_dir);
    }
    return report;
}

std::vector<MetricsReport> run_comparison(const ExperimentConfig& cfg) {
    cfg.validate();
    const TransitionKernel env = build_environment(cfg.environment);
    const bool persist = !cfg.output_dir.empty();
    std::vector<MetricsReport> reports;
    for (const auto& policy : cfg.policies) {
        std::vector<std::optional<RunTrace>> traces;
        reports.push_back(run_policy(cfg, policy, env, persist && cfg.write_traces ? &traces : nullptr));
        if (persist && cfg.write_traces) {
            persist_traces(cfg, reports.back(), traces, fs::path(cfg.output_dir) / policy.name);
        }
    }
    if (persist) {
        persist_reports(cfg, reports);
        write_file(fs::path(cfg.output_dir) / "table.txt", emit_table(reports));
    }
    return reports;
}

ConvergenceResult run_convergence(const ExperimentConfig& cfg) {
    cfg.validate();
    const TransitionKernel env = build_environment(cfg.environment);
    ExplorerConfig x = cfg.policies.front().explorer;
    x.budget = cfg.resolved_budget();
    x.seed = cfg.trial_seed(0);
    x.track_gap = true;
    ConvergenceResult result{run_explorer(env, x), std::nullopt};
    std::ostringstream csv;
    result.slope = emit_convergence(csv, result.trace.gap_history);
    if (!cfg.output_dir.empty()) {
        const fs::path dir(cfg.output_dir);
        write_file(dir / "convergence.csv", csv.str());
        Json doc{{"config", echo_json(cfg)},
                 {"policy", cfg.policies.front().name},
                 {"env", cfg.environment.label()},
                 {"budget", x.budget},
                 {"seed", x.seed},
                 {"explorer", explorer_json(x, env.n_pairs())},
                 {"optimum_value", optional_json(result.trace.optimum_value)},
                 {"points", result.trace.gap_history.size()},
                 {"loglog_slope", optional_json(result.slope)}};
        write_file(dir / "convergence.json", doc.dump(2) + "\n");
    }
    return result;
}

}  // namespace kexp
