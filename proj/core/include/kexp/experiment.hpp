#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kexp/explorers.hpp"
#include "kexp/mdp.hpp"
#include "kexp/metrics.hpp"

namespace kexp {

struct EnvironmentConfig {
    /// pendulum | mountain_car | random | file
    std::string kind = "pendulum";
    /// Bins per dimension; 0 picks the preset for the chosen scale.
    std::size_t bins = 0;
    std::optional<double> noise_sigma;
    /// Physics substeps per transition; 0 picks the preset.
    std::size_t control_repeat = 0;
    std::size_t n_states = 5;
    std::size_t n_actions = 2;
    std::size_t branching = 3;
    std::uint64_t seed = 0;
    std::string kernel_file;
    bool full_scale = false;

    std::size_t effective_bins() const;
    /// Short name used in reports, e.g. "pendulum-5x5".
    std::string label() const;
};

TransitionKernel build_environment(const EnvironmentConfig& env);

/// 2e4 / 1e5 for pendulum and 1e5 / 1e6 for mountain car (small / full scale);
/// 1e4 otherwise.
std::uint64_t default_budget(const EnvironmentConfig& env);

struct PolicyConfig {
    std::string name;
    ExplorerConfig explorer;
};

struct ExperimentConfig {
    EnvironmentConfig environment;
    std::vector<PolicyConfig> policies;
    std::size_t n_trials = 10;
    std::uint64_t base_seed = 0;
    /// Explicit per-trial seeds; when non-empty they replace derived seeds.
    std::vector<std::uint64_t> seeds;
    std::optional<std::uint64_t> budget;
    std::size_t workers = 1;
    std::string output_dir;
    bool write_traces = true;
    /// Every key as read, in file order; section keys are prefixed "section.".
    std::vector<std::pair<std::string, std::string>> echo;

    void validate() const;
    std::uint64_t resolved_budget() const;
    /// seeds[k] when given, else split_seed(base_seed, k).
    std::uint64_t trial_seed(std::size_t k) const;
};

/// INI-style text: top-level `key = value` lines set the environment, the run
/// and explorer defaults; each `[name]` section declares one policy that
/// overrides explorer keys. Without sections a single policy is built from the
/// top-level keys. Throws ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> budget;
    std::optional<std::size_t> workers;
    std::optional<std::string> output_dir;
    bool full_scale = false;
};

/// Applies command-line overrides and echoes them as "override.<key>".
void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& overrides);

/// Runs every trial of one policy against `env`; trial k uses trial_seed(k).
/// Traces are returned by trial index when `traces` is given.
MetricsReport run_policy(const ExperimentConfig& cfg, const PolicyConfig& policy, const TransitionKernel& env,
                         std::vector<std::optional<RunTrace>>* traces = nullptr);

/// First policy only; persists report.csv, report.json and trace_<k>.json
/// under cfg.output_dir when it is non-empty.
MetricsReport run_experiment(const ExperimentConfig& cfg);

/// Every policy on the same environment and seeds; persists report.csv,
/// report.json, table.txt and <policy>/trace_<k>.json.
std::vector<MetricsReport> run_comparison(const ExperimentConfig& cfg);

struct ConvergenceResult {
    RunTrace trace;
    std::optional<double> slope;
};

/// Single gap-tracked run of the first policy with the first trial seed;
/// persists convergence.csv and convergence.json.
ConvergenceResult run_convergence(const ExperimentConfig& cfg);

/// report.json contents for the given reports.
std::string report_json(const ExperimentConfig& cfg, const std::vector<MetricsReport>& reports);

/// One structured record per trial.
std::string trace_json(const ExperimentConfig& cfg, const PolicyConfig& policy, const TrialResult& result,
                       const RunTrace* trace);

}  // namespace kexp
