#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kexp/estimation.hpp"
#include "kexp/mdp.hpp"

namespace kexp {

/// Largest state count the extended-LP explorer accepts.
inline constexpr std::size_t kMaxExtendedLpStates = 30;

enum class Algorithm { FrankWolfe, Dp, Random, MaxEnt, WeightedMaxEnt };
enum class Horizon { Full, H1, H2 };

std::string to_string(Algorithm algorithm);
std::string to_string(Horizon horizon);
Algorithm parse_algorithm(const std::string& name);
Horizon parse_horizon(const std::string& name);

struct ExplorerConfig {
    Algorithm algorithm = Algorithm::Dp;
    double kappa = 2.0;
    /// Interior floor parameter; values <= 0 select 1 / (8 S A).
    double eta = 0.0;
    double delta = 0.1;
    double gamma = 0.95;
    Horizon horizon = Horizon::Full;
    std::uint64_t tau1 = 50;
    /// The epsilon in T+ = max(T, epsilon).
    double epsilon_count = 0.1;
    std::uint64_t budget = 10000;
    std::uint64_t seed = 0;
    /// Weight of the uniform policy mixed into episode policies (off by default).
    double uniform_mix = 0.0;
    /// Absolute value-iteration tolerance on rewards scaled to unit maximum.
    double vi_tolerance = 1e-6;
    /// Record U(d*) - U(d_hat) diagnostics; needs an optimum on the true kernel.
    bool track_gap = false;
    /// Sampling interval (steps) for histories of per-step algorithms;
    /// 0 samples 100 evenly spaced points. Episodic algorithms sample at
    /// episode starts.
    std::uint64_t history_interval = 0;
    /// Frank-Wolfe iterations for the diagnostic optimum d*.
    std::size_t optimum_iterations = 500;

    double effective_eta(std::size_t n_pairs) const;
    /// Range checks that do not depend on the environment.
    void validate_settings() const;
    void validate(std::size_t n_states, std::size_t n_actions) const;
};

struct EpisodeSchedule {
    std::uint64_t length;  ///< tau_m = tau1 m^2
    std::uint64_t start;   ///< t_m = tau1 (m-1) m (2m-1) / 6 + 1
    double step_size;      ///< beta_m = tau_m / (t_{m+1} - 1)
};

/// Episode m (1-based) of the growing schedule.
EpisodeSchedule episode_schedule(std::uint64_t tau1, std::uint64_t m);

struct RunTrace {
    VisitCounts counts;
    TransitionKernel kernel_estimate;
    State initial_state = 0;
    /// (t, d_hat(t)) with d_hat = max(T, epsilon) / t; entries need not sum to 1.
    std::vector<std::pair<std::uint64_t, std::vector<double>>> occupancy_history;
    /// (t, U(d*) - U(d_hat(t))) when gap tracking is on.
    std::vector<std::pair<std::uint64_t, double>> gap_history;
    std::uint64_t episodes_completed = 0;
    /// Episodes whose planning LP was infeasible and ran the uniform policy.
    std::vector<std::uint64_t> fallback_episodes;
    /// Diagnostic optimum value U(d*), when tracked.
    std::optional<double> optimum_value;
};

/// d_hat(t) = max(T(s,a), epsilon) / t.
std::vector<double> empirical_occupancy(const VisitCounts& counts, double epsilon, std::uint64_t t);

/// c_ucb(s,a) / max(T(s,a), epsilon)^kappa, unscaled.
std::vector<double> exploration_reward(std::span<const double> c_ucb, const VisitCounts& counts,
                                       double kappa, double epsilon);

/// State-entropy gradient weights -log(d_hat_s) - 1 + max(log t, 1), with
/// d_hat_s = max(T(s), epsilon) / t, repeated over actions.
std::vector<double> entropy_weights(const VisitCounts& counts, double epsilon, std::uint64_t t);

/// entropy_weights multiplied entrywise by `complexity`.
std::vector<double> weighted_entropy_weights(const VisitCounts& counts, double epsilon, std::uint64_t t,
                                             std::span<const double> complexity);

RunTrace run_fw_explorer(const TransitionKernel& env, const ExplorerConfig& cfg);
RunTrace run_dp_explorer(const TransitionKernel& env, const ExplorerConfig& cfg);
RunTrace run_random(const TransitionKernel& env, const ExplorerConfig& cfg);
RunTrace run_maxent(const TransitionKernel& env, const ExplorerConfig& cfg);
RunTrace run_weighted_maxent(const TransitionKernel& env, const ExplorerConfig& cfg);

/// Dispatches on cfg.algorithm.
RunTrace run_explorer(const TransitionKernel& env, const ExplorerConfig& cfg);

}  // namespace kexp
