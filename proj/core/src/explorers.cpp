#include "kexp/explorers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "kexp/errors.hpp"
#include "kexp/objectives.hpp"
#include "kexp/planner.hpp"

namespace kexp {

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::FrankWolfe: return "fw";
        case Algorithm::Dp: return "dp";
        case Algorithm::Random: return "random";
        case Algorithm::MaxEnt: return "maxent";
        case Algorithm::WeightedMaxEnt: return "weighted_maxent";
    }
    return "unknown";
}

std::string to_string(Horizon horizon) {
    switch (horizon) {
        case Horizon::Full: return "full";
        case Horizon::H1: return "H1";
        case Horizon::H2: return "H2";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    for (auto a : {Algorithm::FrankWolfe, Algorithm::Dp, Algorithm::Random, Algorithm::MaxEnt,
                   Algorithm::WeightedMaxEnt}) {
        if (to_string(a) == name) return a;
    }
    throw InputError("unknown algorithm '" + name + "' (fw, dp, random, maxent, weighted_maxent)");
}

Horizon parse_horizon(const std::string& name) {
    if (name == "full" || name == "inf") return Horizon::Full;
    if (name == "H1" || name == "h1" || name == "1") return Horizon::H1;
    if (name == "H2" || name == "h2" || name == "2") return Horizon::H2;
    throw InputError("unknown horizon '" + name + "' (full, H1, H2)");
}

double ExplorerConfig::effective_eta(std::size_t n_pairs) const {
    return eta > 0.0 ? eta : 1.0 / (8.0 * static_cast<double>(n_pairs));
}

void ExplorerConfig::validate_settings() const {
    if (!(kappa >= 1.0)) throw InputError("kappa must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("gamma must lie in [0, 1)");
    if (!(epsilon_count > 0.0 && epsilon_count <= 1.0)) {
        throw InputError("epsilon_count must lie in (0, 1]");
    }
    if (tau1 < 1) throw InputError("tau1 must be positive");
    if (!(uniform_mix >= 0.0 && uniform_mix <= 1.0)) throw InputError("uniform_mix must lie in [0, 1]");
    if (!(vi_tolerance > 0.0)) throw InputError("vi_tolerance must be positive");
}

void ExplorerConfig::validate(std::size_t n_states, std::size_t n_actions) const {
    validate_settings();
    if (budget < 1) throw InputError("budget must be positive");
    const std::size_t pairs = n_states * n_actions;
    const double e = effective_eta(pairs);
    if (!(e < 1.0 / (2.0 * static_cast<double>(pairs)))) {
        throw InputError(fmt::format("eta = {} must be below 1/(2SA) = {}", e,
                                     1.0 / (2.0 * static_cast<double>(pairs))));
    }
}

EpisodeSchedule episode_schedule(std::uint64_t tau1, std::uint64_t m) {
    if (m < 1) throw InputError("episodes are numbered from 1");
    const auto start_of = [tau1](std::uint64_t k) {
        return tau1 * ((k - 1) * k * (2 * k - 1) / 6) + 1;
    };
    const std::uint64_t length = tau1 * m * m;
    const std::uint64_t next_start = start_of(m + 1);
    return {length, start_of(m),
            static_cast<double>(length) / static_cast<double>(next_start - 1)};
}

std::vector<double> empirical_occupancy(const VisitCounts& counts, double epsilon, std::uint64_t t) {
    std::vector<double> d(counts.n_pairs());
    const double td = static_cast<double>(t);
    for (std::size_t p = 0; p < d.size(); ++p) {
        d[p] = std::max(static_cast<double>(counts.pair(p)), epsilon) / td;
    }
    return d;
}

std::vector<double> exploration_reward(std::span<const double> c_ucb, const VisitCounts& counts,
                                       double kappa, double epsilon) {
    std::vector<double> r(counts.n_pairs());
    for (std::size_t p = 0; p < r.size(); ++p) {
        r[p] = c_ucb[p] / std::pow(std::max(static_cast<double>(counts.pair(p)), epsilon), kappa);
    }
    return r;
}

std::vector<double> entropy_weights(const VisitCounts& counts, double epsilon, std::uint64_t t) {
    const std::size_t S = counts.n_states();
    const std::size_t A = counts.n_actions();
    const double td = static_cast<double>(t);
    const double shift = std::max(std::log(td), 1.0);
    std::vector<double> w(S * A);
    for (State s = 0; s < S; ++s) {
        double visits = 0.0;
        for (Action a = 0; a < A; ++a) visits += static_cast<double>(counts.pair(s, a));
        const double freq = std::max(visits, epsilon) / td;
        const double weight = std::max(0.0, -std::log(freq) - 1.0 + shift);
        for (Action a = 0; a < A; ++a) w[s * A + a] = weight;
    }
    return w;
}

std::vector<double> weighted_entropy_weights(const VisitCounts& counts, double epsilon, std::uint64_t t,
                                             std::span<const double> complexity) {
    if (complexity.size() != counts.n_pairs()) throw InputError("one complexity per pair expected");
    auto w = entropy_weights(counts, epsilon, t);
    for (std::size_t p = 0; p < w.size(); ++p) w[p] *= complexity[p];
    return w;
}

namespace {

// c_ucb / max(T, eps)^kappa rescaled to unit maximum, computed in log space so
// that large kappa neither overflows nor underflows before the rescale.
std::vector<double> scaled_reward(std::span<const double> c_ucb, const VisitCounts& counts,
                                  double kappa, double epsilon, double* log_scale = nullptr) {
    std::vector<double> logs(counts.n_pairs());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < logs.size(); ++p) {
        logs[p] = std::log(c_ucb[p]) -
                  kappa * std::log(std::max(static_cast<double>(counts.pair(p)), epsilon));
        top = std::max(top, logs[p]);
    }
    if (!std::isfinite(top)) top = 0.0;
    for (double& x : logs) x = std::exp(x - top);
    if (log_scale) *log_scale = top;
    return logs;
}

std::vector<double> scaled_to_unit_max(std::vector<double> w) {
    const double top = *std::max_element(w.begin(), w.end());
    if (top > 0.0) {
        for (double& x : w) x /= top;
    }
    return w;
}

std::vector<double> ucb_vector(const VisitCounts& counts, double kappa, double delta, std::uint64_t t) {
    const double delta_t = delta_schedule(delta, t, counts.n_states(), counts.n_actions());
    std::vector<double> c(counts.n_pairs());
    for (State s = 0; s < counts.n_states(); ++s) {
        for (Action a = 0; a < counts.n_actions(); ++a) {
            c[s * counts.n_actions() + a] = complexity_ucb(counts, s, a, kappa, delta_t);
        }
    }
    return c;
}

// Diagnostics shared by every explorer: occupancy snapshots and the gap to the
// optimum of U_kappa on the true kernel.
class Recorder {
public:
    Recorder(const TransitionKernel& env, const ExplorerConfig& cfg, RunTrace& trace)
        : cfg_(cfg), trace_(trace) {
        if (cfg.track_gap) {
            spec_ = ObjectiveSpec{cfg.kappa, complexities(env)};
            const auto optimum = optimal_occupancy(*spec_, env, cfg.effective_eta(env.n_pairs()),
                                                   cfg.optimum_iterations, 1e-6, true);
            optimum_value_ = optimum.value;
            trace_.optimum_value = optimum.value;
        }
    }

    void record(const VisitCounts& counts, std::uint64_t t) {
        auto d = empirical_occupancy(counts, cfg_.epsilon_count, t);
        if (spec_) trace_.gap_history.emplace_back(t, optimum_value_ - u_kappa(d, *spec_));
        trace_.occupancy_history.emplace_back(t, std::move(d));
    }

private:
    const ExplorerConfig& cfg_;
    RunTrace& trace_;
    std::optional<ObjectiveSpec> spec_;
    double optimum_value_ = 0.0;
};

RunTrace empty_trace(const TransitionKernel& env) {
    return RunTrace{VisitCounts(env.n_states(), env.n_actions()),
                    TransitionKernel::uniform(env.n_states(), env.n_actions()),
                    0, {}, {}, 0, {}, std::nullopt};
}

Policy mixed(const Policy& policy, double weight) {
    if (weight == 0.0) return policy;
    const std::size_t A = policy.n_actions();
    std::vector<double> probs(policy.data().begin(), policy.data().end());
    for (double& p : probs) p = (1.0 - weight) * p + weight / static_cast<double>(A);
    return Policy(policy.n_states(), A, std::move(probs));
}

// Planner for one episode: returns the direction occupancy, or nullopt when the
// LP is infeasible.
using EpisodePlanner =
    std::function<std::optional<OccupancyMeasure>(const VisitCounts&, std::uint64_t t)>;

RunTrace run_episodic(const TransitionKernel& env, const ExplorerConfig& cfg,
                      const EpisodePlanner& plan) {
    RunTrace trace = empty_trace(env);
    Recorder recorder(env, cfg, trace);
    Rng rng(cfg.seed);
    State state = rng.index(env.n_states());
    trace.initial_state = state;
    const Policy uniform = Policy::uniform(env.n_states(), env.n_actions());

    std::uint64_t steps = 0;
    for (std::uint64_t m = 1; steps < cfg.budget; ++m) {
        const std::uint64_t t = steps + 1;
        recorder.record(trace.counts, t);
        const auto direction = plan(trace.counts, t);
        Policy policy = uniform;
        if (direction) {
            policy = mixed(policy_from_occupancy(*direction), cfg.uniform_mix);
        } else {
            trace.fallback_episodes.push_back(m);
        }
        const std::uint64_t length = episode_schedule(cfg.tau1, m).length;
        const std::uint64_t run = std::min(length, cfg.budget - steps);
        for (std::uint64_t k = 0; k < run; ++k) {
            const Action a = sample_index(policy.row(state), rng);
            const State next = sample_step(env, state, a, rng);
            trace.counts.record(state, a, next);
            state = next;
        }
        steps += run;
        if (run == length) ++trace.episodes_completed;
    }
    recorder.record(trace.counts, steps + 1);
    trace.kernel_estimate = empirical_kernel(trace.counts);
    return trace;
}

template <typename ChooseAction>
RunTrace run_per_step(const TransitionKernel& env, const ExplorerConfig& cfg, ChooseAction choose) {
    RunTrace trace = empty_trace(env);
    Recorder recorder(env, cfg, trace);
    Rng rng(cfg.seed);
    State state = rng.index(env.n_states());
    trace.initial_state = state;
    const std::uint64_t interval =
        cfg.history_interval ? cfg.history_interval : std::max<std::uint64_t>(1, cfg.budget / 100);
    for (std::uint64_t step = 0; step < cfg.budget; ++step) {
        const std::uint64_t t = step + 1;
        if (step % interval == 0) recorder.record(trace.counts, t);
        const Action a = choose(trace.counts, state, t, rng);
        const State next = sample_step(env, state, a, rng);
        trace.counts.record(state, a, next);
        state = next;
    }
    recorder.record(trace.counts, cfg.budget + 1);
    trace.kernel_estimate = empirical_kernel(trace.counts);
    return trace;
}

void require(const ExplorerConfig& cfg, Algorithm algorithm, const TransitionKernel& env) {
    if (cfg.algorithm != algorithm) {
        throw InputError(fmt::format("config selects '{}' but '{}' was invoked", to_string(cfg.algorithm),
                                     to_string(algorithm)));
    }
    cfg.validate(env.n_states(), env.n_actions());
}

}  // namespace

RunTrace run_fw_explorer(const TransitionKernel& env, const ExplorerConfig& cfg) {
    require(cfg, Algorithm::FrankWolfe, env);
    if (env.n_states() > kMaxExtendedLpStates) {
        throw InputError(fmt::format("extended LP explorer supports at most {} states, got {}",
                                     kMaxExtendedLpStates, env.n_states()));
    }
    const double eta = cfg.effective_eta(env.n_pairs());
    return run_episodic(env, cfg, [&](const VisitCounts& counts, std::uint64_t t) {
        const ConfidenceState conf = confidence_state(counts, cfg.kappa, cfg.delta, t);
        ExtendedLpInstance inst{scaled_reward(conf.c_ucb, counts, cfg.kappa, cfg.epsilon_count),
                                empirical_kernel(counts), conf.radii, eta};
        LpSolution solution = solve_extended_lp(inst);
        if (solution.status != LpStatus::Optimal) return std::optional<OccupancyMeasure>{};
        return std::move(solution.occupancy);
    });
}

RunTrace run_maxent(const TransitionKernel& env, const ExplorerConfig& cfg) {
    require(cfg, Algorithm::MaxEnt, env);
    const double eta = cfg.effective_eta(env.n_pairs());
    return run_episodic(env, cfg, [&](const VisitCounts& counts, std::uint64_t t) {
        const auto w = scaled_to_unit_max(entropy_weights(counts, cfg.epsilon_count, t));
        return exact_direction(w, empirical_kernel(counts), eta);
    });
}

RunTrace run_weighted_maxent(const TransitionKernel& env, const ExplorerConfig& cfg) {
    require(cfg, Algorithm::WeightedMaxEnt, env);
    const double eta = cfg.effective_eta(env.n_pairs());
    return run_episodic(env, cfg, [&](const VisitCounts& counts, std::uint64_t t) {
        const auto c = ucb_vector(counts, 1.0, cfg.delta, t);
        auto w = weighted_entropy_weights(counts, cfg.epsilon_count, t, c);
        return exact_direction(scaled_to_unit_max(std::move(w)), empirical_kernel(counts), eta);
    });
}

RunTrace run_dp_explorer(const TransitionKernel& env, const ExplorerConfig& cfg) {
    require(cfg, Algorithm::Dp, env);
    std::vector<double> values(env.n_states(), 0.0);
    double previous_scale = 0.0;
    bool have_values = false;
    return run_per_step(env, cfg, [&](const VisitCounts& counts, State state, std::uint64_t t, Rng&) {
        const auto c = ucb_vector(counts, cfg.kappa, cfg.delta, t);
        double log_scale = 0.0;
        const auto reward = scaled_reward(c, counts, cfg.kappa, cfg.epsilon_count, &log_scale);
        const TransitionKernel phat = empirical_kernel(counts);
        switch (cfg.horizon) {
            case Horizon::H1: return truncated_action(reward, phat, state, 1, cfg.gamma);
            case Horizon::H2: return truncated_action(reward, phat, state, 2, cfg.gamma);
            case Horizon::Full: break;
        }
        // Warm start from the previous solution expressed in the new reward units.
        if (have_values) {
            const double ratio = std::exp(previous_scale - log_scale);
            for (double& v : values) v *= ratio;
        }
        values = value_iteration(reward, phat, cfg.gamma, cfg.vi_tolerance, values);
        previous_scale = log_scale;
        have_values = true;
        return greedy_action(values, reward, phat, state, cfg.gamma);
    });
}

RunTrace run_random(const TransitionKernel& env, const ExplorerConfig& cfg) {
    require(cfg, Algorithm::Random, env);
    const std::size_t A = env.n_actions();
    return run_per_step(env, cfg, [A](const VisitCounts&, State, std::uint64_t, Rng& rng) {
        return rng.index(A);
    });
}

RunTrace run_explorer(const TransitionKernel& env, const ExplorerConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::FrankWolfe: return run_fw_explorer(env, cfg);
        case Algorithm::Dp: return run_dp_explorer(env, cfg);
        case Algorithm::Random: return run_random(env, cfg);
        case Algorithm::MaxEnt: return run_maxent(env, cfg);
        case Algorithm::WeightedMaxEnt: return run_weighted_maxent(env, cfg);
    }
    throw InputError("unknown algorithm");
}

}  // namespace kexp
