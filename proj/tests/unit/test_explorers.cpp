#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "kexp/environments.hpp"
#include "kexp/errors.hpp"
#include "kexp/explorers.hpp"
#include "kexp/objectives.hpp"
#include "kexp/planner.hpp"
#include "support.hpp"

using namespace kexp;

namespace {

ExplorerConfig make_cfg(Algorithm algorithm, std::uint64_t budget, std::uint64_t seed) {
    ExplorerConfig cfg;
    cfg.algorithm = algorithm;
    cfg.budget = budget;
    cfg.seed = seed;
    return cfg;
}

double state_entropy(const VisitCounts& counts) {
    double h = 0.0;
    const double n = static_cast<double>(counts.total_steps());
    for (State s = 0; s < counts.n_states(); ++s) {
        double visits = 0.0;
        for (Action a = 0; a < counts.n_actions(); ++a) visits += static_cast<double>(counts.pair(s, a));
        if (visits > 0.0) h -= visits / n * std::log(visits / n);
    }
    return h;
}

// State 0: action 0 stays, action 1 moves to state 1. State 1: action 0 is a
// fair coin between both states, action 1 returns to state 0.
TransitionKernel corridor() { return TransitionKernel(2, 2, {1, 0, 0, 1, 0.5, 0.5, 1, 0}); }

// Steps until pair (1, 0) has been taken `target` times.
std::uint64_t steps_to_visits(const RunTrace& trace, std::size_t target) {
    for (const auto& [t, d] : trace.occupancy_history) {
        if (d[2] * static_cast<double>(t) >= static_cast<double>(target)) return t;
    }
    return std::numeric_limits<std::uint64_t>::max();
}

// Hub state 0 with two arms into leaves 1..10; every leaf returns to the hub.
// Arm 0 spreads uniformly over the leaves (c = 0.9); arm 1 mostly returns
// straight to the hub (c = 0.1).
TransitionKernel hub() {
    const std::size_t S = 11;
    std::vector<double> probs(S * 2 * S, 0.0);
    for (State leaf = 1; leaf < S; ++leaf) probs[0 * S + leaf] = 0.1;
    const double stay = (1.0 + std::sqrt(0.8)) / 2.0;
    probs[1 * S + 0] = stay;
    probs[1 * S + 1] = 1.0 - stay;
    for (State leaf = 1; leaf < S; ++leaf) {
        probs[(leaf * 2 + 0) * S] = 1.0;
        probs[(leaf * 2 + 1) * S] = 1.0;
    }
    return TransitionKernel(S, 2, std::move(probs));
}

}  // namespace

TEST_CASE("episode schedule") {
    const auto first = episode_schedule(50, 1);
    CHECK(first.length == 50);
    CHECK(first.start == 1);
    CHECK(first.step_size == doctest::Approx(1.0));
    const auto second = episode_schedule(50, 2);
    CHECK(second.length == 200);
    CHECK(second.start == 51);
    CHECK(second.step_size == doctest::Approx(200.0 / 250.0));
    CHECK(episode_schedule(1, 3).start == 6);
    for (std::uint64_t m = 1; m <= 100; ++m) {
        const auto e = episode_schedule(7, m);
        CHECK(e.step_size >= 1.0 / static_cast<double>(m));
        CHECK(e.step_size <= 3.0 / static_cast<double>(m));
        CHECK(episode_schedule(7, m + 1).start - e.start == e.length);
    }
    CHECK_THROWS_AS(episode_schedule(50, 0), InputError);
}

TEST_CASE("configuration checks") {
    const auto k = TransitionKernel::uniform(2, 2);
    auto cfg = make_cfg(Algorithm::Dp, 100, 0);
    cfg.kappa = 0.5;
    CHECK_THROWS_AS(run_dp_explorer(k, cfg), InputError);
    cfg = make_cfg(Algorithm::Dp, 100, 0);
    cfg.eta = 0.2;
    CHECK_THROWS_AS(run_dp_explorer(k, cfg), InputError);
    CHECK_THROWS_AS(run_fw_explorer(k, make_cfg(Algorithm::Dp, 100, 0)), InputError);
    CHECK(make_cfg(Algorithm::Dp, 100, 0).effective_eta(8) == doctest::Approx(1.0 / 64));
    CHECK(parse_algorithm("weighted_maxent") == Algorithm::WeightedMaxEnt);
    CHECK(parse_horizon("H2") == Horizon::H2);
    CHECK_THROWS_AS(parse_algorithm("ucb"), InputError);
}

TEST_CASE("reward and weight helpers") {
    VisitCounts counts(2, 2);
    for (int i = 0; i < 4; ++i) counts.record(0, 0, 1);
    counts.record(1, 1, 0);
    const std::vector<double> c{0.5, 0.5, 0.5, 0.5};
    const auto r = exploration_reward(c, counts, 2.0, 0.1);
    CHECK(r[0] == doctest::Approx(0.5 / 16));
    CHECK(r[1] == doctest::Approx(50.0));
    CHECK(r[3] == doctest::Approx(0.5));
    VisitCounts more = counts;
    more.record(1, 1, 0);
    CHECK(exploration_reward(c, more, 2.0, 0.1)[3] < r[3]);

    const auto d = empirical_occupancy(counts, 0.1, 6);
    CHECK(d[0] == doctest::Approx(4.0 / 6));
    CHECK(d[1] == doctest::Approx(0.1 / 6));

    VisitCounts even(2, 2);
    even.record(0, 0, 1);
    even.record(1, 0, 0);
    const auto w = entropy_weights(even, 0.1, 3);
    CHECK(w[0] == w[3]);
    const std::vector<double> flat(4, 0.3);
    const auto ww = weighted_entropy_weights(counts, 0.1, 6, flat);
    const auto plain = entropy_weights(counts, 0.1, 6);
    for (std::size_t p = 0; p < 4; ++p) CHECK(ww[p] == doctest::Approx(0.3 * plain[p]));
    const std::vector<double> zero_second{1.0, 0.0, 1.0, 1.0};
    CHECK(weighted_entropy_weights(counts, 0.1, 6, zero_second)[1] == 0.0);
}

TEST_CASE("budget exactness and determinism") {
    const auto env = build_random_mdp(4, 2, 3, 1);
    for (auto algorithm : {Algorithm::FrankWolfe, Algorithm::Dp, Algorithm::Random, Algorithm::MaxEnt,
                           Algorithm::WeightedMaxEnt}) {
        CAPTURE(to_string(algorithm));
        const auto cfg = make_cfg(algorithm, 777, 5);
        const auto a = run_explorer(env, cfg);
        const auto b = run_explorer(env, cfg);
        CHECK(a.counts.total_steps() == 777);
        CHECK(a.counts == b.counts);
        CHECK(a.occupancy_history == b.occupancy_history);
        CHECK(a.kernel_estimate == b.kernel_estimate);
        CHECK(a.kernel_estimate == empirical_kernel(a.counts));
    }
}

TEST_CASE("completed episodes follow the schedule") {
    const auto env = build_random_mdp(3, 2, 2, 2);
    auto cfg = make_cfg(Algorithm::FrankWolfe, 0, 3);
    cfg.tau1 = 10;
    for (std::uint64_t M : {2, 3, 5}) {
        cfg.budget = episode_schedule(cfg.tau1, M).start - 1;
        CHECK(run_fw_explorer(env, cfg).episodes_completed == M - 1);
        cfg.budget += 1;
        CHECK(run_fw_explorer(env, cfg).episodes_completed == M - 1);
    }
}

TEST_CASE("single-state symmetry") {
    // One state, two actions, both self-loops: equal complexities.
    const TransitionKernel env(1, 2, {1.0, 1.0});
    for (auto algorithm : {Algorithm::FrankWolfe, Algorithm::Dp}) {
        CAPTURE(to_string(algorithm));
        const auto trace = run_explorer(env, make_cfg(algorithm, 5000, 9));
        const double share = static_cast<double>(trace.counts.pair(0, 0)) / 5000.0;
        CHECK(share == doctest::Approx(0.5).epsilon(0.1));
    }
}

TEST_CASE("DP with horizon 1 matches a kernel-free loop") {
    const auto env = build_random_mdp(5, 3, 3, 4);
    auto cfg = make_cfg(Algorithm::Dp, 2000, 13);
    cfg.horizon = Horizon::H1;
    const auto trace = run_dp_explorer(env, cfg);

    Rng rng(cfg.seed);
    VisitCounts counts(5, 3);
    State state = rng.index(5);
    for (std::uint64_t step = 0; step < cfg.budget; ++step) {
        const double delta_t = delta_schedule(cfg.delta, step + 1, 5, 3);
        Action best = 0;
        double best_log = -std::numeric_limits<double>::infinity();
        for (Action a = 0; a < 3; ++a) {
            const double ucb = complexity_ucb(counts, state, a, cfg.kappa, delta_t);
            const double log_r = std::log(ucb) -
                                 cfg.kappa * std::log(std::max<double>(counts.pair(state, a), cfg.epsilon_count));
            if (log_r > best_log) {
                best_log = log_r;
                best = a;
            }
        }
        const State next = sample_step(env, state, best, rng);
        counts.record(state, best, next);
        state = next;
    }
    CHECK(trace.counts == counts);
}

TEST_CASE("full lookahead reaches a hidden noisy pair sooner than H1") {
    const auto env = corridor();
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto cfg = make_cfg(Algorithm::Dp, 3000, seed);
        cfg.history_interval = 1;
        const auto full = run_dp_explorer(env, cfg);
        cfg.horizon = Horizon::H1;
        const auto myopic = run_dp_explorer(env, cfg);
        if (steps_to_visits(full, 300) < steps_to_visits(myopic, 300)) ++wins;
    }
    MESSAGE("full-horizon wins: " << wins << " / 20");
    CHECK(wins > 10);
}

TEST_CASE("random baseline") {
    SUBCASE("uniform action histogram") {
        const auto env = build_random_mdp(4, 3, 2, 5);
        const auto trace = run_random(env, make_cfg(Algorithm::Random, 30000, 2));
        const double n = 30000.0, p = 1.0 / 3.0, sigma = std::sqrt(n * p * (1 - p));
        for (Action a = 0; a < 3; ++a) {
            double hits = 0.0;
            for (State s = 0; s < 4; ++s) hits += static_cast<double>(trace.counts.pair(s, a));
            CHECK(std::abs(hits - n * p) <= 3 * sigma);
        }
    }
    SUBCASE("occupancy approaches the uniform-policy stationary occupancy") {
        const auto env = build_random_mdp(3, 2, 3, 6);
        const auto trace = run_random(env, make_cfg(Algorithm::Random, 100000, 3));
        const auto d = stationary_occupancy(env, Policy::uniform(3, 2));
        for (std::size_t p = 0; p < 6; ++p) {
            CHECK(std::abs(static_cast<double>(trace.counts.pair(p)) / 1e5 - d[p]) <= 0.02);
        }
    }
}

TEST_CASE("entropy explorers") {
    SUBCASE("symmetric two-state chain") {
        const TransitionKernel env(2, 2, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
        const auto trace = run_maxent(env, make_cfg(Algorithm::MaxEnt, 4000, 1));
        double first = 0.0;
        for (Action a = 0; a < 2; ++a) first += static_cast<double>(trace.counts.pair(0, a));
        CHECK(first / 4000.0 == doctest::Approx(0.5).epsilon(0.1));
    }
    SUBCASE("maxent spreads visits more than random on the small pendulum") {
        const auto env = build_pendulum(pendulum_spec(5));
        int wins = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            auto cfg = make_cfg(Algorithm::MaxEnt, 20000, seed);
            cfg.tau1 = 5;
            const auto me = run_maxent(env, cfg);
            const auto rnd = run_random(env, make_cfg(Algorithm::Random, 20000, seed));
            if (state_entropy(me.counts) > state_entropy(rnd.counts)) ++wins;
        }
        MESSAGE("maxent wins: " << wins << " / 10");
        CHECK(wins > 5);
    }
    SUBCASE("complexity weighting favors the noisy arm") {
        const auto env = hub();
        int favors = 0, beats_random = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto weighted = run_weighted_maxent(env, make_cfg(Algorithm::WeightedMaxEnt, 5000, seed));
            const auto rnd = run_random(env, make_cfg(Algorithm::Random, 5000, seed));
            const auto ratio = [](const RunTrace& t) {
                return static_cast<double>(t.counts.pair(0, 0)) / std::max<double>(1.0, t.counts.pair(0, 1));
            };
            if (weighted.counts.pair(0, 0) > weighted.counts.pair(0, 1)) ++favors;
            if (ratio(weighted) > ratio(rnd)) ++beats_random;
        }
        MESSAGE("weighted favors arm 0: " << favors << " / 10, ratio above random: " << beats_random << " / 10");
        CHECK(favors > 5);
        CHECK(beats_random > 5);
    }
}

TEST_CASE("Frank-Wolfe explorer closes the gap faster than random") {
    const auto env = build_random_mdp(5, 2, 3, 0);
    auto cfg = make_cfg(Algorithm::FrankWolfe, 60000, 1);
    cfg.eta = 0.01;
    cfg.track_gap = true;
    const auto fw = run_fw_explorer(env, cfg);
    REQUIRE(fw.gap_history.size() >= 4);
    REQUIRE(fw.optimum_value.has_value());
    const auto slope = [&] {
        // Least-squares trend of log gap against log t.
        double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
        for (const auto& [t, g] : fw.gap_history) {
            if (g <= 0.0) continue;
            const double x = std::log(static_cast<double>(t)), y = std::log(g);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            n += 1;
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }();
    CHECK(slope < 0.0);
    // The t = 1 entry scores the floored uniform vector, which need not be stationary.
    CHECK(fw.gap_history.back().second < fw.gap_history[1].second);

    auto rcfg = make_cfg(Algorithm::Random, 60000, 1);
    rcfg.eta = 0.01;
    rcfg.kappa = 2.0;
    rcfg.track_gap = true;
    const auto rnd = run_random(env, rcfg);
    CHECK(fw.gap_history.back().second < rnd.gap_history.back().second);
}

TEST_CASE("extended LP explorer rejects large state spaces") {
    const auto env = build_random_mdp(31, 2, 2, 1);
    CHECK_THROWS_AS(run_fw_explorer(env, make_cfg(Algorithm::FrankWolfe, 10, 0)), InputError);
}
