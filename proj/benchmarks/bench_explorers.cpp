#include <benchmark/benchmark.h>

#include "kexp/environments.hpp"
#include "kexp/estimation.hpp"
#include "kexp/explorers.hpp"
#include "kexp/planner.hpp"
#include "kexp/random.hpp"

namespace {

using namespace kexp;

// One decision of the per-step explorer: confidence bounds, reward, warm VI, greedy action.
void BM_DpDecision(benchmark::State& state) {
    const auto kernel = build_pendulum(pendulum_spec(5));
    VisitCounts counts(kernel.n_states(), kernel.n_actions());
    Rng rng(9);
    State s = 0;
    for (int i = 0; i < 5000; ++i) {
        const Action a = rng.index(kernel.n_actions());
        const State next = sample_step(kernel, s, a, rng);
        counts.record(s, a, next);
        s = next;
    }
    const auto empirical = empirical_kernel(counts);
    std::vector<double> values;
    for (auto _ : state) {
        const auto conf = confidence_state(counts, 10.0, 0.1, counts.total_steps() + 1);
        const auto reward = exploration_reward(conf.c_ucb, counts, 10.0, 0.1);
        values = value_iteration(reward, empirical, 0.95, 1e-6, values);
        benchmark::DoNotOptimize(greedy_action(values, reward, empirical, s, 0.95));
    }
}
BENCHMARK(BM_DpDecision)->Unit(benchmark::kMicrosecond);

void BM_Explorer(benchmark::State& state) {
    const auto kernel = build_random_mdp(5, 2, 3, 4);
    ExplorerConfig cfg;
    cfg.algorithm = static_cast<Algorithm>(state.range(0));
    cfg.budget = 5000;
    for (auto _ : state) benchmark::DoNotOptimize(run_explorer(kernel, cfg));
    state.SetLabel(to_string(cfg.algorithm));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.budget));
}
BENCHMARK(BM_Explorer)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
