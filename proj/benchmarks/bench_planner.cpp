#include <benchmark/benchmark.h>

#include "kexp/environments.hpp"
#include "kexp/planner.hpp"
#include "kexp/random.hpp"

namespace {

using namespace kexp;

ExtendedLpInstance lp_instance(std::size_t n_states) {
    const auto kernel = build_random_mdp(n_states, 2, 3, 17);
    Rng rng(5);
    ExtendedLpInstance inst{{}, kernel, {}, 1.0 / (16.0 * static_cast<double>(kernel.n_pairs()))};
    for (std::size_t p = 0; p < kernel.n_pairs(); ++p) {
        inst.weights.push_back(rng.uniform());
        inst.radii.push_back(0.3 * rng.uniform());
    }
    return inst;
}

void BM_ExtendedLp(benchmark::State& state) {
    const auto inst = lp_instance(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(solve_extended_lp(inst));
}
BENCHMARK(BM_ExtendedLp)->Arg(3)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ExactDirection(benchmark::State& state) {
    const auto inst = lp_instance(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(exact_direction(inst.weights, inst.empirical_kernel, inst.eta));
}
BENCHMARK(BM_ExactDirection)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_ValueIteration(benchmark::State& state) {
    const auto kernel = build_pendulum(pendulum_spec(static_cast<std::size_t>(state.range(0))));
    Rng rng(3);
    std::vector<double> reward(kernel.n_pairs());
    for (auto& r : reward) r = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(value_iteration(reward, kernel, 0.95, 1e-6));
}
BENCHMARK(BM_ValueIteration)->Arg(5)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_BuildPendulum(benchmark::State& state) {
    const auto spec = pendulum_spec(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(build_pendulum(spec));
}
BENCHMARK(BM_BuildPendulum)->Arg(5)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_BuildRandomMdp(benchmark::State& state) {
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(build_random_mdp(static_cast<std::size_t>(state.range(0)), 2, 3, seed++));
}
BENCHMARK(BM_BuildRandomMdp)->Arg(5)->Arg(30);

}  // namespace
