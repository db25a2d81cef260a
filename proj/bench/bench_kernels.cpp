// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include "dvdf/core/kernels.hpp"
#include "dvdf/core/random_instances.hpp"
#include "dvdf/core/rng.hpp"
#include "dvdf/env/dataset.hpp"
#include "dvdf/score/score_table.hpp"
#include "dvdf/score/scorer.hpp"

using namespace dvdf;

namespace {

TabularMDP instance(std::size_t n_states) {
    Rng rng(42);
    return random_mdp(rng, n_states, 5, 0.95);
}

template <auto Kernel>
void bm_bellman(benchmark::State& state) {
    const auto mdp = instance(static_cast<std::size_t>(state.range(0)));
    std::vector<double> v(mdp.n_states(), 1.0), q(mdp.n_states() * mdp.n_actions());
    for (auto _ : state) {
        Kernel(mdp, v, q);
        benchmark::DoNotOptimize(q.data());
    }
}

template <auto Kernel>
void bm_policy_kernel(benchmark::State& state) {
    const auto mdp = instance(static_cast<std::size_t>(state.range(0)));
    const auto pi = PolicyTable::uniform(mdp.n_states(), mdp.n_actions());
    std::vector<double> out(mdp.n_states() * mdp.n_states());
    for (auto _ : state) {
        Kernel(mdp, pi, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <auto Kernel>
void bm_score(benchmark::State& state) {
    const auto mdp = instance(64);
    const auto pi = PolicyTable::uniform(mdp.n_states(), mdp.n_actions());
    const auto data = collect(mdp, pi, static_cast<std::size_t>(state.range(0)), 1, Domain::source, "random");
    const auto scorer = exact_bayes_score(mdp, source_next_distribution(data), 1.0);
    std::vector<double> out;
    for (auto _ : state) {
        Kernel(scorer, data, out);
        benchmark::DoNotOptimize(out.data());
    }
}

} // namespace

BENCHMARK(bm_bellman<kernels::serial::bellman_backup>)->Name("bellman_backup/serial")->Arg(256)->Arg(1024);
BENCHMARK(bm_bellman<kernels::parallel::bellman_backup>)->Name("bellman_backup/parallel")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(bm_policy_kernel<kernels::serial::policy_kernel>)->Name("policy_kernel/serial")->Arg(256)->Arg(1024);
BENCHMARK(bm_policy_kernel<kernels::parallel::policy_kernel>)->Name("policy_kernel/parallel")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(bm_score<kernels::serial::score_records>)->Name("score_records/serial")->Arg(100000);
BENCHMARK(bm_score<kernels::parallel::score_records>)->Name("score_records/parallel")->Arg(100000)->UseRealTime();

BENCHMARK_MAIN();
