// Serial reference driver vs the OpenMP driver over the same chunk kernels.
// The two must agree bitwise; these benchmarks measure what the parallel
// driver buys on each hot path.

#include <benchmark/benchmark.h>

#include "colmat/contrastive.hpp"
#include "colmat/estimator.hpp"
#include "colmat/mixture.hpp"
#include "colmat/parallel.hpp"
#include "colmat/posterior.hpp"
#include "colmat/scenario.hpp"

namespace {

using namespace colmat;

const GaussianMixture& bench_mixture() {
    static const GaussianMixture gm = *make_preset("scenario-a-k3").mixture;
    return gm;
}

const Dataset& bench_data() {
    static const Dataset data = sample(bench_mixture(), 200, 7);
    return data;
}

void set_mode(benchmark::State& state) { set_parallel_enabled(state.range(0) == 1); }

void label(benchmark::State& state) {
    state.SetLabel(state.range(0) == 1 ? "openmp" : "serial");
}

void BM_TrueCollisionMatrix(benchmark::State& state) {
    set_mode(state);
    label(state);
    for (auto _ : state) {
        const McMatrix s = true_collision_matrix(bench_mixture(), 100000, 11);
        benchmark::DoNotOptimize(s.value.data.data());
    }
    set_parallel_enabled(true);
}
BENCHMARK(BM_TrueCollisionMatrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EstimateGramian(benchmark::State& state) {
    set_mode(state);
    label(state);
    const SimilarityFn oracle = oracle_similarity_fn(bench_mixture());
    for (auto _ : state) {
        const GramianEstimate est = estimate_gramian(oracle, bench_data(), 5000, 13);
        benchmark::DoNotOptimize(est.g.data.data());
    }
    set_parallel_enabled(true);
}
BENCHMARK(BM_EstimateGramian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PairRisk(benchmark::State& state) {
    set_mode(state);
    label(state);
    const SimilarityFn oracle = oracle_similarity_fn(bench_mixture());
    for (auto _ : state) {
        const double risk = empirical_pair_risk(oracle, bench_data());
        benchmark::DoNotOptimize(risk);
    }
    set_parallel_enabled(true);
}
BENCHMARK(BM_PairRisk)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PosteriorBatch(benchmark::State& state) {
    set_mode(state);
    label(state);
    const SimilarityFn oracle = oracle_similarity_fn(bench_mixture());
    const McMatrix truth = true_collision_matrix_quadrature(bench_mixture());
    const ComparisonSets sets = make_comparison_sets(bench_data(), 50, 17);
    const Dataset queries = sample(bench_mixture(), 100, 19);
    for (auto _ : state) {
        const auto out = estimate_posterior_batch(oracle, truth.value, sets, queries.features,
                                                  queries.n, queries.d);
        benchmark::DoNotOptimize(out.data());
    }
    set_parallel_enabled(true);
}
BENCHMARK(BM_PosteriorBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
