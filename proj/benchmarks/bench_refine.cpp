#include <benchmark/benchmark.h>

#include <random>

#include "mvlab/refine.hpp"
#include "synth.hpp"

static void BM_RefineNoisy(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<mvlab::MVDesign> designs;
  for (int i = 0; i < 32; ++i) {
    const auto exact = synth::realize(synth::random_shape(n, rng), rng);
    const auto noisy = synth::perturb(exact, 0.005 * synth::min_extent(exact), rng);
    designs.push_back(synth::design_from(noisy, synth::random_types(n, rng)));
  }
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mvlab::refine(designs[k++ % designs.size()]));
  }
}
BENCHMARK(BM_RefineNoisy)->Arg(3)->Arg(6)->Arg(12);

BENCHMARK_MAIN();
