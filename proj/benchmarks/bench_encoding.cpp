#include <benchmark/benchmark.h>

#include <random>

#include "mvlab/encoding.hpp"
#include "synth.hpp"

static void BM_SlicingSignature(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto mv = synth::random_mv(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mvlab::canonical_signature(mvlab::slicing_tree(mv)));
  }
}
BENCHMARK(BM_SlicingSignature)->Arg(4)->Arg(8)->Arg(14);

static void BM_RegistryAssign(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<std::string> sigs;
  for (int i = 0; i < 360; ++i) {
    sigs.push_back(mvlab::canonical_signature(mvlab::slicing_tree(synth::random_mv(2 + i % 8, rng))));
  }
  for (auto _ : state) {
    mvlab::LayoutRegistry reg;
    reg.assign_all(sigs);
    benchmark::DoNotOptimize(reg.size());
  }
}
BENCHMARK(BM_RegistryAssign);

BENCHMARK_MAIN();
