#include <benchmark/benchmark.h>

#include <random>

#include "mvlab/encoding.hpp"
#include "mvlab/recommender.hpp"
#include "synth.hpp"

namespace {

std::vector<mvlab::CorpusEntry> corpus(std::size_t n) {
  std::mt19937_64 rng(4);
  std::vector<mvlab::CorpusEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto mv = synth::random_mv(2 + i % 7, rng);
    out.push_back({"10.1/" + std::to_string(i), mvlab::composition_tensor(mv), {static_cast<int>(mvlab::leaf_count(mv)), "A"},
                   mvlab::leaf_count(mv)});
  }
  return out;
}

mvlab::UserSketch sketch() {
  mvlab::UserSketch s;
  s.views.push_back({mvlab::ViewType::Bar, mvlab::BBox{0.25, 0.5, 0.5, 1.0}});
  s.views.push_back({mvlab::ViewType::Line, mvlab::BBox{0.75, 0.5, 0.5, 1.0}});
  return s;
}

}  // namespace

static void BM_MutualInformation(benchmark::State& state) {
  const auto c = corpus(2);
  for (auto _ : state) benchmark::DoNotOptimize(mvlab::mutual_information(c[0].tensor, c[1].tensor));
}
BENCHMARK(BM_MutualInformation);

static void BM_Recommend(benchmark::State& state) {
  const auto c = corpus(static_cast<std::size_t>(state.range(0)));
  const auto s = sketch();
  for (auto _ : state) benchmark::DoNotOptimize(mvlab::recommend(c, s, {}, 10));
}
BENCHMARK(BM_Recommend)->Arg(360)->Arg(5000);

BENCHMARK_MAIN();
