#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "adx3/mock_providers.h"
#include "adx3/pipeline.h"
#include "adx3/refinead.h"
#include "adx3/segmentation.h"

using namespace adx3;

namespace {

std::string random_words(std::mt19937_64& rng, std::size_t chars) {
  static constexpr std::string_view kAlphabet = "abcdefgh ";
  std::string s;
  for (std::size_t i = 0; i < chars; ++i) s += kAlphabet[rng() % kAlphabet.size()];
  return s;
}

void BM_Levenshtein(benchmark::State& state) {
  std::mt19937_64 rng(42);
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::string a = random_words(rng, n);
  const std::string b = random_words(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(levenshtein(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Levenshtein)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oNSquared);

void BM_DetectBoundaries(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<FrameEmbedding> frames;
  std::vector<double> base(64);
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    if (i % 50 == 0) {
      for (auto& x : base) x = noise(rng) * 20.0;
    }
    FrameEmbedding f;
    f.frame_index = i;
    f.timestamp = static_cast<double>(i);
    f.vector = base;
    for (auto& x : f.vector) x += noise(rng);
    frames.push_back(std::move(f));
  }
  for (auto _ : state) benchmark::DoNotOptimize(detect_boundaries(frames, 0.85, 2.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DetectBoundaries)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oN);

void BM_ScheduleFixture(benchmark::State& state) {
  const auto config = load_pipeline_config(std::filesystem::path(ADX3_FIXTURE_DIR) / "config.json");
  const PipelineResult r = run_pipeline(config);
  HeuristicVlm vlm(Json::object(), DurationModel{config.words_per_minute});
  for (auto _ : state) {
    benchmark::DoNotOptimize(schedule(r.genad.track, r.gaps, r.asset, r.scenes, r.transcript, vlm));
  }
}
BENCHMARK(BM_ScheduleFixture);

}  // namespace

BENCHMARK_MAIN();
