#include <benchmark/benchmark.h>

#include <random>

#include "msforma/scoring.hpp"

using namespace msforma;

namespace {

SpectrumRecord synthetic_spectrum(std::mt19937_64& rng, int peaks) {
  SpectrumRecord r;
  r.id = "bench";
  std::uniform_real_distribution<double> mz(80.0, 900.0), h(0.01, 1.0);
  for (int i = 0; i < peaks; ++i) r.peaks.push_back({mz(rng), h(rng)});
  canonicalize_peaks(r);
  return r;
}

void BM_CosineSelf(benchmark::State& state) {
  std::mt19937_64 rng(1);
  SpectrumRecord s = synthetic_spectrum(rng, static_cast<int>(state.range(0)));
  MatchConfig cfg;
  for (auto _ : state) {
    auto r = cosine_similarity(s, s, cfg);
    benchmark::DoNotOptimize(r);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CosineSelf)->RangeMultiplier(2)->Range(8, 256)->Complexity()->Unit(benchmark::kMicrosecond);

void BM_CosineCross(benchmark::State& state) {
  std::mt19937_64 rng(2);
  SpectrumRecord a = synthetic_spectrum(rng, static_cast<int>(state.range(0)));
  SpectrumRecord b = synthetic_spectrum(rng, static_cast<int>(state.range(0)));
  // overlap half the peaks so matchings are nontrivial
  for (std::size_t i = 0; i < b.peaks.size() / 2 && i < a.peaks.size(); ++i)
    b.peaks[i].mz = a.peaks[i].mz + 0.01;
  canonicalize_peaks(b);
  MatchConfig cfg;
  for (auto _ : state) {
    auto r = cosine_similarity(a, b, cfg);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_CosineCross)->RangeMultiplier(2)->Range(8, 256)->Unit(benchmark::kMicrosecond);

}  // namespace
