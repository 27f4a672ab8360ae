#include <benchmark/benchmark.h>

#include <random>

#include "msforma/predictor.hpp"

using namespace msforma;

namespace {

// Synthetic vocabulary of K subformula-shaped entries, half products and
// half losses, so candidate expansion and the logit head see realistic load.
Vocabulary synthetic_vocab(std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<VocabEntry> entries;
  std::set<std::pair<int, Formula>> seen;
  double weight = static_cast<double>(k);
  while (entries.size() < k) {
    Formula f;
    f[Element::C] = static_cast<std::uint8_t>(rng() % 9);
    f[Element::H] = static_cast<std::uint8_t>(rng() % 12);
    f[Element::N] = static_cast<std::uint8_t>(rng() % 4);
    f[Element::O] = static_cast<std::uint8_t>(rng() % 3);
    if (f.empty()) continue;
    VocabKind kind = entries.size() % 2 ? VocabKind::Loss : VocabKind::Product;
    if (!seen.emplace(static_cast<int>(kind), f).second) continue;
    entries.push_back({f, weight, kind});
    weight -= 1e-3;
  }
  return Vocabulary(std::move(entries));
}

void BM_Predict(benchmark::State& state) {
  Vocabulary v = synthetic_vocab(static_cast<std::size_t>(state.range(0)), 7);
  FeatureConfig fc;
  ModelWeights w = ModelWeights::zeros(v, fc);
  std::mt19937_64 rng(11);
  for (auto& x : w.w) x = (rng() % 1000) * 1e-4 - 0.05;
  MolGraph g = parse_smiles("Cn1cnc2c1c(=O)n(C)c(=O)n2C");
  Covariates c;
  for (auto _ : state) {
    auto p = predict(g, c, v, w);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_Predict)->RangeMultiplier(2)->Range(128, 2048)->Unit(benchmark::kMillisecond);

void BM_Featurize(benchmark::State& state) {
  FeatureConfig fc;
  MolGraph g = parse_smiles("Cn1cnc2c1c(=O)n(C)c(=O)n2C");
  Covariates c;
  for (auto _ : state) {
    auto fv = featurize(g, c, fc);
    benchmark::DoNotOptimize(fv);
  }
}
BENCHMARK(BM_Featurize)->Unit(benchmark::kMicrosecond);

}  // namespace
