#include <benchmark/benchmark.h>

#include "msforma/decomp.hpp"

using namespace msforma;

namespace {

void BM_DecomposeMidMass(benchmark::State& state) {
  Formula p = parse_formula("C20H30N5O8S2");
  DecompConfig cfg;
  cfg.epsilon_ppm = static_cast<double>(state.range(0));
  double mz = monoisotopic_mass(p) * 0.45;
  for (auto _ : state) {
    auto out = decompose(mz, p, cfg);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_DecomposeMidMass)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_DecomposePrecursorSize(benchmark::State& state) {
  // scale the precursor, decompose near half its mass
  int scale = static_cast<int>(state.range(0));
  Formula p;
  p[Element::C] = static_cast<std::uint8_t>(4 * scale);
  p[Element::H] = static_cast<std::uint8_t>(6 * scale);
  p[Element::N] = static_cast<std::uint8_t>(scale);
  p[Element::O] = static_cast<std::uint8_t>(2 * scale);
  DecompConfig cfg;
  double mz = monoisotopic_mass(p) * 0.5;
  for (auto _ : state) {
    auto out = decompose(mz, p, cfg);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_DecomposePrecursorSize)->DenseRange(1, 6)->Unit(benchmark::kMicrosecond);

void BM_AnnotateSpectrum(benchmark::State& state) {
  Formula p = parse_formula("C16H24N2O6");
  SpectrumRecord rec;
  rec.id = "bench";
  rec.precursor = p;
  double pm = monoisotopic_mass(p);
  for (int i = 1; i <= 40; ++i) rec.peaks.push_back({pm * i / 41.0, 1.0});
  canonicalize_peaks(rec);
  DecompConfig cfg;
  for (auto _ : state) {
    auto out = annotate_spectrum(rec, cfg);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_AnnotateSpectrum)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
