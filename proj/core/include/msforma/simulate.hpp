#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msforma/molgraph.hpp"
#include "msforma/spectra.hpp"

namespace msforma {

// Toy bond-breaking simulator used as the synthetic ground truth. Fragments
// are the connected components left after removing up to max_cuts acyclic
// (bridge) edges; cutting ring edges never disconnects, so only bridges are
// enumerated.
struct SimConfig {
  int max_cuts = 2;
  std::uint64_t seed = 0;
  // Controls how sharply higher collision energy shifts weight to smaller
  // fragments; larger values flatten the effect.
  double height_temperature = 1.0;
  double noise_ppm = 0.0;  // uniform m/z jitter, at most this many ppm
};

// One spectrum with exact per-peak formula annotations. Peak heights come
// from a seeded weighting biased toward smaller fragments at higher
// collision energy; heights are normalized.
SpectrumRecord simulate_spectrum(const MolGraph& g, const Covariates& c, const SimConfig& cfg,
                                 std::string id = {}, std::string smiles = {});

struct CorpusResult {
  std::vector<SpectrumRecord> records;
  // (row index, message) for structures that failed to parse or simulate
  std::vector<std::pair<std::size_t, std::string>> failures;
};

// One record per structure row; deterministic under the seed, independent of
// row order failures elsewhere.
CorpusResult generate_corpus(const std::vector<StructureRow>& structures, const SimConfig& cfg,
                             unsigned threads = 0);

}  // namespace msforma
