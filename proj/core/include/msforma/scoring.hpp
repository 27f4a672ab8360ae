#pragma once

#include <vector>

#include "msforma/spectra.hpp"

namespace msforma {

struct MatchConfig {
  double tau = 0.05;  // absolute m/z matching tolerance, Da
};

struct CosineResult {
  double score = 0.0;
  // matched peak index pairs (index in s, index in t), sorted by the first
  std::vector<std::pair<int, int>> matches;
};

// Mass-spectral cosine similarity: the maximum over one-to-one matchings of
// peak pairs within tau of the sum of products of L2-normalized heights.
// Solved exactly on the sparse candidate-pair graph, one connected component
// at a time.
CosineResult cosine_similarity(const SpectrumRecord& s, const SpectrumRecord& t,
                               const MatchConfig& cfg);

}  // namespace msforma
