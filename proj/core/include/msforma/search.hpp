#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msforma/predictor.hpp"
#include "msforma/scoring.hpp"

namespace msforma {

// Library of predicted spectra keyed by structure id. Entries are immutable
// after build; the record view is a cached peak-list form of the prediction
// used for scoring.
struct LibraryEntry {
  std::string id;
  std::string smiles;
  Covariates covariates;
  PredictedSpectrum spectrum;
  SpectrumRecord record;  // derived; not independently serialized
};

struct SpectralLibrary {
  std::uint64_t model_fingerprint = 0;
  std::uint64_t vocab_fingerprint = 0;
  std::uint64_t created_unix = 0;
  std::vector<LibraryEntry> entries;

  const LibraryEntry* find(const std::string& id) const;
};

SpectrumRecord predicted_to_record(const PredictedSpectrum& p, const std::string& id,
                                   const Covariates& c, const std::string& smiles);

struct LibraryBuildResult {
  SpectralLibrary library;
  std::vector<std::pair<std::size_t, std::string>> failures;  // (row, message)
};

// One predicted spectrum per structure row. Unparseable structures go into
// the failure report instead of aborting the build. `created_unix` defaults
// to zero so identical inputs give byte-identical library files.
LibraryBuildResult build_library(const std::vector<StructureRow>& structures,
                                 const Vocabulary& v, const ModelWeights& w,
                                 unsigned threads = 0, std::uint64_t created_unix = 0);

// Text persistence; load(save(lib)) preserves every entry bit-exactly.
std::string save_library(const SpectralLibrary& lib);
SpectralLibrary load_library(std::string_view text);

struct SearchConfig {
  MatchConfig match;
  // Entries are prescored only if their precursor m/z falls within this
  // window of the query's declared precursor m/z; no filter if the query
  // declares none.
  double precursor_window_ppm = 10.0;
};

struct SearchHit {
  std::string id;
  double score = 0.0;
  int n_matched = 0;
};

// Ranked search, best first; ties broken by id. At most top_n hits.
std::vector<SearchHit> search(const SpectrumRecord& query, const SpectralLibrary& lib,
                              const SearchConfig& cfg, std::size_t top_n);

struct RetrievalMetrics {
  double recall_at_1 = 0.0;
  double recall_at_5 = 0.0;
  double recall_at_10 = 0.0;
  double mean_cosine = 0.0;     // query vs its true library entry
  double frac_above_0_7 = 0.0;  // fraction of true-entry cosines > 0.7
};

RetrievalMetrics evaluate_retrieval(const std::vector<std::pair<std::string, SpectrumRecord>>& queries,
                                    const SpectralLibrary& lib, const SearchConfig& cfg,
                                    unsigned threads = 0);

}  // namespace msforma
