#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "msforma/spectra.hpp"

namespace msforma {

enum class VocabKind : std::uint8_t { Product, Loss };

struct VocabEntry {
  Formula formula;  // a product ion formula, or a neutral loss formula
  double weight;    // accumulated split peak height
  VocabKind kind;
};

enum class VocabMode { Mixed, ProductsOnly, LossesOnly };

// Fixed vocabulary of frequent product-ion and neutral-loss formulas. The
// ranked order is the greedy selection order (nonincreasing weight, product
// wins ties); model weight rows are addressed by rank index.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<VocabEntry> ranked);

  const std::vector<VocabEntry>& ranked() const { return ranked_; }
  std::size_t size() const { return ranked_.size(); }

  std::vector<std::pair<Formula, double>> products() const;
  std::vector<std::pair<Formula, double>> losses() const;

  // Rank index (0-based) of a formula in the given list, or -1.
  int product_rank(const Formula& f) const;
  int loss_rank(const Formula& l) const;

  std::uint64_t fingerprint() const;

 private:
  std::vector<VocabEntry> ranked_;
  std::map<Formula, int> product_rank_;
  std::map<Formula, int> loss_rank_;
};

// Per-precursor expansion of the vocabulary. Formulas reachable both as a
// product and as a precursor-minus-loss collapse into one entry with origin
// Both; those formulas make up the double-count set.
enum class CandidateOrigin : std::uint8_t { Product, Loss, Both };

struct CandidateEntry {
  Formula formula;
  CandidateOrigin origin;
  int product_index = -1;  // vocabulary rank index of the product route
  int loss_index = -1;     // vocabulary rank index of the loss route
};

struct CandidateSet {
  Formula precursor;
  std::vector<CandidateEntry> entries;   // sorted by formula, unique
  std::vector<Formula> double_count;     // sorted; origin == Both
};

// Algorithm-style vocabulary selection: every annotated peak splits its
// height uniformly over its annotations, crediting each annotation's product
// formula and its neutral-loss complement; the two ranked tables are merged
// greedily until K entries are chosen. Corpus records must be normalized.
Vocabulary build_vocabulary(const std::vector<SpectrumRecord>& corpus, long k,
                            VocabMode mode = VocabMode::Mixed);

CandidateSet candidate_set(const Vocabulary& v, const Formula& precursor);

struct CoverageReport {
  std::vector<double> per_spectrum;  // explained height fraction at full K
  double mean = 0.0;
  // curve[j] = mean explained fraction using only the first j+1 ranked
  // entries; nondecreasing by construction.
  std::vector<double> curve;
};

CoverageReport coverage(const Vocabulary& v, const std::vector<SpectrumRecord>& corpus);

// TSV persistence: "rank <TAB> kind <TAB> formula <TAB> weight". Reloading
// reproduces the file byte-exactly.
std::string save_vocabulary(const Vocabulary& v);
Vocabulary load_vocabulary(std::string_view text);

}  // namespace msforma
