#include "msforma/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace msforma {

Vocabulary::Vocabulary(std::vector<VocabEntry> ranked) : ranked_(std::move(ranked)) {
  for (std::size_t i = 0; i < ranked_.size(); ++i) {
    const auto& e = ranked_[i];
    auto& table = e.kind == VocabKind::Product ? product_rank_ : loss_rank_;
    if (!table.emplace(e.formula, static_cast<int>(i)).second)
      fail("vocabulary: duplicate " +
           std::string(e.kind == VocabKind::Product ? "product" : "loss") + " formula '" +
           format_formula(e.formula) + "'");
    if (i > 0 && ranked_[i - 1].weight < e.weight)
      fail("vocabulary: weights are not nonincreasing at rank " + std::to_string(i + 1));
  }
}

std::vector<std::pair<Formula, double>> Vocabulary::products() const {
  std::vector<std::pair<Formula, double>> out;
  for (const auto& e : ranked_)
    if (e.kind == VocabKind::Product) out.emplace_back(e.formula, e.weight);
  return out;
}

std::vector<std::pair<Formula, double>> Vocabulary::losses() const {
  std::vector<std::pair<Formula, double>> out;
  for (const auto& e : ranked_)
    if (e.kind == VocabKind::Loss) out.emplace_back(e.formula, e.weight);
  return out;
}

int Vocabulary::product_rank(const Formula& f) const {
  auto it = product_rank_.find(f);
  return it == product_rank_.end() ? -1 : it->second;
}

int Vocabulary::loss_rank(const Formula& l) const {
  auto it = loss_rank_.find(l);
  return it == loss_rank_.end() ? -1 : it->second;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& e : ranked_) {
    std::uint8_t kind = static_cast<std::uint8_t>(e.kind);
    h = fnv1a64(&kind, 1, h);
    h = fnv1a64(e.formula.counts.data(), e.formula.counts.size(), h);
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(e.weight));
    std::memcpy(&bits, &e.weight, sizeof(bits));
    h = fnv1a64(&bits, sizeof(bits), h);
  }
  return h;
}

namespace {

struct WeightedFormula {
  Formula formula;
  double weight;
  double mass;
};

// Ordering of a weight table: weight descending, then mass ascending, then
// lexicographic formula order.
bool table_less(const WeightedFormula& a, const WeightedFormula& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  if (a.mass != b.mass) return a.mass < b.mass;
  return a.formula.counts < b.formula.counts;
}

std::vector<WeightedFormula> sorted_table(const std::map<Formula, double>& acc) {
  std::vector<WeightedFormula> table;
  table.reserve(acc.size());
  for (const auto& [f, w] : acc) table.push_back({f, w, monoisotopic_mass(f)});
  std::sort(table.begin(), table.end(), table_less);
  return table;
}

}  // namespace

Vocabulary build_vocabulary(const std::vector<SpectrumRecord>& corpus, long k, VocabMode mode) {
  if (corpus.empty()) fail("build_vocabulary: empty corpus");
  if (k < 1) fail("build_vocabulary: K must be at least 1");

  std::map<Formula, double> product_acc;
  std::map<Formula, double> loss_acc;
  bool any_annotation = false;

  for (const auto& rec : corpus) {
    if (!is_normalized(rec, 1e-6))
      fail("build_vocabulary: record '" + rec.id + "' is not normalized");
    if (!rec.precursor)
      fail("build_vocabulary: record '" + rec.id + "' has no precursor formula");
    if (rec.annotations.empty()) continue;
    for (std::size_t i = 0; i < rec.peaks.size(); ++i) {
      const auto& anns = rec.annotations[i];
      if (anns.empty()) continue;
      any_annotation = true;
      double share = rec.peaks[i].height / static_cast<double>(anns.size());
      for (const auto& f : anns) {
        if (!subformula(f, *rec.precursor))
          fail("build_vocabulary: record '" + rec.id + "' annotation " + format_formula(f) +
               " is not a subformula of its precursor");
        product_acc[f] += share;
        loss_acc[*rec.precursor - f] += share;
      }
    }
  }
  if (!any_annotation) fail("build_vocabulary: corpus has no peak annotations");

  std::vector<WeightedFormula> products = sorted_table(product_acc);
  std::vector<WeightedFormula> losses = sorted_table(loss_acc);
  if (mode == VocabMode::ProductsOnly) losses.clear();
  if (mode == VocabMode::LossesOnly) products.clear();

  std::vector<VocabEntry> ranked;
  std::size_t pi = 0, li = 0;
  while (ranked.size() < static_cast<std::size_t>(k) &&
         (pi < products.size() || li < losses.size())) {
    bool take_product;
    if (pi >= products.size()) take_product = false;
    else if (li >= losses.size()) take_product = true;
    else take_product = products[pi].weight >= losses[li].weight;  // ties go to products
    if (take_product) {
      ranked.push_back({products[pi].formula, products[pi].weight, VocabKind::Product});
      ++pi;
    } else {
      ranked.push_back({losses[li].formula, losses[li].weight, VocabKind::Loss});
      ++li;
    }
  }
  return Vocabulary(std::move(ranked));
}

CandidateSet candidate_set(const Vocabulary& v, const Formula& precursor) {
  CandidateSet cs;
  cs.precursor = precursor;
  std::map<Formula, CandidateEntry> merged;

  const auto& ranked = v.ranked();
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& e = ranked[i];
    Formula candidate;
    if (e.kind == VocabKind::Product) {
      if (!subformula(e.formula, precursor)) continue;
      candidate = e.formula;
    } else {
      if (!subformula(e.formula, precursor)) continue;
      candidate = precursor - e.formula;
    }
    auto [it, inserted] = merged.try_emplace(candidate);
    CandidateEntry& entry = it->second;
    if (inserted) {
      entry.formula = candidate;
      entry.origin = e.kind == VocabKind::Product ? CandidateOrigin::Product : CandidateOrigin::Loss;
    } else {
      entry.origin = CandidateOrigin::Both;
    }
    if (e.kind == VocabKind::Product) entry.product_index = static_cast<int>(i);
    else entry.loss_index = static_cast<int>(i);
  }

  for (auto& [f, entry] : merged) {
    if (entry.origin == CandidateOrigin::Both) cs.double_count.push_back(f);
    cs.entries.push_back(entry);
  }
  return cs;
}

CoverageReport coverage(const Vocabulary& v, const std::vector<SpectrumRecord>& corpus) {
  CoverageReport report;
  const std::size_t k = v.size();
  report.curve.assign(k, 0.0);
  report.per_spectrum.reserve(corpus.size());

  for (const auto& rec : corpus) {
    if (!is_normalized(rec, 1e-6))
      fail("coverage: record '" + rec.id + "' is not normalized");
    if (!rec.precursor) fail("coverage: record '" + rec.id + "' has no precursor formula");

    // first_rank[j] accumulates the height that becomes explained once the
    // vocabulary prefix reaches rank j+1
    std::vector<double> gain(k, 0.0);
    double explained = 0.0;
    for (std::size_t i = 0; i < rec.peaks.size(); ++i) {
      if (rec.annotations.empty()) break;
      int best = -1;
      for (const auto& f : rec.annotations[i]) {
        int pr = v.product_rank(f);
        if (pr >= 0 && (best < 0 || pr < best)) best = pr;
        if (subformula(f, *rec.precursor)) {
          int lr = v.loss_rank(*rec.precursor - f);
          if (lr >= 0 && (best < 0 || lr < best)) best = lr;
        }
      }
      if (best >= 0) {
        gain[static_cast<std::size_t>(best)] += rec.peaks[i].height;
        explained += rec.peaks[i].height;
      }
    }
    report.per_spectrum.push_back(explained);
    double running = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      running += gain[j];
      report.curve[j] += running;
    }
  }

  if (!corpus.empty()) {
    for (auto& c : report.curve) c /= static_cast<double>(corpus.size());
    double total = 0.0;
    for (double f : report.per_spectrum) total += f;
    report.mean = total / static_cast<double>(corpus.size());
  }
  return report;
}

std::string save_vocabulary(const Vocabulary& v) {
  std::string out = "#msforma-vocab v1\n";
  const auto& ranked = v.ranked();
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& e = ranked[i];
    out += std::to_string(i + 1);
    out += '\t';
    out += e.kind == VocabKind::Product ? "product" : "loss";
    out += '\t';
    out += format_formula(e.formula);
    out += '\t';
    out += format_double_exact(e.weight);
    out += '\n';
  }
  return out;
}

Vocabulary load_vocabulary(std::string_view text) {
  std::vector<VocabEntry> ranked;
  bool saw_header = false;
  std::size_t expected_rank = 1;
  for (auto raw : split(text, '\n')) {
    auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!saw_header && line != "#msforma-vocab v1")
        fail("vocabulary file: unrecognized header '" + std::string(line) + "'");
      saw_header = true;
      continue;
    }
    auto cols = split(line, '\t');
    if (cols.size() != 4) fail("vocabulary file: expected 4 tab-separated columns");
    if (static_cast<std::size_t>(parse_long(cols[0], "vocabulary rank")) != expected_rank)
      fail("vocabulary file: ranks must be contiguous from 1");
    ++expected_rank;
    VocabEntry e;
    if (cols[1] == "product") e.kind = VocabKind::Product;
    else if (cols[1] == "loss") e.kind = VocabKind::Loss;
    else fail("vocabulary file: unknown kind '" + std::string(cols[1]) + "'");
    e.formula = cols[2].empty() ? Formula{} : parse_formula(cols[2]);
    e.weight = parse_double(cols[3], "vocabulary weight");
    ranked.push_back(e);
  }
  if (ranked.empty()) fail("vocabulary file: no entries");
  return Vocabulary(std::move(ranked));
}

}  // namespace msforma
