#include "msforma/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

namespace msforma {

Formula adduct_formula(Adduct a) {
  Formula f;
  switch (a) {
    case Adduct::None: break;
    case Adduct::PlusH2O:
      f[Element::H] = 2;
      f[Element::O] = 1;
      break;
    case Adduct::PlusN2:
      f[Element::N] = 2;
      break;
  }
  return f;
}

double adduct_mass(Adduct a) { return monoisotopic_mass(adduct_formula(a)); }

ModelWeights ModelWeights::zeros(const Vocabulary& v, const FeatureConfig& fc) {
  ModelWeights w;
  w.feature_config = fc;
  w.vocab_fingerprint = v.fingerprint();
  w.vocab_size = static_cast<std::uint32_t>(v.size());
  const std::size_t d = fc.feature_length();
  w.w.assign(static_cast<std::size_t>(w.vocab_size) * kAdductCount * d, 0.0);
  w.bias.assign(static_cast<std::size_t>(w.vocab_size) * kAdductCount, 0.0);
  w.w_iso.assign(kIsotopeCount * d, 0.0);
  return w;
}

std::uint64_t ModelWeights::content_fingerprint() const {
  std::string bytes = save_weights(*this);
  return fnv1a64(bytes.data(), bytes.size());
}

double LogitTensor::logit(std::size_t slot, std::size_t adduct, std::size_t iso) const {
  double z = raw[cell_index(slot, adduct, iso)];
  return slots[slot].halved ? z - std::log(2.0) : z;
}

namespace {

double sparse_dot(const double* row, const std::vector<std::pair<std::uint32_t, double>>& x) {
  double s = 0.0;
  for (const auto& [i, v] : x) s += row[i] * v;
  return s;
}

LogitTensor make_layout(const CandidateSet& cs, bool has_isotopes) {
  LogitTensor t;
  t.n_iso = has_isotopes ? kIsotopeCount : 1;
  for (std::size_t e = 0; e < cs.entries.size(); ++e) {
    const CandidateEntry& entry = cs.entries[e];
    const bool halved = entry.origin == CandidateOrigin::Both;
    if (entry.product_index >= 0)
      t.slots.push_back({static_cast<int>(e), VocabKind::Product, entry.product_index, halved});
    if (entry.loss_index >= 0)
      t.slots.push_back({static_cast<int>(e), VocabKind::Loss, entry.loss_index, halved});
  }
  t.raw.assign(t.cell_count(), 0.0);
  return t;
}

void fill_raw_logits(LogitTensor& t, const std::vector<std::pair<std::uint32_t, double>>& nz,
                     const ModelWeights& w) {
  std::vector<double> iso_dot(t.n_iso, 0.0);
  for (std::size_t b = 0; b < t.n_iso; ++b) iso_dot[b] = sparse_dot(w.iso_row(b), nz);
  for (std::size_t s = 0; s < t.slots.size(); ++s) {
    std::size_t k = static_cast<std::size_t>(t.slots[s].vocab_index);
    if (k >= w.vocab_size) fail("logits: vocabulary index out of range for model");
    for (std::size_t a = 0; a < kAdductCount; ++a) {
      double base = sparse_dot(w.w_row(k, a), nz) + w.bias[k * kAdductCount + a];
      for (std::size_t b = 0; b < t.n_iso; ++b)
        t.raw[t.cell_index(s, a, b)] = base + iso_dot[b];
    }
  }
}

}  // namespace

LogitTensor logits(const FeatureVector& x, const CandidateSet& cs, const ModelWeights& w,
                   bool has_isotopes) {
  if (x.values.size() != w.feature_length())
    fail("logits: feature length " + std::to_string(x.values.size()) +
         " does not match model feature length " + std::to_string(w.feature_length()));
  LogitTensor t = make_layout(cs, has_isotopes);
  fill_raw_logits(t, x.nonzeros(), w);
  return t;
}

std::vector<double> softmax_probabilities(const LogitTensor& t) {
  if (t.raw.empty()) fail("softmax over empty logit tensor");
  double max_z = *std::max_element(t.raw.begin(), t.raw.end());
  std::vector<double> p(t.raw.size());
  double total = 0.0;
  for (std::size_t s = 0; s < t.slots.size(); ++s) {
    const double scale = t.scale(s);
    for (std::size_t a = 0; a < kAdductCount; ++a)
      for (std::size_t b = 0; b < t.n_iso; ++b) {
        std::size_t c = t.cell_index(s, a, b);
        p[c] = std::exp(t.raw[c] - max_z) * scale;
        total += p[c];
      }
  }
  for (auto& v : p) v /= total;
  return p;
}

PredictedSpectrum predict(const MolGraph& g, const Covariates& c, const Vocabulary& v,
                          const ModelWeights& w) {
  if (v.fingerprint() != w.vocab_fingerprint)
    fail("predict: vocabulary fingerprint does not match model weights");
  Formula precursor = precursor_formula(g, c.precursor_type);
  CandidateSet cs = candidate_set(v, precursor);
  if (cs.entries.empty()) fail("predict: empty candidate set for precursor " + format_formula(precursor));

  FeatureVector x = featurize(g, c, w.feature_config);
  LogitTensor t = logits(x, cs, w, c.has_isotopic_peaks);
  std::vector<double> p = softmax_probabilities(t);

  // Merge cells with the same resulting ion (fragment + adduct) and isotope
  // state; the representative is the lowest adduct route.
  struct Merged {
    Formula fragment;
    Adduct adduct;
    double probability = 0.0;
  };
  std::map<std::pair<Formula, int>, Merged> merged;
  for (std::size_t s = 0; s < t.slots.size(); ++s) {
    const Formula& fragment = cs.entries[static_cast<std::size_t>(t.slots[s].entry)].formula;
    for (std::size_t a = 0; a < kAdductCount; ++a) {
      Adduct adduct = static_cast<Adduct>(a);
      Formula ion = fragment + adduct_formula(adduct);
      for (std::size_t b = 0; b < t.n_iso; ++b) {
        auto key = std::make_pair(ion, static_cast<int>(b));
        auto [it, inserted] = merged.try_emplace(key);
        Merged& m = it->second;
        if (inserted || a < static_cast<std::size_t>(m.adduct)) {
          m.fragment = fragment;
          m.adduct = adduct;
        }
        m.probability += p[t.cell_index(s, a, b)];
      }
    }
  }

  PredictedSpectrum out;
  out.precursor = precursor;
  out.entries.reserve(merged.size());
  for (const auto& [key, m] : merged) {
    PredictedEntry e;
    e.formula = m.fragment;
    e.adduct = m.adduct;
    e.isotope = key.second;
    e.mz = monoisotopic_mass(m.fragment) + adduct_mass(m.adduct) + key.second * kIsotopeSpacing;
    e.probability = m.probability;
    out.entries.push_back(e);
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const PredictedEntry& a, const PredictedEntry& b) {
    if (a.mz != b.mz) return a.mz < b.mz;
    if (a.formula.counts != b.formula.counts) return a.formula.counts < b.formula.counts;
    return a.isotope < b.isotope;
  });
  return out;
}

std::vector<std::vector<std::uint32_t>> peak_groups(const SpectrumRecord& s,
                                                    const CandidateSet& cs,
                                                    const LogitTensor& t) {
  // ion formula -> cells at isotope state 0
  std::map<Formula, std::vector<std::uint32_t>> ion_cells;
  for (std::size_t slot = 0; slot < t.slots.size(); ++slot) {
    const Formula& fragment = cs.entries[static_cast<std::size_t>(t.slots[slot].entry)].formula;
    for (std::size_t a = 0; a < kAdductCount; ++a) {
      Formula ion = fragment + adduct_formula(static_cast<Adduct>(a));
      ion_cells[ion].push_back(static_cast<std::uint32_t>(t.cell_index(slot, a, 0)));
    }
  }

  std::vector<std::vector<std::uint32_t>> groups(s.peaks.size());
  if (s.annotations.empty()) return groups;
  for (std::size_t i = 0; i < s.peaks.size(); ++i) {
    for (const auto& f : s.annotations[i]) {
      auto it = ion_cells.find(f);
      if (it == ion_cells.end()) continue;
      groups[i].insert(groups[i].end(), it->second.begin(), it->second.end());
    }
    std::sort(groups[i].begin(), groups[i].end());
  }
  return groups;
}

namespace {

struct SoftmaxStats {
  std::vector<double> scaled_exp;  // scale * exp(z - max)
  double max_z = 0.0;
  double total = 0.0;
};

SoftmaxStats softmax_stats(const LogitTensor& t) {
  SoftmaxStats st;
  st.max_z = *std::max_element(t.raw.begin(), t.raw.end());
  st.scaled_exp.resize(t.raw.size());
  for (std::size_t s = 0; s < t.slots.size(); ++s) {
    const double scale = t.scale(s);
    for (std::size_t a = 0; a < kAdductCount; ++a)
      for (std::size_t b = 0; b < t.n_iso; ++b) {
        std::size_t c = t.cell_index(s, a, b);
        st.scaled_exp[c] = std::exp(t.raw[c] - st.max_z) * scale;
        st.total += st.scaled_exp[c];
      }
  }
  return st;
}

}  // namespace

PmceResult pmce(const SpectrumRecord& s, const CandidateSet& cs, const LogitTensor& t) {
  if (!is_normalized(s, 1e-6)) fail("pmce: record '" + s.id + "' is not normalized");
  auto groups = peak_groups(s, cs, t);
  SoftmaxStats st = softmax_stats(t);
  const double log_total = std::log(st.total);

  PmceResult r;
  bool any = false;
  for (std::size_t i = 0; i < s.peaks.size(); ++i) {
    if (groups[i].empty()) {
      r.unexplained_height += s.peaks[i].height;
      continue;
    }
    any = true;
    ++r.explained_peaks;
    double y = s.peaks[i].height;
    if (y == 0.0) continue;
    double group_sum = 0.0;
    for (auto c : groups[i]) group_sum += st.scaled_exp[c];
    r.loss -= y * (std::log(group_sum) - log_total);
  }
  if (!any) fail("pmce: no explainable peaks in record '" + s.id + "'");
  return r;
}

namespace {

// dL/dz for every cell: p_c * (Y - sum over groups containing c of y_i/q_i),
// where Y is the explained height mass.
struct CellGradients {
  PmceResult value;
  std::vector<double> d_z;
};

CellGradients cell_gradients(const SpectrumRecord& s,
                             const std::vector<std::vector<std::uint32_t>>& groups,
                             const LogitTensor& t) {
  SoftmaxStats st = softmax_stats(t);
  const double log_total = std::log(st.total);

  CellGradients out;
  out.d_z.assign(t.raw.size(), 0.0);
  std::vector<double> ratio(t.raw.size(), 0.0);  // r_c
  double explained_y = 0.0;
  bool any = false;

  for (std::size_t i = 0; i < s.peaks.size(); ++i) {
    if (groups[i].empty()) {
      out.value.unexplained_height += s.peaks[i].height;
      continue;
    }
    any = true;
    ++out.value.explained_peaks;
    const double y = s.peaks[i].height;
    explained_y += y;
    double group_sum = 0.0;
    for (auto c : groups[i]) group_sum += st.scaled_exp[c];
    if (y > 0.0) out.value.loss -= y * (std::log(group_sum) - log_total);
    const double q = group_sum / st.total;
    if (y > 0.0)
      for (auto c : groups[i]) ratio[c] += y / q;
  }
  if (!any) fail("pmce: no explainable peaks in record '" + s.id + "'");

  for (std::size_t c = 0; c < t.raw.size(); ++c) {
    double p = st.scaled_exp[c] / st.total;
    out.d_z[c] = p * (explained_y - ratio[c]);
  }
  return out;
}

void backprop_to_weights(const LogitTensor& t, const std::vector<double>& d_z,
                         const std::vector<std::pair<std::uint32_t, double>>& nz,
                         std::size_t d, double scale, std::vector<double>& d_w,
                         std::vector<double>& d_bias, std::vector<double>& d_w_iso) {
  for (std::size_t s = 0; s < t.slots.size(); ++s) {
    const std::size_t k = static_cast<std::size_t>(t.slots[s].vocab_index);
    for (std::size_t a = 0; a < kAdductCount; ++a) {
      double g_cell_sum = 0.0;
      for (std::size_t b = 0; b < t.n_iso; ++b) {
        double g = d_z[t.cell_index(s, a, b)] * scale;
        if (g == 0.0) continue;
        g_cell_sum += g;
        double* iso = d_w_iso.data() + b * d;
        for (const auto& [idx, v] : nz) iso[idx] += g * v;
      }
      if (g_cell_sum == 0.0) continue;
      d_bias[k * kAdductCount + a] += g_cell_sum;
      double* row = d_w.data() + (k * kAdductCount + a) * d;
      for (const auto& [idx, v] : nz) row[idx] += g_cell_sum * v;
    }
  }
}

}  // namespace

PmceGradient pmce_gradient(const SpectrumRecord& s, const CandidateSet& cs,
                           const FeatureVector& x, const ModelWeights& w) {
  if (!is_normalized(s, 1e-6)) fail("pmce: record '" + s.id + "' is not normalized");
  LogitTensor t = logits(x, cs, w, s.covariates.has_isotopic_peaks);
  auto groups = peak_groups(s, cs, t);
  CellGradients cg = cell_gradients(s, groups, t);

  PmceGradient out;
  out.value = cg.value;
  out.d_w.assign(w.w.size(), 0.0);
  out.d_bias.assign(w.bias.size(), 0.0);
  out.d_w_iso.assign(w.w_iso.size(), 0.0);
  backprop_to_weights(t, cg.d_z, x.nonzeros(), w.feature_length(), 1.0, out.d_w, out.d_bias,
                      out.d_w_iso);
  return out;
}

// ---------------------------------------------------------------- train ---

namespace {

struct PreparedRecord {
  FeatureVector features;
  std::vector<std::pair<std::uint32_t, double>> nz;
  CandidateSet candidates;
  LogitTensor layout;  // raw logits are refilled per evaluation
  std::vector<std::vector<std::uint32_t>> groups;
  const SpectrumRecord* spectrum = nullptr;
  bool usable = false;
};

struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::vector<double>& param, const std::vector<double>& grad, AdamState& st,
               const TrainConfig& cfg, double bias_corr1, double bias_corr2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grad[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    double mhat = st.m[i] / bias_corr1;
    double vhat = st.v[i] / bias_corr2;
    param[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
  }
}

}  // namespace

ModelWeights train(const std::vector<TrainingRecord>& corpus, const Vocabulary& v,
                   const TrainConfig& cfg, TrainLog* log) {
  if (corpus.empty()) fail("train: empty corpus");
  if (cfg.batch_size < 1) fail("train: batch size must be positive");

  std::vector<PreparedRecord> prepared(corpus.size());
  std::size_t usable = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& tr = corpus[i];
    PreparedRecord& pr = prepared[i];
    pr.spectrum = &tr.spectrum;
    if (!tr.spectrum.precursor)
      fail("train: record '" + tr.spectrum.id + "' has no precursor formula");
    if (!is_normalized(tr.spectrum, 1e-6))
      fail("train: record '" + tr.spectrum.id + "' is not normalized");
    pr.features = featurize(tr.graph, tr.spectrum.covariates, cfg.features);
    pr.nz = pr.features.nonzeros();
    pr.candidates = candidate_set(v, *tr.spectrum.precursor);
    if (pr.candidates.entries.empty()) continue;
    pr.layout = make_layout(pr.candidates, tr.spectrum.covariates.has_isotopic_peaks);
    pr.groups = peak_groups(tr.spectrum, pr.candidates, pr.layout);
    for (const auto& g : pr.groups)
      if (!g.empty()) {
        pr.usable = true;
        break;
      }
    if (pr.usable) ++usable;
  }
  if (usable == 0) fail("train: no explainable peaks anywhere in corpus");

  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < prepared.size(); ++i)
    if (prepared[i].usable) indices.push_back(i);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> val_indices;
  if (cfg.validation_fraction > 0.0 && indices.size() > 1) {
    std::vector<std::size_t> shuffled = indices;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::size_t n_val = std::min<std::size_t>(
        indices.size() - 1,
        static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(indices.size())));
    val_indices.assign(shuffled.begin(), shuffled.begin() + n_val);
    indices.assign(shuffled.begin() + n_val, shuffled.end());
    std::sort(indices.begin(), indices.end());
    std::sort(val_indices.begin(), val_indices.end());
  }

  ModelWeights weights = ModelWeights::zeros(v, cfg.features);
  AdamState st_w(weights.w.size()), st_b(weights.bias.size()), st_i(weights.w_iso.size());
  std::vector<double> g_w(weights.w.size()), g_b(weights.bias.size()), g_i(weights.w_iso.size());

  auto mean_loss_over = [&](const std::vector<std::size_t>& set) {
    double total = 0.0;
    for (std::size_t i : set) {
      PreparedRecord& pr = prepared[i];
      fill_raw_logits(pr.layout, pr.nz, weights);
      total += cell_gradients(*pr.spectrum, pr.groups, pr.layout).value.loss;
    }
    return set.empty() ? 0.0 : total / static_cast<double>(set.size());
  };

  ModelWeights best = weights;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = indices;
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::fill(g_w.begin(), g_w.end(), 0.0);
      std::fill(g_b.begin(), g_b.end(), 0.0);
      std::fill(g_i.begin(), g_i.end(), 0.0);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t j = start; j < end; ++j) {
        PreparedRecord& pr = prepared[order[j]];
        fill_raw_logits(pr.layout, pr.nz, weights);
        CellGradients cg = cell_gradients(*pr.spectrum, pr.groups, pr.layout);
        epoch_loss += cg.value.loss;
        backprop_to_weights(pr.layout, cg.d_z, pr.nz, weights.feature_length(), inv, g_w, g_b,
                            g_i);
      }
      ++step;
      double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      adam_step(weights.w, g_w, st_w, cfg, c1, c2);
      adam_step(weights.bias, g_b, st_b, cfg, c1, c2);
      adam_step(weights.w_iso, g_i, st_i, cfg, c1, c2);
    }

    if (log) log->train_loss.push_back(order.empty() ? 0.0 : epoch_loss / static_cast<double>(order.size()));
    if (!val_indices.empty()) {
      double vl = mean_loss_over(val_indices);
      if (log) log->val_loss.push_back(vl);
      if (vl < best_val) {
        best_val = vl;
        best = weights;
        best_epoch = epoch;
      }
    }
  }

  if (log) {
    log->best_epoch = best_epoch;
    log->skipped_records = corpus.size() - usable;
  }
  return val_indices.empty() ? weights : best;
}

// ----------------------------------------------------------- weights IO ---

namespace {

constexpr char kWeightsMagic[8] = {'M', 'S', 'F', 'O', 'R', 'M', 'A', 'W'};
constexpr std::uint32_t kWeightsVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(out, bits);
}

struct ByteReader {
  std::string_view bytes;
  std::size_t pos = 0;

  void need(std::size_t n) {
    if (pos + n > bytes.size()) fail("weights file is corrupt or truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
};

}  // namespace

std::string save_weights(const ModelWeights& w) {
  std::string out;
  out.append(kWeightsMagic, sizeof(kWeightsMagic));
  put_u32(out, kWeightsVersion);
  put_u64(out, w.vocab_fingerprint);
  put_u32(out, static_cast<std::uint32_t>(w.feature_config.fingerprint_radius));
  put_u32(out, static_cast<std::uint32_t>(w.feature_config.fingerprint_bits));
  put_u32(out, w.vocab_size);
  put_u32(out, static_cast<std::uint32_t>(w.feature_length()));
  put_u32(out, static_cast<std::uint32_t>(kAdductCount));
  put_u32(out, static_cast<std::uint32_t>(kIsotopeCount));
  for (double d : w.w) put_f64(out, d);
  for (double d : w.bias) put_f64(out, d);
  for (double d : w.w_iso) put_f64(out, d);
  return out;
}

ModelWeights load_weights(std::string_view bytes, const Vocabulary& vocab) {
  ByteReader r{bytes};
  r.need(sizeof(kWeightsMagic));
  if (std::memcmp(bytes.data(), kWeightsMagic, sizeof(kWeightsMagic)) != 0)
    fail("weights file: bad magic (not a model weights file)");
  r.pos = sizeof(kWeightsMagic);
  std::uint32_t version = r.u32();
  if (version != kWeightsVersion)
    fail("weights file: version " + std::to_string(version) + " not supported (expected " +
         std::to_string(kWeightsVersion) + ")");

  ModelWeights w;
  w.vocab_fingerprint = r.u64();
  if (w.vocab_fingerprint != vocab.fingerprint())
    fail("weights file: vocabulary fingerprint mismatch (weights were trained against a "
         "different vocabulary)");
  w.feature_config.fingerprint_radius = static_cast<int>(r.u32());
  w.feature_config.fingerprint_bits = static_cast<int>(r.u32());
  w.vocab_size = r.u32();
  if (w.vocab_size != vocab.size()) fail("weights file: vocabulary size mismatch");
  std::uint32_t d = r.u32();
  if (d != w.feature_config.feature_length()) fail("weights file: feature length mismatch");
  if (r.u32() != kAdductCount) fail("weights file: adduct count mismatch");
  if (r.u32() != kIsotopeCount) fail("weights file: isotope count mismatch");

  std::size_t nw = static_cast<std::size_t>(w.vocab_size) * kAdductCount * d;
  std::size_t nb = static_cast<std::size_t>(w.vocab_size) * kAdductCount;
  std::size_t ni = kIsotopeCount * static_cast<std::size_t>(d);
  r.need((nw + nb + ni) * 8);
  if (bytes.size() != r.pos + (nw + nb + ni) * 8)
    fail("weights file is corrupt or truncated");
  w.w.resize(nw);
  for (auto& x : w.w) x = r.f64();
  w.bias.resize(nb);
  for (auto& x : w.bias) x = r.f64();
  w.w_iso.resize(ni);
  for (auto& x : w.w_iso) x = r.f64();
  return w;
}

}  // namespace msforma
