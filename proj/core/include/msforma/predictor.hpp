#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msforma/vocab.hpp"

namespace msforma {

// Adduct states a fragment can bind after fragmentation.
enum class Adduct : std::uint8_t { None, PlusH2O, PlusN2 };
inline constexpr std::size_t kAdductCount = 3;
inline constexpr std::size_t kIsotopeCount = 3;
// Dominant heavy-isotope m/z step (13C - 12C).
inline constexpr double kIsotopeSpacing = 1.003355;

Formula adduct_formula(Adduct a);
double adduct_mass(Adduct a);

// Linear logit head: one weight vector and bias per (vocabulary rank,
// adduct), plus a shared per-isotope-state weight vector.
struct ModelWeights {
  FeatureConfig feature_config;
  std::uint64_t vocab_fingerprint = 0;
  std::uint32_t vocab_size = 0;  // K

  std::vector<double> w;      // [K * kAdductCount * D]
  std::vector<double> bias;   // [K * kAdductCount]
  std::vector<double> w_iso;  // [kIsotopeCount * D]

  static ModelWeights zeros(const Vocabulary& v, const FeatureConfig& fc);

  std::size_t feature_length() const { return feature_config.feature_length(); }
  double* w_row(std::size_t k, std::size_t a) {
    return w.data() + (k * kAdductCount + a) * feature_length();
  }
  const double* w_row(std::size_t k, std::size_t a) const {
    return w.data() + (k * kAdductCount + a) * feature_length();
  }
  double* iso_row(std::size_t b) { return w_iso.data() + b * feature_length(); }
  const double* iso_row(std::size_t b) const { return w_iso.data() + b * feature_length(); }

  // Content hash over configuration and parameters; identifies a model in
  // library metadata.
  std::uint64_t content_fingerprint() const;
};

// One logit row: a vocabulary slot contributing to a candidate entry. A
// double-counted entry (origin Both) contributes two slots, each flagged so
// its exponential is halved — exactly equivalent to the log 2 logit
// correction, but bit-exact under floating point.
struct LogitSlot {
  int entry;        // index into CandidateSet::entries
  VocabKind route;  // which vocabulary list this slot came from
  int vocab_index;  // weight row
  bool halved;
};

class LogitTensor {
 public:
  std::vector<LogitSlot> slots;
  std::size_t n_iso = 1;     // 1, or kIsotopeCount when isotopes are enabled
  std::vector<double> raw;   // uncorrected logits, [slot][adduct][iso]

  std::size_t cell_index(std::size_t slot, std::size_t adduct, std::size_t iso) const {
    return (slot * kAdductCount + adduct) * n_iso + iso;
  }
  std::size_t cell_count() const { return slots.size() * kAdductCount * n_iso; }

  // Corrected logit value: raw minus log 2 for double-counted slots.
  double logit(std::size_t slot, std::size_t adduct, std::size_t iso) const;
  double scale(std::size_t slot) const { return slots[slot].halved ? 0.5 : 1.0; }
};

LogitTensor logits(const FeatureVector& x, const CandidateSet& cs, const ModelWeights& w,
                   bool has_isotopes);

// Softmax over all cells, applying the per-slot halving to the
// exponentials. Output is indexed like LogitTensor cells.
std::vector<double> softmax_probabilities(const LogitTensor& t);

struct PredictedEntry {
  Formula formula;  // fragment formula (before adduct)
  Adduct adduct;
  int isotope;      // beta
  double mz;
  double probability;
};

struct PredictedSpectrum {
  Formula precursor;                    // precursor ion formula
  std::vector<PredictedEntry> entries;  // sorted by m/z
};

PredictedSpectrum predict(const MolGraph& g, const Covariates& c, const Vocabulary& v,
                          const ModelWeights& w);

// Peak-marginal cross entropy. Each annotated peak's predicted height is the
// marginal over all tensor cells whose ion formula (fragment + adduct, at
// isotope state 0) appears in the peak's annotation list. Peaks with no
// compatible cell are excluded; their total height is reported alongside.
struct PmceResult {
  double loss = 0.0;
  double unexplained_height = 0.0;
  std::size_t explained_peaks = 0;
};

// Flat cell-index groups per peak; empty group = unexplained peak.
std::vector<std::vector<std::uint32_t>> peak_groups(const SpectrumRecord& s,
                                                    const CandidateSet& cs,
                                                    const LogitTensor& t);

PmceResult pmce(const SpectrumRecord& s, const CandidateSet& cs, const LogitTensor& t);

// Analytic gradient of the PMCE with respect to every weight and bias.
struct PmceGradient {
  PmceResult value;
  std::vector<double> d_w;
  std::vector<double> d_bias;
  std::vector<double> d_w_iso;
};

PmceGradient pmce_gradient(const SpectrumRecord& s, const CandidateSet& cs,
                           const FeatureVector& x, const ModelWeights& w);

// ------------------------------------------------------------- training ---

struct TrainingRecord {
  MolGraph graph;
  SpectrumRecord spectrum;  // normalized, annotated, with precursor formula
};

struct TrainConfig {
  FeatureConfig features;
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  double validation_fraction = 0.0;  // > 0 selects the best epoch by held-out loss
};

struct TrainLog {
  std::vector<double> train_loss;  // mean PMCE per epoch
  std::vector<double> val_loss;
  int best_epoch = -1;
  std::size_t skipped_records = 0;  // records with no explainable peaks
};

// Mini-batch adaptive-moment gradient descent on the mean PMCE. Fixed seed
// gives a bit-reproducible weight trajectory.
ModelWeights train(const std::vector<TrainingRecord>& corpus, const Vocabulary& v,
                   const TrainConfig& cfg, TrainLog* log = nullptr);

// ---------------------------------------------------------- persistence ---

// Versioned binary format, little-endian throughout. Loading verifies the
// vocabulary fingerprint.
std::string save_weights(const ModelWeights& w);
ModelWeights load_weights(std::string_view bytes, const Vocabulary& vocab);

}  // namespace msforma
