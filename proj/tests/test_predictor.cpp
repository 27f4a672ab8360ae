#include <cmath>
#include <random>

#include "doctest.h"
#include "msforma/predictor.hpp"
#include "support/oracles.hpp"

using namespace msforma;

namespace {

constexpr double kKillLogit = -1e9;  // exp underflows to exactly zero

FeatureConfig tiny_features() {
  FeatureConfig fc;
  fc.fingerprint_bits = 8;
  fc.fingerprint_radius = 1;
  return fc;
}

FeatureVector zero_features(const FeatureConfig& fc) {
  FeatureVector x;
  x.values.assign(fc.feature_length(), 0.0);
  return x;
}

// Vocabulary of bare product formulas with descending weights.
Vocabulary products_vocab(const std::vector<const char*>& formulas) {
  std::vector<VocabEntry> entries;
  double w = static_cast<double>(formulas.size());
  for (const char* f : formulas) entries.push_back({parse_formula(f), w--, VocabKind::Product});
  return Vocabulary(std::move(entries));
}

// Weights whose only nonzero parameters are per-entry biases at adduct None;
// other adduct cells are suppressed so softmax equals softmax(bias).
ModelWeights bias_model(const Vocabulary& v, const FeatureConfig& fc,
                        const std::vector<double>& none_bias) {
  ModelWeights w = ModelWeights::zeros(v, fc);
  for (std::size_t k = 0; k < v.size(); ++k) {
    w.bias[k * kAdductCount + 0] = k < none_bias.size() ? none_bias[k] : kKillLogit;
    w.bias[k * kAdductCount + 1] = kKillLogit;
    w.bias[k * kAdductCount + 2] = kKillLogit;
  }
  return w;
}

SpectrumRecord annotated_record(const std::vector<std::pair<const char*, double>>& peaks,
                                const char* precursor) {
  SpectrumRecord r;
  r.id = "t";
  r.precursor = parse_formula(precursor);
  for (const auto& [formula, height] : peaks) {
    Formula f = parse_formula(formula);
    r.peaks.push_back({monoisotopic_mass(f), height});
    r.annotations.push_back({f});
  }
  canonicalize_peaks(r);
  return r;
}

ModelWeights random_model(const Vocabulary& v, const FeatureConfig& fc, std::uint64_t seed,
                          double scale = 0.5) {
  ModelWeights w = ModelWeights::zeros(v, fc);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::vector<double>& xs) {
    for (auto& x : xs) x = scale * (2.0 * oracles::u01(rng) - 1.0);
  };
  fill(w.w);
  fill(w.bias);
  fill(w.w_iso);
  return w;
}

FeatureVector random_features(const FeatureConfig& fc, std::uint64_t seed) {
  FeatureVector x;
  std::mt19937_64 rng(seed);
  x.values.assign(fc.feature_length(), 0.0);
  for (auto& v : x.values)
    if (oracles::u01(rng) < 0.4) v = oracles::u01(rng) < 0.8 ? 1.0 : oracles::u01(rng);
  return x;
}

}  // namespace

TEST_CASE("adduct masses from the element table") {
  CHECK(adduct_mass(Adduct::None) == 0.0);
  CHECK(adduct_mass(Adduct::PlusH2O) == doctest::Approx(18.010565).epsilon(1e-12));
  CHECK(adduct_mass(Adduct::PlusN2) == doctest::Approx(28.006148).epsilon(1e-12));
}

TEST_CASE("logits basics") {
  FeatureConfig fc = tiny_features();
  Vocabulary v = products_vocab({"CH2", "H2O"});
  CandidateSet cs = candidate_set(v, parse_formula("C2H6O"));
  ModelWeights w = ModelWeights::zeros(v, fc);
  FeatureVector x = zero_features(fc);

  LogitTensor t = logits(x, cs, w, false);
  CHECK(t.n_iso == 1);
  CHECK(t.slots.size() == 2);
  for (std::size_t s = 0; s < t.slots.size(); ++s)
    for (std::size_t a = 0; a < kAdductCount; ++a) CHECK(t.logit(s, a, 0) == 0.0);

  LogitTensor t3 = logits(x, cs, w, true);
  CHECK(t3.n_iso == kIsotopeCount);

  FeatureVector bad;
  bad.values.assign(3, 0.0);
  CHECK_THROWS_AS(logits(bad, cs, w, false), error);
}

TEST_CASE("double-count halving is bit-exact") {
  // CH4O is both a product and P - CH2 under P = C2H6O
  Vocabulary v({{parse_formula("CH4O"), 2.0, VocabKind::Product},
                {parse_formula("CH2"), 1.0, VocabKind::Loss}});
  CandidateSet cs = candidate_set(v, parse_formula("C2H6O"));
  REQUIRE(cs.double_count.size() == 1);

  FeatureConfig fc = tiny_features();
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 200; ++trial) {
    ModelWeights w = random_model(v, fc, 1000 + trial, 2.0);
    FeatureVector x = random_features(fc, 2000 + trial);
    LogitTensor t = logits(x, cs, w, false);
    REQUIRE(t.slots.size() == 2);
    CHECK(t.slots[0].halved);
    CHECK(t.slots[1].halved);

    double max_z = *std::max_element(t.raw.begin(), t.raw.end());
    for (std::size_t a = 0; a < kAdductCount; ++a) {
      double z1 = t.raw[t.cell_index(0, a, 0)];
      double z2 = t.raw[t.cell_index(1, a, 0)];
      double head = std::exp(z1 - max_z) * t.scale(0) + std::exp(z2 - max_z) * t.scale(1);
      double mean = (std::exp(z1 - max_z) + std::exp(z2 - max_z)) / 2.0;
      CHECK(head == mean);  // bitwise

      // the reported logit carries the log 2 correction
      CHECK(t.logit(0, a, 0) == doctest::Approx(z1 - std::log(2.0)).epsilon(1e-15));
    }
    // equal logits: exp(z - ln 2) + exp(z - ln 2) == exp(z)
    double z = 1.0 + oracles::u01(rng);
    CHECK(std::exp(z) * 0.5 + std::exp(z) * 0.5 == std::exp(z));
  }
}

TEST_CASE("predict normalization and ordering") {
  MolGraph caffeine = parse_smiles("Cn1cnc2c1c(=O)n(C)c(=O)n2C");
  Covariates c;
  Vocabulary v = products_vocab({"CH2", "H2O", "C3H4NO2", "C8H11N4O2", "CHN"});
  FeatureConfig fc = tiny_features();
  ModelWeights w = random_model(v, fc, 5);

  PredictedSpectrum p = predict(caffeine, c, v, w);
  double total = 0.0;
  for (const auto& e : p.entries) total += e.probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t i = 1; i < p.entries.size(); ++i) CHECK(p.entries[i - 1].mz <= p.entries[i].mz);
  for (const auto& e : p.entries) {
    double expect =
        monoisotopic_mass(e.formula) + adduct_mass(e.adduct) + e.isotope * kIsotopeSpacing;
    CHECK(e.mz == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("predict is invariant to a constant logit shift") {
  MolGraph g = parse_smiles("CCO");
  Covariates c;
  Vocabulary v = products_vocab({"CH2", "H2O", "C2H5"});
  FeatureConfig fc = tiny_features();
  ModelWeights w = random_model(v, fc, 7);
  PredictedSpectrum base = predict(g, c, v, w);

  ModelWeights shifted = w;
  for (auto& b : shifted.bias) b += 5.0;
  PredictedSpectrum moved = predict(g, c, v, shifted);
  REQUIRE(base.entries.size() == moved.entries.size());
  for (std::size_t i = 0; i < base.entries.size(); ++i)
    CHECK(base.entries[i].probability ==
          doctest::Approx(moved.entries[i].probability).epsilon(1e-9));
}

TEST_CASE("predict degenerate single-entry candidate set") {
  // One vocabulary entry expands to one candidate; the marginal over its
  // adduct states carries all the probability.
  MolGraph g = parse_smiles("O");
  Covariates c;
  Vocabulary v = products_vocab({"H3O"});
  FeatureConfig fc = tiny_features();
  ModelWeights w = ModelWeights::zeros(v, fc);
  PredictedSpectrum p = predict(g, c, v, w);
  REQUIRE(p.entries.size() == kAdductCount);
  double total = 0.0;
  for (const auto& e : p.entries) total += e.probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  Vocabulary far = products_vocab({"C40H2"});
  CHECK_THROWS_AS(predict(g, c, far, ModelWeights::zeros(far, fc)), error);
}

TEST_CASE("pmce closed-form cases") {
  FeatureConfig fc = tiny_features();
  FeatureVector x = zero_features(fc);

  SUBCASE("perfect single-candidate prediction gives zero loss") {
    Vocabulary v = products_vocab({"H2O"});
    CandidateSet cs = candidate_set(v, parse_formula("C2H6O2"));
    ModelWeights w = bias_model(v, fc, {0.0});
    SpectrumRecord s = annotated_record({{"H2O", 1.0}}, "C2H6O2");
    LogitTensor t = logits(x, cs, w, false);
    PmceResult r = pmce(s, cs, t);
    CHECK(r.loss == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.unexplained_height == 0.0);
    CHECK(r.explained_peaks == 1);
  }

  SUBCASE("two disjoint singleton groups at the uniform optimum") {
    Vocabulary v = products_vocab({"H2O", "CH2"});
    CandidateSet cs = candidate_set(v, parse_formula("C4H10O2"));
    ModelWeights w = bias_model(v, fc, {std::log(0.5), std::log(0.5)});
    SpectrumRecord s = annotated_record({{"H2O", 0.5}, {"CH2", 0.5}}, "C4H10O2");
    LogitTensor t = logits(x, cs, w, false);
    CHECK(pmce(s, cs, t).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  SUBCASE("marginal over two compatible candidates") {
    // one peak, y = 1, explained by either of two near-isobaric candidates
    // predicted at 0.3 each: loss = -ln 0.6
    Vocabulary v = products_vocab({"H2O", "CH2", "C2H4"});
    CandidateSet cs = candidate_set(v, parse_formula("C4H10O2"));
    ModelWeights w = bias_model(v, fc, {std::log(0.3), std::log(0.3), std::log(0.4)});
    SpectrumRecord s;
    s.id = "m";
    s.precursor = parse_formula("C4H10O2");
    s.peaks = {{18.01, 1.0}};
    s.annotations = {{parse_formula("H2O"), parse_formula("CH2")}};
    LogitTensor t = logits(x, cs, w, false);
    CHECK(pmce(s, cs, t).loss == doctest::Approx(-std::log(0.6)).epsilon(1e-12));
  }
}

TEST_CASE("pmce unexplained peaks are excluded and reported") {
  FeatureConfig fc = tiny_features();
  FeatureVector x = zero_features(fc);
  Vocabulary v = products_vocab({"H2O"});
  CandidateSet cs = candidate_set(v, parse_formula("C4H10O2"));
  ModelWeights w = bias_model(v, fc, {0.0});

  SpectrumRecord s = annotated_record({{"H2O", 0.75}, {"C2H4", 0.25}}, "C4H10O2");
  LogitTensor t = logits(x, cs, w, false);
  PmceResult r = pmce(s, cs, t);
  CHECK(r.unexplained_height == doctest::Approx(0.25));
  CHECK(r.explained_peaks == 1);
  CHECK(r.loss == doctest::Approx(-0.75 * std::log(1.0)).epsilon(1e-12));

  SpectrumRecord hopeless = annotated_record({{"C2H4", 1.0}}, "C4H10O2");
  CHECK_THROWS_AS(pmce(hopeless, cs, logits(x, cs, w, false)), error);
}

TEST_CASE("pmce reduces to cross entropy on disjoint singletons and obeys the entropy bound") {
  FeatureConfig fc = tiny_features();
  FeatureVector x = zero_features(fc);
  Vocabulary v = products_vocab({"H2O", "CH2", "C2H4O"});
  CandidateSet cs = candidate_set(v, parse_formula("C4H10O2"));
  SpectrumRecord s = annotated_record({{"H2O", 0.2}, {"CH2", 0.5}, {"C2H4O", 0.3}}, "C4H10O2");

  double entropy = -(0.2 * std::log(0.2) + 0.5 * std::log(0.5) + 0.3 * std::log(0.3));

  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 50; ++trial) {
    double a = oracles::u01(rng), b = oracles::u01(rng), c = oracles::u01(rng);
    double z = a + b + c;
    ModelWeights w = bias_model(v, fc, {std::log(a / z), std::log(b / z), std::log(c / z)});
    LogitTensor t = logits(x, cs, w, false);
    double expected = -(0.2 * std::log(a / z) + 0.5 * std::log(b / z) + 0.3 * std::log(c / z));
    PmceResult r = pmce(s, cs, t);
    CHECK(r.loss == doctest::Approx(expected).epsilon(1e-10));
    CHECK(r.loss >= entropy - 1e-12);
  }

  // equality at the data distribution
  ModelWeights opt = bias_model(v, fc, {std::log(0.2), std::log(0.5), std::log(0.3)});
  CHECK(pmce(s, cs, logits(x, cs, opt, false)).loss == doctest::Approx(entropy).epsilon(1e-12));
}

TEST_CASE("pmce gradient is zero at a perfect single-candidate optimum") {
  FeatureConfig fc = tiny_features();
  FeatureVector x = zero_features(fc);
  Vocabulary v = products_vocab({"H2O"});
  CandidateSet cs = candidate_set(v, parse_formula("C2H6O2"));
  ModelWeights w = bias_model(v, fc, {0.0});
  SpectrumRecord s = annotated_record({{"H2O", 1.0}}, "C2H6O2");

  PmceGradient g = pmce_gradient(s, cs, x, w);
  CHECK(g.value.loss == doctest::Approx(0.0).epsilon(1e-12));
  for (double d : g.d_w) CHECK(std::fabs(d) <= 1e-8);
  for (double d : g.d_bias) CHECK(std::fabs(d) <= 1e-8);
  for (double d : g.d_w_iso) CHECK(std::fabs(d) <= 1e-8);
}

TEST_CASE("pmce gradient matches central finite differences") {
  FeatureConfig fc = tiny_features();
  const double h = 1e-5;
  std::mt19937_64 rng(137);

  for (int instance = 0; instance < 20; ++instance) {
    Vocabulary v = products_vocab({"H2O", "CH2", "C2H4", "CH4O", "C2H2O"});
    Formula precursor = parse_formula("C4H10O3");
    CandidateSet cs = candidate_set(v, precursor);
    ModelWeights w = random_model(v, fc, 300 + instance, 1.0);
    FeatureVector x = random_features(fc, 400 + instance);

    SpectrumRecord s;
    s.id = "fd";
    s.precursor = precursor;
    bool has_iso = instance % 2 == 0;
    s.covariates.has_isotopic_peaks = has_iso;
    double y1 = 0.2 + 0.6 * oracles::u01(rng);
    s.peaks = {{18.0106, y1}, {14.0157, 1.0 - y1}};
    s.annotations = {{parse_formula("H2O"), parse_formula("CH4O")}, {parse_formula("CH2")}};

    PmceGradient g = pmce_gradient(s, cs, x, w);

    auto loss_at = [&](const ModelWeights& m) {
      return pmce(s, cs, logits(x, cs, m, has_iso)).loss;
    };
    auto check_coord = [&](std::vector<double> ModelWeights::* member,
                           const std::vector<double>& analytic, std::size_t idx) {
      ModelWeights plus = w, minus = w;
      (plus.*member)[idx] += h;
      (minus.*member)[idx] -= h;
      double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
      double denom = std::max({std::fabs(fd), std::fabs(analytic[idx]), 1e-4});
      CHECK(std::fabs(fd - analytic[idx]) / denom <= 1e-5);
    };

    for (std::size_t i = 0; i < w.bias.size(); ++i) check_coord(&ModelWeights::bias, g.d_bias, i);
    for (std::size_t i = 0; i < w.w.size(); i += 17) check_coord(&ModelWeights::w, g.d_w, i);
    for (std::size_t i = 0; i < w.w_iso.size(); i += 5)
      check_coord(&ModelWeights::w_iso, g.d_w_iso, i);

    // logit gradients sum to zero: shift invariance of the softmax
    double bias_total = 0.0;
    for (double d : g.d_bias) bias_total += d;
    if (!has_iso) CHECK(std::fabs(bias_total) <= 1e-10);
  }
}

TEST_CASE("train zero epochs returns the zero initialization") {
  Vocabulary v = products_vocab({"H2O", "CH2"});
  TrainConfig cfg;
  cfg.features = tiny_features();
  cfg.epochs = 0;

  TrainingRecord tr;
  tr.graph = parse_smiles("CCO");
  tr.spectrum = annotated_record({{"H2O", 1.0}}, "C2H7O");
  tr.spectrum.covariates = Covariates{};
  auto w = train({tr}, v, cfg);
  for (double d : w.w) CHECK(d == 0.0);
  for (double d : w.bias) CHECK(d == 0.0);
  for (double d : w.w_iso) CHECK(d == 0.0);
}

TEST_CASE("train is deterministic under a fixed seed") {
  std::mt19937_64 rng(149);
  Vocabulary v = products_vocab({"H2O", "CH2", "C2H4", "CH4O"});
  TrainConfig cfg;
  cfg.features = tiny_features();
  cfg.epochs = 5;
  cfg.batch_size = 2;
  cfg.seed = 99;

  std::vector<TrainingRecord> corpus;
  const char* smiles[] = {"CCO", "CC(=O)O", "CCN", "CCCO", "CCC"};
  for (const char* s : smiles) {
    TrainingRecord tr;
    tr.graph = parse_smiles(s);
    Formula p = precursor_formula(tr.graph, PrecursorType::MPlusH);
    SpectrumRecord rec;
    rec.id = s;
    rec.precursor = p;
    Formula h2o = parse_formula("H2O");
    Formula ch2 = parse_formula("CH2");
    double y = 0.3 + 0.4 * oracles::u01(rng);
    rec.peaks = {{monoisotopic_mass(h2o), y}, {monoisotopic_mass(ch2), 1.0 - y}};
    rec.annotations = {{h2o}, {ch2}};
    canonicalize_peaks(rec);
    tr.spectrum = rec;
    corpus.push_back(std::move(tr));
  }

  auto w1 = train(corpus, v, cfg);
  auto w2 = train(corpus, v, cfg);
  CHECK(w1.w == w2.w);
  CHECK(w1.bias == w2.bias);
  CHECK(w1.w_iso == w2.w_iso);

  TrainLog log;
  cfg.validation_fraction = 0.4;
  auto w3 = train(corpus, v, cfg, &log);
  CHECK(log.val_loss.size() == 5);
  CHECK(log.best_epoch >= 0);
  (void)w3;
}

TEST_CASE("train error cases") {
  Vocabulary v = products_vocab({"C40H2"});
  TrainConfig cfg;
  cfg.features = tiny_features();
  CHECK_THROWS_AS(train({}, v, cfg), error);

  TrainingRecord tr;
  tr.graph = parse_smiles("CCO");
  tr.spectrum = annotated_record({{"H2O", 1.0}}, "C2H7O");
  CHECK_THROWS_AS(train({tr}, v, cfg), error);  // nothing explainable
}

TEST_CASE("weights save/load round trip") {
  Vocabulary v = products_vocab({"H2O", "CH2", "C2H4"});
  FeatureConfig fc = tiny_features();
  ModelWeights w = random_model(v, fc, 11);

  std::string bytes = save_weights(w);
  ModelWeights r = load_weights(bytes, v);
  CHECK(r.w == w.w);
  CHECK(r.bias == w.bias);
  CHECK(r.w_iso == w.w_iso);
  CHECK(r.vocab_fingerprint == w.vocab_fingerprint);
  CHECK(r.feature_config == w.feature_config);
  CHECK(save_weights(r) == bytes);

  SUBCASE("truncated file") {
    CHECK_THROWS_AS(load_weights(std::string_view(bytes).substr(0, bytes.size() - 5), v), error);
    CHECK_THROWS_AS(load_weights(std::string_view(bytes).substr(0, 10), v), error);
  }
  SUBCASE("bad magic and version") {
    std::string junk = bytes;
    junk[0] = 'X';
    CHECK_THROWS_AS(load_weights(junk, v), error);
    std::string vjunk = bytes;
    vjunk[8] = 9;  // version field
    CHECK_THROWS_AS(load_weights(vjunk, v), error);
  }
  SUBCASE("vocabulary fingerprint mismatch") {
    Vocabulary other = products_vocab({"H2O", "CH2", "C2H4O"});
    CHECK_THROWS_AS(load_weights(bytes, other), error);
  }
}

TEST_CASE("poisson log-likelihood and pmce differ by a prediction-independent constant") {
  // Counts drawn per fragment; disjoint single-formula peaks. For any two
  // predicted distributions supported on the peaks, LL + K * PMCE agree.
  std::mt19937_64 rng(157);
  FeatureConfig fc = tiny_features();
  FeatureVector x = zero_features(fc);
  Vocabulary v = products_vocab({"H2O", "CH2", "C2H4", "CH4O"});
  Formula precursor = parse_formula("C4H10O3");
  CandidateSet cs = candidate_set(v, precursor);

  const double lambda = 50.0;
  const double p_true[4] = {0.4, 0.3, 0.2, 0.1};
  const char* names[4] = {"H2O", "CH2", "C2H4", "CH4O"};

  for (int trial = 0; trial < 10; ++trial) {
    double counts[4];
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
      // Poisson by inversion, adequate at this rate
      double target = oracles::u01(rng);
      double rate = lambda * p_true[i];
      double cdf = std::exp(-rate), pmf = cdf;
      int k = 0;
      while (cdf < target && k < 10000) {
        ++k;
        pmf *= rate / k;
        cdf += pmf;
      }
      counts[i] = std::max(1, k);
      total += counts[i];
    }

    SpectrumRecord s;
    s.id = "poisson";
    s.precursor = precursor;
    for (int i = 0; i < 4; ++i) {
      Formula f = parse_formula(names[i]);
      s.peaks.push_back({monoisotopic_mass(f), counts[i] / total});
      s.annotations.push_back({f});
    }
    canonicalize_peaks(s);

    auto eval_both = [&](const std::vector<double>& probs) {
      ModelWeights w = bias_model(
          v, fc, {std::log(probs[0]), std::log(probs[1]), std::log(probs[2]), std::log(probs[3])});
      double loss = pmce(s, cs, logits(x, cs, w, false)).loss;
      double ll = 0.0;
      for (int i = 0; i < 4; ++i) {
        double rate = lambda * probs[i];
        ll += counts[i] * std::log(rate) - rate;  // - log k! omitted: constant
      }
      return std::make_pair(ll, loss);
    };

    std::vector<double> pa = {0.25, 0.25, 0.25, 0.25};
    std::vector<double> pb = {0.5, 0.2, 0.2, 0.1};
    auto [ll_a, pmce_a] = eval_both(pa);
    auto [ll_b, pmce_b] = eval_both(pb);
    double diff = (ll_a + total * pmce_a) - (ll_b + total * pmce_b);
    CHECK(std::fabs(diff) <= 1e-9 * std::max(1.0, std::fabs(ll_a)));
  }
}
