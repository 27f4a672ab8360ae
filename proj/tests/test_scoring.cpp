#include <random>

#include "doctest.h"
#include "msforma/scoring.hpp"
#include "support/oracles.hpp"

using namespace msforma;

namespace {

SpectrumRecord peaks_of(std::vector<Peak> peaks, const char* id = "s") {
  SpectrumRecord r;
  r.id = id;
  r.peaks = std::move(peaks);
  canonicalize_peaks(r);
  return r;
}

}  // namespace

TEST_CASE("self similarity is one") {
  std::mt19937_64 rng(211);
  MatchConfig cfg;
  for (int i = 0; i < 30; ++i) {
    SpectrumRecord s = oracles::random_spectrum(rng, 15);
    CosineResult r = cosine_similarity(s, s, cfg);
    CHECK(r.score == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("no peaks within tolerance scores zero") {
  MatchConfig cfg;
  SpectrumRecord a = peaks_of({{100.0, 1.0}, {200.0, 1.0}});
  SpectrumRecord b = peaks_of({{150.0, 1.0}, {250.0, 1.0}});
  CosineResult r = cosine_similarity(a, b, cfg);
  CHECK(r.score == 0.0);
  CHECK(r.matches.empty());
}

TEST_CASE("one-to-one constraint picks the best pairing") {
  MatchConfig cfg;  // tau 0.05
  SpectrumRecord a = peaks_of({{100.00, 1.0}});
  SpectrumRecord b = peaks_of({{100.02, 0.6}, {100.04, 0.8}});
  CosineResult r = cosine_similarity(a, b, cfg);
  CHECK(r.score == doctest::Approx(0.8).epsilon(1e-12));
  REQUIRE(r.matches.size() == 1);
  CHECK(r.matches[0].first == 0);
  CHECK(r.matches[0].second == 1);
}

TEST_CASE("oracle equivalence on random small spectra") {
  std::mt19937_64 rng(223);
  for (int i = 0; i < 220; ++i) {
    SpectrumRecord a = oracles::random_spectrum(rng, 6, false);
    SpectrumRecord b = oracles::random_spectrum(rng, 6, false);
    // overlap some m/z values so candidate graphs are nontrivial
    for (std::size_t k = 0; k < b.peaks.size() && k < a.peaks.size(); ++k)
      if (oracles::u01(rng) < 0.5) b.peaks[k].mz = a.peaks[k].mz + (oracles::u01(rng) - 0.5) * 0.2;
    canonicalize_peaks(b);
    MatchConfig cfg;
    cfg.tau = 0.02 + 0.1 * oracles::u01(rng);
    double fast = cosine_similarity(a, b, cfg).score;
    double slow = oracles::brute_force_assignment(a, b, cfg.tau);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
  }
}

TEST_CASE("symmetry") {
  std::mt19937_64 rng(227);
  MatchConfig cfg;
  for (int i = 0; i < 60; ++i) {
    SpectrumRecord a = oracles::random_spectrum(rng, 10);
    SpectrumRecord b = oracles::random_spectrum(rng, 10);
    double ab = cosine_similarity(a, b, cfg).score;
    double ba = cosine_similarity(b, a, cfg).score;
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("scale invariance") {
  std::mt19937_64 rng(229);
  MatchConfig cfg;
  for (int i = 0; i < 30; ++i) {
    SpectrumRecord a = oracles::random_spectrum(rng, 8);
    SpectrumRecord b = oracles::random_spectrum(rng, 8);
    for (std::size_t k = 0; k < b.peaks.size() && k < a.peaks.size(); ++k)
      b.peaks[k].mz = a.peaks[k].mz;
    canonicalize_peaks(b);
    double base = cosine_similarity(a, b, cfg).score;
    SpectrumRecord scaled = b;
    for (auto& p : scaled.peaks) p.height *= 37.5;
    double after = cosine_similarity(a, scaled, cfg).score;
    CHECK(after == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("exact alignment reduces to the classical cosine") {
  // distinct m/z per spectrum, shared support, exact coincidence
  SpectrumRecord a = peaks_of({{100.0, 0.5}, {150.0, 1.0}, {200.0, 0.25}});
  SpectrumRecord b = peaks_of({{100.0, 0.3}, {150.0, 0.6}, {250.0, 0.9}});
  MatchConfig cfg;
  double na = std::sqrt(0.5 * 0.5 + 1.0 + 0.25 * 0.25);
  double nb = std::sqrt(0.3 * 0.3 + 0.6 * 0.6 + 0.9 * 0.9);
  double classical = (0.5 * 0.3 + 1.0 * 0.6) / (na * nb);
  CHECK(cosine_similarity(a, b, cfg).score == doctest::Approx(classical).epsilon(1e-12));
}

TEST_CASE("error cases") {
  MatchConfig cfg;
  SpectrumRecord ok = peaks_of({{100.0, 1.0}});
  SpectrumRecord empty;
  CHECK_THROWS_AS(cosine_similarity(ok, empty, cfg), error);
  CHECK_THROWS_AS(cosine_similarity(empty, ok, cfg), error);
  SpectrumRecord zeros = peaks_of({{100.0, 0.0}});
  CHECK_THROWS_AS(cosine_similarity(ok, zeros, cfg), error);
  MatchConfig bad;
  bad.tau = 0.0;
  CHECK_THROWS_AS(cosine_similarity(ok, ok, bad), error);
}

TEST_CASE("chained near-diagonal component needs a real assignment") {
  // peaks 0.03 apart chain into one component; greedy pairing is suboptimal
  MatchConfig cfg;  // tau 0.05
  SpectrumRecord a = peaks_of({{100.00, 1.0}, {100.03, 0.1}});
  SpectrumRecord b = peaks_of({{100.02, 0.1}, {100.05, 1.0}});
  // best: (100.00 -> 100.02) * (1*0.1) + (100.03 -> 100.05) * (0.1*1)
  // vs greedy-by-weight illegal double use of the big peaks
  double expect = oracles::brute_force_assignment(a, b, cfg.tau);
  CHECK(cosine_similarity(a, b, cfg).score == doctest::Approx(expect).epsilon(1e-12));
}
