#include "msforma/decomp.hpp"

#include <algorithm>
#include <cmath>

namespace msforma {

double rdbe(const Formula& f) {
  double h_like = f[Element::H] + f[Element::F] + f[Element::Cl] + f[Element::Br] + f[Element::I];
  double n_like = f[Element::N] + f[Element::P];
  return f[Element::C] - h_like / 2.0 + n_like / 2.0 + 1.0;
}

bool feasible(const Formula& f, const FeasibilityConstraints& c) {
  double r = rdbe(f);
  if (r < c.rdbe_min || r > c.rdbe_max) return false;
  if (f[Element::C] > 0 && f[Element::H] > c.max_h_to_c * f[Element::C]) return false;
  return true;
}

double mass_tolerance(double mz, double epsilon_ppm) {
  return std::max(epsilon_ppm * 1e-6 * mz, 1e-4);
}

namespace {

// Search order: heaviest element first maximizes the pruning power of the
// remaining-mass bounds. Hydrogen is excluded; it is solved in closed form.
constexpr Element kSearchOrder[] = {Element::I, Element::Br, Element::Cl,
                                    Element::S, Element::P,  Element::F,
                                    Element::O, Element::N,  Element::C};
constexpr std::size_t kSearchDepth = std::size(kSearchOrder);

// Pruning bounds are padded by this much; the final window check recomputes
// the candidate mass with the canonical summation order, so pruning must
// never be tighter than that check.
constexpr double kPruneSlack = 1e-7;

struct Dfs {
  const Formula& precursor;
  const FeasibilityConstraints& constraints;
  double target;
  double tol;
  double lo, hi;  // padded pruning window
  double h_mass;
  int h_max;
  // max_tail[d] = largest mass attainable from elements at depth >= d
  // (excluding hydrogen, which is accounted for separately).
  double max_tail[kSearchDepth + 1];
  Formula current{};
  std::vector<Formula>* out;

  void run(std::size_t depth, double mass_so_far) {
    if (depth == kSearchDepth) {
      close_hydrogen(mass_so_far);
      return;
    }
    Element e = kSearchOrder[depth];
    double m = ElementTable::instance().mass(e);
    double tail = max_tail[depth + 1] + h_max * h_mass;
    int cap = precursor[e];

    // k*m <= hi - mass_so_far  and  k*m + tail >= lo - mass_so_far
    int k_hi = static_cast<int>(std::floor((hi - mass_so_far) / m));
    k_hi = std::min(k_hi, cap);
    double need = lo - mass_so_far - tail;
    int k_lo = need > 0 ? static_cast<int>(std::ceil(need / m)) : 0;
    if (k_lo > k_hi) return;

    for (int k = k_lo; k <= k_hi; ++k) {
      current[e] = static_cast<std::uint8_t>(k);
      run(depth + 1, mass_so_far + k * m);
    }
    current[e] = 0;
  }

  void close_hydrogen(double mass_so_far) {
    double lo_h = (lo - mass_so_far) / h_mass;
    double hi_h = (hi - mass_so_far) / h_mass;
    int k_lo = std::max(0, static_cast<int>(std::ceil(lo_h)));
    int k_hi = std::min(h_max, static_cast<int>(std::floor(hi_h)));
    for (int k = k_lo; k <= k_hi; ++k) {
      current[Element::H] = static_cast<std::uint8_t>(k);
      if (std::fabs(monoisotopic_mass(current) - target) > tol) continue;
      if (feasible(current, constraints)) out->push_back(current);
    }
    current[Element::H] = 0;
  }
};

}  // namespace

std::vector<Formula> decompose(double mz, const Formula& precursor, const DecompConfig& cfg) {
  if (!(mz > 0)) fail("decompose: target m/z must be positive");
  if (!(cfg.epsilon_ppm > 0)) fail("decompose: epsilon_ppm must be positive");

  double tol = mass_tolerance(mz, cfg.epsilon_ppm);
  std::vector<Formula> results;

  Dfs dfs{precursor,
          cfg.constraints,
          mz,
          tol,
          mz - tol - kPruneSlack,
          mz + tol + kPruneSlack,
          ElementTable::instance().mass(Element::H),
          precursor[Element::H],
          {},
          {},
          &results};
  dfs.max_tail[kSearchDepth] = 0.0;
  for (std::size_t d = kSearchDepth; d-- > 0;) {
    Element e = kSearchOrder[d];
    dfs.max_tail[d] =
        dfs.max_tail[d + 1] + precursor[e] * ElementTable::instance().mass(e);
  }
  dfs.run(0, 0.0);

  std::sort(results.begin(), results.end(), [&](const Formula& a, const Formula& b) {
    double ea = std::fabs(monoisotopic_mass(a) - mz);
    double eb = std::fabs(monoisotopic_mass(b) - mz);
    if (ea != eb) return ea < eb;
    return a.counts < b.counts;
  });
  return results;
}

SpectrumRecord annotate_spectrum(const SpectrumRecord& r, const DecompConfig& cfg) {
  if (!r.precursor) fail("record '" + r.id + "': cannot annotate without a precursor formula");
  SpectrumRecord out = r;
  out.annotations.assign(out.peaks.size(), {});
  for (std::size_t i = 0; i < out.peaks.size(); ++i)
    out.annotations[i] = decompose(out.peaks[i].mz, *r.precursor, cfg);
  return out;
}

}  // namespace msforma
