#pragma once

#include <vector>

#include "msforma/spectra.hpp"

namespace msforma {

// Chemical feasibility window applied to candidate formulas.
struct FeasibilityConstraints {
  double rdbe_min = -0.5;
  double rdbe_max = 40.0;
  double max_h_to_c = 6.0;  // applies only when the formula contains carbon
};

struct DecompConfig {
  double epsilon_ppm = 10.0;
  FeasibilityConstraints constraints;
};

// Ring-and-double-bond equivalents:
//   C - (H + F + Cl + Br + I)/2 + (N + P)/2 + 1
// Half-integer values occur for ions.
double rdbe(const Formula& f);

bool feasible(const Formula& f, const FeasibilityConstraints& c);

// Absolute tolerance for a target mass: the ppm window with a 1e-4 Da floor
// so that windows never vanish at low mass.
double mass_tolerance(double mz, double epsilon_ppm);

// All subformulas f <= precursor with |mass(f) - mz| within tolerance and
// feasible under the constraints, sorted by absolute mass error then
// lexicographically. Depth-first search over elements in decreasing-mass
// order with interval pruning; hydrogen is resolved in closed form.
std::vector<Formula> decompose(double mz, const Formula& precursor, const DecompConfig& cfg);

// Replaces each peak's annotation list with its decomposition against the
// record's precursor formula. Peaks whose list comes back empty are kept.
SpectrumRecord annotate_spectrum(const SpectrumRecord& r, const DecompConfig& cfg);

}  // namespace msforma
