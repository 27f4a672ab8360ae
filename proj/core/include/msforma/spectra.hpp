#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msforma/molgraph.hpp"

namespace msforma {

struct Peak {
  double mz;      // Da, > 0
  double height;  // >= 0
};

// One spectrum with its metadata. Peaks are kept sorted strictly ascending
// by m/z; duplicate m/z values are merged at construction. The annotations
// vector is either empty or holds one candidate-formula list per peak.
struct SpectrumRecord {
  std::string id;
  std::string smiles;  // optional structure; empty when unknown
  std::optional<Formula> precursor;
  std::optional<double> precursor_mz;  // from PEPMASS, or derived from precursor
  Covariates covariates;
  std::vector<Peak> peaks;
  std::vector<std::vector<Formula>> annotations;  // empty, or one list per peak

  bool has_annotations() const;
  // Precursor m/z: explicit value if present, else the precursor ion mass.
  std::optional<double> effective_precursor_mz() const;
};

// Sorts by m/z, merges exactly-equal m/z peaks (heights summed, annotation
// lists unioned), and validates basic peak invariants.
void canonicalize_peaks(SpectrumRecord& r);

// MSP dialect: blocks of "Key: Value" lines (Name, Smiles, PrecursorFormula,
// PrecursorType, NCE, Instrument, HasIsotopes), a "Num Peaks: n" line, then
// n lines of "mz height [formula[/formula...]]", blank-line separated.
std::vector<SpectrumRecord> parse_msp(std::string_view text);
std::string write_msp(const std::vector<SpectrumRecord>& records);

// MGF subset: BEGIN IONS / END IONS with TITLE, PEPMASS and CHARGE (1+/1-).
std::vector<SpectrumRecord> parse_mgf(std::string_view text);
std::string write_mgf(const std::vector<SpectrumRecord>& records);

// Scales heights to sum to one. Errors on empty or all-zero spectra.
SpectrumRecord normalize(const SpectrumRecord& r);

bool is_normalized(const SpectrumRecord& r, double tol = 1e-9);

}  // namespace msforma
