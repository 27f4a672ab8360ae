#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "msforma/elements.hpp"

namespace msforma {

enum class BondOrder : std::uint8_t { Single, Aromatic, Double, Triple };

// Numeric order used in valence arithmetic: aromatic counts as 1.5.
double bond_order_value(BondOrder b);

struct Atom {
  Element element;
  std::int8_t charge = 0;
  bool aromatic = false;
  // Hydrogens attached to this atom: bracket hydrogens plus the implicit
  // hydrogens filled in by valence rules at parse time.
  std::uint8_t hydrogens = 0;
};

struct Bond {
  std::uint32_t i;
  std::uint32_t j;
  BondOrder order;
};

// Undirected simple molecular graph. Immutable after parsing.
struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;

  std::size_t degree(std::size_t atom) const;
};

enum class PrecursorType : std::uint8_t { MPlusH, MMinusH };
enum class Instrument : std::uint8_t { OrbitrapFusionLumos, OrbitrapElite, OrbitrapVelos };

inline constexpr std::size_t kInstrumentCount = 3;

PrecursorType parse_precursor_type(std::string_view text);
std::string_view precursor_type_name(PrecursorType t);
Instrument parse_instrument(std::string_view text);
std::string_view instrument_name(Instrument m);

// Experimental parameters a spectrum is conditioned on.
struct Covariates {
  double collision_energy = 35.0;  // normalized collision energy, [0, 200]
  PrecursorType precursor_type = PrecursorType::MPlusH;
  Instrument instrument = Instrument::OrbitrapFusionLumos;
  bool has_isotopic_peaks = false;

  bool operator==(const Covariates&) const = default;

  void validate() const;
};

struct FeatureConfig {
  int fingerprint_radius = 2;
  int fingerprint_bits = 2048;

  // fingerprint bits + energy + one-hot precursor type + one-hot instrument
  // + isotope flag
  std::size_t feature_length() const {
    return static_cast<std::size_t>(fingerprint_bits) + 1 + 2 + kInstrumentCount + 1;
  }

  bool operator==(const FeatureConfig&) const = default;
};

struct FeatureVector {
  std::vector<double> values;

  // Sparse view (index, value) of the nonzero entries, in index order.
  std::vector<std::pair<std::uint32_t, double>> nonzeros() const;
};

// Parses the supported SMILES subset: organic-subset and bracket atoms over
// the element alphabet, -/=/# bonds, lowercase aromatics, branches, ring
// closures (digit or %nn), formal charges and bracket H counts. Implicit
// hydrogens are filled by standard valence rules. Multi-fragment input is
// rejected.
MolGraph parse_smiles(std::string_view text);

Formula molecular_formula(const MolGraph& g);

// Ion formula: [M+H]+ adds one hydrogen, [M-H]- removes one.
Formula precursor_formula(const MolGraph& g, PrecursorType t);

// Hashed circular substructure fingerprint with the covariate block
// appended; deterministic for isomorphic inputs.
FeatureVector featurize(const MolGraph& g, const Covariates& c, const FeatureConfig& cfg);

// One structure row of a batch file: SMILES plus optional covariate columns
// (energy, precursor type, instrument, has_isotopes) and an optional id.
struct StructureRow {
  std::string smiles;
  Covariates covariates;
  std::string id;
};

// Reads a tab-separated structure table. Columns after the SMILES are
// optional and positional: nce, precursor_type, instrument, has_isotopes,
// id. Missing ids default to "s<row>". Lines starting with '#' are skipped.
std::vector<StructureRow> read_structure_table(std::string_view text);

}  // namespace msforma
