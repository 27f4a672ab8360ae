#include <random>

#include "doctest.h"
#include "msforma/molgraph.hpp"
#include "support/oracles.hpp"

using namespace msforma;

TEST_CASE("parse_smiles water and implicit hydrogens") {
  MolGraph g = parse_smiles("O");
  REQUIRE(g.atoms.size() == 1);
  CHECK(g.atoms[0].element == Element::O);
  CHECK(g.atoms[0].hydrogens == 2);
  CHECK(g.bonds.empty());
  CHECK(format_formula(molecular_formula(g)) == "H2O");
}

TEST_CASE("parse_smiles benzene") {
  MolGraph g = parse_smiles("c1ccccc1");
  REQUIRE(g.atoms.size() == 6);
  REQUIRE(g.bonds.size() == 6);
  int h = 0;
  for (const auto& a : g.atoms) {
    CHECK(a.aromatic);
    h += a.hydrogens;
  }
  CHECK(h == 6);
  for (const auto& b : g.bonds) CHECK(b.order == BondOrder::Aromatic);
  CHECK(format_formula(molecular_formula(g)) == "C6H6");
}

TEST_CASE("parse_smiles valence filling") {
  CHECK(format_formula(molecular_formula(parse_smiles("CC(=O)O"))) == "C2H4O2");
  CHECK(format_formula(molecular_formula(parse_smiles("C#N"))) == "CHN");
  CHECK(format_formula(molecular_formula(parse_smiles("CS(=O)(=O)C"))) == "C2H6O2S");
  CHECK(format_formula(molecular_formula(parse_smiles("OP(=O)(O)O"))) == "H3O4P");
  CHECK(format_formula(molecular_formula(parse_smiles("FC(F)(F)F"))) == "CF4");
  CHECK(format_formula(molecular_formula(parse_smiles("[NH4+]"))) == "H4N");
  CHECK(format_formula(molecular_formula(parse_smiles("CC[O-]"))) == "C2H5O");
}

TEST_CASE("parse_smiles caffeine formula") {
  MolGraph g = parse_smiles("Cn1cnc2c1c(=O)n(C)c(=O)n2C");
  CHECK(format_formula(molecular_formula(g)) == "C8H10N4O2");
}

TEST_CASE("parse_smiles aromatic heterocycles") {
  CHECK(format_formula(molecular_formula(parse_smiles("c1ccncc1"))) == "C5H5N");   // pyridine
  CHECK(format_formula(molecular_formula(parse_smiles("c1cc[nH]c1"))) == "C4H5N");  // pyrrole
  CHECK(format_formula(molecular_formula(parse_smiles("c1ccoc1"))) == "C4H4O");   // furan
  CHECK(format_formula(molecular_formula(parse_smiles("c1ccsc1"))) == "C4H4S");   // thiophene
  CHECK(format_formula(molecular_formula(parse_smiles("c1ccc2ccccc2c1"))) == "C10H8");  // naphthalene
}

TEST_CASE("parse_smiles errors") {
  CHECK_THROWS_AS(parse_smiles("C("), error);
  CHECK_THROWS_AS(parse_smiles("C)C"), error);
  CHECK_THROWS_AS(parse_smiles("C1CC"), error);
  CHECK_THROWS_AS(parse_smiles("CC.O"), error);
  CHECK_THROWS_AS(parse_smiles("C[Si]C"), error);
  CHECK_THROWS_AS(parse_smiles("NaCl"), error);
  CHECK_THROWS_AS(parse_smiles("C(C)(C)(C)(C)C"), error);  // five bonds on carbon
  CHECK_THROWS_AS(parse_smiles(""), error);
  CHECK_THROWS_AS(parse_smiles("C="), error);
  CHECK_THROWS_AS(parse_smiles("C%1C"), error);
  CHECK_THROWS_AS(parse_smiles("C/C=C/C"), error);
  CHECK_THROWS_AS(parse_smiles("C[C@H](N)O"), error);
}

TEST_CASE("ring closures") {
  MolGraph g = parse_smiles("C1CCCCC1");  // cyclohexane
  CHECK(g.bonds.size() == 6);
  CHECK(format_formula(molecular_formula(g)) == "C6H12");
  // %nn closure
  MolGraph g2 = parse_smiles("C%10CCCCC%10");
  CHECK(g2.bonds.size() == 6);
  // explicit ring bond order on one side
  MolGraph g3 = parse_smiles("C=1CCCCC=1");
  bool has_double = false;
  for (const auto& b : g3.bonds) has_double |= b.order == BondOrder::Double;
  CHECK(has_double);
  CHECK_THROWS_AS(parse_smiles("C=1CCCCC#1"), error);
  CHECK_THROWS_AS(parse_smiles("C11"), error);
  CHECK_THROWS_AS(parse_smiles("C1C1"), error);  // duplicate bond
}

TEST_CASE("precursor_formula") {
  MolGraph caffeine = parse_smiles("Cn1cnc2c1c(=O)n(C)c(=O)n2C");
  CHECK(format_formula(precursor_formula(caffeine, PrecursorType::MPlusH)) == "C8H11N4O2");
  MolGraph water = parse_smiles("O");
  CHECK(format_formula(precursor_formula(water, PrecursorType::MMinusH)) == "HO");
  MolGraph ccl4 = parse_smiles("ClC(Cl)(Cl)Cl");
  CHECK_THROWS_AS(precursor_formula(ccl4, PrecursorType::MMinusH), error);
}

TEST_CASE("formula conservation across equivalent SMILES") {
  const std::pair<const char*, const char*> pairs[] = {
      {"CCO", "OCC"},
      {"CC(=O)O", "OC(C)=O"},
      {"c1ccccc1", "c1ccccc1"},
      {"CC(C)C", "C(C)(C)C"},
      {"N#Cc1ccccc1", "c1ccccc1C#N"},
  };
  for (const auto& [a, b] : pairs)
    CHECK(molecular_formula(parse_smiles(a)) == molecular_formula(parse_smiles(b)));
}

TEST_CASE("heavy atom plus hydrogen count equals formula total") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    MolGraph g = parse_smiles(oracles::random_smiles(rng));
    Formula f = molecular_formula(g);
    int hydrogens = 0;
    int heavy_h_atoms = 0;
    for (const auto& a : g.atoms) {
      hydrogens += a.hydrogens;
      if (a.element == Element::H) ++heavy_h_atoms;
    }
    CHECK(f.total_atoms() == static_cast<int>(g.atoms.size()) + hydrogens);
    CHECK(f[Element::H] == hydrogens + heavy_h_atoms);
  }
}

TEST_CASE("featurize determinism and block separation") {
  FeatureConfig cfg;
  Covariates c;
  MolGraph methane = parse_smiles("C");

  FeatureVector a = featurize(methane, c, cfg);
  FeatureVector b = featurize(methane, c, cfg);
  CHECK(a.values == b.values);
  CHECK(a.values.size() == cfg.feature_length());

  Covariates hot = c;
  hot.collision_energy = 200.0;
  FeatureVector d = featurize(methane, hot, cfg);
  std::size_t nbits = static_cast<std::size_t>(cfg.fingerprint_bits);
  for (std::size_t i = 0; i < nbits; ++i) CHECK(a.values[i] == d.values[i]);
  CHECK(a.values[nbits] != d.values[nbits]);
}

TEST_CASE("featurize distinguishes benzene from cyclohexane") {
  FeatureConfig cfg;
  Covariates c;
  FeatureVector benzene = featurize(parse_smiles("c1ccccc1"), c, cfg);
  FeatureVector cyclohexane = featurize(parse_smiles("C1CCCCC1"), c, cfg);
  bool differs = false;
  for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.fingerprint_bits); ++i)
    differs |= benzene.values[i] != cyclohexane.values[i];
  CHECK(differs);
}

TEST_CASE("featurize invariant under atom reordering") {
  FeatureConfig cfg;
  Covariates c;
  FeatureVector a = featurize(parse_smiles("CC(=O)O"), c, cfg);
  FeatureVector b = featurize(parse_smiles("OC(C)=O"), c, cfg);
  CHECK(a.values == b.values);
}

TEST_CASE("featurize length constant across inputs") {
  FeatureConfig cfg;
  cfg.fingerprint_bits = 512;
  Covariates c;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    FeatureVector fv = featurize(parse_smiles(oracles::random_smiles(rng)), c, cfg);
    CHECK(fv.values.size() == cfg.feature_length());
  }
}

TEST_CASE("covariate validation") {
  Covariates c;
  c.collision_energy = 250.0;
  CHECK_THROWS_AS(c.validate(), error);
  CHECK_THROWS_AS(parse_precursor_type("[M+2H]2+"), error);
  CHECK_THROWS_AS(parse_instrument("quadrupole"), error);
}

TEST_CASE("read_structure_table") {
  auto rows = read_structure_table(
      "# comment\n"
      "CCO\t35\t[M+H]+\torbitrap_elite\ttrue\tethanol\n"
      "CC\n"
      "CCN\t\t[M-H]-\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].id == "ethanol");
  CHECK(rows[0].covariates.instrument == Instrument::OrbitrapElite);
  CHECK(rows[0].covariates.has_isotopic_peaks);
  CHECK(rows[1].id == "s1");
  CHECK(rows[1].covariates.collision_energy == 35.0);
  CHECK(rows[2].covariates.precursor_type == PrecursorType::MMinusH);
  CHECK(rows[2].covariates.collision_energy == 35.0);
  CHECK_THROWS_AS(read_structure_table("CCO\t999\n"), error);
}
