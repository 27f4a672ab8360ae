#include "msforma/search.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "msforma/common.hpp"

namespace msforma {

const LibraryEntry* SpectralLibrary::find(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

SpectrumRecord predicted_to_record(const PredictedSpectrum& p, const std::string& id,
                                   const Covariates& c, const std::string& smiles) {
  SpectrumRecord rec;
  rec.id = id;
  rec.smiles = smiles;
  rec.precursor = p.precursor;
  rec.covariates = c;
  for (const auto& e : p.entries) {
    // the empty-fragment candidate sits at m/z 0 and has no physical peak
    if (!(e.mz > 0.0)) continue;
    rec.peaks.push_back({e.mz, e.probability});
    rec.annotations.push_back({e.formula + adduct_formula(e.adduct)});
  }
  canonicalize_peaks(rec);
  return rec;
}

LibraryBuildResult build_library(const std::vector<StructureRow>& structures,
                                 const Vocabulary& v, const ModelWeights& w, unsigned threads,
                                 std::uint64_t created_unix) {
  if (structures.empty()) fail("build_library: empty structure list");

  LibraryBuildResult result;
  result.library.model_fingerprint = w.content_fingerprint();
  result.library.vocab_fingerprint = w.vocab_fingerprint;
  result.library.created_unix = created_unix;

  std::vector<LibraryEntry> slots(structures.size());
  std::vector<std::string> errors(structures.size());
  parallel_for(structures.size(), threads, [&](std::size_t i) {
    const StructureRow& row = structures[i];
    try {
      MolGraph g = parse_smiles(row.smiles);
      LibraryEntry e;
      e.id = row.id;
      e.smiles = row.smiles;
      e.covariates = row.covariates;
      e.spectrum = predict(g, row.covariates, v, w);
      e.record = predicted_to_record(e.spectrum, e.id, e.covariates, e.smiles);
      slots[i] = std::move(e);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });

  std::set<std::string> ids;
  for (std::size_t i = 0; i < structures.size(); ++i) {
    if (!errors[i].empty()) {
      result.failures.emplace_back(i, errors[i]);
      continue;
    }
    if (!ids.insert(slots[i].id).second)
      fail("build_library: duplicate structure id '" + slots[i].id + "'");
    result.library.entries.push_back(std::move(slots[i]));
  }
  return result;
}

// ------------------------------------------------------------ persistence --

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(std::string_view s, const char* what) {
  if (s.size() != 16) fail(std::string("library file: bad ") + what);
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else fail(std::string("library file: bad ") + what);
  }
  return v;
}

std::string ion_token(const PredictedEntry& e) {
  std::string token = e.formula.empty() ? "." : format_formula(e.formula);
  if (e.adduct == Adduct::PlusH2O) token += "+H2O";
  else if (e.adduct == Adduct::PlusN2) token += "+N2";
  if (e.isotope > 0) token += "@" + std::to_string(e.isotope);
  return token;
}

PredictedEntry parse_ion_token(std::string_view token, double mz, double probability) {
  PredictedEntry e;
  e.mz = mz;
  e.probability = probability;
  e.isotope = 0;
  auto at = token.find('@');
  if (at != std::string_view::npos) {
    e.isotope = static_cast<int>(parse_long(token.substr(at + 1), "isotope state"));
    token = token.substr(0, at);
  }
  e.adduct = Adduct::None;
  if (token.ends_with("+H2O")) {
    e.adduct = Adduct::PlusH2O;
    token.remove_suffix(4);
  } else if (token.ends_with("+N2")) {
    e.adduct = Adduct::PlusN2;
    token.remove_suffix(3);
  }
  if (token == ".") token = "";
  e.formula = token.empty() ? Formula{} : parse_formula(token);
  return e;
}

}  // namespace

std::string save_library(const SpectralLibrary& lib) {
  std::string out = "#msforma-library v1\n";
  out += "#model " + hex64(lib.model_fingerprint) + "\n";
  out += "#vocab " + hex64(lib.vocab_fingerprint) + "\n";
  out += "#created " + std::to_string(lib.created_unix) + "\n";
  out += "#entries " + std::to_string(lib.entries.size()) + "\n\n";
  for (const auto& e : lib.entries) {
    out += "Id: " + e.id + "\n";
    out += "Smiles: " + e.smiles + "\n";
    out += "PrecursorFormula: " + format_formula(e.spectrum.precursor) + "\n";
    out += "PrecursorType: " + std::string(precursor_type_name(e.covariates.precursor_type)) + "\n";
    out += "NCE: " + format_double_exact(e.covariates.collision_energy) + "\n";
    out += "Instrument: " + std::string(instrument_name(e.covariates.instrument)) + "\n";
    out += "HasIsotopes: " + std::string(e.covariates.has_isotopic_peaks ? "true" : "false") + "\n";
    out += "Num Peaks: " + std::to_string(e.spectrum.entries.size()) + "\n";
    for (const auto& pe : e.spectrum.entries) {
      out += format_double_exact(pe.mz) + " " + format_double_exact(pe.probability) + " " +
             ion_token(pe) + "\n";
    }
    out += '\n';
  }
  return out;
}

SpectralLibrary load_library(std::string_view text) {
  auto lines = split(text, '\n');
  std::size_t i = 0;
  auto next_line = [&]() -> std::string_view {
    if (i >= lines.size()) fail("library file: unexpected end of file");
    return trim(lines[i++]);
  };

  if (next_line() != "#msforma-library v1")
    fail("library file: unrecognized header (expected #msforma-library v1)");
  SpectralLibrary lib;
  std::size_t declared_entries = 0;
  for (int h = 0; h < 4; ++h) {
    auto line = next_line();
    if (line.starts_with("#model ")) lib.model_fingerprint = parse_hex64(line.substr(7), "model fingerprint");
    else if (line.starts_with("#vocab ")) lib.vocab_fingerprint = parse_hex64(line.substr(7), "vocab fingerprint");
    else if (line.starts_with("#created ")) lib.created_unix = static_cast<std::uint64_t>(parse_long(line.substr(9), "created timestamp"));
    else if (line.starts_with("#entries ")) declared_entries = static_cast<std::size_t>(parse_long(line.substr(9), "entry count"));
    else fail("library file: unexpected header line '" + std::string(line) + "'");
  }

  std::set<std::string> ids;
  while (true) {
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    if (i >= lines.size()) break;

    LibraryEntry e;
    Formula precursor;
    long num_peaks = -1;
    while (i < lines.size()) {
      auto line = trim(lines[i]);
      if (line.empty()) fail("library file: blank line inside entry header");
      auto colon = line.find(':');
      if (colon == std::string_view::npos) fail("library file: malformed header line");
      auto key = trim(line.substr(0, colon));
      auto value = trim(line.substr(colon + 1));
      ++i;
      if (key == "Id") e.id = std::string(value);
      else if (key == "Smiles") e.smiles = std::string(value);
      else if (key == "PrecursorFormula") precursor = parse_formula(value);
      else if (key == "PrecursorType") e.covariates.precursor_type = parse_precursor_type(value);
      else if (key == "NCE") e.covariates.collision_energy = parse_double(value, "NCE");
      else if (key == "Instrument") e.covariates.instrument = parse_instrument(value);
      else if (key == "HasIsotopes") e.covariates.has_isotopic_peaks = (value == "true");
      else if (key == "Num Peaks") {
        num_peaks = parse_long(value, "Num Peaks");
        break;
      } else fail("library file: unrecognized key '" + std::string(key) + "'");
    }
    if (num_peaks < 0) fail("library file: entry without Num Peaks");
    e.spectrum.precursor = precursor;
    for (long p = 0; p < num_peaks; ++p) {
      if (i >= lines.size() || trim(lines[i]).empty())
        fail("library file: entry '" + e.id + "' peak count mismatch");
      auto fields = split_ws(trim(lines[i]));
      ++i;
      if (fields.size() != 3) fail("library file: malformed peak line in entry '" + e.id + "'");
      e.spectrum.entries.push_back(parse_ion_token(fields[2],
                                                   parse_double(fields[0], "library m/z"),
                                                   parse_double(fields[1], "library probability")));
    }
    if (!ids.insert(e.id).second) fail("library file: duplicate entry id '" + e.id + "'");
    e.record = predicted_to_record(e.spectrum, e.id, e.covariates, e.smiles);
    lib.entries.push_back(std::move(e));
  }
  if (lib.entries.size() != declared_entries)
    fail("library file: declared " + std::to_string(declared_entries) + " entries, found " +
         std::to_string(lib.entries.size()));
  return lib;
}

// ---------------------------------------------------------------- search ---

std::vector<SearchHit> search(const SpectrumRecord& query, const SpectralLibrary& lib,
                              const SearchConfig& cfg, std::size_t top_n) {
  if (lib.entries.empty()) fail("search: empty library");
  if (query.peaks.empty()) fail("search: empty query spectrum");

  auto query_mz = query.effective_precursor_mz();
  std::vector<SearchHit> hits;
  for (const auto& e : lib.entries) {
    if (query_mz) {
      double lib_mz = monoisotopic_mass(e.spectrum.precursor);
      if (std::fabs(lib_mz - *query_mz) > cfg.precursor_window_ppm * 1e-6 * (*query_mz)) continue;
    }
    CosineResult r = cosine_similarity(query, e.record, cfg.match);
    hits.push_back({e.id, r.score, static_cast<int>(r.matches.size())});
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (hits.size() > top_n) hits.resize(top_n);
  return hits;
}

RetrievalMetrics evaluate_retrieval(const std::vector<std::pair<std::string, SpectrumRecord>>& queries,
                                    const SpectralLibrary& lib, const SearchConfig& cfg,
                                    unsigned threads) {
  if (queries.empty()) fail("evaluate_retrieval: no queries");
  for (const auto& [true_id, q] : queries)
    if (!lib.find(true_id)) fail("evaluate_retrieval: true id '" + true_id + "' missing from library");

  struct PerQuery {
    int rank = -1;  // 0-based rank of the true id, or -1
    double true_cosine = 0.0;
  };
  std::vector<PerQuery> per(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t qi) {
    const auto& [true_id, q] = queries[qi];
    auto hits = search(q, lib, cfg, 10);
    for (std::size_t r = 0; r < hits.size(); ++r)
      if (hits[r].id == true_id) {
        per[qi].rank = static_cast<int>(r);
        break;
      }
    per[qi].true_cosine = cosine_similarity(q, lib.find(true_id)->record, cfg.match).score;
  });

  RetrievalMetrics m;
  const double n = static_cast<double>(queries.size());
  for (const auto& p : per) {
    if (p.rank >= 0 && p.rank < 1) m.recall_at_1 += 1.0;
    if (p.rank >= 0 && p.rank < 5) m.recall_at_5 += 1.0;
    if (p.rank >= 0 && p.rank < 10) m.recall_at_10 += 1.0;
    m.mean_cosine += p.true_cosine;
    if (p.true_cosine > 0.7) m.frac_above_0_7 += 1.0;
  }
  m.recall_at_1 /= n;
  m.recall_at_5 /= n;
  m.recall_at_10 /= n;
  m.mean_cosine /= n;
  m.frac_above_0_7 /= n;
  return m;
}

}  // namespace msforma
