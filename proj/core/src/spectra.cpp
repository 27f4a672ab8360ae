#include "msforma/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msforma {

bool SpectrumRecord::has_annotations() const {
  for (const auto& a : annotations)
    if (!a.empty()) return true;
  return false;
}

std::optional<double> SpectrumRecord::effective_precursor_mz() const {
  if (precursor_mz) return precursor_mz;
  if (precursor) return monoisotopic_mass(*precursor);
  return std::nullopt;
}

void canonicalize_peaks(SpectrumRecord& r) {
  if (!r.annotations.empty() && r.annotations.size() != r.peaks.size())
    fail("record '" + r.id + "': annotation list count does not match peak count");
  const bool annotated = !r.annotations.empty();

  std::vector<std::size_t> idx(r.peaks.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return r.peaks[a].mz < r.peaks[b].mz; });

  std::vector<Peak> peaks;
  std::vector<std::vector<Formula>> anns;
  for (std::size_t k : idx) {
    const Peak& p = r.peaks[k];
    if (!(p.mz > 0)) fail("record '" + r.id + "': non-positive m/z");
    if (p.height < 0) fail("record '" + r.id + "': negative peak height");
    if (!peaks.empty() && peaks.back().mz == p.mz) {
      peaks.back().height += p.height;
      if (annotated) {
        for (const auto& f : r.annotations[k])
          if (std::find(anns.back().begin(), anns.back().end(), f) == anns.back().end())
            anns.back().push_back(f);
      }
    } else {
      peaks.push_back(p);
      if (annotated) anns.push_back(r.annotations[k]);
    }
  }
  r.peaks = std::move(peaks);
  r.annotations = annotated ? std::move(anns) : std::vector<std::vector<Formula>>{};
}

SpectrumRecord normalize(const SpectrumRecord& r) {
  double total = 0.0;
  for (const auto& p : r.peaks) total += p.height;
  if (r.peaks.empty() || total <= 0.0)
    fail("record '" + r.id + "': cannot normalize empty or all-zero spectrum");
  SpectrumRecord out = r;
  for (auto& p : out.peaks) p.height /= total;
  return out;
}

bool is_normalized(const SpectrumRecord& r, double tol) {
  double total = 0.0;
  for (const auto& p : r.peaks) total += p.height;
  return std::fabs(total - 1.0) <= tol;
}

// ---------------------------------------------------------------- MSP ----

namespace {

std::vector<Formula> parse_annotation_token(std::string_view token) {
  std::vector<Formula> out;
  for (auto part : split(token, '/')) out.push_back(parse_formula(trim(part)));
  return out;
}

bool parse_bool_token(std::string_view v, const std::string& context) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(context + ": expected true/false, got '" + std::string(v) + "'");
}

}  // namespace

std::vector<SpectrumRecord> parse_msp(std::string_view text) {
  std::vector<SpectrumRecord> records;
  auto lines = split(text, '\n');
  std::size_t i = 0;
  const std::size_t n = lines.size();

  while (true) {
    while (i < n && trim(lines[i]).empty()) ++i;
    if (i >= n) break;

    SpectrumRecord rec;
    bool have_precursor = false;
    long num_peaks = -1;

    // header lines
    while (i < n) {
      std::string_view line = trim(lines[i]);
      if (line.empty()) fail("MSP record '" + rec.id + "': blank line before Num Peaks");
      auto colon = line.find(':');
      if (colon == std::string_view::npos)
        fail("MSP: expected 'Key: Value' header, got '" + std::string(line) + "'");
      std::string_view key = trim(line.substr(0, colon));
      std::string_view value = trim(line.substr(colon + 1));
      ++i;
      if (key == "Name") {
        rec.id = std::string(value);
      } else if (key == "Smiles") {
        rec.smiles = std::string(value);
      } else if (key == "PrecursorFormula") {
        rec.precursor = parse_formula(value);
        have_precursor = true;
      } else if (key == "PrecursorType") {
        rec.covariates.precursor_type = parse_precursor_type(value);
      } else if (key == "NCE") {
        rec.covariates.collision_energy = parse_double(value, "NCE");
      } else if (key == "Instrument") {
        rec.covariates.instrument = parse_instrument(value);
      } else if (key == "HasIsotopes") {
        rec.covariates.has_isotopic_peaks =
            parse_bool_token(value, "MSP record '" + rec.id + "' HasIsotopes");
      } else if (key == "Num Peaks") {
        num_peaks = parse_long(value, "Num Peaks");
        break;
      } else {
        fail("MSP record '" + rec.id + "': unrecognized header key '" + std::string(key) + "'");
      }
    }
    if (num_peaks < 0) fail("MSP record '" + rec.id + "': missing Num Peaks");
    if (!have_precursor)
      fail("MSP record '" + rec.id + "': missing PrecursorFormula header");
    rec.covariates.validate();

    rec.annotations.assign(static_cast<std::size_t>(num_peaks), {});
    for (long p = 0; p < num_peaks; ++p) {
      if (i >= n || trim(lines[i]).empty())
        fail("MSP record '" + rec.id + "': peak count mismatch (declared " +
             std::to_string(num_peaks) + ", found " + std::to_string(p) + ")");
      auto fields = split_ws(trim(lines[i]));
      ++i;
      if (fields.size() < 2 || fields.size() > 3)
        fail("MSP record '" + rec.id + "': malformed peak line");
      Peak peak{parse_double(fields[0], "peak m/z"), parse_double(fields[1], "peak height")};
      rec.peaks.push_back(peak);
      if (fields.size() == 3)
        rec.annotations[static_cast<std::size_t>(p)] = parse_annotation_token(fields[2]);
    }
    if (i < n && !trim(lines[i]).empty())
      fail("MSP record '" + rec.id + "': peak count mismatch (more peaks than declared)");

    if (!rec.has_annotations()) rec.annotations.clear();
    canonicalize_peaks(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

std::string write_msp(const std::vector<SpectrumRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += "Name: " + rec.id + "\n";
    if (!rec.smiles.empty()) out += "Smiles: " + rec.smiles + "\n";
    if (rec.precursor) out += "PrecursorFormula: " + format_formula(*rec.precursor) + "\n";
    out += "PrecursorType: " + std::string(precursor_type_name(rec.covariates.precursor_type)) + "\n";
    out += "NCE: " + format_double_exact(rec.covariates.collision_energy) + "\n";
    out += "Instrument: " + std::string(instrument_name(rec.covariates.instrument)) + "\n";
    out += "HasIsotopes: " + std::string(rec.covariates.has_isotopic_peaks ? "true" : "false") + "\n";
    out += "Num Peaks: " + std::to_string(rec.peaks.size()) + "\n";
    for (std::size_t p = 0; p < rec.peaks.size(); ++p) {
      out += format_fixed(rec.peaks[p].mz, 6) + " " + format_sig9(rec.peaks[p].height);
      if (p < rec.annotations.size() && !rec.annotations[p].empty()) {
        out += ' ';
        for (std::size_t a = 0; a < rec.annotations[p].size(); ++a) {
          if (a) out += '/';
          out += format_formula(rec.annotations[p][a]);
        }
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- MGF ----

std::vector<SpectrumRecord> parse_mgf(std::string_view text) {
  std::vector<SpectrumRecord> records;
  auto lines = split(text, '\n');
  std::size_t i = 0;
  const std::size_t n = lines.size();

  while (true) {
    while (i < n && trim(lines[i]).empty()) ++i;
    if (i >= n) break;
    if (trim(lines[i]) != "BEGIN IONS")
      fail("MGF: expected BEGIN IONS, got '" + std::string(trim(lines[i])) + "'");
    ++i;

    SpectrumRecord rec;
    bool have_pepmass = false;
    bool terminated = false;
    while (i < n) {
      std::string_view line = trim(lines[i]);
      ++i;
      if (line == "END IONS") {
        terminated = true;
        break;
      }
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq != std::string_view::npos && !std::isdigit(static_cast<unsigned char>(line[0]))) {
        std::string_view key = line.substr(0, eq);
        std::string_view value = trim(line.substr(eq + 1));
        if (key == "TITLE") {
          rec.id = std::string(value);
        } else if (key == "PEPMASS") {
          // first field is the mass; an optional intensity column is ignored
          auto fields = split_ws(value);
          if (fields.empty()) fail("MGF: empty PEPMASS");
          rec.precursor_mz = parse_double(fields[0], "PEPMASS");
          have_pepmass = true;
        } else if (key == "CHARGE") {
          if (value == "1+" || value == "1") {
            rec.covariates.precursor_type = PrecursorType::MPlusH;
          } else if (value == "1-") {
            rec.covariates.precursor_type = PrecursorType::MMinusH;
          } else {
            fail("MGF: unsupported charge '" + std::string(value) + "' (only 1+ and 1- handled)");
          }
        } else {
          fail("MGF: unrecognized key '" + std::string(key) + "'");
        }
        continue;
      }
      auto fields = split_ws(line);
      if (fields.size() != 2) fail("MGF: malformed peak line '" + std::string(line) + "'");
      rec.peaks.push_back({parse_double(fields[0], "peak m/z"),
                           parse_double(fields[1], "peak height")});
    }
    if (!terminated) fail("MGF: unterminated block (missing END IONS)");
    if (!have_pepmass) fail("MGF record '" + rec.id + "': missing PEPMASS");
    canonicalize_peaks(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

std::string write_mgf(const std::vector<SpectrumRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += "BEGIN IONS\n";
    if (!rec.id.empty()) out += "TITLE=" + rec.id + "\n";
    auto mz = rec.effective_precursor_mz();
    if (!mz) fail("record '" + rec.id + "': no precursor m/z available for MGF output");
    out += "PEPMASS=" + format_fixed(*mz, 6) + "\n";
    out += "CHARGE=";
    out += rec.covariates.precursor_type == PrecursorType::MPlusH ? "1+" : "1-";
    out += '\n';
    for (const auto& p : rec.peaks)
      out += format_fixed(p.mz, 6) + " " + format_sig9(p.height) + "\n";
    out += "END IONS\n\n";
  }
  return out;
}

}  // namespace msforma
