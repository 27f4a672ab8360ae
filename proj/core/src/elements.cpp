#include "msforma/elements.hpp"

#include <algorithm>
#include <cctype>

namespace msforma {

ElementTable::ElementTable()
    : entries_{{{"C", 12.0},
                {"H", 1.007825},
                {"N", 14.003074},
                {"O", 15.994915},
                {"P", 30.973762},
                {"S", 31.972071},
                {"F", 18.998403},
                {"Cl", 34.968853},
                {"Br", 78.918338},
                {"I", 126.904473}}} {}

const ElementTable& ElementTable::instance() {
  static const ElementTable table;
  return table;
}

int ElementTable::find(std::string_view symbol) const {
  for (std::size_t i = 0; i < kElementCount; ++i)
    if (symbol == entries_[i].symbol) return static_cast<int>(i);
  return -1;
}

std::string ElementTable::to_tsv() const {
  std::string out;
  for (const auto& e : entries_) {
    out += e.symbol;
    out += '\t';
    out += format_fixed(e.monoisotopic_mass, 6);
    out += '\n';
  }
  return out;
}

bool Formula::empty() const {
  return std::all_of(counts.begin(), counts.end(), [](std::uint8_t c) { return c == 0; });
}

int Formula::total_atoms() const {
  int n = 0;
  for (auto c : counts) n += c;
  return n;
}

bool subformula(const Formula& f, const Formula& g) {
  for (std::size_t i = 0; i < kElementCount; ++i)
    if (f.counts[i] > g.counts[i]) return false;
  return true;
}

Formula operator+(const Formula& f, const Formula& g) {
  Formula r;
  for (std::size_t i = 0; i < kElementCount; ++i) {
    int s = f.counts[i] + g.counts[i];
    if (s > 255)
      fail("formula count overflow for element " +
           std::string(ElementTable::instance().entries()[i].symbol));
    r.counts[i] = static_cast<std::uint8_t>(s);
  }
  return r;
}

Formula operator-(const Formula& f, const Formula& g) {
  Formula r;
  for (std::size_t i = 0; i < kElementCount; ++i) {
    if (g.counts[i] > f.counts[i])
      fail("formula subtraction underflow for element " +
           std::string(ElementTable::instance().entries()[i].symbol));
    r.counts[i] = static_cast<std::uint8_t>(f.counts[i] - g.counts[i]);
  }
  return r;
}

Formula parse_formula(std::string_view text) {
  if (text.empty()) fail("empty formula string");
  const auto& table = ElementTable::instance();
  Formula f;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isupper(static_cast<unsigned char>(text[i])))
      fail("malformed formula token at '" + std::string(text.substr(i)) + "'");
    std::size_t len = 1;
    if (i + 1 < text.size() && std::islower(static_cast<unsigned char>(text[i + 1]))) len = 2;
    // A lowercase letter can only be the tail of a two-letter symbol, so a
    // failed two-letter lookup is an unsupported element, not a split token.
    int idx = table.find(text.substr(i, len));
    if (idx < 0) fail("unsupported element symbol '" + std::string(text.substr(i, len)) + "'");
    i += len;
    long mult = 1;
    if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      std::size_t start = i;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      mult = parse_long(text.substr(start, i - start), "formula multiplicity");
      if (mult == 0) fail("zero multiplicity in formula '" + std::string(text) + "'");
    }
    long total = f.counts[static_cast<std::size_t>(idx)] + mult;
    if (total > 255) fail("formula count exceeds 255 in '" + std::string(text) + "'");
    f.counts[static_cast<std::size_t>(idx)] = static_cast<std::uint8_t>(total);
  }
  return f;
}

std::string format_formula(const Formula& f) {
  // Hill order: C first, H second, remaining symbols alphabetically.
  static constexpr Element order[] = {Element::C,  Element::H, Element::Br, Element::Cl,
                                      Element::F,  Element::I, Element::N,  Element::O,
                                      Element::P,  Element::S};
  const auto& table = ElementTable::instance();
  std::string out;
  for (Element e : order) {
    int c = f[e];
    if (c == 0) continue;
    out += table.symbol(e);
    if (c > 1) out += std::to_string(c);
  }
  return out;
}

double monoisotopic_mass(const Formula& f, const ElementTable& table) {
  double m = 0.0;
  for (std::size_t i = 0; i < kElementCount; ++i)
    m += f.counts[i] * table.entries()[i].monoisotopic_mass;
  return m;
}

std::uint64_t formula_hash(const Formula& f) {
  return fnv1a64(f.counts.data(), f.counts.size());
}

}  // namespace msforma
