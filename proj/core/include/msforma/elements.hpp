#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "msforma/common.hpp"

namespace msforma {

// Supported element alphabet. Table order is fixed; every Formula count
// vector is aligned to it.
enum class Element : std::uint8_t { C, H, N, O, P, S, F, Cl, Br, I };

inline constexpr std::size_t kElementCount = 10;

struct ElementEntry {
  const char* symbol;
  double monoisotopic_mass;  // Da
};

// Monoisotopic masses to six decimals; carbon-12 defines the dalton.
class ElementTable {
 public:
  static const ElementTable& instance();

  const std::array<ElementEntry, kElementCount>& entries() const { return entries_; }
  double mass(Element e) const { return entries_[static_cast<std::size_t>(e)].monoisotopic_mass; }
  const char* symbol(Element e) const { return entries_[static_cast<std::size_t>(e)].symbol; }

  // Returns the element for a symbol, or -1 if unsupported.
  int find(std::string_view symbol) const;

  // Two-column audit export: symbol <TAB> mass, one element per line.
  std::string to_tsv() const;

 private:
  ElementTable();
  std::array<ElementEntry, kElementCount> entries_;
};

// Nonnegative atom-count vector over the element alphabet. Counts are capped
// at 255 per element (molecules handled here stay below 1000 Da).
struct Formula {
  std::array<std::uint8_t, kElementCount> counts{};

  std::uint8_t& operator[](Element e) { return counts[static_cast<std::size_t>(e)]; }
  std::uint8_t operator[](Element e) const { return counts[static_cast<std::size_t>(e)]; }

  bool empty() const;
  int total_atoms() const;

  bool operator==(const Formula&) const = default;
  // Lexicographic on the count vector in table order; used for deterministic
  // tie-breaking, not the chemical partial order.
  auto operator<=>(const Formula&) const = default;
};

// Elementwise partial order: f <= g iff every count of f is <= that of g.
bool subformula(const Formula& f, const Formula& g);

Formula operator+(const Formula& f, const Formula& g);  // throws on count overflow
Formula operator-(const Formula& f, const Formula& g);  // throws on underflow

Formula parse_formula(std::string_view text);
std::string format_formula(const Formula& f);

double monoisotopic_mass(const Formula& f, const ElementTable& table = ElementTable::instance());

std::uint64_t formula_hash(const Formula& f);

}  // namespace msforma
