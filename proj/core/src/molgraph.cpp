#include "msforma/molgraph.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace msforma {

double bond_order_value(BondOrder b) {
  switch (b) {
    case BondOrder::Single: return 1.0;
    case BondOrder::Aromatic: return 1.5;
    case BondOrder::Double: return 2.0;
    case BondOrder::Triple: return 3.0;
  }
  return 0.0;
}

std::size_t MolGraph::degree(std::size_t atom) const {
  std::size_t d = 0;
  for (const auto& b : bonds)
    if (b.i == atom || b.j == atom) ++d;
  return d;
}

PrecursorType parse_precursor_type(std::string_view text) {
  if (text == "[M+H]+") return PrecursorType::MPlusH;
  if (text == "[M-H]-") return PrecursorType::MMinusH;
  fail("unsupported precursor type '" + std::string(text) + "' (expected [M+H]+ or [M-H]-)");
}

std::string_view precursor_type_name(PrecursorType t) {
  return t == PrecursorType::MPlusH ? "[M+H]+" : "[M-H]-";
}

Instrument parse_instrument(std::string_view text) {
  if (text == "orbitrap_fusion_lumos") return Instrument::OrbitrapFusionLumos;
  if (text == "orbitrap_elite") return Instrument::OrbitrapElite;
  if (text == "orbitrap_velos") return Instrument::OrbitrapVelos;
  fail("unknown instrument model '" + std::string(text) + "'");
}

std::string_view instrument_name(Instrument m) {
  switch (m) {
    case Instrument::OrbitrapFusionLumos: return "orbitrap_fusion_lumos";
    case Instrument::OrbitrapElite: return "orbitrap_elite";
    case Instrument::OrbitrapVelos: return "orbitrap_velos";
  }
  return "orbitrap_fusion_lumos";
}

void Covariates::validate() const {
  if (!(collision_energy >= 0.0 && collision_energy <= 200.0))
    fail("collision energy " + format_sig9(collision_energy) + " outside [0, 200]");
}

namespace {

// Allowed valences per element; P and S are hypervalent-capable.
const std::vector<int>& allowed_valences(Element e) {
  static const std::vector<int> v4{4}, v3{3}, v2{2}, v1{1}, vp{3, 5}, vs{2, 4, 6};
  switch (e) {
    case Element::C: return v4;
    case Element::N: return v3;
    case Element::O: return v2;
    case Element::P: return vp;
    case Element::S: return vs;
    case Element::H: return v1;
    default: return v1;  // halogens
  }
}

bool valence_shift_applies(Element e, int charge) {
  // Cations of the lone-pair bearers gain a bond ([NH4]+, [OH3]+, ...).
  return charge > 0 &&
         (e == Element::N || e == Element::O || e == Element::P || e == Element::S);
}

struct ParseAtom {
  Atom atom;
  bool bracket = false;
};

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  MolGraph parse() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t') break;  // trailing annotation, stop here
      if (c == '(') {
        if (prev_ < 0) fail("branch with no preceding atom in SMILES");
        if (pending_ != 0) fail("bond symbol before branch in SMILES");
        branches_.push_back(prev_);
        ++pos_;
      } else if (c == ')') {
        if (branches_.empty()) fail("unbalanced branch close in SMILES");
        if (pending_ != 0) fail("dangling bond before ')' in SMILES");
        prev_ = branches_.back();
        branches_.pop_back();
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#') {
        if (prev_ < 0) fail("bond with no preceding atom in SMILES");
        if (pending_ != 0) fail("repeated bond symbol in SMILES");
        pending_ = c;
        ++pos_;
      } else if (c == '.') {
        fail("disconnected input: multi-fragment SMILES not supported");
      } else if (c == ':' || c == '/' || c == '\\' || c == '@' || c == '*') {
        fail(std::string("unsupported SMILES feature '") + c + "'");
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        ring_closure();
      } else if (c == '[') {
        add_atom(parse_bracket_atom());
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        add_atom(parse_organic_atom());
      } else {
        fail(std::string("unexpected character '") + c + "' in SMILES");
      }
    }
    if (!branches_.empty()) fail("unbalanced branch in SMILES");
    if (!rings_.empty()) fail("unbalanced ring bond in SMILES");
    if (pending_ != 0) fail("dangling bond at end of SMILES");
    if (atoms_.empty()) fail("empty SMILES string");

    assign_hydrogens();

    MolGraph g;
    g.atoms.reserve(atoms_.size());
    for (const auto& a : atoms_) g.atoms.push_back(a.atom);
    g.bonds = bonds_;
    return g;
  }

 private:
  void add_atom(ParseAtom a) {
    int idx = static_cast<int>(atoms_.size());
    atoms_.push_back(a);
    if (prev_ >= 0) make_bond(prev_, idx, take_pending());
    else if (pending_ != 0) fail("bond before first atom in SMILES");
    prev_ = idx;
  }

  char take_pending() {
    char b = pending_;
    pending_ = 0;
    return b;
  }

  void make_bond(int i, int j, char symbol) {
    if (i == j) fail("self bond in SMILES");
    auto key = std::minmax(i, j);
    if (!edge_set_.insert(key).second) fail("duplicate bond in SMILES");
    BondOrder order;
    switch (symbol) {
      case '-': order = BondOrder::Single; break;
      case '=': order = BondOrder::Double; break;
      case '#': order = BondOrder::Triple; break;
      default:
        order = (atoms_[i].atom.aromatic && atoms_[j].atom.aromatic) ? BondOrder::Aromatic
                                                                     : BondOrder::Single;
    }
    bonds_.push_back({static_cast<std::uint32_t>(key.first),
                      static_cast<std::uint32_t>(key.second), order});
  }

  void ring_closure() {
    if (prev_ < 0) fail("ring bond with no preceding atom in SMILES");
    int number;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2])))
        fail("malformed %nn ring closure in SMILES");
      number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = text_[pos_] - '0';
      ++pos_;
    }
    char bond = take_pending();
    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_[number] = {prev_, bond};
      return;
    }
    auto [other, other_bond] = it->second;
    rings_.erase(it);
    if (bond != 0 && other_bond != 0 && bond != other_bond)
      fail("conflicting ring bond symbols in SMILES");
    make_bond(other, prev_, bond != 0 ? bond : other_bond);
  }

  ParseAtom parse_organic_atom() {
    char c = text_[pos_];
    ParseAtom a;
    if (std::islower(static_cast<unsigned char>(c))) {
      int idx = ElementTable::instance().find(std::string(1, std::toupper(c)));
      if (idx < 0 || (c != 'c' && c != 'n' && c != 'o' && c != 'p' && c != 's'))
        fail(std::string("unsupported aromatic atom '") + c + "' in SMILES");
      a.atom.element = static_cast<Element>(idx);
      a.atom.aromatic = true;
      ++pos_;
      return a;
    }
    // two-letter symbols first
    if (pos_ + 1 < text_.size()) {
      std::string_view two = text_.substr(pos_, 2);
      if (two == "Cl" || two == "Br") {
        a.atom.element = two == "Cl" ? Element::Cl : Element::Br;
        pos_ += 2;
        return a;
      }
    }
    int idx = ElementTable::instance().find(text_.substr(pos_, 1));
    if (idx < 0 || c == 'H')
      fail(std::string("unsupported element '") + c + "' outside brackets in SMILES");
    a.atom.element = static_cast<Element>(idx);
    ++pos_;
    return a;
  }

  ParseAtom parse_bracket_atom() {
    std::size_t start = pos_;
    ++pos_;  // consume '['
    ParseAtom a;
    a.bracket = true;
    if (pos_ >= text_.size()) fail("unterminated bracket atom in SMILES");

    char c = text_[pos_];
    if (std::islower(static_cast<unsigned char>(c))) {
      if (c != 'c' && c != 'n' && c != 'o' && c != 'p' && c != 's')
        fail(std::string("unsupported aromatic atom '") + c + "' in SMILES");
      a.atom.element = static_cast<Element>(ElementTable::instance().find(std::string(1, std::toupper(c))));
      a.atom.aromatic = true;
      ++pos_;
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      std::size_t len = 1;
      if (pos_ + 1 < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_ + 1])) &&
          text_[pos_ + 1] != 'h')
        len = 2;
      // 'H' inside a bracket is a hydrogen count unless it is the symbol
      // itself, which we detect by position.
      std::string_view sym = text_.substr(pos_, len);
      int idx = ElementTable::instance().find(sym);
      if (idx < 0) fail("unsupported element '" + std::string(sym) + "' in SMILES bracket");
      a.atom.element = static_cast<Element>(idx);
      pos_ += len;
    } else {
      fail("malformed bracket atom in '" + std::string(text_.substr(start)) + "'");
    }

    // hydrogen count (not applicable when the atom itself is H)
    if (pos_ < text_.size() && text_[pos_] == 'H' && a.atom.element != Element::H) {
      ++pos_;
      int h = 1;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        h = text_[pos_] - '0';
        ++pos_;
      }
      a.atom.hydrogens = static_cast<std::uint8_t>(h);
    }

    // formal charge
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      char sign = text_[pos_];
      int magnitude = 0;
      while (pos_ < text_.size() && text_[pos_] == sign) {
        ++magnitude;
        ++pos_;
      }
      if (magnitude == 1 && pos_ < text_.size() &&
          std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        magnitude = text_[pos_] - '0';
        ++pos_;
      }
      a.atom.charge = static_cast<std::int8_t>(sign == '+' ? magnitude : -magnitude);
    }

    if (pos_ >= text_.size() || text_[pos_] != ']')
      fail("unterminated or unsupported bracket atom in '" +
           std::string(text_.substr(start, pos_ - start + 1)) + "'");
    ++pos_;
    return a;
  }

  void assign_hydrogens() {
    std::vector<double> order_sum(atoms_.size(), 0.0);
    std::vector<int> aromatic_base(atoms_.size(), 0);
    std::vector<bool> has_multiple(atoms_.size(), false);
    for (const auto& b : bonds_) {
      double v = bond_order_value(b.order);
      order_sum[b.i] += v;
      order_sum[b.j] += v;
      int base = b.order == BondOrder::Aromatic ? 1 : static_cast<int>(v);
      aromatic_base[b.i] += base;
      aromatic_base[b.j] += base;
      if (b.order == BondOrder::Double || b.order == BondOrder::Triple) {
        has_multiple[b.i] = true;
        has_multiple[b.j] = true;
      }
    }

    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      auto& pa = atoms_[i];
      Element e = pa.atom.element;
      const auto& valences = allowed_valences(e);
      int shift = valence_shift_applies(e, pa.atom.charge) ? pa.atom.charge : 0;
      int max_val = valences.back() + shift;

      int used;
      if (pa.atom.aromatic) {
        used = aromatic_base[i];
        // One pi bond is presumed for aromatic C (and for N/P when it fits);
        // aromatic O and S contribute their lone pair instead.
        if (!has_multiple[i] && (e == Element::C ||
                                 ((e == Element::N || e == Element::P) &&
                                  used + pa.atom.hydrogens + 1 <= max_val))) {
          used += 1;
        }
      } else {
        used = static_cast<int>(order_sum[i] + 0.5);
      }

      if (pa.bracket) {
        if (used + pa.atom.hydrogens > max_val)
          fail("valence violation on atom " + std::to_string(i) + " (" +
               ElementTable::instance().symbol(e) + ")");
        continue;  // bracket hydrogens are authoritative
      }
      int fill = -1;
      for (int v : valences) {
        if (v + shift >= used) {
          fill = v + shift - used;
          break;
        }
      }
      if (fill < 0)
        fail("valence violation on atom " + std::to_string(i) + " (" +
             ElementTable::instance().symbol(e) + ")");
      pa.atom.hydrogens = static_cast<std::uint8_t>(fill);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<ParseAtom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<int> branches_;
  std::map<int, std::pair<int, char>> rings_;
  std::set<std::pair<int, int>> edge_set_;
  int prev_ = -1;
  char pending_ = 0;
};

}  // namespace

MolGraph parse_smiles(std::string_view text) {
  if (trim(text).empty()) fail("empty SMILES string");
  return SmilesParser(trim(text)).parse();
}

Formula molecular_formula(const MolGraph& g) {
  Formula f;
  Formula one_h;
  one_h[Element::H] = 1;
  for (const auto& a : g.atoms) {
    Formula atom;
    atom[a.element] = 1;
    f = f + atom;
    for (int h = 0; h < a.hydrogens; ++h) f = f + one_h;
  }
  return f;
}

Formula precursor_formula(const MolGraph& g, PrecursorType t) {
  Formula f = molecular_formula(g);
  Formula one_h;
  one_h[Element::H] = 1;
  if (t == PrecursorType::MPlusH) return f + one_h;
  if (f[Element::H] == 0) fail("[M-H]- requires at least one hydrogen in the molecule");
  return f - one_h;
}

namespace {

std::uint64_t hash_u64s(const std::uint64_t* xs, std::size_t n) {
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  for (std::size_t i = 0; i < n; ++i) h = splitmix64(h ^ xs[i]);
  return h;
}

int bond_code(BondOrder b) {
  return static_cast<int>(bond_order_value(b) * 2.0 + 0.5);
}

}  // namespace

std::vector<std::pair<std::uint32_t, double>> FeatureVector::nonzeros() const {
  std::vector<std::pair<std::uint32_t, double>> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] != 0.0) out.emplace_back(static_cast<std::uint32_t>(i), values[i]);
  return out;
}

FeatureVector featurize(const MolGraph& g, const Covariates& c, const FeatureConfig& cfg) {
  c.validate();
  const std::size_t n = g.atoms.size();

  // adjacency with bond codes
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (bond code, neighbor)
  std::vector<int> order2(n, 0);
  for (const auto& b : g.bonds) {
    adj[b.i].emplace_back(bond_code(b.order), static_cast<int>(b.j));
    adj[b.j].emplace_back(bond_code(b.order), static_cast<int>(b.i));
    order2[b.i] += bond_code(b.order);
    order2[b.j] += bond_code(b.order);
  }

  std::vector<std::uint64_t> env(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = g.atoms[i];
    std::uint64_t parts[6] = {static_cast<std::uint64_t>(a.element),
                              static_cast<std::uint64_t>(static_cast<std::int64_t>(a.charge) + 16),
                              a.aromatic ? 1ull : 0ull,
                              a.hydrogens,
                              adj[i].size(),
                              static_cast<std::uint64_t>(order2[i])};
    env[i] = hash_u64s(parts, 6);
  }

  FeatureVector fv;
  fv.values.assign(cfg.feature_length(), 0.0);
  auto set_bit = [&](std::uint64_t h) {
    fv.values[h % static_cast<std::uint64_t>(cfg.fingerprint_bits)] = 1.0;
  };

  for (std::uint64_t h : env) set_bit(h);
  std::vector<std::uint64_t> next(n);
  for (int r = 1; r <= cfg.fingerprint_radius; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint64_t> neigh;
      neigh.reserve(adj[i].size());
      for (auto [code, j] : adj[i])
        neigh.push_back(splitmix64(env[j] ^ static_cast<std::uint64_t>(code)));
      std::sort(neigh.begin(), neigh.end());
      std::vector<std::uint64_t> parts;
      parts.reserve(neigh.size() + 2);
      parts.push_back(static_cast<std::uint64_t>(r));
      parts.push_back(env[i]);
      parts.insert(parts.end(), neigh.begin(), neigh.end());
      next[i] = hash_u64s(parts.data(), parts.size());
    }
    env = next;
    for (std::uint64_t h : env) set_bit(h);
  }

  // covariate block
  std::size_t k = static_cast<std::size_t>(cfg.fingerprint_bits);
  fv.values[k + 0] = c.collision_energy / 200.0;
  fv.values[k + 1] = c.precursor_type == PrecursorType::MPlusH ? 1.0 : 0.0;
  fv.values[k + 2] = c.precursor_type == PrecursorType::MMinusH ? 1.0 : 0.0;
  fv.values[k + 3 + static_cast<std::size_t>(c.instrument)] = 1.0;
  fv.values[k + 3 + kInstrumentCount] = c.has_isotopic_peaks ? 1.0 : 0.0;
  return fv;
}

std::vector<StructureRow> read_structure_table(std::string_view text) {
  std::vector<StructureRow> rows;
  std::size_t row_index = 0;
  for (std::string_view raw : split(text, '\n')) {
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto cols = split(raw, '\t');
    StructureRow r;
    r.smiles = std::string(trim(cols[0]));
    if (r.smiles.empty()) fail("structure table row " + std::to_string(row_index) + ": empty SMILES");
    if (cols.size() > 1 && !trim(cols[1]).empty())
      r.covariates.collision_energy = parse_double(trim(cols[1]), "collision energy");
    if (cols.size() > 2 && !trim(cols[2]).empty())
      r.covariates.precursor_type = parse_precursor_type(trim(cols[2]));
    if (cols.size() > 3 && !trim(cols[3]).empty())
      r.covariates.instrument = parse_instrument(trim(cols[3]));
    if (cols.size() > 4 && !trim(cols[4]).empty()) {
      auto v = trim(cols[4]);
      if (v == "true" || v == "1") r.covariates.has_isotopic_peaks = true;
      else if (v == "false" || v == "0") r.covariates.has_isotopic_peaks = false;
      else fail("structure table row " + std::to_string(row_index) + ": bad has_isotopes flag");
    }
    if (cols.size() > 5 && !trim(cols[5]).empty()) r.id = std::string(trim(cols[5]));
    else r.id = "s" + std::to_string(row_index);
    r.covariates.validate();
    rows.push_back(std::move(r));
    ++row_index;
  }
  return rows;
}

}  // namespace msforma
