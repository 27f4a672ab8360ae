#include "msforma/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "msforma/common.hpp"

namespace msforma {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Bridge edges (indices into g.bonds) via one DFS.
std::vector<std::size_t> find_bridges(const MolGraph& g) {
  const std::size_t n = g.atoms.size();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);  // (neighbor, bond idx)
  for (std::size_t b = 0; b < g.bonds.size(); ++b) {
    adj[g.bonds[b].i].emplace_back(g.bonds[b].j, b);
    adj[g.bonds[b].j].emplace_back(g.bonds[b].i, b);
  }
  std::vector<int> tin(n, -1), low(n, -1);
  std::vector<std::size_t> bridges;
  int timer = 0;
  std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t v, std::size_t parent_edge) {
    tin[v] = low[v] = timer++;
    for (auto [to, edge] : adj[v]) {
      if (edge == parent_edge) continue;
      if (tin[to] >= 0) {
        low[v] = std::min(low[v], tin[to]);
      } else {
        dfs(to, edge);
        low[v] = std::min(low[v], low[to]);
        if (low[to] > tin[v]) bridges.push_back(edge);
      }
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (tin[v] < 0) dfs(v, static_cast<std::size_t>(-1));
  std::sort(bridges.begin(), bridges.end());
  return bridges;
}

// Connected components after removing the given bond indices; each component
// is returned as its atom list, ordered by smallest atom index.
std::vector<std::vector<std::size_t>> components_without(const MolGraph& g,
                                                         const std::vector<std::size_t>& removed) {
  const std::size_t n = g.atoms.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t b = 0; b < g.bonds.size(); ++b) {
    if (std::find(removed.begin(), removed.end(), b) != removed.end()) continue;
    adj[g.bonds[b].i].push_back(g.bonds[b].j);
    adj[g.bonds[b].j].push_back(g.bonds[b].i);
  }
  std::vector<char> seen(n, 0);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    std::vector<std::size_t> comp{start};
    seen[start] = 1;
    for (std::size_t head = 0; head < comp.size(); ++head)
      for (std::size_t to : adj[comp[head]])
        if (!seen[to]) {
          seen[to] = 1;
          comp.push_back(to);
        }
    comps.push_back(std::move(comp));
  }
  return comps;
}

Formula fragment_formula(const MolGraph& g, const std::vector<std::size_t>& atoms) {
  Formula f;
  Formula one_h;
  one_h[Element::H] = 1;
  for (std::size_t a : atoms) {
    Formula atom;
    atom[g.atoms[a].element] = 1;
    f = f + atom;
    for (int h = 0; h < g.atoms[a].hydrogens; ++h) f = f + one_h;
  }
  return f;
}

void enumerate_cut_sets(const std::vector<std::size_t>& bridges, int max_cuts,
                        const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> current;
  visit(current);  // zero cuts: the intact precursor
  std::function<void(std::size_t, int)> rec = [&](std::size_t start, int remaining) {
    if (remaining == 0) return;
    for (std::size_t i = start; i < bridges.size(); ++i) {
      current.push_back(bridges[i]);
      visit(current);
      rec(i + 1, remaining - 1);
      current.pop_back();
    }
  };
  rec(0, max_cuts);
}

}  // namespace

SpectrumRecord simulate_spectrum(const MolGraph& g, const Covariates& c, const SimConfig& cfg,
                                 std::string id, std::string smiles) {
  if (cfg.max_cuts < 1) fail("simulate: max_cuts must be at least 1");
  if (cfg.noise_ppm < 0) fail("simulate: noise_ppm must be nonnegative");
  c.validate();

  const Formula precursor = precursor_formula(g, c.precursor_type);
  const double precursor_mass = monoisotopic_mass(precursor);
  Formula one_h;
  one_h[Element::H] = 1;

  std::mt19937_64 rng(splitmix64(cfg.seed));
  std::vector<std::size_t> bridges = find_bridges(g);

  // ion formula -> accumulated weight
  std::map<Formula, double> weights;
  const double energy = c.collision_energy / 200.0;
  enumerate_cut_sets(bridges, cfg.max_cuts, [&](const std::vector<std::size_t>& cuts) {
    for (const auto& comp : components_without(g, cuts)) {
      Formula frag = fragment_formula(g, comp);
      Formula ion;
      if (c.precursor_type == PrecursorType::MPlusH) {
        ion = frag + one_h;
      } else {
        if (frag[Element::H] == 0) continue;  // cannot deprotonate
        ion = frag - one_h;
      }
      double ratio = monoisotopic_mass(ion) / precursor_mass;
      double u = 0.05 + 0.95 * uniform01(rng);
      weights[ion] += u * std::exp(-energy * ratio / cfg.height_temperature);
    }
  });

  SpectrumRecord rec;
  rec.id = std::move(id);
  rec.smiles = std::move(smiles);
  rec.precursor = precursor;
  rec.covariates = c;
  double total = 0.0;
  for (const auto& [ion, w] : weights) total += w;
  for (const auto& [ion, w] : weights) {
    double mz = monoisotopic_mass(ion);
    if (cfg.noise_ppm > 0) {
      double eta = 2.0 * uniform01(rng) - 1.0;
      mz *= 1.0 + cfg.noise_ppm * 1e-6 * eta;
    }
    rec.peaks.push_back({mz, w / total});
    rec.annotations.push_back({ion});
  }
  canonicalize_peaks(rec);
  return rec;
}

CorpusResult generate_corpus(const std::vector<StructureRow>& structures, const SimConfig& cfg,
                             unsigned threads) {
  if (structures.empty()) fail("generate_corpus: empty structure list");
  CorpusResult result;
  std::vector<SpectrumRecord> slots(structures.size());
  std::vector<std::string> errors(structures.size());

  parallel_for(structures.size(), threads, [&](std::size_t i) {
    const StructureRow& row = structures[i];
    try {
      MolGraph g = parse_smiles(row.smiles);
      SimConfig per = cfg;
      per.seed = splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(i) + 1));
      slots[i] = simulate_spectrum(g, row.covariates, per, row.id, row.smiles);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < structures.size(); ++i) {
    if (!errors[i].empty()) result.failures.emplace_back(i, errors[i]);
    else result.records.push_back(std::move(slots[i]));
  }
  return result;
}

}  // namespace msforma
