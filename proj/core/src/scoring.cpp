#include "msforma/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace msforma {

namespace {

// Minimum-cost perfect assignment on a square matrix (potentials method,
// O(n^3)). Returns match[col] = row.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(n, -1);
  for (int j = 1; j <= n; ++j) match[j - 1] = p[j] - 1;
  return match;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

CosineResult cosine_similarity(const SpectrumRecord& s, const SpectrumRecord& t,
                               const MatchConfig& cfg) {
  if (!(cfg.tau > 0)) fail("cosine_similarity: tau must be positive");
  if (s.peaks.empty() || t.peaks.empty())
    fail("cosine_similarity: empty spectrum '" + (s.peaks.empty() ? s.id : t.id) + "'");

  auto l2 = [](const std::vector<Peak>& ps) {
    double n = 0.0;
    for (const auto& p : ps) n += p.height * p.height;
    return std::sqrt(n);
  };
  const double ns = l2(s.peaks), nt = l2(t.peaks);
  if (ns <= 0.0 || nt <= 0.0)
    fail("cosine_similarity: spectrum with zero L2 norm '" + (ns <= 0.0 ? s.id : t.id) + "'");

  // candidate pairs within tau (peaks are sorted by m/z)
  std::vector<std::pair<int, int>> pairs;
  std::size_t j_lo = 0;
  for (std::size_t i = 0; i < s.peaks.size(); ++i) {
    while (j_lo < t.peaks.size() && t.peaks[j_lo].mz < s.peaks[i].mz - cfg.tau) ++j_lo;
    for (std::size_t j = j_lo; j < t.peaks.size() && t.peaks[j].mz <= s.peaks[i].mz + cfg.tau; ++j)
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }

  CosineResult result;
  if (pairs.empty()) return result;

  // connected components over the bipartite candidate graph
  const int nl = static_cast<int>(s.peaks.size());
  UnionFind uf(nl + static_cast<int>(t.peaks.size()));
  for (const auto& [i, j] : pairs) uf.unite(i, nl + j);

  std::map<int, std::vector<std::pair<int, int>>> comp_pairs;
  for (const auto& pr : pairs) comp_pairs[uf.find(pr.first)].push_back(pr);

  for (auto& [root, edges] : comp_pairs) {
    std::vector<int> rows, cols;
    for (const auto& [i, j] : edges) {
      if (std::find(rows.begin(), rows.end(), i) == rows.end()) rows.push_back(i);
      if (std::find(cols.begin(), cols.end(), j) == cols.end()) cols.push_back(j);
    }
    std::sort(rows.begin(), rows.end());
    std::sort(cols.begin(), cols.end());
    const int q = static_cast<int>(std::max(rows.size(), cols.size()));

    // maximize: negate weights, pad to square with zeros
    std::vector<std::vector<double>> cost(q, std::vector<double>(q, 0.0));
    std::vector<std::vector<char>> candidate(q, std::vector<char>(q, 0));
    for (const auto& [i, j] : edges) {
      int r = static_cast<int>(std::find(rows.begin(), rows.end(), i) - rows.begin());
      int c = static_cast<int>(std::find(cols.begin(), cols.end(), j) - cols.begin());
      double w = (s.peaks[i].height / ns) * (t.peaks[j].height / nt);
      cost[r][c] = -w;
      candidate[r][c] = 1;
    }

    std::vector<int> match = min_cost_assignment(cost);
    for (int c = 0; c < q; ++c) {
      int r = match[c];
      if (r < 0 || r >= static_cast<int>(rows.size()) || c >= static_cast<int>(cols.size()))
        continue;
      if (!candidate[r][c]) continue;
      result.score += -cost[r][c];
      result.matches.emplace_back(rows[r], cols[c]);
    }
  }

  std::sort(result.matches.begin(), result.matches.end());
  result.score = std::clamp(result.score, 0.0, 1.0);
  return result;
}

}  // namespace msforma
