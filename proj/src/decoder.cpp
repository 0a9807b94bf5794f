#include "cirparse/decoder.hpp"

#include <cmath>
#include <limits>

namespace cirparse {
namespace {

constexpr double kForbidden = -std::numeric_limits<double>::infinity();

using Grid = std::vector<std::vector<double>>;

// Returns parent[v] for every node (parent[0] = -1) of the maximum
// arborescence rooted at 0. Recursive contraction: pick each node's best
// incoming arc, contract one cycle if there is any, solve the smaller
// problem and expand.
std::vector<int> max_arborescence(const Grid& s) {
  const std::size_t n = s.size();
  std::vector<int> parent(n, -1);
  for (std::size_t v = 1; v < n; ++v) {
    double best = kForbidden;
    for (std::size_t u = 0; u < n; ++u) {
      if (u == v) continue;
      if (s[u][v] > best) {
        best = s[u][v];
        parent[v] = static_cast<int>(u);
      }
    }
    if (parent[v] < 0) throw DataError("chu_liu_edmonds: node has no admissible head");
  }

  // Find a cycle in the greedy parent graph.
  std::vector<int> state(n, 0);  // 0 unvisited, 1 on current walk, 2 done
  std::vector<std::size_t> cycle;
  for (std::size_t start = 1; start < n && cycle.empty(); ++start) {
    std::size_t v = start;
    std::vector<std::size_t> walk;
    while (v != 0 && state[v] == 0) {
      state[v] = 1;
      walk.push_back(v);
      v = static_cast<std::size_t>(parent[v]);
    }
    if (v != 0 && state[v] == 1) {
      std::size_t u = v;
      do {
        cycle.push_back(u);
        u = static_cast<std::size_t>(parent[u]);
      } while (u != v);
    }
    for (std::size_t w : walk) state[w] = 2;
  }
  if (cycle.empty()) return parent;

  std::vector<bool> in_cycle(n, false);
  for (std::size_t v : cycle) in_cycle[v] = true;
  std::vector<std::size_t> new_id(n);
  std::vector<std::size_t> old_id;
  for (std::size_t v = 0; v < n; ++v) {
    if (in_cycle[v]) continue;
    new_id[v] = old_id.size();
    old_id.push_back(v);
  }
  const std::size_t contracted = old_id.size();
  const std::size_t m = contracted + 1;
  for (std::size_t v : cycle) new_id[v] = contracted;

  Grid t(m, std::vector<double>(m, kForbidden));
  std::vector<std::size_t> enter_at(n, 0);   // for u outside: cycle node entered
  std::vector<std::size_t> leave_from(n, 0); // for v outside: cycle node it hangs off
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 1; v < n; ++v) {
      if (u == v || s[u][v] == kForbidden) continue;
      if (!in_cycle[u] && !in_cycle[v]) {
        t[new_id[u]][new_id[v]] = s[u][v];
      } else if (!in_cycle[u] && in_cycle[v]) {
        const double val = s[u][v] - s[static_cast<std::size_t>(parent[v])][v];
        if (val > t[new_id[u]][contracted]) {
          t[new_id[u]][contracted] = val;
          enter_at[u] = v;
        }
      } else if (in_cycle[u] && !in_cycle[v]) {
        if (s[u][v] > t[contracted][new_id[v]]) {
          t[contracted][new_id[v]] = s[u][v];
          leave_from[v] = u;
        }
      }
    }
  }

  const std::vector<int> sub = max_arborescence(t);
  std::vector<int> result = parent;  // cycle members keep their cycle parents
  for (std::size_t nv = 1; nv < m; ++nv) {
    const std::size_t np = static_cast<std::size_t>(sub[nv]);
    if (nv == contracted) {
      const std::size_t u = old_id[np];
      result[enter_at[u]] = static_cast<int>(u);
    } else {
      const std::size_t v = old_id[nv];
      result[v] = static_cast<int>(np == contracted ? leave_from[v] : old_id[np]);
    }
  }
  return result;
}

Grid to_grid(const Tensor& scores) {
  const std::size_t n = scores.rows();
  Grid g(n, std::vector<double>(n));
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      const double x = scores(u, v);
      g[u][v] = (u == v || v == 0 || std::isnan(x)) ? kForbidden : x;
    }
  }
  return g;
}

}  // namespace

bool is_arborescence(std::span<const int> heads, bool single_root) {
  const std::size_t n = heads.size();
  std::size_t root_children = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const int h = heads[k];
    if (h < 0 || static_cast<std::size_t>(h) > n || static_cast<std::size_t>(h) == k + 1) return false;
    if (h == 0) ++root_children;
  }
  if (n > 0 && root_children == 0) return false;
  if (single_root && root_children > 1) return false;
  // 0 unvisited, 1 on current walk, 2 reaches ROOT
  std::vector<int> state(n + 1, 0);
  state[0] = 2;
  for (std::size_t start = 1; start <= n; ++start) {
    std::vector<std::size_t> walk;
    std::size_t v = start;
    while (state[v] == 0) {
      state[v] = 1;
      walk.push_back(v);
      v = static_cast<std::size_t>(heads[v - 1]);
    }
    if (state[v] == 1) return false;
    for (std::size_t w : walk) state[w] = 2;
  }
  return true;
}

double tree_score(const Tensor& grid, std::span<const int> heads) {
  double total = 0.0;
  for (std::size_t k = 0; k < heads.size(); ++k) {
    total += grid(static_cast<std::size_t>(heads[k]), k + 1);
  }
  return total;
}

std::vector<int> chu_liu_edmonds(const Tensor& grid, bool single_root) {
  if (grid.rows() != grid.cols()) {
    throw ShapeError("chu_liu_edmonds", "score grid must be square, got " + to_string(grid.shape()));
  }
  const std::size_t n = grid.rows();
  if (n < 2) return {};
  const Grid base = to_grid(grid);

  auto solve = [](const Grid& g) {
    const std::vector<int> parent = max_arborescence(g);
    return std::vector<int>(parent.begin() + 1, parent.end());
  };
  if (!single_root) return solve(base);

  // Try each token as the sole child of ROOT and keep the best tree.
  std::vector<int> best;
  double best_score = kForbidden;
  for (std::size_t child = 1; child < n; ++child) {
    if (base[0][child] == kForbidden) continue;
    Grid g = base;
    for (std::size_t v = 1; v < n; ++v)
      if (v != child) g[0][v] = kForbidden;
    std::vector<int> heads;
    try {
      heads = solve(g);
    } catch (const DataError&) {
      continue;
    }
    double score = 0.0;
    for (std::size_t k = 0; k < heads.size(); ++k) score += g[static_cast<std::size_t>(heads[k])][k + 1];
    if (best.empty() || score > best_score) {
      best_score = score;
      best = std::move(heads);
    }
  }
  if (best.empty()) throw DataError("chu_liu_edmonds: no admissible single-root tree");
  return best;
}

ParseTree assign_labels(std::span<const int> heads, const SentenceViews& views,
                        const LabelClassifier& classifier) {
  if (views.positions() != heads.size() + 1) {
    throw ShapeError("assign_labels", "views cover " + std::to_string(views.positions()) +
                                          " positions, tree has " + std::to_string(heads.size()) +
                                          " tokens");
  }
  ParseTree tree{std::vector<int>(heads.begin(), heads.end()), std::vector<int>(heads.size(), 0)};
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const auto scores = classifier.score_values(
        views.label_head.row_span(static_cast<std::size_t>(heads[k])), views.label_dep.row_span(k + 1));
    std::size_t best = 0;
    for (std::size_t l = 1; l < scores.size(); ++l)
      if (scores[l] > scores[best]) best = l;
    tree.labels[k] = static_cast<int>(best);
  }
  return tree;
}

AttachmentScores evaluate(std::span<const ParseTree> predicted, std::span<const ParseTree> gold) {
  if (predicted.size() != gold.size()) {
    throw DataError("evaluate: " + std::to_string(predicted.size()) + " predicted vs " +
                    std::to_string(gold.size()) + " gold sentences");
  }
  AttachmentScores s;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const ParseTree& p = predicted[i];
    const ParseTree& g = gold[i];
    if (p.heads.size() != g.heads.size() || p.labels.size() != p.heads.size() ||
        g.labels.size() != g.heads.size()) {
      throw DataError("evaluate: token count mismatch in sentence " + std::to_string(i + 1));
    }
    for (std::size_t k = 0; k < g.heads.size(); ++k) {
      ++s.tokens;
      if (p.heads[k] == g.heads[k]) {
        ++s.correct_heads;
        if (p.labels[k] == g.labels[k]) ++s.correct_labeled;
      }
    }
  }
  if (s.tokens > 0) {
    s.uas = 100.0 * static_cast<double>(s.correct_heads) / static_cast<double>(s.tokens);
    s.las = 100.0 * static_cast<double>(s.correct_labeled) / static_cast<double>(s.tokens);
  }
  return s;
}

}  // namespace cirparse
