#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cirparse/encoder.hpp"
#include "cirparse/scorers.hpp"
#include "cirparse/tensor.hpp"

namespace cirparse {

/// Dependency tree over tokens 1..T. heads[k] and labels[k] describe token
/// k + 1; a head of 0 is ROOT.
struct ParseTree {
  std::vector<int> heads;
  std::vector<int> labels;

  std::size_t size() const { return heads.size(); }
  bool operator==(const ParseTree&) const = default;
};

/// True when `heads` (head of token k + 1 at index k) reaches ROOT from
/// every token without revisiting a node. With single_root, exactly one
/// token may attach to ROOT.
bool is_arborescence(std::span<const int> heads, bool single_root = false);

/// Sum of grid[heads[k]][k + 1] over all tokens, in token order.
double tree_score(const Tensor& grid, std::span<const int> heads);

/// Maximum spanning arborescence rooted at position 0 of a (T+1) x (T+1)
/// grid where grid[h][d] scores head h for dependent d. Self-arcs are
/// ignored; -inf entries are forbidden arcs. Ties in the greedy step go to
/// the lowest head index. Returns heads for tokens 1..T (empty if T = 0).
/// Throws DataError if some token has no admissible head.
std::vector<int> chu_liu_edmonds(const Tensor& grid, bool single_root = true);

/// Labels every arc with the argmax of the label classifier at
/// (predicted head, dependent); ties go to the lowest label id.
ParseTree assign_labels(std::span<const int> heads, const SentenceViews& views,
                        const LabelClassifier& classifier);

struct AttachmentScores {
  double uas = 0.0;  // percent
  double las = 0.0;  // percent
  std::size_t tokens = 0;
  std::size_t correct_heads = 0;
  std::size_t correct_labeled = 0;
};

/// Token-level UAS/LAS over all tokens, punctuation included. Both scores
/// are 0 when there are no tokens.
AttachmentScores evaluate(std::span<const ParseTree> predicted, std::span<const ParseTree> gold);

}  // namespace cirparse
