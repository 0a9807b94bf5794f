#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cirparse/autodiff.hpp"
#include "cirparse/conllu.hpp"
#include "cirparse/decoder.hpp"

namespace cirparse::testing {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double range = 1.0) {
  std::uniform_real_distribution<double> u(-range, range);
  Tensor t(rows, cols);
  for (double& x : t.values()) x = u(rng);
  return t;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double range = 1.0) {
  return random_tensor(1, n, rng, range).values();
}

struct GradCheck {
  double max_relative_error = 0.0;
  std::string worst;  // "param[index]"
  std::size_t checked = 0;
};

/// Central-difference check of d(loss)/d(param) for every scalar of every
/// parameter. `build` must record the scalar loss on a fresh tape.
inline GradCheck check_gradients(const std::vector<Parameter*>& params,
                                 const std::function<NodeId(Tape&)>& build, double step = 1e-5) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(build(tape));
  }
  GradCheck out;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double saved = p->value()[i];
      p->value()[i] = saved + step;
      Tape plus;
      const double up = plus.value(build(plus))[0];
      p->value()[i] = saved - step;
      Tape minus;
      const double down = minus.value(build(minus))[0];
      p->value()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p->grad()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double err = std::abs(analytic - numeric) / denom;
      ++out.checked;
      if (err > out.max_relative_error) {
        out.max_relative_error = err;
        out.worst = p->name() + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

/// Best single-root (or multi-root) arborescence score by enumerating every
/// head assignment. grid is (T+1) x (T+1).
inline double brute_force_best(const Tensor& grid, bool single_root) {
  const std::size_t t = grid.rows() - 1;
  std::vector<int> heads(t, 0);
  double best = -std::numeric_limits<double>::infinity();
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == t) {
      if (is_arborescence(heads, single_root)) best = std::max(best, tree_score(grid, heads));
      return;
    }
    for (std::size_t h = 0; h <= t; ++h) {
      if (h == k + 1) continue;
      heads[k] = static_cast<int>(h);
      rec(k + 1);
    }
  };
  rec(0);
  return best;
}

/// Small treebank from a toy grammar:
///   DET [ADJ] NOUN VERB [DET [ADJ] NOUN] [ADP DET NOUN] PUNCT
/// with fixed attachment rules, so a parser can memorize it.
inline Treebank synthetic_treebank(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> dets{"the", "a", "this", "every"};
  const std::vector<std::string> adjs{"red", "old", "small", "quiet", "bright"};
  const std::vector<std::string> nouns{"dog", "cat", "house", "river", "child", "tree", "stone", "bird"};
  const std::vector<std::string> verbs{"sees", "likes", "finds", "sleeps", "moves", "hears"};
  const std::vector<std::string> adps{"near", "under", "with"};
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  auto coin = [&] { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; };

  Treebank out;
  for (std::size_t s = 0; s < count; ++s) {
    Sentence sent;
    auto add = [&](const std::string& form, const std::string& tag) {
      sent.forms.push_back(form);
      sent.upos.push_back(tag);
      sent.heads.push_back(0);
      sent.deprels.push_back("_");
      return static_cast<int>(sent.size());  // 1-based position
    };
    auto noun_phrase = [&](std::vector<int>& modifiers) {
      modifiers.push_back(add(pick(dets), "DET"));
      if (coin()) modifiers.push_back(add(pick(adjs), "ADJ"));
      return add(pick(nouns), "NOUN");
    };
    auto attach = [&](int dep, int head, const char* label) {
      sent.heads[static_cast<std::size_t>(dep - 1)] = head;
      sent.deprels[static_cast<std::size_t>(dep - 1)] = label;
    };
    auto attach_modifiers = [&](const std::vector<int>& mods, int noun) {
      for (int m : mods) attach(m, noun, sent.upos[static_cast<std::size_t>(m - 1)] == "DET" ? "det" : "amod");
    };

    std::vector<int> subj_mods;
    const int subj = noun_phrase(subj_mods);
    const int verb = add(pick(verbs), "VERB");
    attach_modifiers(subj_mods, subj);
    attach(subj, verb, "nsubj");
    attach(verb, 0, "root");
    if (coin()) {
      std::vector<int> mods;
      const int obj = noun_phrase(mods);
      attach_modifiers(mods, obj);
      attach(obj, verb, "obj");
    }
    if (coin()) {
      const int adp = add(pick(adps), "ADP");
      std::vector<int> mods;
      const int noun = noun_phrase(mods);
      attach_modifiers(mods, noun);
      attach(adp, noun, "case");
      attach(noun, verb, "obl");
    }
    const int punct = add(".", "PUNCT");
    attach(punct, verb, "punct");
    out.push_back(std::move(sent));
  }
  return out;
}

inline std::string data_path(const std::string& name) { return std::string(CIRPARSE_TEST_DATA_DIR) + "/" + name; }

}  // namespace cirparse::testing
