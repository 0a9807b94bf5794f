#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cirparse/autodiff.hpp"

namespace cirparse {

struct EncoderConfig {
  std::size_t word_vocab = 3;
  std::size_t pos_vocab = 3;
  std::size_t word_dim = 100;
  std::size_t pos_dim = 32;
  std::size_t hidden_dim = 128;  // per direction
  std::size_t arc_dim = 400;     // n
  std::size_t label_dim = 100;   // m
  double dropout = 0.33;
  double init_range = 0.1;  // uniform range for embeddings and kernel weights
};

enum class Mode { Train, Eval };

/// The four per-position views; row k belongs to position k (0 is ROOT).
struct ViewNodes {
  NodeId arc_head;
  NodeId arc_dep;
  NodeId label_head;
  NodeId label_dep;
};

/// One position's four MLP outputs.
struct TokenViews {
  std::vector<double> arc_head;    // n
  std::vector<double> arc_dep;     // n
  std::vector<double> label_head;  // m
  std::vector<double> label_dep;   // m
};

/// Row-per-position matrices holding every position's views.
struct SentenceViews {
  Tensor arc_head;    // (len + 1) x n
  Tensor arc_dep;     // (len + 1) x n
  Tensor label_head;  // (len + 1) x m
  Tensor label_dep;   // (len + 1) x m

  std::size_t positions() const { return arc_head.rows(); }
  TokenViews token(std::size_t position) const;
};

/// Word and POS embeddings, a single-layer BiLSTM and four ReLU MLP heads.
///
/// Token and POS ids refer to the sentence proper; the ROOT id is prepended
/// internally so every output has len + 1 rows.
class Encoder {
 public:
  static constexpr std::size_t kRootId = 2;

  Encoder(const EncoderConfig& config, std::mt19937_64& rng);

  const EncoderConfig& config() const { return config_; }

  /// Training/gradient path: parameters are bound to the tape.
  /// `dropout_rng` is required in Train mode.
  ViewNodes encode(Tape& tape, std::span<const int> words, std::span<const int> tags, Mode mode,
                   std::mt19937_64* dropout_rng, std::size_t sentence_index = 0);

  /// Inference path: parameters enter the tape as frozen constants.
  SentenceViews encode_values(std::span<const int> words, std::span<const int> tags,
                              std::size_t sentence_index = 0) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  struct Lstm {
    Parameter input_weights;      // in x 4h, gate order i f g o
    Parameter recurrent_weights;  // h x 4h
    Parameter bias;               // 1 x 4h
  };
  struct Mlp {
    Parameter weights;  // in x out
    Parameter bias;     // 1 x out
  };

  template <class Self, class Bind, class Lookup>
  static ViewNodes encode_impl(Self& self, Tape& tape, std::span<const int> words,
                               std::span<const int> tags, Mode mode, std::mt19937_64* rng,
                               std::size_t sentence_index, Bind bind, Lookup lookup);

  EncoderConfig config_;
  Parameter word_embedding_;
  Parameter pos_embedding_;
  Lstm forward_;
  Lstm backward_;
  Mlp arc_head_;
  Mlp arc_dep_;
  Mlp label_head_;
  Mlp label_dep_;
};

}  // namespace cirparse
