#include "cirparse/encoder.hpp"

#include <cmath>

namespace cirparse {

TokenViews SentenceViews::token(std::size_t position) const {
  auto copy = [position](const Tensor& t) {
    auto row = t.row_span(position);
    return std::vector<double>(row.begin(), row.end());
  };
  return {copy(arc_head), copy(arc_dep), copy(label_head), copy(label_dep)};
}

namespace {

Tensor uniform(std::size_t rows, std::size_t cols, double range, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  Tensor t(rows, cols);
  for (auto& v : t.span()) v = dist(rng);
  return t;
}

Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  return uniform(rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
}

void require_dims(const EncoderConfig& c) {
  if (c.word_vocab < 3 || c.pos_vocab < 3 || c.word_dim == 0 || c.pos_dim == 0 ||
      c.hidden_dim == 0 || c.arc_dim == 0 || c.label_dim == 0) {
    throw std::invalid_argument("encoder: every dimension must be >= 1 and vocabularies >= 3");
  }
  if (c.dropout < 0.0 || c.dropout >= 1.0) {
    throw std::invalid_argument("encoder: dropout must lie in [0, 1)");
  }
}

struct BoundLstm {
  NodeId input_weights;
  NodeId recurrent_weights;
  NodeId bias;
};

// Runs one direction over the rows of `inputs`; output rows stay in
// position order for both directions.
NodeId run_lstm(Tape& t, NodeId inputs, const BoundLstm& p, std::size_t hidden, bool reverse) {
  const std::size_t steps = t.shape(inputs).rows;
  const NodeId projected = ad::add_row(t, ad::matmul(t, inputs, p.input_weights), p.bias);
  std::vector<NodeId> outputs(steps);
  NodeId h{};
  NodeId c{};
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t pos = reverse ? steps - 1 - s : s;
    NodeId z = ad::slice_rows(t, projected, pos, 1);
    if (s > 0) z = ad::add(t, z, ad::matmul(t, h, p.recurrent_weights));
    const NodeId in_gate = ad::sigmoid(t, ad::slice_cols(t, z, 0, hidden));
    const NodeId forget_gate = ad::sigmoid(t, ad::slice_cols(t, z, hidden, hidden));
    const NodeId candidate = ad::tanh(t, ad::slice_cols(t, z, 2 * hidden, hidden));
    const NodeId out_gate = ad::sigmoid(t, ad::slice_cols(t, z, 3 * hidden, hidden));
    const NodeId written = ad::mul(t, in_gate, candidate);
    c = s == 0 ? written : ad::add(t, ad::mul(t, forget_gate, c), written);
    h = ad::mul(t, out_gate, ad::tanh(t, c));
    outputs[pos] = h;
  }
  return ad::concat_rows(t, outputs);
}

NodeId dropout(Tape& t, NodeId x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const Shape s = t.shape(x);
  Tensor mask(s.rows, s.cols);
  const double scale = 1.0 / (1.0 - rate);
  for (auto& v : mask.span()) v = keep(rng) ? scale : 0.0;
  return ad::mul(t, x, t.constant(std::move(mask)));
}

}  // namespace

Encoder::Encoder(const EncoderConfig& config, std::mt19937_64& rng) : config_(config) {
  require_dims(config_);
  const auto& c = config_;
  const std::size_t in = c.word_dim + c.pos_dim;
  const std::size_t h = c.hidden_dim;
  word_embedding_ = Parameter("encoder.word_embedding", uniform(c.word_vocab, c.word_dim, c.init_range, rng));
  pos_embedding_ = Parameter("encoder.pos_embedding", uniform(c.pos_vocab, c.pos_dim, c.init_range, rng));
  auto make_lstm = [&](const std::string& name) {
    Tensor bias(1, 4 * h);
    for (std::size_t k = h; k < 2 * h; ++k) bias[k] = 1.0;  // forget gate
    return Lstm{Parameter(name + ".input_weights", glorot(in, 4 * h, rng)),
                Parameter(name + ".recurrent_weights", glorot(h, 4 * h, rng)),
                Parameter(name + ".bias", std::move(bias))};
  };
  forward_ = make_lstm("encoder.lstm_forward");
  backward_ = make_lstm("encoder.lstm_backward");
  auto make_mlp = [&](const std::string& name, std::size_t out) {
    return Mlp{Parameter(name + ".weights", glorot(2 * h, out, rng)),
               Parameter(name + ".bias", Tensor(1, out))};
  };
  arc_head_ = make_mlp("encoder.mlp_arc_head", c.arc_dim);
  arc_dep_ = make_mlp("encoder.mlp_arc_dep", c.arc_dim);
  label_head_ = make_mlp("encoder.mlp_label_head", c.label_dim);
  label_dep_ = make_mlp("encoder.mlp_label_dep", c.label_dim);
}

template <class Self, class Bind, class Lookup>
ViewNodes Encoder::encode_impl(Self& self, Tape& tape, std::span<const int> words,
                               std::span<const int> tags, Mode mode, std::mt19937_64* rng,
                               std::size_t sentence_index, Bind bind, Lookup lookup) {
  if (words.size() != tags.size()) {
    throw DataError("sentence " + std::to_string(sentence_index) +
                    ": word and POS sequences differ in length");
  }
  if (mode == Mode::Train && self.config_.dropout > 0.0 && rng == nullptr) {
    throw std::invalid_argument("encoder: training mode needs a dropout generator");
  }
  auto ids_with_root = [&](std::span<const int> ids, std::size_t vocab, const char* what) {
    std::vector<std::size_t> out;
    out.reserve(ids.size() + 1);
    out.push_back(kRootId);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] < 0 || static_cast<std::size_t>(ids[k]) >= vocab) {
        throw DataError("sentence " + std::to_string(sentence_index) + ": " + what + " id " +
                        std::to_string(ids[k]) + " at token " + std::to_string(k + 1) +
                        " is outside the vocabulary of size " + std::to_string(vocab));
      }
      out.push_back(static_cast<std::size_t>(ids[k]));
    }
    return out;
  };
  const auto& c = self.config_;
  const NodeId word_vecs = lookup(self.word_embedding_, ids_with_root(words, c.word_vocab, "word"));
  const NodeId pos_vecs = lookup(self.pos_embedding_, ids_with_root(tags, c.pos_vocab, "POS"));
  const NodeId inputs = ad::concat_cols(tape, {word_vecs, pos_vecs});

  auto bind_lstm = [&](auto& l) {
    return BoundLstm{bind(l.input_weights), bind(l.recurrent_weights), bind(l.bias)};
  };
  const NodeId fwd = run_lstm(tape, inputs, bind_lstm(self.forward_), c.hidden_dim, false);
  const NodeId bwd = run_lstm(tape, inputs, bind_lstm(self.backward_), c.hidden_dim, true);
  const NodeId states = ad::concat_cols(tape, {fwd, bwd});

  auto mlp = [&](auto& m) {
    NodeId x = states;
    if (mode == Mode::Train) x = dropout(tape, x, c.dropout, *rng);
    return ad::relu(tape, ad::add_row(tape, ad::matmul(tape, x, bind(m.weights)), bind(m.bias)));
  };
  return ViewNodes{mlp(self.arc_head_), mlp(self.arc_dep_), mlp(self.label_head_),
                   mlp(self.label_dep_)};
}

ViewNodes Encoder::encode(Tape& tape, std::span<const int> words, std::span<const int> tags,
                          Mode mode, std::mt19937_64* dropout_rng, std::size_t sentence_index) {
  return encode_impl(
      *this, tape, words, tags, mode, dropout_rng, sentence_index,
      [&tape](Parameter& p) { return tape.parameter(p); },
      [&tape](Parameter& p, std::vector<std::size_t> rows) {
        return ad::lookup_rows(tape, p, std::move(rows));
      });
}

SentenceViews Encoder::encode_values(std::span<const int> words, std::span<const int> tags,
                                     std::size_t sentence_index) const {
  Tape tape;
  const ViewNodes nodes = encode_impl(
      *this, tape, words, tags, Mode::Eval, nullptr, sentence_index,
      [&tape](const Parameter& p) { return tape.constant(p.value()); },
      [&tape](const Parameter& p, const std::vector<std::size_t>& rows) {
        Tensor out(rows.size(), p.value().cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          auto src = p.value().row_span(rows[i]);
          std::copy(src.begin(), src.end(), out.row_span(i).begin());
        }
        return tape.constant(std::move(out));
      });
  return SentenceViews{tape.value(nodes.arc_head), tape.value(nodes.arc_dep),
                       tape.value(nodes.label_head), tape.value(nodes.label_dep)};
}

std::vector<Parameter*> Encoder::parameters() {
  return {&word_embedding_,
          &pos_embedding_,
          &forward_.input_weights,
          &forward_.recurrent_weights,
          &forward_.bias,
          &backward_.input_weights,
          &backward_.recurrent_weights,
          &backward_.bias,
          &arc_head_.weights,
          &arc_head_.bias,
          &arc_dep_.weights,
          &arc_dep_.bias,
          &label_head_.weights,
          &label_head_.bias,
          &label_dep_.weights,
          &label_dep_.bias};
}

std::vector<const Parameter*> Encoder::parameters() const {
  auto mut = const_cast<Encoder*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

}  // namespace cirparse
