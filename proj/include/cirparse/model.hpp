#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cirparse/adam.hpp"
#include "cirparse/conllu.hpp"
#include "cirparse/decoder.hpp"
#include "cirparse/encoder.hpp"
#include "cirparse/scorers.hpp"

namespace cirparse {

/// Architecture and training settings. One variant applies to both the arc
/// and the label classifier.
struct ModelConfig {
  Variant variant = Variant::Circulant;
  EncoderConfig encoder;  // vocabulary sizes are filled from the Vocab
  AdamConfig adam;
  std::size_t epochs = 20;
  std::size_t batch_size = 8;  // sentences per update
  std::uint64_t seed = 1;
  double subsample = 1.0;
  std::size_t min_count = 1;
  std::size_t max_len = 100;
  bool single_root = true;
};

/// Sets one key from its text form. Throws std::invalid_argument for an
/// unknown key or a malformed value.
void set_config_value(ModelConfig& config, std::string_view key, std::string_view value);
/// Applies "key = value" lines; '#' starts a comment.
void apply_config_text(ModelConfig& config, std::string_view text);
void apply_config_file(ModelConfig& config, const std::filesystem::path& path);
std::string config_to_text(const ModelConfig& config);

/// Word and POS ids of a sentence under a vocabulary.
struct EncodedSentence {
  std::vector<int> words;
  std::vector<int> tags;
};
EncodedSentence encode_sentence(const Sentence& sentence, const Vocab& vocab);

/// Vocabulary, encoder and both classifiers. Parameters are owned in place,
/// so a Model is neither copied nor moved.
class Model {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  Model(const ModelConfig& config, Vocab vocab);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  const Encoder& encoder() const { return encoder_; }
  const ArcClassifier& arc() const { return arc_; }
  const LabelClassifier& label() const { return label_; }

  /// Arc plus label cross-entropy of one gold sentence.
  NodeId loss(Tape& tape, const Sentence& sentence, Mode mode, std::mt19937_64* dropout_rng,
              std::size_t sentence_index = 0);

  Tensor arc_scores(const Sentence& sentence) const;
  ParseTree parse(const Sentence& sentence) const;
  Treebank parse_all(const Treebank& treebank) const;

  /// All trainable parameters in declared order: encoder, arc, label.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  /// Throws DataError on bad magic, version mismatch, checksum failure or
  /// parameter shape mismatch.
  static std::unique_ptr<Model> load(std::istream& in);
  static std::unique_ptr<Model> load(const std::filesystem::path& path);

 private:
  static ModelConfig sized(ModelConfig config, const Vocab& vocab);

  ModelConfig config_;
  Vocab vocab_;
  std::mt19937_64 init_rng_;
  Encoder encoder_;
  ArcClassifier arc_;
  LabelClassifier label_;
};

}  // namespace cirparse
