#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cirparse/decoder.hpp"

namespace cirparse {

/// One syntactic-word sequence with gold annotation. heads[k] and
/// deprels[k] describe token k + 1; a head of 0 is ROOT.
struct Sentence {
  std::vector<std::string> forms;
  std::vector<std::string> upos;
  std::vector<int> heads;
  std::vector<std::string> deprels;

  std::size_t size() const { return forms.size(); }
  bool operator==(const Sentence&) const = default;
};

using Treebank = std::vector<Sentence>;

struct ReadStats {
  std::size_t sentences = 0;
  std::size_t dropped_cyclic = 0;
};

/// Reads CoNLL-U. Comments, multiword-token ranges ("1-2") and empty nodes
/// ("1.1") are skipped; FORM, UPOS, HEAD and DEPREL are kept. Malformed
/// lines raise DataError carrying "source:line". Sentences whose gold heads
/// do not form a tree are dropped with a warning.
Treebank read_conllu(std::istream& in, const std::string& source = "<stream>",
                     ReadStats* stats = nullptr);
Treebank read_conllu(const std::filesystem::path& path, ReadStats* stats = nullptr);

/// Writes ID, FORM, UPOS, HEAD and DEPREL; every other column is "_".
void write_conllu(std::ostream& out, const Treebank& treebank);
void write_conllu(const std::filesystem::path& path, const Treebank& treebank);

/// Deterministic subset of ceil(fraction * N) sentences in original order.
Treebank subsample(const Treebank& treebank, double keep_fraction, std::uint64_t seed);

/// Word, POS and label inventories. Word and POS ids reserve 0 = PAD,
/// 1 = UNK and 2 = ROOT; label ids are dense from 0 so their count is L.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kRoot = 2;

  Vocab();
  /// First-seen id order; words seen fewer than min_count times map to UNK.
  static Vocab build(const Treebank& treebank, std::size_t min_count = 1);
  /// Rebuilds from stored inventories (reserved entries included).
  static Vocab from_lists(std::vector<std::string> words, std::vector<std::string> tags,
                          std::vector<std::string> labels);

  int word_id(std::string_view form) const;
  int pos_id(std::string_view tag) const;
  /// -1 for a label never seen while building.
  int label_id(std::string_view label) const;
  const std::string& label(int id) const { return labels_.at(static_cast<std::size_t>(id)); }

  std::size_t word_count() const { return words_.size(); }
  std::size_t pos_count() const { return tags_.size(); }
  std::size_t label_count() const { return labels_.size(); }
  bool frozen() const { return frozen_; }

  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::string>& tags() const { return tags_; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  static int find(const std::unordered_map<std::string, int>& index, std::string_view key, int missing);

  std::vector<std::string> words_;
  std::vector<std::string> tags_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> word_index_;
  std::unordered_map<std::string, int> tag_index_;
  std::unordered_map<std::string, int> label_index_;
  bool frozen_ = false;
};

/// Gold tree of a sentence under a vocabulary (unknown labels become -1).
ParseTree gold_tree(const Sentence& sentence, const Vocab& vocab);

/// Copy of `sentence` with predicted heads and label strings.
Sentence with_prediction(const Sentence& sentence, const ParseTree& tree, const Vocab& vocab);

}  // namespace cirparse
