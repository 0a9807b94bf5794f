#include "cirparse/conllu.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace cirparse {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool parse_int(std::string_view text, int& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

Treebank read_conllu(std::istream& in, const std::string& source, ReadStats* stats) {
  Treebank out;
  ReadStats local;
  Sentence current;
  std::size_t first_line = 0;

  auto fail = [&](std::size_t line_no, const std::string& what) {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  auto finish = [&](std::size_t line_no) {
    if (current.size() == 0) return;
    const int n = static_cast<int>(current.size());
    for (int h : current.heads) {
      if (h < 0 || h > n) fail(first_line, "HEAD " + std::to_string(h) + " outside [0, " + std::to_string(n) + "]");
    }
    if (!is_arborescence(current.heads, false)) {
      spdlog::warn("{}:{}: gold heads do not form a tree; sentence dropped", source, first_line);
      ++local.dropped_cyclic;
    } else {
      out.push_back(std::move(current));
    }
    current = Sentence{};
    (void)line_no;
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      finish(line_no);
      continue;
    }
    if (line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 10) {
      fail(line_no, "expected 10 tab-separated columns, found " + std::to_string(fields.size()));
    }
    const std::string_view id = fields[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;
    int index = 0;
    if (!parse_int(id, index)) fail(line_no, "non-integer ID '" + std::string(id) + "'");
    if (index != static_cast<int>(current.size()) + 1) {
      fail(line_no, "ID " + std::to_string(index) + " out of sequence");
    }
    int head = 0;
    if (!parse_int(fields[6], head)) fail(line_no, "non-integer HEAD '" + std::string(fields[6]) + "'");
    if (head == index) fail(line_no, "token is its own head");
    if (current.size() == 0) first_line = line_no;
    current.forms.emplace_back(fields[1]);
    current.upos.emplace_back(fields[3]);
    current.heads.push_back(head);
    current.deprels.emplace_back(fields[7]);
  }
  finish(line_no);
  local.sentences = out.size();
  if (stats != nullptr) *stats = local;
  return out;
}

Treebank read_conllu(const std::filesystem::path& path, ReadStats* stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_conllu(in, path.string(), stats);
}

void write_conllu(std::ostream& out, const Treebank& treebank) {
  for (const Sentence& s : treebank) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      out << (k + 1) << '\t' << s.forms[k] << "\t_\t" << s.upos[k] << "\t_\t_\t" << s.heads[k]
          << '\t' << s.deprels[k] << "\t_\t_\n";
    }
    out << '\n';
  }
}

void write_conllu(const std::filesystem::path& path, const Treebank& treebank) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_conllu(out, treebank);
}

Treebank subsample(const Treebank& treebank, double keep_fraction, std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("subsample: keep fraction must lie in (0, 1]");
  }
  const std::size_t total = treebank.size();
  // The small slack keeps e.g. 0.3 * 10 from rounding up to 4.
  const auto keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(total) - 1e-9));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(keep, total));
  std::sort(order.begin(), order.end());
  Treebank out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(treebank[i]);
  return out;
}

Vocab::Vocab() {
  words_ = {"<pad>", "<unk>", "<root>"};
  tags_ = words_;
  for (int i = 0; i < 3; ++i) {
    word_index_[words_[static_cast<std::size_t>(i)]] = i;
    tag_index_[tags_[static_cast<std::size_t>(i)]] = i;
  }
}

Vocab Vocab::build(const Treebank& treebank, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  std::vector<std::string> first_seen;
  Vocab v;
  for (const Sentence& s : treebank) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (counts[s.forms[k]]++ == 0) first_seen.push_back(s.forms[k]);
      if (v.tag_index_.emplace(s.upos[k], static_cast<int>(v.tags_.size())).second) {
        v.tags_.push_back(s.upos[k]);
      }
      if (v.label_index_.emplace(s.deprels[k], static_cast<int>(v.labels_.size())).second) {
        v.labels_.push_back(s.deprels[k]);
      }
    }
  }
  for (const std::string& w : first_seen) {
    if (counts[w] < min_count) continue;
    if (v.word_index_.emplace(w, static_cast<int>(v.words_.size())).second) v.words_.push_back(w);
  }
  v.frozen_ = true;
  return v;
}

Vocab Vocab::from_lists(std::vector<std::string> words, std::vector<std::string> tags,
                        std::vector<std::string> labels) {
  Vocab v;
  if (words.size() < 3 || tags.size() < 3) throw DataError("vocabulary is missing reserved entries");
  v.words_ = std::move(words);
  v.tags_ = std::move(tags);
  v.labels_ = std::move(labels);
  v.word_index_.clear();
  v.tag_index_.clear();
  for (std::size_t i = 0; i < v.words_.size(); ++i) v.word_index_[v.words_[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < v.tags_.size(); ++i) v.tag_index_[v.tags_[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < v.labels_.size(); ++i) v.label_index_[v.labels_[i]] = static_cast<int>(i);
  v.frozen_ = true;
  return v;
}

int Vocab::find(const std::unordered_map<std::string, int>& index, std::string_view key, int missing) {
  const auto it = index.find(std::string(key));
  return it == index.end() ? missing : it->second;
}

int Vocab::word_id(std::string_view form) const { return find(word_index_, form, kUnk); }
int Vocab::pos_id(std::string_view tag) const { return find(tag_index_, tag, kUnk); }
int Vocab::label_id(std::string_view label) const { return find(label_index_, label, -1); }

ParseTree gold_tree(const Sentence& sentence, const Vocab& vocab) {
  ParseTree t{sentence.heads, std::vector<int>(sentence.size())};
  for (std::size_t k = 0; k < sentence.size(); ++k) t.labels[k] = vocab.label_id(sentence.deprels[k]);
  return t;
}

Sentence with_prediction(const Sentence& sentence, const ParseTree& tree, const Vocab& vocab) {
  if (tree.size() != sentence.size()) {
    throw DataError("prediction covers " + std::to_string(tree.size()) + " tokens, sentence has " +
                    std::to_string(sentence.size()));
  }
  Sentence out = sentence;
  out.heads = tree.heads;
  for (std::size_t k = 0; k < tree.size(); ++k) out.deprels[k] = vocab.label(tree.labels[k]);
  return out;
}

}  // namespace cirparse
