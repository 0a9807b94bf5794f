#include "cirparse/model.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cirparse {
namespace {

constexpr char kMagic[8] = {'C', 'I', 'R', 'P', 'A', 'R', 'S', 'E'};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T out{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw std::invalid_argument("config: bad value '" + std::string(text) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("config: bad value '" + std::string(text) + "' for " + std::string(key));
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Little-endian byte writer that also feeds the running checksum.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    crc_ = crc32(crc_, static_cast<const Bytef*>(data), static_cast<uInt>(n));
  }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::uint32_t crc() const { return static_cast<std::uint32_t>(crc_); }

 private:
  std::ostream& out_;
  uLong crc_ = crc32(0L, Z_NULL, 0);
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("model file: unexpected end of data");
    crc_ = crc32(crc_, static_cast<const Bytef*>(data), static_cast<uInt>(n));
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > (std::uint64_t{1} << 24)) throw DataError("model file: implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::uint32_t crc() const { return static_cast<std::uint32_t>(crc_); }

 private:
  std::istream& in_;
  uLong crc_ = crc32(0L, Z_NULL, 0);
};

void write_list(Writer& w, const std::vector<std::string>& items) {
  w.u64(items.size());
  for (const auto& s : items) w.str(s);
}

std::vector<std::string> read_list(Reader& r) {
  const std::uint64_t n = r.u64();
  std::vector<std::string> out;
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(r.str());
  return out;
}

}  // namespace

void set_config_value(ModelConfig& c, std::string_view key, std::string_view value) {
  using S = std::size_t;
  if (key == "variant") {
    c.variant = parse_variant(value);
  } else if (key == "arc_dim") {
    c.encoder.arc_dim = parse_number<S>(key, value);
  } else if (key == "label_dim") {
    c.encoder.label_dim = parse_number<S>(key, value);
  } else if (key == "word_dim") {
    c.encoder.word_dim = parse_number<S>(key, value);
  } else if (key == "pos_dim") {
    c.encoder.pos_dim = parse_number<S>(key, value);
  } else if (key == "hidden_dim") {
    c.encoder.hidden_dim = parse_number<S>(key, value);
  } else if (key == "dropout") {
    c.encoder.dropout = parse_number<double>(key, value);
  } else if (key == "init_range") {
    c.encoder.init_range = parse_number<double>(key, value);
  } else if (key == "lr") {
    c.adam.learning_rate = parse_number<double>(key, value);
  } else if (key == "beta1") {
    c.adam.beta1 = parse_number<double>(key, value);
  } else if (key == "beta2") {
    c.adam.beta2 = parse_number<double>(key, value);
  } else if (key == "epsilon") {
    c.adam.epsilon = parse_number<double>(key, value);
  } else if (key == "epochs") {
    c.epochs = parse_number<S>(key, value);
  } else if (key == "batch_size") {
    c.batch_size = parse_number<S>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "subsample") {
    c.subsample = parse_number<double>(key, value);
  } else if (key == "min_count") {
    c.min_count = parse_number<S>(key, value);
  } else if (key == "max_len") {
    c.max_len = parse_number<S>(key, value);
  } else if (key == "single_root") {
    c.single_root = parse_bool(key, value);
  } else {
    throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
  }
  if (c.encoder.dropout < 0.0 || c.encoder.dropout >= 1.0) throw std::invalid_argument("config: dropout must lie in [0, 1)");
  if (c.batch_size == 0) throw std::invalid_argument("config: batch_size must be >= 1");
  if (!(c.subsample > 0.0 && c.subsample <= 1.0)) throw std::invalid_argument("config: subsample must lie in (0, 1]");
  if (c.encoder.arc_dim == 0 || c.encoder.label_dim == 0 || c.encoder.hidden_dim == 0) {
    throw std::invalid_argument("config: dimensions must be >= 1");
  }
}

void apply_config_text(ModelConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_config_file(ModelConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  apply_config_text(config, text.str());
}

std::string config_to_text(const ModelConfig& c) {
  std::ostringstream out;
  out << "variant = " << to_string(c.variant) << '\n'
      << "arc_dim = " << c.encoder.arc_dim << '\n'
      << "label_dim = " << c.encoder.label_dim << '\n'
      << "word_dim = " << c.encoder.word_dim << '\n'
      << "pos_dim = " << c.encoder.pos_dim << '\n'
      << "hidden_dim = " << c.encoder.hidden_dim << '\n'
      << "dropout = " << format_double(c.encoder.dropout) << '\n'
      << "init_range = " << format_double(c.encoder.init_range) << '\n'
      << "lr = " << format_double(c.adam.learning_rate) << '\n'
      << "beta1 = " << format_double(c.adam.beta1) << '\n'
      << "beta2 = " << format_double(c.adam.beta2) << '\n'
      << "epsilon = " << format_double(c.adam.epsilon) << '\n'
      << "epochs = " << c.epochs << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "seed = " << c.seed << '\n'
      << "subsample = " << format_double(c.subsample) << '\n'
      << "min_count = " << c.min_count << '\n'
      << "max_len = " << c.max_len << '\n'
      << "single_root = " << (c.single_root ? "true" : "false") << '\n';
  return out.str();
}

EncodedSentence encode_sentence(const Sentence& sentence, const Vocab& vocab) {
  EncodedSentence e;
  e.words.reserve(sentence.size());
  e.tags.reserve(sentence.size());
  for (std::size_t k = 0; k < sentence.size(); ++k) {
    e.words.push_back(vocab.word_id(sentence.forms[k]));
    e.tags.push_back(vocab.pos_id(sentence.upos[k]));
  }
  return e;
}

ModelConfig Model::sized(ModelConfig config, const Vocab& vocab) {
  if (vocab.label_count() == 0) throw DataError("model: vocabulary has no labels");
  config.encoder.word_vocab = vocab.word_count();
  config.encoder.pos_vocab = vocab.pos_count();
  return config;
}

Model::Model(const ModelConfig& config, Vocab vocab)
    : config_(sized(config, vocab)),
      vocab_(std::move(vocab)),
      init_rng_(config_.seed),
      encoder_(config_.encoder, init_rng_),
      arc_(config_.variant, config_.encoder.arc_dim, init_rng_, config_.encoder.init_range),
      label_(config_.variant, config_.encoder.label_dim, vocab_.label_count(), init_rng_,
             config_.encoder.init_range) {}

NodeId Model::loss(Tape& tape, const Sentence& sentence, Mode mode, std::mt19937_64* dropout_rng,
                   std::size_t sentence_index) {
  const EncodedSentence ids = encode_sentence(sentence, vocab_);
  const ViewNodes v = encoder_.encode(tape, ids.words, ids.tags, mode, dropout_rng, sentence_index);
  const NodeId grid = arc_.score(tape, v.arc_head, v.arc_dep);
  NodeId total = arc_loss(tape, grid, sentence.heads);
  const std::size_t n = sentence.size();
  if (n == 0) return total;
  std::vector<std::size_t> head_rows(n);
  std::vector<int> gold(n);
  for (std::size_t k = 0; k < n; ++k) {
    head_rows[k] = static_cast<std::size_t>(sentence.heads[k]);
    gold[k] = vocab_.label_id(sentence.deprels[k]);
  }
  const NodeId heads = ad::gather_rows(tape, v.label_head, std::move(head_rows));
  const NodeId deps = ad::slice_rows(tape, v.label_dep, 1, n);
  const NodeId labels = label_.score(tape, heads, deps);
  return ad::add(tape, total, label_loss(tape, labels, gold));
}

Tensor Model::arc_scores(const Sentence& sentence) const {
  const EncodedSentence ids = encode_sentence(sentence, vocab_);
  const SentenceViews v = encoder_.encode_values(ids.words, ids.tags);
  return arc_.score_values(v.arc_head, v.arc_dep);
}

ParseTree Model::parse(const Sentence& sentence) const {
  if (sentence.size() == 0) return {};
  const EncodedSentence ids = encode_sentence(sentence, vocab_);
  const SentenceViews v = encoder_.encode_values(ids.words, ids.tags);
  const Tensor grid = arc_.score_values(v.arc_head, v.arc_dep);
  return assign_labels(chu_liu_edmonds(grid, config_.single_root), v, label_);
}

Treebank Model::parse_all(const Treebank& treebank) const {
  Treebank out;
  out.reserve(treebank.size());
  for (const Sentence& s : treebank) out.push_back(with_prediction(s, parse(s), vocab_));
  return out;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out = encoder_.parameters();
  for (Parameter* p : arc_.parameters()) out.push_back(p);
  for (Parameter* p : label_.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out = encoder_.parameters();
  for (const Parameter* p : arc_.parameters()) out.push_back(p);
  for (const Parameter* p : label_.parameters()) out.push_back(p);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->size();
  return n;
}

void Model::save(std::ostream& out) const {
  Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kFormatVersion);
  w.str(config_to_text(config_));
  write_list(w, vocab_.words());
  write_list(w, vocab_.tags());
  write_list(w, vocab_.labels());
  const auto params = parameters();
  w.u64(params.size());
  for (const Parameter* p : params) {
    w.str(p->name());
    w.u64(p->value().rows());
    w.u64(p->value().cols());
    for (double x : p->value().values()) w.f64(x);
  }
  const std::uint32_t crc = w.crc();
  w.u32(crc);
  if (!out) throw DataError("model file: write failed");
}

void Model::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  save(out);
}

std::unique_ptr<Model> Model::load(std::istream& in) {
  Reader r(in);
  char magic[sizeof kMagic];
  r.bytes(magic, sizeof magic);
  if (!std::equal(magic, magic + sizeof magic, kMagic)) throw DataError("model file: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw DataError("model file: format version " + std::to_string(version) + ", expected " +
                    std::to_string(kFormatVersion));
  }
  ModelConfig config;
  try {
    apply_config_text(config, r.str());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  auto words = read_list(r);
  auto tags = read_list(r);
  auto labels = read_list(r);
  auto model = std::make_unique<Model>(config, Vocab::from_lists(std::move(words), std::move(tags), std::move(labels)));
  const auto params = model->parameters();
  if (r.u64() != params.size()) throw DataError("model file: parameter count mismatch");
  for (Parameter* p : params) {
    const std::string name = r.str();
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (name != p->name() || rows != p->value().rows() || cols != p->value().cols()) {
      throw DataError("model file: expected " + p->name() + " " + to_string(p->value().shape()) +
                      ", found " + name + " " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (double& x : p->value().values()) x = r.f64();
  }
  const std::uint32_t expected = r.crc();
  if (r.u32() != expected) throw DataError("model file: checksum mismatch");
  return model;
}

std::unique_ptr<Model> Model::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return load(in);
}

}  // namespace cirparse
