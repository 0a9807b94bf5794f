#include "cirparse/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "cirparse/bench.hpp"
#include "cirparse/model.hpp"
#include "cirparse/param_accounting.hpp"
#include "cirparse/trainer.hpp"

namespace cirparse {
namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> variant;
  std::optional<std::size_t> arc_dim;
  std::optional<std::size_t> label_dim;
  std::optional<std::uint64_t> seed;
  std::optional<double> subsample;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key=value config file");
    app.add_option("--variant", variant, "dense, symmetric or circulant");
    app.add_option("--arc-dim", arc_dim, "arc view dimension n");
    app.add_option("--label-dim", label_dim, "label view dimension m");
    app.add_option("--seed", seed);
    app.add_option("--subsample", subsample, "fraction of training sentences kept");
    app.add_option("--epochs", epochs);
    app.add_option("--batch-size", batch_size, "sentences per update");
  }

  ModelConfig resolve() const {
    ModelConfig c;
    if (!config_path.empty()) apply_config_file(c, config_path);
    auto set = [&](const char* key, const auto& v) {
      if (v) {
        std::ostringstream text;
        text << *v;
        set_config_value(c, key, text.str());
      }
    };
    set("variant", variant);
    set("arc_dim", arc_dim);
    set("label_dim", label_dim);
    set("seed", seed);
    set("epochs", epochs);
    set("batch_size", batch_size);
    if (subsample) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", *subsample);
      set_config_value(c, "subsample", buf);
    }
    return c;
  }
};

std::string format_scores(const AttachmentScores& s) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "UAS %.2f LAS %.2f (%zu tokens)", s.uas, s.las, s.tokens);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
}

int cmd_train(const Overrides& o, const std::string& train_path, const std::string& dev_path,
              const std::string& out_path, std::ostream& out) {
  const ModelConfig config = o.resolve();
  Treebank train = read_conllu(std::filesystem::path(train_path));
  if (train.empty()) throw DataError("training treebank " + train_path + " is empty");
  const std::size_t full = train.size();
  if (config.subsample < 1.0) train = subsample(train, config.subsample, config.seed);
  out << "training sentences: " << train.size() << " of " << full << '\n';
  std::optional<Treebank> dev;
  if (!dev_path.empty()) dev = read_conllu(std::filesystem::path(dev_path));

  Model model(config, Vocab::build(train, config.min_count));
  out << "variant " << to_string(config.variant) << ", " << model.parameter_count() << " parameters\n";
  out << "epoch,loss,dev_uas,dev_las\n";
  train_model(model, train, dev ? &*dev : nullptr, [&](const EpochLog& log) {
    char buf[128];
    if (log.dev) {
      std::snprintf(buf, sizeof buf, "%zu,%.6f,%.2f,%.2f\n", log.epoch, log.mean_loss, log.dev->uas, log.dev->las);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,%.6f,,\n", log.epoch, log.mean_loss);
    }
    out << buf << std::flush;
  });
  model.save(std::filesystem::path(out_path));
  out << "saved " << out_path << '\n';
  return kExitOk;
}

int cmd_parse(const std::string& model_path, const std::string& in_path, const std::string& out_path) {
  const auto model = Model::load(std::filesystem::path(model_path));
  const Treebank input = read_conllu(std::filesystem::path(in_path));
  write_conllu(std::filesystem::path(out_path), model->parse_all(input));
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& pred_path, const std::string& gold_path,
             std::ostream& out) {
  const Treebank gold = read_conllu(std::filesystem::path(gold_path));
  Treebank pred;
  if (!model_path.empty()) {
    pred = Model::load(std::filesystem::path(model_path))->parse_all(gold);
  } else {
    pred = read_conllu(std::filesystem::path(pred_path));
  }
  if (pred.size() != gold.size()) {
    throw DataError("eval: " + std::to_string(pred.size()) + " predicted vs " + std::to_string(gold.size()) +
                    " gold sentences");
  }
  // Labels are compared by string through a vocabulary built on both sides.
  Treebank both = gold;
  both.insert(both.end(), pred.begin(), pred.end());
  const Vocab vocab = Vocab::build(both);
  std::vector<ParseTree> p;
  std::vector<ParseTree> g;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    p.push_back(gold_tree(pred[i], vocab));
    g.push_back(gold_tree(gold[i], vocab));
  }
  out << format_scores(evaluate(p, g)) << '\n';
  return kExitOk;
}

int cmd_bench(const std::vector<std::size_t>& dims, const std::vector<std::string>& variants,
              std::size_t repeats, std::size_t pairs, const std::string& csv_path, std::ostream& out) {
  BenchConfig config;
  config.dims = dims;
  config.repeats = repeats;
  config.min_pairs = pairs;
  config.variants.clear();
  for (const auto& v : variants) config.variants.push_back(parse_variant(v));
  const std::string csv = format_bench_csv(run_bench(config));
  if (csv_path.empty()) {
    out << csv;
  } else {
    write_text(csv_path, csv);
  }
  return kExitOk;
}

int cmd_params(std::size_t n, std::size_t m, std::size_t labels, const std::string& csv_path, std::ostream& out) {
  const ParamReport report = reduction_report(n, m, labels);
  out << format_report_text(report);
  if (!csv_path.empty()) write_text(csv_path, format_report_csv(report));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-based dependency parser with structured bilinear classifiers", "cirparse"};
  app.require_subcommand(1);

  Overrides train_overrides;
  std::string train_path, dev_path, model_out;
  CLI::App* train = app.add_subcommand("train", "train a parser");
  train->add_option("--train", train_path, "training treebank (CoNLL-U)")->required();
  train->add_option("--dev", dev_path, "development treebank (CoNLL-U)");
  train->add_option("--out", model_out, "model file to write")->required();
  train_overrides.attach(*train);

  std::string model_path, in_path, out_path;
  CLI::App* parse = app.add_subcommand("parse", "parse a CoNLL-U file");
  parse->add_option("--model", model_path)->required();
  parse->add_option("--input", in_path)->required();
  parse->add_option("--output", out_path)->required();

  std::string eval_model, pred_path, gold_path;
  CLI::App* eval = app.add_subcommand("eval", "attachment scores against a gold treebank");
  eval->add_option("--gold", gold_path)->required();
  auto* eval_model_opt = eval->add_option("--model", eval_model, "parse the gold file with this model");
  auto* pred_opt = eval->add_option("--pred", pred_path, "already parsed CoNLL-U file");
  eval_model_opt->excludes(pred_opt);

  std::vector<std::size_t> dims{256, 512};
  std::vector<std::string> bench_variants{"dense", "symmetric", "circulant"};
  std::size_t repeats = 7;
  std::size_t pairs = 10000;
  std::string bench_csv;
  CLI::App* bench = app.add_subcommand("bench", "time arc score grids per variant");
  bench->add_option("--dims", dims)->delimiter(',');
  bench->add_option("--variants", bench_variants)->delimiter(',');
  bench->add_option("--repeats", repeats);
  bench->add_option("--pairs", pairs, "minimum scored pairs per run");
  bench->add_option("--csv", bench_csv, "write CSV here instead of stdout");

  std::size_t p_arc = 400, p_label = 100, p_labels = 37;
  std::string params_csv;
  CLI::App* params = app.add_subcommand("params", "parameter counts per classifier variant");
  params->add_option("--arc-dim", p_arc);
  params->add_option("--label-dim", p_label);
  params->add_option("--labels", p_labels);
  params->add_option("--csv", params_csv);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_overrides, train_path, dev_path, model_out, out);
    if (*parse) return cmd_parse(model_path, in_path, out_path);
    if (*eval) {
      if (eval_model.empty() == pred_path.empty()) {
        err << "error: eval needs exactly one of --model or --pred\n";
        return kExitUsage;
      }
      return cmd_eval(eval_model, pred_path, gold_path, out);
    }
    if (*bench) return cmd_bench(dims, bench_variants, repeats, pairs, bench_csv, out);
    if (*params) return cmd_params(p_arc, p_label, p_labels, params_csv, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace cirparse
