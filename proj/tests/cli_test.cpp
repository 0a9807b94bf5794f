#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cirparse/cli.hpp"
#include "cirparse/conllu.hpp"
#include "support.hpp"

namespace cirparse {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("cirparse_cli_" + std::to_string(::getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
    write_conllu(dir / "train.conllu", testing::synthetic_treebank(16, 1));
    std::ofstream(dir / "tiny.cfg") << "word_dim = 8\npos_dim = 4\nhidden_dim = 8\nlabel_dim = 6\nepochs = 2\n";
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  CliResult train(const std::string& model, const std::vector<std::string>& extra = {}) {
    std::vector<std::string> args{"train", "--train", path("train.conllu"), "--out", path(model),
                                  "--config", path("tiny.cfg"), "--arc-dim", "10"};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }

  fs::path dir;
};

TEST_F(CliTest, ParamsReportAndCsv) {
  const CliResult r = run({"params", "--csv", path("params.csv")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2632100"), std::string::npos);
  EXPECT_NE(r.out.find("-16.51%"), std::string::npos);
  EXPECT_NE(slurp(dir / "params.csv").find("symmetric,Arc Classifier,1200,"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--train", path("train.conllu")}).code, kExitUsage);
  EXPECT_EQ(train("m.bin", {"--variant", "toeplitz"}).code, kExitUsage);
  EXPECT_EQ(run({"eval", "--gold", path("train.conllu")}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, DataErrors) {
  EXPECT_EQ(run({"parse", "--model", path("missing.bin"), "--input", path("train.conllu"), "--output",
                 path("out.conllu")})
                .code,
            kExitData);
  std::ofstream(dir / "bad.conllu") << "1\tx\t_\tX\n\n";
  EXPECT_EQ(train("m.bin", {"--train", path("bad.conllu")}).code, kExitUsage);  // --train given twice
  const CliResult r = run({"train", "--train", path("bad.conllu"), "--out", path("m.bin")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("bad.conllu:1"), std::string::npos) << r.err;
  std::ofstream(dir / "empty.conllu") << "";
  EXPECT_EQ(run({"train", "--train", path("empty.conllu"), "--out", path("m.bin")}).code, kExitData);
}

TEST_F(CliTest, TrainParseEvalRoundTrip) {
  const CliResult t = train("model.bin", {"--variant", "circulant", "--seed", "4"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("epoch,loss,dev_uas,dev_las"), std::string::npos);
  EXPECT_NE(t.out.find("training sentences: 16 of 16"), std::string::npos);

  ASSERT_EQ(run({"parse", "--model", path("model.bin"), "--input", path("train.conllu"), "--output",
                 path("pred.conllu")})
                .code,
            0);
  const Treebank pred = read_conllu(dir / "pred.conllu");
  const Treebank gold = read_conllu(dir / "train.conllu");
  ASSERT_EQ(pred.size(), gold.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    EXPECT_EQ(pred[i].forms, gold[i].forms);
    EXPECT_TRUE(is_arborescence(pred[i].heads, true));
  }

  const CliResult self = run({"eval", "--pred", path("pred.conllu"), "--gold", path("pred.conllu")});
  EXPECT_EQ(self.code, 0);
  EXPECT_NE(self.out.find("UAS 100.00 LAS 100.00"), std::string::npos) << self.out;

  // eval through the model equals eval of the parsed file
  const CliResult via_model = run({"eval", "--model", path("model.bin"), "--gold", path("train.conllu")});
  const CliResult via_file = run({"eval", "--pred", path("pred.conllu"), "--gold", path("train.conllu")});
  EXPECT_EQ(via_model.code, 0);
  EXPECT_EQ(via_model.out, via_file.out);

  // reload and parse again: identical bytes
  ASSERT_EQ(run({"parse", "--model", path("model.bin"), "--input", path("train.conllu"), "--output",
                 path("pred2.conllu")})
                .code,
            0);
  EXPECT_EQ(slurp(dir / "pred.conllu"), slurp(dir / "pred2.conllu"));
}

TEST_F(CliTest, TrainingIsDeterministic) {
  const CliResult a = train("a.bin", {"--variant", "symmetric"});
  const CliResult b = train("b.bin", {"--variant", "symmetric"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out.substr(a.out.find("epoch")), b.out.substr(b.out.find("epoch")).replace(
                                                    b.out.substr(b.out.find("epoch")).find("b.bin"), 5, "a.bin"));
  EXPECT_EQ(slurp(dir / "a.bin"), slurp(dir / "b.bin"));
}

TEST_F(CliTest, SubsampleHalvesTrainingSet) {
  const CliResult r = train("half.bin", {"--subsample", "0.5", "--epochs", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("training sentences: 8 of 16"), std::string::npos) << r.out;
}

TEST_F(CliTest, EmptyInputParsesToEmptyOutput) {
  ASSERT_EQ(train("m.bin", {"--epochs", "1"}).code, 0);
  std::ofstream(dir / "empty.conllu") << "";
  ASSERT_EQ(run({"parse", "--model", path("m.bin"), "--input", path("empty.conllu"), "--output",
                 path("out.conllu")})
                .code,
            0);
  EXPECT_EQ(slurp(dir / "out.conllu"), "");
}

TEST_F(CliTest, BenchWritesCsv) {
  const CliResult r = run({"bench", "--dims", "4,8", "--repeats", "2", "--pairs", "200", "--csv", path("bench.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "bench.csv");
  EXPECT_EQ(csv.rfind("variant,dim,pairs,median_ms,min_ms,max_ms\n", 0), 0u);
  EXPECT_NE(csv.find("circulant,8,"), std::string::npos);
  EXPECT_EQ(run({"bench", "--dims", "1"}).code, kExitUsage);
}

}  // namespace
}  // namespace cirparse
