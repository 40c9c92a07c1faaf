#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "beyt/cli.hpp"
#include "beyt/pipeline.hpp"
#include "beyt/synthetic.hpp"
#include "support.hpp"

using namespace beyt;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Small end-to-end work directory shared by the tests below.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new test::TempDir;
    const auto& d = dir_->path();
    SyntheticConfig sc;
    sc.poets = 3;
    sc.poems_per_poet = 30;
    save_corpus(make_synthetic_corpus(sc), d / "raw.jsonl");
    nlohmann::json cfg = {{"embedding", {{"dims", 16}, {"epochs", 2}}},
                          {"encoder", {{"d_model", 16}, {"d_ff", 32}, {"n_layers", 1}}},
                          {"head", {{"hidden", 32}}},
                          {"train", {{"max_epochs", 3}}}};
    write_file(d / "cfg.json", cfg.dump());
    const std::string c = (d / "cfg.json").string(), w = (d / "w").string();
    for (auto args : std::vector<std::vector<std::string>>{
             {"ingest", "--corpus", (d / "raw.jsonl").string(), "--out", w, "--config", c},
             {"split", "--corpus", w, "--config", c},
             {"train-embeddings", "--workdir", w, "--config", c},
             {"train", "--workdir", w, "--config", c},
             {"evaluate", "--workdir", w, "--config", c}}) {
      const auto r = run(args);
      ASSERT_EQ(r.code, 0) << args[0] << ": " << r.err;
    }
  }
  static void TearDownTestSuite() { delete dir_; }

  static fs::path work() { return dir_->path() / "w"; }
  static std::string config() { return (dir_->path() / "cfg.json").string(); }

  static test::TempDir* dir_;
};

test::TempDir* CliPipeline::dir_ = nullptr;

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kUsageError);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsageError);
  EXPECT_EQ(run({"--help"}).code, cli::kOk);
}

TEST(Cli, IngestMissingCorpus) {
  test::TempDir dir;
  const auto r = run({"ingest", "--corpus", (dir / "nope.jsonl").string(), "--out",
                      (dir / "w").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("corpus not found"), std::string::npos);
}

TEST(Cli, IngestMatchesLibraryFilter) {
  test::TempDir dir;
  SyntheticConfig sc;
  sc.poets = 3;
  sc.poems_per_poet = 20;
  auto c = make_synthetic_corpus(sc);
  auto records = c.records();
  records.push_back(test::poem("tiny-1", "tiny", 10));
  records.back().status = AttributionStatus::contested;
  c = Corpus(records);
  save_corpus(c, dir / "raw.jsonl");
  const auto r = run({"ingest", "--corpus", (dir / "raw.jsonl").string(), "--min-verses", "50",
                      "--out", (dir / "w").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "w" / "stats.json"));
  EXPECT_TRUE(fs::exists(dir / "w" / "config.ingest.json"));
  EXPECT_EQ(load_corpus(dir / "w" / "corpus.jsonl"), filter_corpus(c, 50));
}

TEST_F(CliPipeline, SplitIsReproducibleAndChecked) {
  const auto before = read_file(work() / "split.csv");
  const auto r = run({"split", "--corpus", work().string(), "--config", config()});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0 violations"), std::string::npos);
  EXPECT_EQ(read_file(work() / "split.csv"), before);
  EXPECT_EQ(run({"split", "--corpus", work().string(), "--ratios", "0.8,0.1,0.2"}).code, 2);
  EXPECT_EQ(read_file(work() / "split.csv"), before);
}

TEST_F(CliPipeline, AllReportsWritten) {
  for (const char* level : {"verse", "poem_majority", "poem_weighted", "poem_thresholded"}) {
    EXPECT_TRUE(fs::exists(work() / ("eval_" + std::string(level) + ".json"))) << level;
    EXPECT_TRUE(fs::exists(work() / ("eval_" + std::string(level) + ".txt"))) << level;
  }
  for (const char* cmd : {"ingest", "split", "train-embeddings", "train", "evaluate"})
    EXPECT_TRUE(fs::exists(work() / ("config." + std::string(cmd) + ".json"))) << cmd;
  const auto resolved = nlohmann::json::parse(read_file(work() / "config.train.json"));
  EXPECT_EQ(resolved.at("train").at("max_epochs"), 3);
  EXPECT_EQ(resolved.at("train").at("lr"), ExperimentConfig::desk().train.lr);
}

TEST_F(CliPipeline, FlagsOverrideConfigFile) {
  const auto r = run({"evaluate", "--workdir", work().string(), "--config", config(),
                      "--threshold", "0.7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto resolved = nlohmann::json::parse(read_file(work() / "config.evaluate.json"));
  EXPECT_EQ(resolved.at("threshold"), 0.7);
  run({"evaluate", "--workdir", work().string(), "--config", config()});
}

TEST_F(CliPipeline, SweepCoverageNonIncreasing) {
  const auto r = run({"sweep-thresholds", "--workdir", work().string(), "--taus",
                      "0.5,0.6,0.7,0.8,0.9"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(read_file(work() / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  std::vector<double> coverage;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    coverage.push_back(std::stod(f.at(2)));
  }
  ASSERT_EQ(coverage.size(), 5u);
  for (std::size_t i = 1; i < coverage.size(); ++i) EXPECT_LE(coverage[i], coverage[i - 1]);
}

TEST_F(CliPipeline, PredictSingleVerse) {
  test::TempDir dir;
  PoemRecord r;
  r.poem_id = "q1";
  r.form = "ghazal";
  r.meter = "whatever";
  r.verses = {{"a b", "c"}};
  auto j = nlohmann::json::parse(record_to_json_line(r));
  j.erase("poet");
  j.erase("status");
  write_file(dir / "in.jsonl", j.dump() + "\n");
  const auto res = run({"predict", "--workdir", work().string(), "--input",
                        (dir / "in.jsonl").string(), "--out", (dir / "out").string()});
  ASSERT_EQ(res.code, 0) << res.err;
  std::istringstream csv(read_file(dir / "out" / "verse_predictions.csv"));
  std::string header, row, extra;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_FALSE(std::getline(csv, extra));
  std::vector<std::string> f;
  std::stringstream ls(row);
  for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
  ASSERT_EQ(f.size(), 3u + 3u);
  double sum = 0;
  for (std::size_t i = 3; i < f.size(); ++i) sum += std::stod(f[i]);
  EXPECT_NEAR(sum, 1.0, 1e-6);
  EXPECT_TRUE(fs::exists(dir / "out" / "poem_predictions.csv"));
}

TEST_F(CliPipeline, StaleArtifactsExitThree) {
  test::TempDir copy;
  fs::copy(work(), copy / "w", fs::copy_options::recursive);
  auto corpus = load_corpus(copy / "w" / "corpus.jsonl");
  auto records = corpus.records();
  records.pop_back();
  save_corpus(Corpus(records), copy / "w" / "corpus.jsonl");
  const auto r = run({"evaluate", "--workdir", (copy / "w").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("split.csv"), std::string::npos) << r.err;

  test::TempDir copy2;
  fs::copy(work(), copy2 / "w", fs::copy_options::recursive);
  write_file(copy2 / "w" / "vocab.tsv", Vocabulary({}, {"x"}).serialize());
  const auto r2 = run({"evaluate", "--workdir", (copy2 / "w").string()});
  EXPECT_EQ(r2.code, 3);
  EXPECT_NE(r2.err.find("vocab.tsv"), std::string::npos) << r2.err;
}

TEST_F(CliPipeline, EvaluateIsByteReproducible) {
  const auto before = read_file(work() / "poem_predictions.csv");
  const auto json = read_file(work() / "eval_verse.json");
  ASSERT_EQ(run({"evaluate", "--workdir", work().string(), "--config", config()}).code, 0);
  EXPECT_EQ(read_file(work() / "poem_predictions.csv"), before);
  EXPECT_EQ(read_file(work() / "eval_verse.json"), json);
}
