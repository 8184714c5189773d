#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "skp/cli.hpp"
#include "skp/error.hpp"

namespace {

namespace fs = std::filesystem;

const fs::path kData = SKP_TEST_DATA_DIR;

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "skp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = skp::cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("skp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("pipeline"), std::string::npos);
  EXPECT_EQ(run({"linearize", "--help"}).code, 0);
}

TEST_F(CliTest, LinearizeWritesCorpusStatsAndManifest) {
  const auto out = dir_ / "corpus.jsonl";
  const auto r = run({"linearize", "--in", (kData / "kb200.nt").string(), "--names", (kData / "names.tsv").string(),
                      "--out", out.string(), "--budget", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out));
  ASSERT_TRUE(fs::exists(dir_ / "corpus.stats.json"));
  ASSERT_TRUE(fs::exists(dir_ / "corpus.manifest.json"));

  const auto stats = nlohmann::json::parse(slurp(dir_ / "corpus.stats.json"));
  EXPECT_EQ(stats["triples_in"], 200);
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "corpus.manifest.json"));
  EXPECT_EQ(manifest["inputs"]["dump"]["sha256"], skp::cli::sha256_file(kData / "kb200.nt"));
  EXPECT_EQ(manifest["outputs"]["corpus.jsonl"], skp::cli::sha256_file(out));
  EXPECT_EQ(manifest["config"]["budget"], 100);
}

TEST_F(CliTest, MissingInputIsFailure) {
  const auto r = run({"linearize", "--in", (dir_ / "absent.nt").string(), "--out", (dir_ / "c.jsonl").string()});
  EXPECT_EQ(r.code, 1) << r.err;
}

TEST_F(CliTest, OutOfRangeFractionIsUsageError) {
  const auto r = run({"ablate", "--in", (kData / "kb200.nt").string(), "--out", (dir_ / "a.nt").string(),
                      "--fraction", "1.5"});
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST_F(CliTest, AblateIsSeeded) {
  const auto a = dir_ / "a.nt", b = dir_ / "b.nt";
  for (const auto& p : {a, b})
    ASSERT_EQ(run({"ablate", "--in", (kData / "kb200.nt").string(), "--out", p.string(), "--fraction", "0.5",
                   "--seed", "7"}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_LT(slurp(a).size(), fs::file_size(kData / "kb200.nt"));
}

TEST_F(CliTest, MaskDenseOutput) {
  std::ofstream(dir_ / "layout.json") << R"({"question_len": 1, "passage_lens": [1, 1]})";
  const auto out = dir_ / "mask.txt";
  ASSERT_EQ(run({"mask", "--layout", (dir_ / "layout.json").string(), "--format", "dense", "--out", out.string()}).code, 0);
  EXPECT_EQ(slurp(out), "111\n110\n101\n");
}

TEST_F(CliTest, PipelineIsDeterministicAcrossRunsAndThreads) {
  const auto cfg = (kData / "pipeline.json").string();
  ASSERT_EQ(run({"pipeline", "--config", cfg, "--out-dir", (dir_ / "a").string(), "--threads", "1"}).code, 0);
  ASSERT_EQ(run({"pipeline", "--config", cfg, "--out-dir", (dir_ / "b").string(), "--threads", "1"}).code, 0);
  ASSERT_EQ(run({"pipeline", "--config", cfg, "--out-dir", (dir_ / "c").string(), "--threads", "4"}).code, 0);
  const auto a = dir_contents(dir_ / "a");
  EXPECT_TRUE(a.count("metrics.json"));
  EXPECT_TRUE(a.count("manifest.json"));
  EXPECT_EQ(a, dir_contents(dir_ / "b"));
  EXPECT_EQ(a, dir_contents(dir_ / "c"));
}

TEST(Config, DefaultsAndUnknownKeys) {
  const skp::cli::PipelineConfig c;
  EXPECT_EQ(c.budget, 100u);
  EXPECT_EQ(c.batch_size, 8u);
  EXPECT_EQ(c.k, 100u);
  EXPECT_EQ(c.loss.alpha, 0.6);
  EXPECT_FALSE(c.loss.tau);
  EXPECT_THROW(skp::cli::config_from_json(nlohmann::json::parse(R"({"budgett": 5})"), "."), skp::ConfigError);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  const auto c = skp::cli::config_from_json(nlohmann::json::parse(R"({"dump": "kb.nt"})"), "/data/run");
  ASSERT_TRUE(c.dump);
  EXPECT_EQ(*c.dump, fs::path("/data/run/kb.nt"));
}

TEST(Config, ThreadPrecedence) {
  skp::cli::PipelineConfig c;
  c.threads = 3;
  ::unsetenv("SKP_THREADS");
  EXPECT_EQ(skp::cli::resolve_threads(std::nullopt, c), 3u);
  ::setenv("SKP_THREADS", "5", 1);
  EXPECT_EQ(skp::cli::resolve_threads(std::nullopt, c), 5u);
  EXPECT_EQ(skp::cli::resolve_threads(2, c), 2u);
  ::unsetenv("SKP_THREADS");
}

TEST(Manifest, DigestsAndPaths) {
  EXPECT_EQ(skp::cli::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(skp::cli::manifest_path_for("x/corpus.jsonl"), fs::path("x/corpus.manifest.json"));
}

}  // namespace
