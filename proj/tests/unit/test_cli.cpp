#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("advscen_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& rel) const { return dir_ / rel; }

  Outcome run(const std::string& args) const {
    const fs::path o = dir_ / "stdout.txt", e = dir_ / "stderr.txt";
    const std::string cmd = std::string("env -u ADVSCEN_CONFIG \"") + ADVSCEN_CLI + "\" " + args + " >\"" +
                            o.string() + "\" 2>\"" + e.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
  }

  fs::path write_config(const std::string& name, const nlohmann::json& j) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  // Small corpus plus its ingested store.
  void make_corpus() {
    cfg_ = write_config("cfg.json", {{"synth", {{"clusters", 6}, {"frames", 60}, {"seed", 3}}},
                                     {"train",
                                      {{"total_steps", 40},
                                       {"steps_per_epoch", 20},
                                       {"batch_size", 16},
                                       {"hidden", {16, 16}},
                                       {"warm_start", 20},
                                       {"eval_episodes", 2},
                                       {"log_interval", 10}}},
                                     {"eval", {{"episodes", 6}, {"seeds", {0}}}}});
    ASSERT_EQ(run("synth-ndd --config " + cfg_.string() + " --out " + path("synth").string()).code, 0);
    ASSERT_EQ(run("ingest --config " + cfg_.string() + " --input " + path("synth/tracks.csv").string() +
                  " --out " + path("ing").string())
                  .code,
              0);
  }

  fs::path dir_;
  fs::path cfg_;
};

TEST_F(Cli, SynthIsDeterministicWithConfiguredRowCount) {
  const auto cfg = write_config("c.json", {{"synth", {{"clusters", 4}, {"frames", 30}, {"seed", 9}}}});
  ASSERT_EQ(run("synth-ndd --config " + cfg.string() + " --out " + path("a").string()).code, 0);
  ASSERT_EQ(run("synth-ndd --config " + cfg.string() + " --out " + path("b").string()).code, 0);
  EXPECT_EQ(slurp(path("a/tracks.csv")), slurp(path("b/tracks.csv")));
  // Two vehicles per cluster by default.
  EXPECT_EQ(lines(path("a/tracks.csv")).size(), 1u + 4 * 2 * 30);
  ASSERT_EQ(run("synth-ndd --config " + cfg.string() + " --seed 10 --out " + path("c").string()).code, 0);
  EXPECT_NE(slurp(path("a/tracks.csv")), slurp(path("c/tracks.csv")));
}

TEST_F(Cli, IngestReportMatchesCorpusScan) {
  make_corpus();
  const auto rep = nlohmann::json::parse(slurp(path("ing/ingest_report.json")));
  const auto rows = lines(path("synth/tracks.csv"));
  std::set<std::string> ids;
  const auto header = split(rows.front());
  const auto id_col = std::find(header.begin(), header.end(), "id") - header.begin();
  for (std::size_t i = 1; i < rows.size(); ++i) ids.insert(split(rows[i])[static_cast<std::size_t>(id_col)]);
  EXPECT_EQ(rep["rows"].get<std::size_t>(), rows.size() - 1);
  EXPECT_EQ(rep["vehicles"].get<std::size_t>(), ids.size());
  EXPECT_EQ(rep["rejected_kinematics"].get<std::size_t>(), 0u);
  EXPECT_DOUBLE_EQ(rep["filter_pass_rate"].get<double>(), 1.0);
  EXPECT_GT(rep["segments"].get<std::size_t>(), 0u);
  EXPECT_TRUE(fs::exists(path("ing/manifest.json")));
}

TEST_F(Cli, IngestErrors) {
  const Outcome r = run("ingest --input " + path("nope.csv").string() + " --out " + path("x").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nope.csv"), std::string::npos);
  EXPECT_EQ(run("ingest --out " + path("x").string()).code, 2);
}

TEST_F(Cli, DryRunWritesNothing) {
  make_corpus();
  const Outcome r = run("ingest --dry-run --input " + path("synth/tracks.csv").string() + " --out " +
                    path("dry").string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"segments\""), std::string::npos);
  EXPECT_FALSE(fs::exists(path("dry")));
}

TEST_F(Cli, InvalidRatioIsConfigError) {
  make_corpus();
  const Outcome r = run("train-bv --config " + cfg_.string() + " --ndd " + path("ing").string() +
                    " --ratio lots --out " + path("t").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(Cli, TrainResumeReproducesTheContinuation) {
  make_corpus();
  const std::string base = "train-bv --config " + cfg_.string() + " --ndd " + path("ing").string();
  ASSERT_EQ(run(base + " --out " + path("full").string()).code, 0);
  ASSERT_EQ(run(base + " --steps 20 --out " + path("half").string()).code, 0);
  ASSERT_EQ(run(base + " --resume " + path("half/trainer_state.bin").string() + " --out " +
                path("rest").string())
                .code,
            0);
  const auto full = lines(path("full/train_log.csv"));
  const auto rest = lines(path("rest/train_log.csv"));
  ASSERT_EQ(full.size(), 5u);
  ASSERT_EQ(rest.size(), 3u);
  EXPECT_EQ(rest[1], full[3]);
  EXPECT_EQ(rest[2], full[4]);
  EXPECT_EQ(slurp(path("full/bv_policy.bin")), slurp(path("rest/bv_policy.bin")));
}

TEST_F(Cli, EvaluateWritesOneRowPerSeedAndAMean) {
  const Outcome r = run("evaluate --bv fvdm --av uniform --episodes 4 --seeds 1,2,3 --out " + path("e").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = lines(path("e/metrics.csv"));
  ASSERT_EQ(m.size(), 5u);
  EXPECT_EQ(split(m[1])[2], "1");
  EXPECT_EQ(split(m[3])[2], "3");
  EXPECT_EQ(split(m[4])[2], "mean");
  EXPECT_EQ(lines(path("e/episodes.csv")).size(), 1u + 12);
}

TEST_F(Cli, UnknownAvNameListsValidNames) {
  const Outcome r = run("evaluate --bv dr --av robot --out " + path("e").string());
  EXPECT_EQ(r.code, 2);
  for (const char* name : {"uniform", "sumo", "fvdm"}) EXPECT_NE(r.err.find(name), std::string::npos) << name;
  EXPECT_FALSE(fs::exists(path("e/metrics.csv")));
}

TEST_F(Cli, DrAgainstSumoRarelyCollides) {
  const Outcome r = run("evaluate --bv dr --av sumo --episodes 30 --seeds 4 --out " + path("e").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = lines(path("e/metrics.csv"));
  EXPECT_LE(std::stod(split(m[1])[5]), 2.0);
}

TEST_F(Cli, EvaluateIsDeterministic) {
  const std::string args = "evaluate --bv dr --av uniform --episodes 5 --seeds 7,8 --out ";
  ASSERT_EQ(run(args + path("a").string()).code, 0);
  ASSERT_EQ(run(args + path("b").string()).code, 0);
  EXPECT_EQ(slurp(path("a/metrics.csv")), slurp(path("b/metrics.csv")));
  EXPECT_EQ(slurp(path("a/episodes.csv")), slurp(path("b/episodes.csv")));
}

TEST_F(Cli, ReportFrequencySumEqualsEvaluatedCpm) {
  ASSERT_EQ(run("evaluate --bv fvdm --av uniform --episodes 20 --seeds 5 --record --out " + path("e").string())
                .code,
            0);
  ASSERT_EQ(run("report --logs " + path("e").string() + " --out " + path("r").string()).code, 0);
  const double cpm = std::stod(split(lines(path("e/metrics.csv"))[1])[9]);
  const auto s = split(lines(path("r/summary.csv"))[1]);
  EXPECT_NEAR(std::stod(s[5]), cpm, 1e-9 * std::max(1.0, cpm));
  EXPECT_NEAR(std::stod(s[4]), cpm, 1e-9 * std::max(1.0, cpm));
  EXPECT_TRUE(fs::exists(path("r/following_distance.csv")));

  // Outputs parse back: every histogram row has lo < hi and a finite value.
  for (const auto& row : lines(path("r/following_distance.csv"))) {
    const auto c = split(row);
    ASSERT_GE(c.size(), 3u);
    if (c[0] == "bin_left") continue;
    EXPECT_LT(std::stod(c[0]), std::stod(c[1]));
  }
}

TEST_F(Cli, ReportOnEmptyDirectoryFails) {
  fs::create_directories(path("empty"));
  const Outcome r = run("report --logs " + path("empty").string() + " --out " + path("r").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("no episode logs"), std::string::npos);
}

TEST_F(Cli, TrainedCriticFeedsPca) {
  make_corpus();
  ASSERT_EQ(run("train-bv --config " + cfg_.string() + " --ndd " + path("ing").string() + " --out " +
                path("t").string())
                .code,
            0);
  ASSERT_EQ(run("report --logs " + path("t").string() + " --out " + path("r").string()).code, 0);
  const auto pca = lines(path("r/pca.csv"));
  ASSERT_GT(pca.size(), 2u);
  EXPECT_EQ(pca[0], "pc1,pc2,q,source");
  std::set<std::string> sources;
  for (std::size_t i = 1; i < pca.size(); ++i) sources.insert(split(pca[i])[3]);
  EXPECT_EQ(sources, (std::set<std::string>{"real", "sim"}));
}

TEST_F(Cli, ConfigFromEnvironmentAndFlagOverride) {
  const auto cfg = write_config("c.json", {{"eval", {{"episodes", 3}, {"seeds", {2}}}}});
  const fs::path o = path("o.txt");
  const std::string cmd = std::string("ADVSCEN_CONFIG=\"") + cfg.string() + "\" \"" + ADVSCEN_CLI +
                          "\" evaluate --bv dr --av uniform --out " + path("e").string() + " >" + o.string();
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(lines(path("e/episodes.csv")).size(), 4u);
  ASSERT_EQ(run("evaluate --config " + cfg.string() + " --episodes 2 --bv dr --av uniform --out " +
                path("f").string())
                .code,
            0);
  EXPECT_EQ(lines(path("f/episodes.csv")).size(), 3u);
}

TEST_F(Cli, MissingSubcommandIsUsageError) { EXPECT_EQ(run("").code, 2); }

}  // namespace
