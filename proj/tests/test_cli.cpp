#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qlayout/cli.hpp"
#include "qlayout/quad_io.hpp"

using namespace qlayout;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
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
    dir_ = fs::temp_directory_path() /
           ("qlayout_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }
  void write(const std::string& rel, const std::string& text) const { std::ofstream(dir_ / rel) << text; }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"bogus"}).code, 2);
  EXPECT_EQ(cli({"synth"}).code, 2);  // --out-dir is required
  EXPECT_EQ(cli({"eval", "--pred", path("nope.json")}).code, 2);
}

TEST_F(CliTest, RuntimeErrorsReturnOne) {
  write("broken.json", "[{\"center\": ");
  const CliRun r = cli({"eval", "--pred", path("broken.json"), "--gt", path("broken.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);

  write("bad.json", R"({"unknown_section": {}})");
  EXPECT_EQ(cli({"synth", "--config", path("bad.json"), "--out-dir", path("s")}).code, 1);
}

TEST_F(CliTest, SynthRefineEvalPipeline) {
  write("cfg.json", R"({"scene": {"footprint": [[0,0],[5,0],[5,4],[0,4]], "point_density": 500}})");
  ASSERT_EQ(cli({"synth", "--config", path("cfg.json"), "--seed", "3", "--out-dir", path("s")}).code, 0);
  for (const char* f : {"scene.ply", "quads.json", "noisy_quads.json", "synth_report.json"})
    EXPECT_TRUE(fs::exists(dir_ / "s" / f)) << f;
  const auto report = read_json_file(dir_ / "s" / "synth_report.json");
  EXPECT_EQ(report["seed"], 3);
  EXPECT_TRUE(report.contains("config"));

  ASSERT_EQ(cli({"refine", "--config", path("cfg.json"), "--seed", "3", "--cloud", path("s/scene.ply"),
                 "--quads", path("s/noisy_quads.json"), "--out-dir", path("r")})
                .code,
            0);
  const auto gt = load_quads(dir_ / "s" / "quads.json");
  const auto refined = load_quads(dir_ / "r" / "refined_quads.json");
  ASSERT_EQ(gt.size(), refined.size());
  std::vector<double> err;
  for (std::size_t i = 0; i < gt.size(); ++i) err.push_back((gt[i].center - refined[i].center).norm());
  std::sort(err.begin(), err.end());
  EXPECT_LE(err[err.size() / 2], 0.05);
  EXPECT_TRUE(fs::exists(dir_ / "r" / "kept_mask.csv"));
  EXPECT_TRUE(read_json_file(dir_ / "r" / "refine_report.json").contains("config"));

  const CliRun e = cli({"eval", "--pred", path("r/refined_quads.json"), "--gt", path("s/quads.json"),
                     "--out-dir", path("e")});
  ASSERT_EQ(e.code, 0);
  EXPECT_NE(e.out.find("TP="), std::string::npos);
  EXPECT_NE(e.out.find("center_max"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "e" / "eval_report.json"));
  EXPECT_TRUE(fs::exists(dir_ / "e" / "eval_report.csv"));
}

TEST_F(CliTest, EvalIdenticalFilesGivesPerfectF1) {
  ASSERT_EQ(cli({"synth", "--seed", "1", "--out-dir", path("s")}).code, 0);
  const CliRun e = cli({"eval", "--pred", path("s/quads.json"), "--gt", path("s/quads.json")});
  ASSERT_EQ(e.code, 0);
  EXPECT_NE(e.out.find("F1=1"), std::string::npos) << e.out;
}

TEST_F(CliTest, RefineEstimatesMissingNormals) {
  ASSERT_EQ(cli({"synth", "--seed", "2", "--format", "ascii", "--out-dir", path("s")}).code, 0);
  // Strip normals by rewriting the cloud with positions only.
  std::ifstream in(dir_ / "s" / "scene.ply");
  std::ostringstream body;
  std::string line;
  std::size_t n = 0;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      if (line.rfind("element vertex", 0) == 0) n = std::stoul(line.substr(15));
      if (line == "end_header") header = false;
      continue;
    }
    std::istringstream ls(line);
    std::string x, y, z;
    ls >> x >> y >> z;
    body << x << ' ' << y << ' ' << z << '\n';
  }
  write("bare.ply", "ply\nformat ascii 1.0\nelement vertex " + std::to_string(n) +
                        "\nproperty double x\nproperty double y\nproperty double z\nend_header\n" + body.str());
  ASSERT_EQ(cli({"refine", "--seed", "2", "--cloud", path("bare.ply"), "--quads", path("s/noisy_quads.json"),
                 "--out-dir", path("r")})
                .code,
            0);
  EXPECT_EQ(read_json_file(dir_ / "r" / "refine_report.json")["normals_estimated"], true);
}

TEST_F(CliTest, DemoTrainAndPlot) {
  write("cfg.json", R"({"ema": {"steps": 5}, "demo": {"labeled_scenes": 1, "unlabeled_scenes": 1}})");
  ASSERT_EQ(cli({"demo-train", "--config", path("cfg.json"), "--seed", "4", "--out-dir", path("d")}).code, 0);
  const std::string log = slurp(dir_ / "d" / "loss_log.csv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 6);
  EXPECT_EQ(log.rfind("step,supervised,consistency,pseudo_label,effective_lambda_qmt,total", 0), 0u);
  const auto report = read_json_file(dir_ / "d" / "demo_report.json");
  EXPECT_TRUE(report.contains("initial"));
  EXPECT_TRUE(report.contains("final"));

  ASSERT_EQ(cli({"demo-train", "--config", path("cfg.json"), "--seed", "4", "--no-transforms", "--out-dir",
                 path("d0")})
                .code,
            0);
  EXPECT_EQ(read_json_file(dir_ / "d0" / "demo_report.json")["transforms_disabled"], true);

  ASSERT_EQ(cli({"synth", "--seed", "4", "--out-dir", path("s")}).code, 0);
  ASSERT_EQ(cli({"plot", "--cloud", path("s/scene.ply"), "--quads", path("s/noisy_quads.json"), "--gt",
                 path("s/quads.json"), "--out-dir", path("p")})
                .code,
            0);
  const std::string svg = slurp(dir_ / "p" / "layout.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("<desc>"), std::string::npos);
  EXPECT_NE(svg.find("<polygon"), std::string::npos);
}

TEST_F(CliTest, SameSeedSameBytes) {
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(cli({"synth", "--seed", "9", "--out-dir", path("s")}).code, 0);
    fs::rename(dir_ / "s", dir_ / sub);
  }
  for (const char* f : {"scene.ply", "quads.json", "noisy_quads.json", "synth_report.json"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  ASSERT_EQ(cli({"synth", "--seed", "10", "--out-dir", path("c")}).code, 0);
  EXPECT_NE(slurp(dir_ / "a" / "scene.ply"), slurp(dir_ / "c" / "scene.ply"));
}
