#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "zenosde/cli.hpp"

namespace fs = std::filesystem;
using zenosde::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("zenosde_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

}  // namespace

TEST_F(CliTest, PresetPrintsConfig) {
  auto r = call({"preset", "case2"});
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["drift"]["coefficients"], nlohmann::json::parse("[-1.0, 0.5]"));
  EXPECT_EQ(call({"preset", "nosuch"}).code, 1);
}

TEST_F(CliTest, SimulateWritesFiles) {
  auto r = call({"simulate", "--preset", "case2", "--seed", "7", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "traj_0.csv"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["parameters"]["seed"], 7);
  EXPECT_TRUE(m.contains("timestamp"));
  EXPECT_TRUE(m.contains("version"));
}

TEST_F(CliTest, ExplodingRunExitsThree) {
  std::ofstream(dir / "boom.json") << R"({"drift": {"kind": "linear", "coefficients": [10.0]},
    "diffusion": {"kind": "linear", "coefficients": [0.0]}, "jump": {"kind": "zero"},
    "initial": {"x0": [1.0]}, "horizon": 5.0})";
  auto r = call({"simulate", "--config", (dir / "boom.json").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_TRUE(fs::exists(dir / "o" / "traj_0.csv"));
  EXPECT_NE(slurp(dir / "o" / "summary.json").find("exploded"), std::string::npos);
}

TEST_F(CliTest, MalformedConfigExitsOne) {
  std::ofstream(dir / "bad.json") << "{\n \"drift\": [1,\n}";
  auto r = call({"simulate", "--config", (dir / "bad.json").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line"), std::string::npos) << r.err;
  std::ofstream(dir / "bad2.json") << R"({"drift": {"kind": "linear", "coefficients": [1.0], "extra": 1}})";
  r = call({"simulate", "--config", (dir / "bad2.json").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("drift.extra"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingInputs) {
  EXPECT_EQ(call({"simulate"}).code, 1);
  EXPECT_EQ(call({"simulate", "--config", (dir / "none.json").string()}).code, 2);
  EXPECT_EQ(call({"bogus"}).code, 1);
}

TEST_F(CliTest, UnwritableOutputExitsTwo) {
  std::ofstream(dir / "file") << "x";
  auto r = call({"simulate", "--preset", "case2", "--out", (dir / "file" / "sub").string()});
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST_F(CliTest, CheckExitCodes) {
  auto c1 = call({"check", "--preset", "case1", "--epsilon", "0.1"});
  EXPECT_EQ(c1.code, 4);
  EXPECT_NE(c1.out.find("0.955"), std::string::npos);
  auto c2 = call({"check", "--preset", "case2", "--epsilon", "0.1"});
  EXPECT_EQ(c2.code, 0) << c2.out;
  EXPECT_NE(c2.out.find("beta 0.025"), std::string::npos);
  auto c3 = call({"check", "--preset", "case3", "--json"});
  EXPECT_EQ(c3.code, 4);
  auto j = nlohmann::json::parse(c3.out);
  EXPECT_FALSE(j["stability_test"]["jump_moment"]["pass"].get<bool>());
  EXPECT_TRUE(j["stability_test"]["jump_moment"]["first_violation"].is_object());
}

TEST_F(CliTest, PresetRoundTripIsByteIdentical) {
  auto p = call({"preset", "case2"});
  std::ofstream(dir / "case2.json") << p.out;
  ASSERT_EQ(call({"simulate", "--preset", "case2", "--seed", "3", "--paths", "2", "--out", (dir / "a").string()}).code,
            0);
  ASSERT_EQ(call({"simulate", "--config", (dir / "case2.json").string(), "--seed", "3", "--paths", "2", "--out",
                  (dir / "b").string()})
                .code,
            0);
  for (const char* f : {"traj_0.csv", "traj_1.csv", "summary.json"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
}

TEST_F(CliTest, ReplayReproducesProbe) {
  auto r = call({"probe", "--preset", "case2", "--kind", "meansq", "--paths", "50", "--threads", "1", "--out",
                 (dir / "run").string()});
  ASSERT_TRUE(r.code == 0 || r.code == 4) << r.err;
  auto rr = call({"replay", (dir / "run" / "manifest.json").string(), "--threads", "3", "--out",
                  (dir / "again").string()});
  ASSERT_EQ(rr.code, r.code) << rr.err;
  for (const char* f : {"report.json", "meansq.csv"}) {
    EXPECT_EQ(slurp(dir / "run" / f), slurp(dir / "again" / f)) << f;
  }
}

TEST_F(CliTest, BlowupProbe) {
  auto r = call({"probe", "--preset", "intro", "--kind", "blowup", "--kmax", "5,10,20", "--paths", "4", "--json",
                 "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["growth"].get<bool>());
  EXPECT_TRUE(fs::exists(dir / "blowup.csv"));
}

TEST_F(CliTest, UnknownProbeKind) {
  EXPECT_EQ(call({"probe", "--preset", "case2", "--kind", "nope", "--out", dir.string()}).code, 1);
}
