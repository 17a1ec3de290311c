#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const char* bin = std::getenv("SK_ADAPT_BIN");
    if (!bin) GTEST_SKIP() << "SK_ADAPT_BIN not set";
    bin_ = bin;
    dir_ = fs::temp_directory_path() / ("sk_adapt_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!dir_.empty()) fs::remove_all(dir_);
  }

  Result run(const std::string& args) const {
    std::string cmd = "cd '" + dir_.string() + "' && '" + bin_ + "' " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  json run_json(const std::string& args) const {
    Result r = run(args);
    EXPECT_EQ(r.code, 0) << args;
    return json::parse(r.out);
  }

  std::string bin_;
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, NoisyFamilyValues) {
  run_json("family noisy-lb --k 2 --out n.json");
  EXPECT_DOUBLE_EQ(run_json("adapt --instance n.json")["results"]["value"].get<double>(), 1.5);
  EXPECT_DOUBLE_EQ(run_json("alg --instance n.json --k 0")["results"]["value"].get<double>(), 1.0);
  auto ev = run_json("eval --instance n.json --policy plan:1");
  EXPECT_EQ(ev["results"]["method"], "exact");
  EXPECT_DOUBLE_EQ(ev["results"]["value"].get<double>(), 1.0);
}

TEST_F(Cli, ReportShape) {
  run_json("family random --n 4 --seed 3 --out r.json");
  auto j = run_json("phi --instance r.json --t 0.5");
  for (const char* key : {"command", "fingerprint", "results", "wall_time"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["fingerprint"].get<std::string>().size(), 16u);
}

TEST_F(Cli, ClosedFormGapUsesSidecar) {
  run_json("family h2-risky --n 6 --out h.json");
  EXPECT_TRUE(fs::exists(dir_ / "h.predictions.json"));
  auto a = run_json("gap --instance h.json --closed-form");
  auto b = run_json("gap --instance h.json");
  EXPECT_NEAR(a["results"]["gap"].get<double>(), b["results"]["gap"].get<double>(), 1e-9);
}

TEST_F(Cli, TreeRoundTrip) {
  run_json("family random --n 5 --seed 8 --out r.json");
  double v = run_json("adapt --instance r.json --tree-out t.json")["results"]["value"].get<double>();
  auto e = run_json("eval --instance r.json --policy tree:@t.json");
  EXPECT_NEAR(e["results"]["value"].get<double>(), v, 1e-11);
}

TEST_F(Cli, MonteCarloIsSeeded) {
  run_json("family random --n 6 --seed 2 --out r.json");
  auto a = run_json("--workers 1 eval --instance r.json --policy greedy0 --method mc --samples 20000 --seed 5");
  auto b = run_json("--workers 3 eval --instance r.json --policy greedy0 --method mc --samples 20000 --seed 5");
  EXPECT_EQ(a["results"]["value"], b["results"]["value"]);
}

TEST_F(Cli, RecursionCsv) {
  Result r = run("--csv bounds recursion --variant nonrisky --k 3");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("1.390625"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("--bogus").code, 2);
  EXPECT_EQ(run("phi").code, 2);
  EXPECT_EQ(run("phi --instance missing.json").code, 2);
  run_json("family random --n 3 --out r.json");
  EXPECT_EQ(run("eval --instance r.json --policy nonsense").code, 2);
  EXPECT_EQ(run("eval --instance r.json --policy plan:9").code, 2);
  std::ofstream(dir_ / "bad.json") << "{not json";
  EXPECT_EQ(run("phi --instance bad.json").code, 2);
}

TEST_F(Cli, SizeLimitExitsThree) {
  run_json("family random --n 20 --out big.json");
  EXPECT_EQ(run("adapt --instance big.json").code, 3);
}

TEST_F(Cli, ReproduceSingleCriterion) {
  Result r = run("reproduce --quick --only 3");
  EXPECT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_TRUE(j.dump().find("\"pass\":true") != std::string::npos);
}
