#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracucp/cli.hpp"
#include "fracucp/errors.hpp"

using namespace fracucp;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("fracucp_cli_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string schema_path(const std::string& command, const json& cfg) {
  try {
    cli::run(command, cfg, {scratch("schema"), std::nullopt, 1});
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<no error>";
}

const json char_cfg = {{"dim", 2}, {"spec", {{"orders", {0.8}}, {"weights", {1.0}}}}, {"n_samples", 40}};

}  // namespace

TEST(Cli, CommandList) {
  const auto& c = cli::commands();
  EXPECT_EQ(c.size(), 10u);
  for (const char* name : {"caputo-check", "symbol-bracket", "char-sample", "lemma21", "garding", "lemma61", "solve",
                           "carleman-sweep", "ucp-demo", "continuation-plan"})
    EXPECT_NE(std::find(c.begin(), c.end(), name), c.end()) << name;
}

TEST(Cli, SchemaErrorsNameThePath) {
  EXPECT_EQ(schema_path("lemma21", json::object()), "/dims");
  EXPECT_EQ(schema_path("lemma61", {{"dims", {1}}, {"alphas", {0.5}}}), "/stages");
  EXPECT_EQ(schema_path("caputo-check", {{"alphas", {0.5}}, {"n_steps", 10}, {"extra", 1}}), "/extra");
  EXPECT_EQ(schema_path("caputo-check", {{"alphas", "0.5"}, {"n_steps", 10}}), "/alphas");
  EXPECT_EQ(schema_path("solve", {{"dim", 1}, {"spec", {{"orders", {0.5}}}}, {"n_cells", 8}, {"n_steps", 8}}),
            "/spec/weights");
  EXPECT_EQ(schema_path("solve", {{"dim", 1}, {"spec", {{"orders", {2.5}}, {"weights", {1}}}}, {"n_cells", 8}, {"n_steps", 8}}),
            "/spec");
  EXPECT_EQ(schema_path("ucp-demo", {{"sources", {{{"centre", {0.1}}}}}}), "/sources/0/centre");
  EXPECT_EQ(schema_path("char-sample", {{"dim", 2}, {"spec", {{"orders", {0.8}}, {"weights", {1.0}}}}, {"n_samples", 4},
                                        {"coeffs", "nope"}}),
            "/coeffs");
  EXPECT_EQ(schema_path("nope", json::object()), "/");
}

TEST(Cli, SeedDeterminesOutputIndependentOfThreads) {
  const auto a = scratch("a"), b = scratch("b"), c = scratch("c");
  cli::run("char-sample", char_cfg, {a, 5, 1});
  cli::run("char-sample", char_cfg, {b, 5, 3});
  cli::run("char-sample", char_cfg, {c, 6, 1});
  EXPECT_EQ(slurp(a / "char-sample.csv"), slurp(b / "char-sample.csv"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_NE(slurp(a / "char-sample.csv"), slurp(c / "char-sample.csv"));
}

TEST(Cli, CommandLineSeedOverridesConfig) {
  json cfg = char_cfg;
  cfg["seed"] = 6;
  const auto from_cfg = scratch("seed_cfg"), flag6 = scratch("seed_flag6"), flag5 = scratch("seed_flag5");
  EXPECT_EQ(cli::run("char-sample", cfg, {from_cfg, std::nullopt, 1}).summary["seed"], 6);
  cli::run("char-sample", char_cfg, {flag6, 6, 1});
  EXPECT_EQ(cli::run("char-sample", cfg, {flag5, 5, 1}).summary["seed"], 5);
  EXPECT_EQ(slurp(from_cfg / "char-sample.csv"), slurp(flag6 / "char-sample.csv"));
  EXPECT_NE(slurp(from_cfg / "char-sample.csv"), slurp(flag5 / "char-sample.csv"));
}

TEST(Cli, OutputsCarryFullPrecisionAndStatus) {
  const auto dir = scratch("caputo");
  const auto r = cli::run("caputo-check", {{"alphas", {0.5, 1.5}}, {"n_steps", 256}}, {dir, std::nullopt, 1});
  EXPECT_TRUE(r.pass);
  const json s = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(s["status"], "PASS");
  EXPECT_EQ(s["command"], "caputo-check");
  std::ifstream csv(dir / "caputo-check.csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(header, "alpha,exact,l1,oracle,l1_rel_error,oracle_rel_error");
  EXPECT_NE(row.find("1.5045055561273502"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "caputo-check.xy"));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("exit");
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "cfg.json";
  {
    std::ofstream os(cfg);
    os << "{}";
  }
  const std::string out = (dir / "out").string(), cfg_s = cfg.string();
  auto call = [&](std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main_entry(static_cast<int>(argv.size()), argv.data());
  };
  EXPECT_EQ(call({"fracucp", "lemma21", "--config", cfg_s, "--out", out}), 2);
  {
    std::ofstream os(cfg);
    os << R"({"dim": 1, "s_max": 3})";
  }
  EXPECT_EQ(call({"fracucp", "continuation-plan", "--config", cfg_s, "--out", out}), 0);
  {
    std::ofstream os(cfg);
    os << R"({"alphas": [0.5], "n_steps": 4, "l1_tolerance": 1e-12})";
  }
  EXPECT_EQ(call({"fracucp", "caputo-check", "--config", cfg_s, "--out", out}), 1);
  {
    std::ofstream os(cfg);
    os << "{not json";
  }
  EXPECT_EQ(call({"fracucp", "caputo-check", "--config", cfg_s, "--out", out}), 2);
}
