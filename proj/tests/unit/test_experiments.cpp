#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "s2ctl/experiments.hpp"

using namespace s2ctl;
namespace fs = std::filesystem;

namespace {

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("s2ctl-unit-" + name);
  fs::remove_all(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli_experiments") {

TEST_CASE("config text parsing") {
  const ConfigMap m = ParseConfigText(
      "j_max = 20   # band\n"
      "[converge]\n"
      "phi = x + y\n"
      "deltas = 1e-1, 1e-2, 1e-3\n"
      "\n[transfer]\nmode=exact\n");
  CHECK(m.at("general.j_max") == "20");
  CHECK(m.at("converge.phi") == "x + y");
  CHECK(m.at("transfer.mode") == "exact");
  CHECK_THROWS_AS(ParseConfigText("[broken\n"), ConfigError);
  CHECK_THROWS_AS(ParseConfigText("novalue\n"), ConfigError);

  ExperimentConfig c;
  c.command = "converge";
  ApplyConfig(m, c);
  CHECK(c.j_max == 20);
  CHECK(c.deltas.size() == 3);
  ValidateConfig(c);
}

TEST_CASE("invalid configurations are rejected") {
  auto rejects = [](const ConfigMap& m) {
    ExperimentConfig c;
    c.command = "converge";
    ApplyConfig(m, c);
    ValidateConfig(c);
  };
  CHECK_THROWS_AS(rejects({{"general.j_max", "zero"}}), ConfigError);
  CHECK_THROWS_AS(rejects({{"general.j_max", "0"}}), ConfigError);
  CHECK_THROWS_AS(rejects({{"converge.deltas", ""}}), ConfigError);
  CHECK_THROWS_AS(rejects({{"converge.deltas", "1e-2, 1e-1"}}), ConfigError);
  CHECK_THROWS_AS(rejects({{"converge.deltas", "-1"}}), ConfigError);
  CHECK_THROWS_AS(rejects({{"converge.phi", "x^^2"}}), ConfigError);
  CHECK_THROWS_AS(rejects({{"converge.u", "1, 2"}}), ConfigError);
  CHECK_THROWS_AS(rejects({{"nosuch.key", "1"}}), ConfigError);
  CHECK_THROWS_AS(rejects({{"transfer.mode", "magic"}}), ConfigError);
  CHECK_THROWS_AS(rejects({{"transfer.mode", "synthesized"}}), ConfigError);
  CHECK_THROWS_AS(rejects({{"plan.execute", "maybe"}}), ConfigError);
  ExperimentConfig bad;
  bad.command = "fly";
  CHECK_THROWS_AS(ValidateConfig(bad), ConfigError);
}

TEST_CASE("config snapshot round trips") {
  ExperimentConfig c;
  c.command = "transfer";
  c.degrees = {1, 3, 5};
  c.potentials = {"x", "y z"};
  c.u = {0.5, 0, -1};
  ExperimentConfig d;
  d.command = "transfer";
  ApplyConfig(ConfigSnapshot(c), d);
  CHECK(ConfigSnapshot(d) == ConfigSnapshot(c));
}

TEST_CASE("sha256 of known strings") {
  CHECK(Sha256Hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(Sha256Hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("double formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, 6.02e23, -2.5e-300}) CHECK(std::stod(FormatDouble(v)) == v);
}

TEST_CASE("manifest detects tampering") {
  const fs::path dir = Scratch("manifest");
  ExperimentConfig c;
  c.command = "saturate";
  c.out_dir = dir.string();
  std::ostringstream log;
  REQUIRE(RunCommand(c, log).exit_code == kExitSuccess);
  CHECK(VerifyManifest(dir).ok);

  std::ofstream(dir / "saturate_dims.csv", std::ios::app) << "3,1\n";
  ManifestCheck after = VerifyManifest(dir);
  CHECK_FALSE(after.ok);
  CHECK_FALSE(after.problems.empty());

  RunCommand(c, log);
  std::ofstream(dir / "stray.txt") << "x";
  CHECK_FALSE(VerifyManifest(dir).ok);
  fs::remove_all(dir);
}

TEST_CASE("saturate command output") {
  const fs::path dir = Scratch("saturate");
  ExperimentConfig c;
  c.command = "saturate";
  c.saturate_n = 3;
  c.out_dir = dir.string();
  std::ostringstream log;
  const CommandOutcome out = RunCommand(c, log);
  CHECK(out.exit_code == kExitSuccess);
  CHECK(Slurp(dir / "saturate_dims.csv") == "level,dimension\n1,3\n2,9\n3,16\n");
  CHECK(log.str().find("truncated") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("reproducible summaries") {
  const fs::path a = Scratch("repro-a"), b = Scratch("repro-b");
  for (const char* command : {"verify-lemma", "converge", "bch-check", "plan"}) {
    ExperimentConfig c;
    c.command = command;
    c.j_max = 12;
    c.verify_n = 3;
    c.verify_pairs = 5;
    c.deltas = {1e-1, 5e-2, 2e-2, 1e-2};
    std::ostringstream log;
    c.out_dir = a.string();
    RunCommand(c, log);
    c.out_dir = b.string();
    RunCommand(c, log);
    for (const auto& entry : fs::directory_iterator(a)) {
      const std::string name = entry.path().filename().string();
      if (name == "manifest.json") continue;
      INFO(command << " " << name);
      CHECK(Slurp(entry.path()) == Slurp(b / name));
    }
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("exit codes") {
  const fs::path dir = Scratch("exit");
  std::ostringstream log;
  ExperimentConfig c;
  c.out_dir = dir.string();

  c.command = "plan";
  c.plan_target = "x^3";
  CHECK(RunCommand(c, log).exit_code == kExitSuiteFailure);

  c.command = "verify-lemma";
  c.verify_n = 2;
  c.verify_pairs = 3;
  c.mutation = true;
  CHECK(RunCommand(c, log).exit_code == kExitSuiteFailure);
  c.mutation = false;
  CHECK(RunCommand(c, log).exit_code == kExitSuccess);

  c.command = "bch-check";
  c.j_max = 12;
  c.bch_tolerance = 1e-30;
  CHECK(RunCommand(c, log).exit_code == kExitSuiteFailure);

  c.deltas.clear();
  CHECK_THROWS_AS(RunCommand(c, log), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("svg rendering") {
  PlotSpec plot;
  plot.title = "a < b";
  plot.log_x = true;
  plot.series = {{"s", {1e-3, 1e-2, 1e-1}, {1, 2, 3}, {false, true, false}, false}};
  const std::string svg = RenderSvg(plot);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a &lt; b") != std::string::npos);
}

}  // TEST_SUITE
