/*
 * Copyright 2026 The vgsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vgsim/error.hpp"
#include "vgsim/fixture.hpp"
#include "vgsim/io.hpp"
#include "vgsim/pipeline.hpp"

using namespace vgsim;
using pipeline::RunConfig;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path tmp(const std::string& name) { return fs::path(VGSIM_TEST_TMP) / name; }

const fs::path& fixture_dir() {
  static const fs::path dir = [] {
    const auto d = tmp("fixture");
    fs::remove_all(d);
    fixture::write_fixture(d, 1);
    return d;
  }();
  return dir;
}

RunConfig fixture_config() {
  auto cfg = RunConfig::load(fixture_dir() / "config.txt");
  cfg.set("epochs", "8");
  return cfg;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void check_provenance(const report::OutputSet& out, const RunConfig& cfg) {
  const std::string expected = "# vgsim config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed());
  for (const auto& [name, content] : out.files()) {
    if (name.size() > 4 && name.substr(name.size() - 4) == ".csv") {
      INFO(name);
      CHECK(content.rfind(expected + "\n", 0) == 0);
    }
  }
}

}  // namespace

TEST_CASE("run configuration") {
  const auto base = tmp("cfgdir");
  fs::create_directories(base);
  io::write_text(base / "run.txt", "# run\nembeddings = data/e.txt\nseed = 7\nout_dir = results\nlambda = 0.5\n");
  auto cfg = RunConfig::load(base / "run.txt");
  CHECK(cfg.seed() == 7);
  CHECK(cfg.path("embeddings") == base / "data/e.txt");
  CHECK(cfg.has("out-dir"));
  CHECK(cfg.number("lambda", 0) == 0.5);
  CHECK(cfg.number("missing", 3.0) == 3.0);
  CHECK(cfg.count("epochs", 12) == 12);
  CHECK_FALSE(cfg.flag("include-catch", false));
  try {
    cfg.require("trials");
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
    CHECK(std::string(e.what()).find("trials") != std::string::npos);
  }
  cfg.set("benchmarks", "a.tsv,b.tsv", "/x");
  CHECK(cfg.paths("benchmarks") == std::vector<fs::path>{"/x/a.tsv", "/x/b.tsv"});
  CHECK_THROWS_AS(RunConfig::parse("no equals sign\n", base), Error);
  cfg.set("epochs", "many");
  CHECK_THROWS_AS(cfg.count("epochs", 1), Error);
  cfg.set("include-catch", "maybe");
  CHECK_THROWS_AS(cfg.flag("include-catch", false), Error);
}

TEST_CASE("config hash ignores output location only") {
  auto a = RunConfig::parse("seed = 1\ntrials = t.csv\n", "/base");
  auto b = RunConfig::parse("trials = t.csv\nseed = 1\n", "/base");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.set("out-dir", "/elsewhere");
  CHECK(a.hash() == b.hash());
  b.set("seed", "2");
  CHECK(a.hash() != b.hash());
}

TEST_CASE("default model formula") {
  const auto spec = pipeline::default_gam_spec();
  REQUIRE(spec.factors.size() == 2);
  CHECK(spec.factors[0].name == "WordType");
  CHECK(spec.factors[0].levels[0] == "abstract");
  CHECK(spec.factors[1].levels == std::vector<std::string>{"far", "near", "max"});
  CHECK(spec.linear.size() == 2);
  REQUIRE(spec.interactions.size() == 1);
  CHECK(spec.interactions[0].label() == "WordType=concrete:Distance=near");
  CHECK(spec.smooths.size() == 3);
  for (const auto& s : spec.smooths) CHECK(s.k == 5);
}

TEST_CASE("train-map and retrieval") {
  auto cfg = fixture_config();
  cfg.set("retrieve", "w100,w101");
  const auto out = pipeline::run("train-map", cfg);
  CHECK(out.contains("map.txt"));
  CHECK(out.contains("retrievals.csv"));
  const auto report = json::parse(out.at("map_report.json"));
  CHECK(report["command"] == "train-map");
  CHECK(report["config_hash"] == cfg.hash());
  check_provenance(out, cfg);
  CHECK(lines(out.at("retrievals.csv")).size() >= 4);

  cfg.set("lambda", "-1");
  CHECK_THROWS_AS(pipeline::run("train-map", cfg), Error);
}

TEST_CASE("ground, simulate and fit-gam chain") {
  auto cfg = fixture_config();
  const auto grounded = pipeline::run("ground", cfg);
  for (const char* f : {"alignment.txt", "grounded.txt", "training_log.csv", "ground_report.json"}) {
    CHECK(grounded.contains(f));
  }
  check_provenance(grounded, cfg);
  const auto log = lines(grounded.at("training_log.csv"));
  CHECK(log.size() == 2 + 8);
  grounded.commit(tmp("ground"));

  // Reusing the saved alignment gives the same grounded space.
  auto reuse = fixture_config();
  reuse.set("alignment", (tmp("ground") / "alignment.txt").string());
  const auto again = pipeline::run("ground", reuse);
  CHECK(again.at("grounded.txt") == grounded.at("grounded.txt"));

  auto sim_cfg = fixture_config();
  sim_cfg.set("grounded-embeddings", (tmp("ground") / "grounded.txt").string());
  const auto sim = pipeline::run("simulate", sim_cfg);
  for (const char* f : {"measures_textual.csv", "measures_grounded.csv", "exclusions_textual.csv", "report.csv",
                        "report.json", "above_chance.csv", "accuracy.csv", "comparison.csv", "sign_tests.csv"}) {
    INFO(f);
    CHECK(sim.contains(f));
  }
  check_provenance(sim, sim_cfg);
  const auto report = lines(sim.at("report.csv"));
  REQUIRE(report.size() == 5);
  CHECK(report[1] == "model,A.Far,A.Near,C.Far,C.Near,C.Max,Mean,Delta");
  CHECK(report[4].rfind("Participants,", 0) == 0);
  const auto rj = json::parse(sim.at("report.json"));
  CHECK(rj["spaces"][0]["excluded"] == 2);
  CHECK(rj["spaces"][0]["catch_trials_skipped"] == 4);
  CHECK(rj["spaces"][0]["above_chance"]["successes"] == 100);
  CHECK(rj["participants"]["mean"].get<double>() == doctest::Approx(69.618).epsilon(1e-3));
  const auto excl = sim.at("exclusions_textual.csv");
  CHECK(excl.find("X001") != std::string::npos);
  sim.commit(tmp("simulate"));

  auto gam_cfg = fixture_config();
  gam_cfg.set("measures", (tmp("simulate") / "measures_textual.csv").string());
  gam_cfg.set("grounded-measures", (tmp("simulate") / "measures_grounded.csv").string());
  const auto gam = pipeline::run("fit-gam", gam_cfg);
  for (const char* f : {"gam_summary_textual.csv", "gam_summary_grounded.csv", "gam_accuracy.csv",
                        "gam_report.json", "aic_comparison.csv"}) {
    INFO(f);
    CHECK(gam.contains(f));
  }
  check_provenance(gam, gam_cfg);
  const auto summary = lines(gam.at("gam_summary_textual.csv"));
  CHECK(summary[1] == "A. parametric coefficients,Estimate,Std. Error,z-value,p-value");
  CHECK(summary[2].rfind("(Intercept),", 0) == 0);
  CHECK(summary[8] == "WordType=concrete:Distance=near," + summary[8].substr(summary[8].find(',') + 1));
  CHECK(summary[9] == "B. smooth terms,edf,Chi.sq,df,p-value");
  CHECK(summary.size() == 13);
  const auto gj = json::parse(gam.at("gam_report.json"));
  for (const auto& fit : gj["fits"]) {
    CHECK(fit["aic"].get<double>() ==
          doctest::Approx(fit["deviance"].get<double>() + 2 * fit["edf"].get<double>()).epsilon(1e-5));
  }
  const auto aic = lines(gam.at("aic_comparison.csv"));
  REQUIRE(aic.size() == 4);
  CHECK(aic[1] == "model,aic,delta_aic");
  CHECK(aic[2].find(",0\n") == std::string::npos);

  // Computing measures inline gives the same fits.
  auto inline_cfg = fixture_config();
  inline_cfg.set("grounded-embeddings", (tmp("ground") / "grounded.txt").string());
  const auto inline_gam = pipeline::run("fit-gam", inline_cfg);
  CHECK(lines(inline_gam.at("gam_summary_textual.csv")).size() == summary.size());
  CHECK(lines(inline_gam.at("gam_summary_textual.csv"))[2] == summary[2]);
}

TEST_CASE("intercept-only GAM on the fixture responses") {
  auto cfg = fixture_config();
  cfg.set("gam-spec", (fixture_dir() / "gam_intercept.txt").string());
  const auto out = pipeline::run("fit-gam", cfg);
  const auto summary = lines(out.at("gam_summary_textual.csv"));
  // 700 of 1000 responses on the regular trials chose the predicted image.
  CHECK(summary[2].rfind("(Intercept),0.8473,", 0) == 0);
}

TEST_CASE("bench command") {
  const auto out = pipeline::run("bench", fixture_config());
  CHECK(out.contains("bench.csv"));
  const auto j = json::parse(out.at("bench.json"));
  CHECK(j["command"] == "bench");
  check_provenance(out, fixture_config());
}

TEST_CASE("stats command") {
  auto cfg = RunConfig::parse("test = cell-report\ncells = 52.17,60.87,69.57,81.82,91.30\nparticipant-mean = 70.25\n", ".");
  auto j = json::parse(pipeline::run("stats", cfg).at("stats.json"));
  CHECK(j["mean"].get<double>() == 71.15);
  CHECK(j["delta"].get<double>() == 0.9);
  cfg.set("cells", "82.61,69.57,56.52,90.91,86.96");
  j = json::parse(pipeline::run("stats", cfg).at("stats.json"));
  CHECK(j["mean"].get<double>() == 77.31);
  CHECK(j["delta"].get<double>() == 7.06);

  auto sign = RunConfig::parse("test = sign\nsuccesses = 8\nn = 10\n", ".");
  j = json::parse(pipeline::run("stats", sign).at("stats.json"));
  CHECK(j["p_two_sided"].get<double>() == 0.109375);
  sign.set("successes", "11");
  CHECK_THROWS_AS(pipeline::run("stats", sign), Error);

  auto cells = RunConfig::parse(
      "test = sign-cells\ntextual-cells = 1,2,3,4,5\ngrounded-cells = 2,3,4,5,6\nparticipant-cells = 1.5,2.5,3.5,4.5,6\n", ".");
  j = json::parse(pipeline::run("stats", cells).at("stats.json"));
  CHECK(j["grounded_larger"]["successes"] == 5);
  CHECK(j["grounded_larger"]["p_value"].get<double>() == 0.0625);
  CHECK(j["grounded_closer"]["ties"] == 4);
  CHECK(j["grounded_closer"]["successes"] == 1);

  CHECK_THROWS_AS(pipeline::run("stats", RunConfig::parse("test = t-test\n", ".")), Error);
  auto short_cells = RunConfig::parse("test = cell-report\ncells = 1,2\nparticipant-mean = 1\n", ".");
  CHECK_THROWS_AS(pipeline::run("stats", short_cells), Error);
}

TEST_CASE("failures leave no outputs behind") {
  auto cfg = fixture_config();
  cfg.set("out-dir", tmp("never").string());
  cfg.set("grounded-embeddings", (fixture_dir() / "missing.txt").string());
  fs::remove_all(tmp("never"));
  CHECK_THROWS_AS(pipeline::run_and_write("simulate", cfg), Error);
  CHECK_FALSE(fs::exists(tmp("never")));
  CHECK_THROWS_AS(pipeline::run("dance", cfg), Error);
}

TEST_CASE("commands are deterministic") {
  auto cfg = fixture_config();
  for (const char* cmd : {"train-map", "ground", "simulate", "fit-gam", "bench"}) {
    INFO(cmd);
    const auto a = pipeline::run(cmd, cfg);
    const auto b = pipeline::run(cmd, cfg);
    CHECK(a.files() == b.files());
  }
}

TEST_CASE("measures roundtrip") {
  const auto out = pipeline::run("simulate", fixture_config());
  const auto path = tmp("measures.csv");
  io::write_text(path, out.at("measures_textual.csv"));
  const auto rows = pipeline::load_measures(path);
  CHECK(rows.size() == 100);
  CHECK(rows[0].trial_id == "T001");
  std::vector<const TrialOutcome*> ptrs;
  for (const auto& r : rows) ptrs.push_back(&r);
  const auto data = pipeline::gam_data(ptrs);
  CHECK(data.rows == 100);
  CHECK(data.factors.count("WordType"));
  CHECK(data.covariates.count("Inter-Image Similarity"));
}
