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

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vgsim/vgsim.h"

namespace {

struct ConfigDeleter {
  void operator()(vgsim_config* c) const { vgsim_config_free(c); }
};
using ConfigPtr = std::unique_ptr<vgsim_config, ConfigDeleter>;

// Settings exposed as --<key> on every pipeline subcommand.
const std::vector<std::pair<std::string, std::string>> kSettings = {
    {"seed", "Random seed (default 1)"},
    {"out-dir", "Output directory (default ./out)"},
    {"space", "textual | grounded | both"},
    {"setup", "prototype | exemplar"},
    {"embeddings", "Textual embedding file"},
    {"grounded-embeddings", "Grounded embedding file"},
    {"images", "Image vector CSV"},
    {"membership", "Class membership CSV"},
    {"captions", "Training captions TSV"},
    {"val-captions", "Validation captions TSV"},
    {"val-fraction", "Hold-out fraction when no validation captions are given"},
    {"trials", "Trials CSV"},
    {"responses", "Participant responses CSV"},
    {"measures", "Textual measures CSV from simulate"},
    {"grounded-measures", "Grounded measures CSV from simulate"},
    {"gam-spec", "GAM specification file"},
    {"lambda", "Ridge lambda for train-map, or 'default'"},
    {"lambda-grid", "Space-separated GAM smoothing grid"},
    {"per-smooth-lambda", "Select one smoothing parameter per smooth"},
    {"grid-size", "Points per partial-effect curve"},
    {"alignment", "Apply this alignment instead of training one"},
    {"encoder", "mean-pool | gated-recurrent"},
    {"hidden", "Recurrent hidden size"},
    {"epochs", "Training epochs"},
    {"batch", "Mini-batch size"},
    {"lr", "Adam learning rate"},
    {"patience", "Early-stopping patience (0 disables)"},
    {"grounded-dim", "Output dimension of the alignment"},
    {"retrieve", "Comma-separated words to retrieve images for"},
    {"prototype-search", "within-class | global"},
    {"include-catch", "Simulate catch trials too"},
    {"participant-cells", "Five comma-separated participant cell percentages"},
    {"participant-mean", "Participant mean percentage"},
    {"benchmarks", "Comma-separated benchmark TSV files"},
    {"test", "stats: sign | binomial | cell-report | sign-cells"},
    {"successes", "stats: number of successes"},
    {"n", "stats: number of trials"},
    {"p0", "stats: null proportion"},
    {"cells", "stats: five comma-separated cell percentages"},
    {"textual-cells", "stats: textual cell percentages"},
    {"grounded-cells", "stats: grounded cell percentages"},
};

int report_failure(vgsim_status status) {
  std::fprintf(stderr, "vgsim: %s: %s\n", vgsim_status_name(status), vgsim_last_error());
  return status == VGSIM_E_VALIDATION || status == VGSIM_E_INVALID_ARGUMENT ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual grounding and behavioural simulation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vgsim_version()));

  struct Command {
    CLI::App* app = nullptr;
    std::string config;
    std::vector<std::string> overrides;
    std::map<std::string, std::string> values;
  };
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train-map", "Fit a prototype or exemplar cross-modal map"},
      {"ground", "Train or apply a grounding alignment"},
      {"simulate", "Simulate Max choices and report per condition"},
      {"fit-gam", "Fit penalized logistic GAMs to participant choices"},
      {"bench", "Evaluate spaces on similarity benchmarks"},
      {"stats", "Exact binomial, sign and condition-report statistics"},
  };
  std::map<std::string, Command> parsed;
  for (const auto& [name, help] : commands) {
    auto& cmd = parsed[name];
    cmd.app = app.add_subcommand(name, help);
    cmd.app->add_option("--config", cmd.config, "Key-value config file; flags win");
    cmd.app->add_option("--set", cmd.overrides, "Extra key=value setting (repeatable)");
    for (const auto& [key, desc] : kSettings) cmd.app->add_option("--" + key, cmd.values[key], desc);
  }
  std::string fixture_dir = "fixture";
  std::uint64_t fixture_seed = 1;
  auto* fixture = app.add_subcommand("make-fixture", "Write the bundled synthetic study");
  fixture->add_option("--out-dir", fixture_dir, "Destination directory");
  fixture->add_option("--seed", fixture_seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (fixture->parsed()) {
    const auto st = vgsim_make_fixture(fixture_dir.c_str(), fixture_seed);
    if (st != VGSIM_OK) return report_failure(st);
    std::printf("fixture written to %s\n", fixture_dir.c_str());
    return 0;
  }

  for (auto& [name, cmd] : parsed) {
    if (!cmd.app->parsed()) continue;
    vgsim_config* raw = nullptr;
    auto st = cmd.config.empty() ? vgsim_config_new(&raw) : vgsim_config_load(cmd.config.c_str(), &raw);
    if (st != VGSIM_OK) return report_failure(st);
    ConfigPtr cfg(raw);
    for (const auto& kv : cmd.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "vgsim: --set expects key=value, got '%s'\n", kv.c_str());
        return 2;
      }
      st = vgsim_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
      if (st != VGSIM_OK) return report_failure(st);
    }
    for (const auto& [key, desc] : kSettings) {
      if (cmd.app->count("--" + key) == 0) continue;
      st = vgsim_config_set(cfg.get(), key.c_str(), cmd.values[key].c_str());
      if (st != VGSIM_OK) return report_failure(st);
    }
    std::size_t n_files = 0;
    st = vgsim_run(name.c_str(), cfg.get(), &n_files);
    if (st != VGSIM_OK) return report_failure(st);
    std::printf("%s: wrote %zu files\n", name.c_str(), n_files);
    return 0;
  }
  return 2;
}
