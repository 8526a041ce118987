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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vgsim/gam.hpp"
#include "vgsim/report.hpp"
#include "vgsim/simulate.hpp"

namespace vgsim::pipeline {

/// Key-value run configuration. Keys are the long CLI flag names
/// (`embeddings`, `out-dir`, ...). Relative paths resolve against the
/// directory of the file that set them; values set from the command line
/// resolve against the working directory.
class RunConfig {
 public:
  // `key = value` lines; '#' starts a comment line.
  static RunConfig parse(const std::string& text, const std::filesystem::path& base_dir,
                         const std::string& source = "<config>");
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value, const std::filesystem::path& base_dir = {});
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  // Validation error naming the key when absent.
  std::string require(const std::string& key) const;
  std::filesystem::path path(const std::string& key) const;
  std::vector<std::filesystem::path> paths(const std::string& key) const;  // comma-separated

  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::uint64_t seed() const;

  // FNV-1a over the sorted key=value pairs, ignoring where outputs go.
  std::string hash() const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::filesystem::path> base_;
};

inline constexpr const char* kCommands[] = {"train-map", "ground", "simulate", "fit-gam", "bench", "stats"};

/// Runs one subcommand and returns its files without writing them.
report::OutputSet run(const std::string& command, const RunConfig& cfg);

/// run() followed by a commit into `out-dir` (default "out").
report::OutputSet run_and_write(const std::string& command, const RunConfig& cfg);

/// Factors WordType (abstract, concrete) and Distance (far, near, max), both
/// object counts as linear terms, the concrete-near interaction and smooths of
/// the three similarity measures.
gam::GamSpec default_gam_spec();

// Measures CSV as written by `simulate`.
std::string format_measures_csv(const Simulation& sim, const std::string& provenance);
std::vector<TrialOutcome> load_measures(const std::filesystem::path& path);

// GAM inputs from per-trial measures, one row per response.
gam::GamData gam_data(const std::vector<const TrialOutcome*>& rows);

}  // namespace vgsim::pipeline
