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
#include <string_view>
#include <vector>

#include "vgsim/simulate.hpp"

namespace vgsim::report {

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

// First line of every CSV report.
std::string provenance_line(const std::string& config_hash, std::uint64_t seed);

// 6 significant digits; "NA" for non-finite values.
std::string num(double x);
std::string fixed2(double x);
std::string fixed4(double x);

struct CellRow {
  std::string label;
  CellValues cells{};
  double mean = 0.0;
  std::optional<double> delta;
};

// `model,A.Far,A.Near,C.Far,C.Near,C.Max,Mean[,Delta]` at two decimals.
std::string cell_table_csv(const std::vector<CellRow>& rows, bool with_delta);

/// Files produced by one command. Nothing touches the disk until commit(),
/// so a failed command leaves no partial results behind.
class OutputSet {
 public:
  void add(const std::string& name, std::string content);
  const std::map<std::string, std::string>& files() const noexcept { return files_; }
  bool contains(const std::string& name) const { return files_.count(name) > 0; }
  const std::string& at(const std::string& name) const { return files_.at(name); }
  void commit(const std::filesystem::path& dir) const;

 private:
  std::map<std::string, std::string> files_;
};

}  // namespace vgsim::report
