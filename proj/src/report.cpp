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

#include "vgsim/report.hpp"

#include <cmath>
#include <cstdio>
#include <system_error>

#include "vgsim/error.hpp"
#include "vgsim/io.hpp"

namespace vgsim::report {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string provenance_line(const std::string& config_hash, std::uint64_t seed) {
  return "# vgsim config_hash=" + config_hash + " seed=" + std::to_string(seed) + "\n";
}

std::string num(double x) { return std::isfinite(x) ? io::format_sig(x, 6) : "NA"; }
std::string fixed2(double x) { return std::isfinite(x) ? io::format_fixed(x, 2) : "NA"; }
std::string fixed4(double x) { return std::isfinite(x) ? io::format_fixed(x, 4) : "NA"; }

std::string cell_table_csv(const std::vector<CellRow>& rows, bool with_delta) {
  std::string out = "model";
  for (Cell c : kCells) out += std::string(",") + cell_label(c);
  out += ",Mean";
  if (with_delta) out += ",Delta";
  out += "\n";
  for (const auto& r : rows) {
    out += r.label;
    for (double v : r.cells) out += "," + fixed2(v);
    out += "," + fixed2(r.mean);
    if (with_delta) out += "," + (r.delta ? fixed2(*r.delta) : std::string("NA"));
    out += "\n";
  }
  return out;
}

void OutputSet::add(const std::string& name, std::string content) {
  if (!files_.emplace(name, std::move(content)).second) {
    fail(ErrorCode::Internal, "output '" + name + "' produced twice");
  }
}

void OutputSet::commit(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, content] : files_) io::write_text(dir / name, content);
}

}  // namespace vgsim::report
