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

#include "vgsim/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vgsim/error.hpp"

namespace vgsim {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::Duplicate: return "duplicate";
    case ErrorCode::Singular: return "singular";
    case ErrorCode::NoUsableLabels: return "no-usable-labels";
    case ErrorCode::Convergence: return "convergence";
    case ErrorCode::Separation: return "separation";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

namespace io {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const auto start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view field, const std::string& context) {
  const auto f = trim(field);
  double value = 0.0;
  const auto* first = f.data();
  const auto* last = f.data() + f.size();
  if (!f.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (f.empty() || ec != std::errc() || ptr != last) {
    fail(ErrorCode::Parse, context + ": not a number: '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) {
    fail(ErrorCode::Parse, context + ": non-finite value: '" + std::string(field) + "'");
  }
  return value;
}

long long parse_int(std::string_view field, const std::string& context) {
  const auto f = trim(field);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
  if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
    fail(ErrorCode::Parse, context + ": not an integer: '" + std::string(field) + "'");
  }
  return value;
}

bool parse_bool(std::string_view field, const std::string& context) {
  const auto f = trim(field);
  if (f == "1" || f == "true" || f == "TRUE" || f == "yes") return true;
  if (f == "0" || f == "false" || f == "FALSE" || f == "no" || f.empty()) return false;
  fail(ErrorCode::Parse, context + ": not a boolean: '" + std::string(field) + "'");
}

std::string format_roundtrip(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string format_sig(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string format_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  std::string s = buf;
  // "-0.00" reads badly in tables
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

CsvTable CsvTable::read(const std::filesystem::path& path, char sep) {
  CsvTable table;
  table.source_ = path.string();
  const auto lines = read_lines(path);
  bool have_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto t = trim(lines[i]);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(lines[i], sep);
    for (auto& f : fields) f = std::string(trim(f));
    if (!have_header) {
      table.header_ = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header_.size()) {
      fail(ErrorCode::Parse, table.source_ + ":" + std::to_string(i + 1) + ": expected " +
                                 std::to_string(table.header_.size()) + " fields, found " +
                                 std::to_string(fields.size()));
    }
    table.rows_.push_back({i + 1, std::move(fields)});
  }
  if (!have_header) fail(ErrorCode::Parse, table.source_ + ": missing header row");
  return table;
}

bool CsvTable::has_column(std::string_view name) const {
  for (const auto& h : header_) {
    if (h == name) return true;
  }
  return false;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  fail(ErrorCode::Parse, source_ + ": missing column '" + std::string(name) + "'");
}

std::string CsvTable::where(const CsvRow& row) const {
  return source_ + ":" + std::to_string(row.line);
}

}  // namespace io
}  // namespace vgsim
