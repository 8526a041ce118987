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

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vgsim::io {

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);

// Strict parsers: the whole field must be consumed. `context` is prepended to
// the error message (typically "file:line").
double parse_double(std::string_view field, const std::string& context);
long long parse_int(std::string_view field, const std::string& context);
bool parse_bool(std::string_view field, const std::string& context);

// Shortest representation that parses back to the identical double.
std::string format_roundtrip(double x);
// printf-style "%.<digits>g".
std::string format_sig(double x, int digits = 6);
// printf-style "%.<decimals>f".
std::string format_fixed(double x, int decimals);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);

// Comma-separated table with a header row. Blank lines and lines starting
// with '#' are skipped. No quoting: fields never contain commas.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& path, char sep = ',');

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<CsvRow>& rows() const { return rows_; }
  const std::string& source() const { return source_; }

  // Index of a required column; throws Parse naming the file when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  std::string where(const CsvRow& row) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<CsvRow> rows_;
};

}  // namespace vgsim::io
