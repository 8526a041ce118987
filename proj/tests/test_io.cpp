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

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "vgsim/error.hpp"
#include "vgsim/io.hpp"
#include "vgsim/report.hpp"

using namespace vgsim;

TEST_CASE("strict numeric parsing") {
  CHECK(io::parse_double("1.5", "x") == 1.5);
  CHECK(io::parse_double(" -2e-3 ", "x") == -2e-3);
  CHECK_THROWS_AS(io::parse_double("1.5abc", "x"), Error);
  CHECK_THROWS_AS(io::parse_double("", "x"), Error);
  CHECK_THROWS_AS(io::parse_double("nan", "x"), Error);
  CHECK_THROWS_AS(io::parse_double("inf", "x"), Error);
  CHECK(io::parse_int("42", "x") == 42);
  CHECK_THROWS_AS(io::parse_int("4.2", "x"), Error);
  CHECK(io::parse_bool("true", "x"));
  CHECK_FALSE(io::parse_bool("0", "x"));
  CHECK_THROWS_AS(io::parse_bool("maybe", "x"), Error);
}

TEST_CASE("parse errors carry their context") {
  try {
    io::parse_double("oops", "file.txt:7");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find("file.txt:7") != std::string::npos);
  }
}

TEST_CASE("round-trip formatting reproduces every double") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 30) - 15);
    CHECK(io::parse_double(io::format_roundtrip(x), "x") == x);
  }
  CHECK(io::format_roundtrip(0.1) == "0.1");
}

TEST_CASE("fixed and significant-digit formatting") {
  CHECK(io::format_fixed(71.154, 2) == "71.15");
  CHECK(io::format_fixed(-0.001, 2) == "0.00");
  CHECK(io::format_fixed(0.84729786, 4) == "0.8473");
  CHECK(io::format_sig(1234567.0) == "1.23457e+06");
  CHECK(io::format_sig(0.5) == "0.5");
}

TEST_CASE("splitting helpers") {
  CHECK(io::split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(io::split_whitespace("  a \t b  c ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(io::trim("  x y  ") == "x y");
}

TEST_CASE("csv table reading") {
  const std::filesystem::path dir(VGSIM_TEST_TMP);
  io::write_text(dir / "t.csv", "# comment\nid,val\n\na,1\nb,2\n");
  const auto t = io::CsvTable::read(dir / "t.csv");
  CHECK(t.header() == std::vector<std::string>{"id", "val"});
  REQUIRE(t.rows().size() == 2);
  CHECK(t.rows()[1].line == 5);
  CHECK(t.column("val") == 1);
  CHECK(t.where(t.rows()[0]).find(":4") != std::string::npos);
  CHECK_THROWS_AS(t.column("missing"), Error);

  io::write_text(dir / "ragged.csv", "id,val\na,1,extra\n");
  CHECK_THROWS_AS(io::CsvTable::read(dir / "ragged.csv"), Error);
  CHECK_THROWS_AS(io::CsvTable::read(dir / "nope.csv"), Error);
}

TEST_CASE("fnv-1a reference vectors") {
  CHECK(report::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(report::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(report::fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(report::hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("cell table layout") {
  report::CellRow row{"Max: X", {52.17, 60.87, 69.57, 81.82, 91.30}, 71.146, 0.896};
  const auto csv = report::cell_table_csv({row}, true);
  CHECK(csv == "model,A.Far,A.Near,C.Far,C.Near,C.Max,Mean,Delta\nMax: X,52.17,60.87,69.57,81.82,91.30,71.15,0.90\n");
}

TEST_CASE("output set writes nothing until commit") {
  const std::filesystem::path dir = std::filesystem::path(VGSIM_TEST_TMP) / "outset";
  std::filesystem::remove_all(dir);
  report::OutputSet out;
  out.add("a.txt", "A");
  CHECK_THROWS_AS(out.add("a.txt", "again"), Error);
  CHECK_FALSE(std::filesystem::exists(dir));
  out.commit(dir);
  CHECK(io::read_lines(dir / "a.txt") == std::vector<std::string>{"A"});
}
