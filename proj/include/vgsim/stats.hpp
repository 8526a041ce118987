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
#include <span>
#include <string>
#include <vector>

#include "vgsim/embeddings.hpp"

namespace vgsim::stats {

struct BinomialTest {
  double two_sided = 1.0;  // sum of outcome probabilities <= P(observed)
  double greater = 1.0;    // P(X >= successes)
  double less = 1.0;       // P(X <= successes)
  bool exact = true;
};

// Exact binomial test for n <= 1000, normal approximation with continuity
// correction above. All p-values are clamped to [0, 1].
BinomialTest binomial_test(std::uint64_t successes, std::uint64_t n, double p0);

inline constexpr std::uint64_t kExactLimit = 1000;

double proportions_test(std::uint64_t successes, std::uint64_t n, double p0);
double sign_test(std::uint64_t successes, std::uint64_t n);

// Binomial probability mass; exact in double arithmetic for n <= 56.
double binomial_pmf(std::uint64_t k, std::uint64_t n, double p);

double normal_cdf(double z);
double normal_two_sided_p(double z);
double chi_square_sf(double x, double df);

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> mid_ranks(std::span<const double> xs);
double pearson(std::span<const double> xs, std::span<const double> ys);
double spearman(std::span<const double> xs, std::span<const double> ys);

struct BenchmarkPair {
  std::string word1;
  std::string word2;
  double score = 0.0;
};

struct BenchmarkPairs {
  std::string name;
  std::vector<BenchmarkPair> rows;
};

// TSV `word1<TAB>word2<TAB>score`; the benchmark name defaults to the file stem.
BenchmarkPairs load_benchmark(const std::filesystem::path& path);

struct BenchmarkResult {
  double rho = 0.0;
  double coverage = 0.0;
  std::size_t covered = 0;
  std::size_t total = 0;
};

BenchmarkResult benchmark_eval(const EmbeddingSpace& space, const BenchmarkPairs& pairs);

}  // namespace vgsim::stats
