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

#include "vgsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include <boost/math/special_functions/gamma.hpp>

#include "vgsim/error.hpp"
#include "vgsim/io.hpp"

namespace vgsim::stats {

namespace {

void check_counts(std::uint64_t successes, std::uint64_t n, double p0) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "binomial test needs n >= 1");
  if (successes > n) {
    fail(ErrorCode::InvalidArgument, "successes (" + std::to_string(successes) + ") exceed n (" +
                                         std::to_string(n) + ")");
  }
  if (!(p0 > 0.0 && p0 < 1.0)) fail(ErrorCode::InvalidArgument, "p0 must lie in (0, 1)");
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

double binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
  if (k > n) return 0.0;
  if (n <= 56) {
    // C(56, 28) < 2^53, so the coefficient is an exact double.
    std::uint64_t c = 1;
    const std::uint64_t kk = std::min(k, n - k);
    for (std::uint64_t i = 0; i < kk; ++i) c = c * (n - i) / (i + 1);
    return static_cast<double>(c) * std::pow(p, static_cast<double>(k)) *
           std::pow(1.0 - p, static_cast<double>(n - k));
  }
  const double nn = static_cast<double>(n), kd = static_cast<double>(k);
  const double log_pmf = std::lgamma(nn + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nn - kd + 1.0) +
                         kd * std::log(p) + (nn - kd) * std::log1p(-p);
  return std::exp(log_pmf);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_two_sided_p(double z) { return clamp01(std::erfc(std::fabs(z) / std::sqrt(2.0))); }

double chi_square_sf(double x, double df) {
  if (!(df > 0.0)) fail(ErrorCode::InvalidArgument, "chi-square degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

BinomialTest binomial_test(std::uint64_t successes, std::uint64_t n, double p0) {
  check_counts(successes, n, p0);
  BinomialTest out;
  if (n <= kExactLimit) {
    // Relative slack so that outcomes equal in exact arithmetic compare equal.
    const double observed = binomial_pmf(successes, n, p0) * (1.0 + 1e-7);
    double two = 0.0, greater = 0.0, less = 0.0;
    for (std::uint64_t k = 0; k <= n; ++k) {
      const double pk = binomial_pmf(k, n, p0);
      if (pk <= observed) two += pk;
      if (k >= successes) greater += pk;
      if (k <= successes) less += pk;
    }
    out.two_sided = clamp01(two);
    out.greater = clamp01(greater);
    out.less = clamp01(less);
    out.exact = true;
    return out;
  }
  const double nn = static_cast<double>(n);
  const double x = static_cast<double>(successes);
  const double mean = nn * p0;
  const double sd = std::sqrt(nn * p0 * (1.0 - p0));
  const double dev = std::fabs(x - mean);
  out.two_sided = dev <= 0.5 ? 1.0 : clamp01(2.0 * (1.0 - normal_cdf((dev - 0.5) / sd)));
  out.greater = clamp01(1.0 - normal_cdf((x - 0.5 - mean) / sd));
  out.less = clamp01(normal_cdf((x + 0.5 - mean) / sd));
  out.exact = false;
  return out;
}

double proportions_test(std::uint64_t successes, std::uint64_t n, double p0) {
  return binomial_test(successes, n, p0).two_sided;
}

double sign_test(std::uint64_t successes, std::uint64_t n) { return proportions_test(successes, n, 0.5); }

std::vector<double> mid_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    fail(ErrorCode::DimensionMismatch, "correlation of sequences with lengths " + std::to_string(xs.size()) +
                                           " and " + std::to_string(ys.size()));
  }
  if (xs.size() < 2) fail(ErrorCode::InvalidArgument, "correlation needs at least two observations");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::InvalidArgument, "correlation of a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    fail(ErrorCode::DimensionMismatch, "spearman of sequences with lengths " + std::to_string(xs.size()) +
                                           " and " + std::to_string(ys.size()));
  }
  const auto rx = mid_ranks(xs);
  const auto ry = mid_ranks(ys);
  return pearson(rx, ry);
}

BenchmarkPairs load_benchmark(const std::filesystem::path& path) {
  BenchmarkPairs pairs;
  pairs.name = path.stem().string();
  const auto lines = io::read_lines(path);
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    const auto fields = io::split(lines[i], '\t');
    if (fields.size() != 3) fail(ErrorCode::Parse, where + ": expected word1<TAB>word2<TAB>score");
    BenchmarkPair row{std::string(io::trim(fields[0])), std::string(io::trim(fields[1])),
                      io::parse_double(fields[2], where)};
    if (!seen.emplace(row.word1, row.word2).second) {
      fail(ErrorCode::Duplicate, where + ": duplicate pair " + row.word1 + "/" + row.word2);
    }
    pairs.rows.push_back(std::move(row));
  }
  if (pairs.rows.empty()) fail(ErrorCode::Parse, path.string() + ": no benchmark pairs");
  return pairs;
}

BenchmarkResult benchmark_eval(const EmbeddingSpace& space, const BenchmarkPairs& pairs) {
  std::vector<double> model, human;
  for (const auto& row : pairs.rows) {
    const auto a = space.find(row.word1);
    const auto b = space.find(row.word2);
    if (!a || !b) continue;
    model.push_back(cosine(*a, *b));
    human.push_back(row.score);
  }
  BenchmarkResult result;
  result.total = pairs.rows.size();
  result.covered = model.size();
  result.coverage = result.total ? static_cast<double>(result.covered) / static_cast<double>(result.total) : 0.0;
  if (result.covered < 2) {
    fail(ErrorCode::InvalidArgument, "benchmark '" + pairs.name + "' covers " + std::to_string(result.covered) +
                                         " pair(s) in " + space.name() + "; need at least 2");
  }
  result.rho = spearman(model, human);
  return result;
}

}  // namespace vgsim::stats
