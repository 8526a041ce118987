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

// Shared synthetic problems and independent oracles for the test binaries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vgsim/embeddings.hpp"
#include "vgsim/gam.hpp"
#include "vgsim/zsg.hpp"

namespace vgsim::testing {

// Exact binomial coefficient as an integer; fine for n <= 60.
inline std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Two-sided p-value by enumerating every outcome, comparing integer counts
// so no tolerance is involved.
inline double enumerated_sign_p(std::uint64_t k, std::uint64_t n) {
  const std::uint64_t observed = choose(n, k);
  std::uint64_t total = 0;
  for (std::uint64_t j = 0; j <= n; ++j) {
    if (choose(n, j) <= observed) total += choose(n, j);
  }
  return std::min(1.0, static_cast<double>(total) / std::ldexp(1.0, static_cast<int>(n)));
}

// Plain gradient descent on |TM - V|^2 + lambda |M|^2 with a step of
// 1 / Lipschitz constant.
inline Eigen::MatrixXd gradient_descent_ridge(const Eigen::MatrixXd& t, const Eigen::MatrixXd& v, double lambda) {
  const Eigen::MatrixXd gram = t.transpose() * t;
  const double lipschitz = 2.0 * (gram.eigenvalues().real().maxCoeff() + lambda);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(t.cols(), v.cols());
  for (int it = 0; it < 200000; ++it) {
    const Eigen::MatrixXd g = 2.0 * (gram * m - t.transpose() * v) + 2.0 * lambda * m;
    m -= g / lipschitz;
    if (g.norm() < 1e-12) break;
  }
  return m;
}

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  }
  return m;
}

struct ZsgToy {
  EmbeddingSpace space;
  ImageVectorStore images;
  CaptionCorpus train;
  CaptionCorpus validation;
};

// 10 images, 5 training captions each (50 total), one held-out caption per
// image, 8-d word vectors and 6-d image vectors. Each image is a fixed
// linear view of its two topic words; captions mix both topic words with a
// random filler word.
inline ZsgToy make_zsg_toy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  constexpr int kVocab = 24, kDim = 8, kImgDim = 6, kImages = 10;
  std::vector<std::string> words;
  std::vector<double> wv;
  for (int i = 0; i < kVocab; ++i) {
    words.push_back("w" + std::to_string(i));
    for (int d = 0; d < kDim; ++d) wv.push_back(nd(rng));
  }
  EmbeddingSpace space("toy", kDim, words, wv);
  Eigen::MatrixXd proj(kDim, kImgDim);
  for (int i = 0; i < kDim; ++i) {
    for (int j = 0; j < kImgDim; ++j) proj(i, j) = nd(rng) / std::sqrt(double(kDim));
  }
  std::vector<std::string> ids;
  std::vector<double> iv;
  ZsgToy toy{space, {}, {}, {}};
  toy.validation.split = CorpusSplit::Validation;
  for (int img = 0; img < kImages; ++img) {
    const int a = 2 * img, b = 2 * img + 1;
    Eigen::RowVectorXd topic(kDim);
    for (int d = 0; d < kDim; ++d) topic(d) = 0.5 * (wv[std::size_t(a * kDim + d)] + wv[std::size_t(b * kDim + d)]);
    const Eigen::RowVectorXd v = topic * proj;
    const std::string id = "img" + std::to_string(img);
    ids.push_back(id);
    for (int j = 0; j < kImgDim; ++j) iv.push_back(v(j) + 0.05 * nd(rng));
    for (int c = 0; c < 6; ++c) {
      const std::string filler = words[20 + rng() % 4];
      CaptionSample s{id, {words[std::size_t(a)], filler, words[std::size_t(b)]}};
      if (c % 2) std::swap(s.tokens[0], s.tokens[2]);
      (c < 5 ? toy.train : toy.validation).samples.push_back(s);
    }
  }
  toy.images = ImageVectorStore(kImgDim, ids, iv);
  return toy;
}

struct SingleTokenProblem {
  EmbeddingSpace space;
  ImageVectorStore images;
  CaptionCorpus corpus;
  Eigen::MatrixXd text;
  Eigen::MatrixXd target;
};

// One single-token caption per image; image = word * M* + noise.
inline SingleTokenProblem make_single_token_problem(std::uint64_t seed, int n = 60, int d_in = 8, int d_img = 6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m_star(d_in, d_img);
  for (int i = 0; i < d_in; ++i) {
    for (int j = 0; j < d_img; ++j) m_star(i, j) = nd(rng) / std::sqrt(double(d_in));
  }
  SingleTokenProblem p;
  p.text.resize(n, d_in);
  p.target.resize(n, d_img);
  std::vector<std::string> words, ids;
  std::vector<double> wv, iv;
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < d_in; ++d) p.text(i, d) = nd(rng);
    p.target.row(i) = p.text.row(i) * m_star;
    for (int j = 0; j < d_img; ++j) p.target(i, j) += 0.2 * nd(rng);
    words.push_back("w" + std::to_string(i));
    ids.push_back("img" + std::to_string(i));
    for (int d = 0; d < d_in; ++d) wv.push_back(p.text(i, d));
    for (int j = 0; j < d_img; ++j) iv.push_back(p.target(i, j));
    p.corpus.samples.push_back({ids.back(), {words.back()}});
  }
  p.space = EmbeddingSpace("single", std::size_t(d_in), words, wv);
  p.images = ImageVectorStore(std::size_t(d_img), ids, iv);
  return p;
}

// Newton-Raphson for unpenalized logistic regression, written from scratch
// with Gaussian elimination. Returns the coefficient vector.
inline std::vector<double> newton_logistic(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  const std::size_t n = x.size(), p = x.front().size();
  std::vector<double> beta(p, 0.0);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> g(p, 0.0);
    std::vector<std::vector<double>> h(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      double eta = 0.0;
      for (std::size_t j = 0; j < p; ++j) eta += x[i][j] * beta[j];
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      for (std::size_t j = 0; j < p; ++j) {
        g[j] += (y[i] - mu) * x[i][j];
        for (std::size_t k = 0; k < p; ++k) h[j][k] += mu * (1 - mu) * x[i][j] * x[i][k];
      }
    }
    // Solve h * step = g with partial pivoting.
    std::vector<double> step = g;
    for (std::size_t c = 0; c < p; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < p; ++r) {
        if (std::fabs(h[r][c]) > std::fabs(h[piv][c])) piv = r;
      }
      std::swap(h[c], h[piv]);
      std::swap(step[c], step[piv]);
      for (std::size_t r = c + 1; r < p; ++r) {
        const double f = h[r][c] / h[c][c];
        for (std::size_t k = c; k < p; ++k) h[r][k] -= f * h[c][k];
        step[r] -= f * step[c];
      }
    }
    for (std::size_t c = p; c-- > 0;) {
      for (std::size_t k = c + 1; k < p; ++k) step[c] -= h[c][k] * step[k];
      step[c] /= h[c][c];
    }
    double size = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      beta[j] += step[j];
      size = std::max(size, std::fabs(step[j]));
    }
    if (size < 1e-13) break;
  }
  return beta;
}


struct LogisticData {
  gam::GamData data;
  std::vector<double> y;
  std::vector<std::vector<double>> x;  // dummy-coded parametric design for the oracle
};

// Factor F (a, b, c), linear covariates x1 and x2, smooth covariate s in
// [0, 1] entering through sin(2 pi s).
inline LogisticData make_logistic_data(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  LogisticData out;
  std::vector<std::string> f;
  std::vector<double> x1, x2, s;
  const char* levels[] = {"a", "b", "c"};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t level = rng() % 3;
    f.push_back(levels[level]);
    x1.push_back(nd(rng));
    x2.push_back(u(rng) * 4.0);
    s.push_back(u(rng));
    const double eta = -0.3 + 0.8 * (level == 1) - 0.6 * (level == 2) + 0.7 * x1.back() - 0.25 * x2.back() +
                       1.2 * std::sin(6.283185307179586 * s.back());
    out.y.push_back(u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0);
    out.x.push_back({1.0, level == 1 ? 1.0 : 0.0, level == 2 ? 1.0 : 0.0, x1.back(), x2.back()});
  }
  out.data.rows = n;
  out.data.add_factor("F", f);
  out.data.add_covariate("x1", x1);
  out.data.add_covariate("x2", x2);
  out.data.add_covariate("s", s);
  return out;
}

inline gam::GamSpec parametric_spec() {
  gam::GamSpec spec;
  spec.factors.push_back({"F", {"a", "b", "c"}});
  spec.linear = {"x1", "x2"};
  spec.lambda_grid = {0.0};
  return spec;
}

}  // namespace vgsim::testing
