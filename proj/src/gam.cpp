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

#include "vgsim/gam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "vgsim/error.hpp"
#include "vgsim/io.hpp"
#include "vgsim/stats.hpp"

namespace vgsim::gam {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

constexpr int kDegree = 3;

Index idx(std::size_t i) { return static_cast<Index>(i); }

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double binomial_deviance(const VectorXd& eta, std::span<const double> y) {
  double d = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    // -2 log-likelihood of a Bernoulli observation
    d += 2.0 * (y[static_cast<std::size_t>(i)] > 0.5 ? softplus(-eta(i)) : softplus(eta(i)));
  }
  return d;
}

std::string lambda_text(std::span<const double> lambdas) {
  if (lambdas.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (i) s += ",";
    s += io::format_sig(lambdas[i]);
  }
  return s;
}

double quantile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string format_p(const std::optional<double>& p) {
  if (!p) return "NA";
  if (*p < 1e-4) return "<0.0001";
  return io::format_fixed(*p, 4);
}

}  // namespace

// ---------------------------------------------------------------- GamSpec

std::vector<double> GamSpec::default_lambda_grid() {
  std::vector<double> grid;
  for (int e = -3; e <= 6; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

void GamSpec::validate() const {
  if (lambda_grid.empty()) fail(ErrorCode::InvalidArgument, "lambda grid is empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0) || !std::isfinite(lambda_grid[i])) {
      fail(ErrorCode::InvalidArgument, "lambda grid values must be finite and non-negative");
    }
    if (i && !(lambda_grid[i] > lambda_grid[i - 1])) {
      fail(ErrorCode::InvalidArgument, "lambda grid must be strictly increasing");
    }
  }
  std::set<std::string> names;
  for (const auto& f : factors) {
    if (f.levels.size() < 2) fail(ErrorCode::InvalidArgument, "factor '" + f.name + "' needs at least two levels");
    if (!names.insert(f.name).second) fail(ErrorCode::Duplicate, "factor '" + f.name + "' declared twice");
    std::set<std::string> levels(f.levels.begin(), f.levels.end());
    if (levels.size() != f.levels.size()) fail(ErrorCode::Duplicate, "factor '" + f.name + "' repeats a level");
  }
  for (const auto& s : smooths) {
    if (s.k < 4) fail(ErrorCode::InvalidArgument, "smooth " + s.label() + " needs basis dimension k >= 4");
  }
}

GamSpec GamSpec::parse(const std::string& text, const std::string& source) {
  GamSpec spec;
  spec.lambda_grid.clear();
  bool grid_given = false;
  std::optional<std::size_t> k;
  const auto lines = io::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = io::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = source + ":" + std::to_string(i + 1);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::Parse, where + ": expected key = value");
    const std::string key(io::trim(line.substr(0, eq)));
    const std::string value(io::trim(line.substr(eq + 1)));
    if (key == "factor") {
      const auto colon = value.find(':');
      if (colon == std::string::npos) fail(ErrorCode::Parse, where + ": factor = Name: ref level2 ...");
      FactorTerm f{std::string(io::trim(std::string_view(value).substr(0, colon))),
                   io::split_whitespace(std::string_view(value).substr(colon + 1))};
      spec.factors.push_back(std::move(f));
    } else if (key == "linear") {
      spec.linear.push_back(value);
    } else if (key == "interaction") {
      const auto parts = io::split(value, ':');
      if (parts.size() != 2) fail(ErrorCode::Parse, where + ": interaction = A=a:B=b");
      const auto a = io::split(parts[0], '=');
      const auto b = io::split(parts[1], '=');
      if (a.size() != 2 || b.size() != 2) fail(ErrorCode::Parse, where + ": interaction = A=a:B=b");
      spec.interactions.push_back({std::string(io::trim(a[0])), std::string(io::trim(a[1])),
                                   std::string(io::trim(b[0])), std::string(io::trim(b[1]))});
    } else if (key == "smooth") {
      spec.smooths.push_back({value, 0});
    } else if (key == "k") {
      const auto v = io::parse_int(value, where);
      if (v < 4) fail(ErrorCode::InvalidArgument, where + ": k must be >= 4");
      k = static_cast<std::size_t>(v);
    } else if (key == "lambda_grid") {
      grid_given = true;
      for (const auto& tok : io::split_whitespace(value)) spec.lambda_grid.push_back(io::parse_double(tok, where));
    } else if (key == "per_smooth_lambda") {
      spec.per_smooth_lambda = io::parse_bool(value, where);
    } else {
      fail(ErrorCode::Parse, where + ": unknown key '" + key + "'");
    }
  }
  for (auto& s : spec.smooths) s.k = k.value_or(5);
  if (!grid_given) spec.lambda_grid = default_lambda_grid();
  spec.validate();
  return spec;
}

GamSpec GamSpec::load(const std::filesystem::path& path) {
  std::string text;
  for (const auto& l : io::read_lines(path)) text += l + "\n";
  return parse(text, path.string());
}

std::string GamSpec::to_text() const {
  std::string out;
  for (const auto& f : factors) {
    out += "factor = " + f.name + ":";
    for (const auto& l : f.levels) out += " " + l;
    out += "\n";
  }
  for (const auto& l : linear) out += "linear = " + l + "\n";
  for (const auto& it : interactions) out += "interaction = " + it.label() + "\n";
  for (const auto& s : smooths) out += "smooth = " + s.covariate + "\n";
  if (!smooths.empty()) out += "k = " + std::to_string(smooths.front().k) + "\n";
  out += "lambda_grid =";
  for (double l : lambda_grid) out += " " + io::format_sig(l);
  out += "\nper_smooth_lambda = " + std::string(per_smooth_lambda ? "true" : "false") + "\n";
  return out;
}

// ---------------------------------------------------------------- GamData

void GamData::add_factor(const std::string& name, std::vector<std::string> values) {
  if (factors.empty() && covariates.empty()) rows = values.size();
  if (values.size() != rows) fail(ErrorCode::DimensionMismatch, "factor '" + name + "' has the wrong length");
  factors[name] = std::move(values);
}

void GamData::add_covariate(const std::string& name, std::vector<double> values) {
  if (factors.empty() && covariates.empty()) rows = values.size();
  if (values.size() != rows) fail(ErrorCode::DimensionMismatch, "covariate '" + name + "' has the wrong length");
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "covariate '" + name + "' has a non-finite value");
  }
  covariates[name] = std::move(values);
}

// ---------------------------------------------------------------- SmoothBasis

SmoothBasis::SmoothBasis(std::string covariate, std::size_t k, std::span<const double> x)
    : covariate_(std::move(covariate)), k_(k) {
  if (k_ < 4) fail(ErrorCode::InvalidArgument, "smooth s(" + covariate_ + ") needs k >= 4");
  if (x.empty()) fail(ErrorCode::InvalidArgument, "smooth s(" + covariate_ + ") has no data");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  lo_ = *mn;
  hi_ = *mx;
  if (!(hi_ - lo_ > 1e-12 * std::max(1.0, std::fabs(lo_)))) {
    fail(ErrorCode::Validation, "covariate '" + covariate_ + "' of s(" + covariate_ + ") has zero range");
  }

  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = (x[i] - lo_) / (hi_ - lo_);
  std::vector<double> sorted = u;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n_interior = k_ - 4;
  std::vector<double> interior;
  for (std::size_t j = 1; j <= n_interior; ++j) {
    interior.push_back(quantile(sorted, static_cast<double>(j) / static_cast<double>(k_ - 3)));
  }
  bool ok = true;
  for (std::size_t j = 0; j < interior.size(); ++j) {
    const double prev = j ? interior[j - 1] : 0.0;
    if (!(interior[j] > prev + 1e-9) || !(interior[j] < 1.0 - 1e-9)) ok = false;
  }
  if (!ok) {
    // Too few distinct values for quantile knots.
    for (std::size_t j = 0; j < interior.size(); ++j) {
      interior[j] = static_cast<double>(j + 1) / static_cast<double>(k_ - 3);
    }
  }
  knots_.assign(kDegree + 1, 0.0);
  knots_.insert(knots_.end(), interior.begin(), interior.end());
  knots_.insert(knots_.end(), kDegree + 1, 1.0);

  std::vector<double> greville(k_);
  for (std::size_t i = 0; i < k_; ++i) greville[i] = (knots_[i + 1] + knots_[i + 2] + knots_[i + 3]) / 3.0;
  const double mean_gap = 1.0 / static_cast<double>(k_ - 1);
  MatrixXd d = MatrixXd::Zero(idx(k_ - 2), idx(k_));
  for (std::size_t i = 0; i + 2 < k_; ++i) {
    const double a = mean_gap / (greville[i + 1] - greville[i]);
    const double b = mean_gap / (greville[i + 2] - greville[i + 1]);
    d(idx(i), idx(i)) = a;
    d(idx(i), idx(i + 1)) = -(a + b);
    d(idx(i), idx(i + 2)) = b;
  }
  const MatrixXd s_raw = d.transpose() * d;

  MatrixXd b(idx(x.size()), idx(k_));
  for (std::size_t i = 0; i < x.size(); ++i) b.row(idx(i)) = eval(u[i], 0);
  const VectorXd c = b.colwise().sum().transpose();
  Eigen::HouseholderQR<MatrixXd> qr(c);
  const MatrixXd q = qr.householderQ();
  constraint_null_ = q.rightCols(idx(k_ - 1));

  const MatrixXd xs = b * constraint_null_;
  penalty_ = constraint_null_.transpose() * s_raw * constraint_null_;
  penalty_ = 0.5 * (penalty_ + penalty_.transpose());
  // Put the penalty on the scale of X'X so one lambda grid suits every smooth.
  const double row_norm = xs.cwiseAbs().rowwise().sum().maxCoeff();
  const double s_norm = penalty_.cwiseAbs().colwise().sum().maxCoeff();
  if (s_norm > 0.0) penalty_ *= row_norm * row_norm / s_norm;
}

Eigen::RowVectorXd SmoothBasis::eval(double u, int derivative) const {
  const std::size_t m = knots_.size();
  // Degree-0 indicators; u at the right end belongs to the last proper span.
  std::vector<double> n(m - 1, 0.0);
  if (u >= 1.0) {
    n[k_ - 1] = 1.0;
  } else {
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (knots_[i] <= u && u < knots_[i + 1]) {
        n[i] = 1.0;
        break;
      }
    }
  }
  const int top = kDegree - derivative;
  for (int d = 1; d <= top; ++d) {
    std::vector<double> next(m - 1 - static_cast<std::size_t>(d), 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) {
      double v = 0.0;
      const double l = knots_[i + static_cast<std::size_t>(d)] - knots_[i];
      const double r = knots_[i + static_cast<std::size_t>(d) + 1] - knots_[i + 1];
      if (l > 0.0) v += (u - knots_[i]) / l * n[i];
      if (r > 0.0) v += (knots_[i + static_cast<std::size_t>(d) + 1] - u) / r * n[i + 1];
      next[i] = v;
    }
    n = std::move(next);
  }
  RowVectorXd out(idx(k_));
  if (derivative == 0) {
    for (std::size_t i = 0; i < k_; ++i) out(idx(i)) = n[i];
    return out;
  }
  // First derivative from the degree-2 values.
  for (std::size_t i = 0; i < k_; ++i) {
    double v = 0.0;
    const double l = knots_[i + kDegree] - knots_[i];
    const double r = knots_[i + kDegree + 1] - knots_[i + 1];
    if (l > 0.0) v += kDegree / l * n[i];
    if (r > 0.0) v -= kDegree / r * n[i + 1];
    out(idx(i)) = v;
  }
  return out;
}

Eigen::RowVectorXd SmoothBasis::raw(double x) const {
  const double u = (x - lo_) / (hi_ - lo_);
  if (u < 0.0) return eval(0.0, 0) + u * eval(0.0, 1);
  if (u > 1.0) return eval(1.0, 0) + (u - 1.0) * eval(1.0, 1);
  return eval(u, 0);
}

Eigen::RowVectorXd SmoothBasis::row(double x) const { return raw(x) * constraint_null_; }

// ---------------------------------------------------------------- design

namespace {

const std::vector<std::string>& factor_column(const GamData& data, const std::string& name) {
  const auto it = data.factors.find(name);
  if (it == data.factors.end()) fail(ErrorCode::Validation, "data has no factor '" + name + "'");
  return it->second;
}

const std::vector<double>& covariate_column(const GamData& data, const std::string& name) {
  const auto it = data.covariates.find(name);
  if (it == data.covariates.end()) fail(ErrorCode::Validation, "data has no covariate '" + name + "'");
  return it->second;
}

}  // namespace

DesignRecipe::DesignRecipe(GamSpec spec, const GamData& training) : spec_(std::move(spec)) {
  spec_.validate();
  if (training.rows == 0) fail(ErrorCode::InvalidArgument, "no rows to build a design from");
  columns_.push_back("(Intercept)");
  for (const auto& f : spec_.factors) {
    const auto& values = factor_column(training, f.name);
    std::set<std::string> seen(values.begin(), values.end());
    for (const auto& v : seen) {
      if (std::find(f.levels.begin(), f.levels.end(), v) == f.levels.end()) {
        fail(ErrorCode::Validation, "factor '" + f.name + "' has undeclared level '" + v + "'");
      }
    }
    for (const auto& level : f.levels) {
      if (!seen.count(level)) fail(ErrorCode::Validation, "factor level " + f.name + "=" + level + " is absent");
    }
    for (std::size_t l = 1; l < f.levels.size(); ++l) columns_.push_back(f.name + "=" + f.levels[l]);
  }
  for (const auto& name : spec_.linear) {
    const auto& v = covariate_column(training, name);
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    if (!(*mx > *mn)) fail(ErrorCode::Validation, "linear covariate '" + name + "' is constant");
    columns_.push_back(name);
  }
  for (const auto& it : spec_.interactions) {
    const auto& a = factor_column(training, it.factor_a);
    const auto& b = factor_column(training, it.factor_b);
    bool any = false;
    for (std::size_t i = 0; i < training.rows && !any; ++i) any = a[i] == it.level_a && b[i] == it.level_b;
    if (!any) fail(ErrorCode::Validation, "interaction " + it.label() + " has no rows");
    columns_.push_back(it.label());
  }
  n_param_ = columns_.size();
  for (const auto& s : spec_.smooths) {
    smooths_.emplace_back(s.covariate, s.k, covariate_column(training, s.covariate));
    blocks_.push_back({columns_.size(), s.k - 1});
    for (std::size_t j = 1; j < s.k; ++j) columns_.push_back(s.label() + "." + std::to_string(j));
  }
}

std::optional<std::size_t> DesignRecipe::smooth_index(const std::string& name) const {
  for (std::size_t i = 0; i < spec_.smooths.size(); ++i) {
    if (spec_.smooths[i].covariate == name || spec_.smooths[i].label() == name) return i;
  }
  return std::nullopt;
}

Eigen::MatrixXd DesignRecipe::build(const GamData& data) const {
  const Index n = idx(data.rows);
  MatrixXd x = MatrixXd::Zero(n, idx(columns_.size()));
  x.col(0).setOnes();
  Index col = 1;
  for (const auto& f : spec_.factors) {
    const auto& values = factor_column(data, f.name);
    for (std::size_t i = 0; i < data.rows; ++i) {
      if (std::find(f.levels.begin(), f.levels.end(), values[i]) == f.levels.end()) {
        fail(ErrorCode::Validation, "factor '" + f.name + "' level '" + values[i] + "' does not match the model");
      }
    }
    for (std::size_t l = 1; l < f.levels.size(); ++l, ++col) {
      for (std::size_t i = 0; i < data.rows; ++i) x(idx(i), col) = values[i] == f.levels[l] ? 1.0 : 0.0;
    }
  }
  for (const auto& name : spec_.linear) {
    const auto& v = covariate_column(data, name);
    for (std::size_t i = 0; i < data.rows; ++i) x(idx(i), col) = v[i];
    ++col;
  }
  for (const auto& it : spec_.interactions) {
    const auto& a = factor_column(data, it.factor_a);
    const auto& b = factor_column(data, it.factor_b);
    for (std::size_t i = 0; i < data.rows; ++i) {
      x(idx(i), col) = (a[i] == it.level_a && b[i] == it.level_b) ? 1.0 : 0.0;
    }
    ++col;
  }
  for (std::size_t s = 0; s < smooths_.size(); ++s) {
    const auto& v = covariate_column(data, smooths_[s].covariate());
    const auto& blk = blocks_[s];
    for (std::size_t i = 0; i < data.rows; ++i) {
      x.block(idx(i), idx(blk.offset), 1, idx(blk.size)) = smooths_[s].row(v[i]);
    }
  }
  return x;
}

Eigen::MatrixXd DesignMatrix::smooth(std::size_t i) const {
  const auto& blk = recipe.smooth_blocks().at(i);
  return x.middleCols(idx(blk.offset), idx(blk.size));
}

DesignMatrix build_design(const GamData& data, const GamSpec& spec) {
  DesignMatrix d;
  d.recipe = DesignRecipe(spec, data);
  d.x = d.recipe.build(data);
  return d;
}

// ---------------------------------------------------------------- fitting

GamFit fit_gam_fixed(const DesignMatrix& design, std::span<const double> y, std::span<const double> lambdas) {
  const auto& x = design.x;
  const Index n = x.rows(), p = x.cols();
  const auto& recipe = design.recipe;
  if (static_cast<std::size_t>(n) != y.size()) {
    fail(ErrorCode::DimensionMismatch, "design has " + std::to_string(n) + " rows, response has " +
                                           std::to_string(y.size()));
  }
  if (!(n > p)) {
    fail(ErrorCode::InvalidArgument, "need more rows (" + std::to_string(n) + ") than columns (" +
                                         std::to_string(p) + ")");
  }
  if (lambdas.size() != recipe.smooths().size()) {
    fail(ErrorCode::InvalidArgument, "need one smoothing parameter per smooth");
  }
  double ybar = 0.0;
  for (double v : y) {
    if (v != 0.0 && v != 1.0) fail(ErrorCode::InvalidArgument, "responses must be 0 or 1");
    ybar += v;
  }
  ybar /= static_cast<double>(n);

  MatrixXd penalty = MatrixXd::Zero(p, p);
  for (std::size_t s = 0; s < lambdas.size(); ++s) {
    if (!(lambdas[s] >= 0.0) || !std::isfinite(lambdas[s])) {
      fail(ErrorCode::InvalidArgument, "smoothing parameters must be finite and non-negative");
    }
    const auto& blk = recipe.smooth_blocks()[s];
    penalty.block(idx(blk.offset), idx(blk.offset), idx(blk.size), idx(blk.size)) =
        lambdas[s] * recipe.smooths()[s].penalty();
  }

  const auto penalized = [&](const VectorXd& beta) {
    return binomial_deviance(x * beta, y) + beta.dot(penalty * beta);
  };

  GamFit fit;
  VectorXd beta = VectorXd::Zero(p);
  const double yc = std::clamp(ybar, 1e-6, 1.0 - 1e-6);
  beta(0) = std::log(yc / (1.0 - yc));
  double pd_old = penalized(beta);
  bool converged = false;

  VectorXd eta(n), w(n), z(n);
  for (std::size_t it = 1; it <= kMaxPirlsIterations; ++it) {
    eta = x * beta;
    for (Index i = 0; i < n; ++i) {
      const double mu = logistic(eta(i));
      w(i) = std::max(mu * (1.0 - mu), 1e-12);
      z(i) = eta(i) + (y[static_cast<std::size_t>(i)] - mu) / w(i);
    }
    MatrixXd h = x.transpose() * w.asDiagonal() * x + penalty;
    const Eigen::LDLT<MatrixXd> ldlt(h);
    VectorXd next = ldlt.solve(x.transpose() * w.cwiseProduct(z));
    if (ldlt.info() != Eigen::Success || !next.allFinite()) {
      fail(ErrorCode::Singular, "penalized IRLS system is singular at lambda=" + lambda_text(lambdas) +
                                    " (iteration " + std::to_string(it) + ")");
    }
    double pd_new = penalized(next);
    int halvings = 0;
    while (!(pd_new <= pd_old) && halvings < 40) {
      next = 0.5 * (beta + next);
      pd_new = penalized(next);
      ++halvings;
    }
    if (!(pd_new <= pd_old)) {
      // No descent direction left; the current iterate is the optimum.
      next = beta;
      pd_new = pd_old;
    }
    const double big = next.cwiseAbs().maxCoeff();
    if (big > kSeparationBound) {
      // Blame the column contributing most to the linear predictor.
      Index worst = 0;
      (next.cwiseAbs().cwiseProduct(x.cwiseAbs().colwise().maxCoeff().transpose())).maxCoeff(&worst);
      fail(ErrorCode::Separation, "perfect separation suspected: |coefficient of '" +
                                      recipe.column_names()[static_cast<std::size_t>(worst)] + "'| = " +
                                      io::format_sig(big) + " > 50 at iteration " + std::to_string(it) +
                                      " (lambda=" + lambda_text(lambdas) + ")");
    }
    fit.trace.push_back({it, binomial_deviance(x * next, y), pd_new, halvings});
    const double change = std::fabs(pd_old - pd_new) / (std::fabs(pd_new) + 0.1);
    beta = next;
    pd_old = pd_new;
    if (change < kPirlsTolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::string tail;
    const std::size_t from = fit.trace.size() > 5 ? fit.trace.size() - 5 : 0;
    for (std::size_t i = from; i < fit.trace.size(); ++i) {
      tail += " " + std::to_string(fit.trace[i].iteration) + ":" + io::format_sig(fit.trace[i].penalized_deviance, 12);
    }
    fail(ErrorCode::Convergence, "penalized IRLS did not converge in " + std::to_string(kMaxPirlsIterations) +
                                     " iterations at lambda=" + lambda_text(lambdas) + "; trace" + tail);
  }

  eta = x * beta;
  for (Index i = 0; i < n; ++i) {
    const double mu = logistic(eta(i));
    w(i) = std::max(mu * (1.0 - mu), 1e-12);
  }
  const MatrixXd xtwx = x.transpose() * w.asDiagonal() * x;
  const MatrixXd h = xtwx + penalty;
  const Eigen::LDLT<MatrixXd> ldlt(h);
  fit.covariance = ldlt.solve(MatrixXd::Identity(p, p));
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose());
  const MatrixXd influence = fit.covariance * xtwx;

  fit.recipe = recipe;
  fit.beta = beta;
  fit.lambdas.assign(lambdas.begin(), lambdas.end());
  fit.coefficient_edf = influence.diagonal();
  fit.edf_total = fit.coefficient_edf.sum();
  for (const auto& blk : recipe.smooth_blocks()) {
    fit.smooth_edf.push_back(fit.coefficient_edf.segment(idx(blk.offset), idx(blk.size)).sum());
  }
  fit.deviance = binomial_deviance(eta, y);
  fit.penalized_deviance = pd_old;
  fit.aic = fit.deviance + 2.0 * fit.edf_total;
  fit.y.assign(y.begin(), y.end());
  return fit;
}

GamFit fit_gam(const DesignMatrix& design, std::span<const double> y, const GamSpec& spec) {
  spec.validate();
  const std::size_t m = design.recipe.smooths().size();
  if (m == 0) {
    GamFit fit = fit_gam_fixed(design, y, {});
    fit.grid.push_back({{}, true, fit.deviance, fit.edf_total, fit.aic, {}});
    return fit;
  }

  std::map<std::vector<double>, GridPoint> seen;
  std::vector<GridPoint> order;
  std::optional<GamFit> best;
  const auto evaluate = [&](const std::vector<double>& lambdas) {
    if (seen.count(lambdas)) return;
    GridPoint point;
    point.lambdas = lambdas;
    try {
      GamFit fit = fit_gam_fixed(design, y, lambdas);
      point.converged = true;
      point.deviance = fit.deviance;
      point.edf_total = fit.edf_total;
      point.aic = fit.aic;
      point.smooth_edf = fit.smooth_edf;
      if (!best || fit.aic < best->aic) best = std::move(fit);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Convergence) throw;
    }
    seen.emplace(lambdas, point);
    order.push_back(point);
  };

  for (double l : spec.lambda_grid) evaluate(std::vector<double>(m, l));
  if (spec.per_smooth_lambda && best) {
    // Coordinate-wise refinement over the same grid.
    for (int sweep = 0; sweep < 10; ++sweep) {
      const auto start = best->lambdas;
      for (std::size_t s = 0; s < m; ++s) {
        for (double l : spec.lambda_grid) {
          auto lambdas = best->lambdas;
          lambdas[s] = l;
          evaluate(lambdas);
        }
      }
      if (best->lambdas == start) break;
    }
  }
  if (!best) {
    fail(ErrorCode::Convergence, "penalized IRLS failed to converge at every lambda in the grid");
  }
  best->grid = std::move(order);
  return std::move(*best);
}

Eigen::VectorXd linear_predictor(const GamFit& fit, const Eigen::MatrixXd& x) {
  if (x.cols() != fit.beta.size()) {
    fail(ErrorCode::Validation, "design rows have " + std::to_string(x.cols()) + " columns, model has " +
                                    std::to_string(fit.beta.size()));
  }
  return x * fit.beta;
}

Eigen::VectorXd predict_prob(const GamFit& fit, const Eigen::MatrixXd& x) {
  return linear_predictor(fit, x).unaryExpr([](double e) { return logistic(e); });
}

Eigen::VectorXd predict_prob(const GamFit& fit, const GamData& data) {
  return predict_prob(fit, fit.recipe.build(data));
}

// ---------------------------------------------------------------- reporting

GamSummary summarize(const GamFit& fit) {
  GamSummary out;
  out.deviance = fit.deviance;
  out.aic = fit.aic;
  out.edf_total = fit.edf_total;
  out.n = fit.y.size();
  const auto& names = fit.recipe.column_names();
  for (std::size_t j = 0; j < fit.recipe.n_parametric(); ++j) {
    ParametricRow row;
    row.name = names[j];
    row.estimate = fit.beta(idx(j));
    const double var = fit.covariance(idx(j), idx(j));
    row.std_error = var > 0.0 ? std::sqrt(var) : 0.0;
    if (row.std_error > 0.0) {
      row.z = row.estimate / row.std_error;
      row.p_value = stats::normal_two_sided_p(row.z);
    } else {
      row.z = std::numeric_limits<double>::quiet_NaN();
    }
    out.parametric.push_back(row);
  }
  const auto& spec = fit.recipe.spec();
  for (std::size_t s = 0; s < fit.recipe.smooths().size(); ++s) {
    const auto& blk = fit.recipe.smooth_blocks()[s];
    SmoothRow row;
    row.name = spec.smooths[s].label();
    row.edf = fit.smooth_edf[s];
    row.df = static_cast<double>(blk.size);
    const MatrixXd v = fit.covariance.block(idx(blk.offset), idx(blk.offset), idx(blk.size), idx(blk.size));
    const VectorXd b = fit.beta.segment(idx(blk.offset), idx(blk.size));
    const Eigen::LLT<MatrixXd> llt(v);
    const double max_diag = v.diagonal().cwiseAbs().maxCoeff();
    const VectorXd diag = llt.matrixLLT().diagonal();
    const bool singular = llt.info() != Eigen::Success || !(max_diag > 0.0) ||
                          diag.minCoeff() * diag.minCoeff() < 1e-14 * max_diag;
    if (!singular) {
      row.chi_sq = b.dot(llt.solve(b));
      row.p_value = stats::chi_square_sf(row.chi_sq, row.df);
    } else {
      row.chi_sq = std::numeric_limits<double>::quiet_NaN();
    }
    out.smooth.push_back(row);
  }
  return out;
}

std::string format_summary_csv(const GamSummary& summary) {
  const auto f4 = [](double v) { return std::isfinite(v) ? io::format_fixed(v, 4) : std::string("NA"); };
  std::string out = "A. parametric coefficients,Estimate,Std. Error,z-value,p-value\n";
  for (const auto& r : summary.parametric) {
    out += r.name + "," + f4(r.estimate) + "," + f4(r.std_error) + "," + f4(r.z) + "," + format_p(r.p_value) + "\n";
  }
  out += "B. smooth terms,edf,Chi.sq,df,p-value\n";
  for (const auto& r : summary.smooth) {
    out += r.name + "," + f4(r.edf) + "," + f4(r.chi_sq) + "," + io::format_sig(r.df) + "," + format_p(r.p_value) + "\n";
  }
  return out;
}

std::vector<EffectPoint> partial_effects(const GamFit& fit, const std::string& smooth, std::size_t grid_size) {
  const auto s = fit.recipe.smooth_index(smooth);
  if (!s) fail(ErrorCode::NotFound, "model has no smooth '" + smooth + "'");
  if (grid_size < 2) fail(ErrorCode::InvalidArgument, "partial effect grid needs at least two points");
  const auto& basis = fit.recipe.smooths()[*s];
  const auto& blk = fit.recipe.smooth_blocks()[*s];
  const VectorXd b = fit.beta.segment(idx(blk.offset), idx(blk.size));
  const MatrixXd v = fit.covariance.block(idx(blk.offset), idx(blk.offset), idx(blk.size), idx(blk.size));
  std::vector<EffectPoint> curve;
  curve.reserve(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(grid_size - 1);
    const double xv = i + 1 == grid_size ? basis.upper() : basis.lower() + t * (basis.upper() - basis.lower());
    const RowVectorXd r = basis.row(xv);
    const double var = (r * v * r.transpose())(0, 0);
    curve.push_back({xv, r.dot(b), std::sqrt(std::max(var, 0.0))});
  }
  return curve;
}

std::string format_partial_effects_csv(const std::vector<EffectPoint>& curve) {
  std::string out = "x,effect,se\n";
  for (const auto& p : curve) {
    out += io::format_sig(p.x) + "," + io::format_sig(p.effect) + "," + io::format_sig(p.std_error) + "\n";
  }
  return out;
}

std::string partial_effects_svg(const std::vector<EffectPoint>& curve, const std::string& title) {
  constexpr double width = 480, height = 320, left = 60, right = 20, top = 30, bottom = 40;
  double x0 = curve.front().x, x1 = curve.back().x;
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  for (const auto& p : curve) {
    y0 = std::min(y0, p.effect - 2.0 * p.std_error);
    y1 = std::max(y1, p.effect + 2.0 * p.std_error);
  }
  if (!(y1 > y0)) {
    y0 -= 1.0;
    y1 += 1.0;
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  const auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * (width - left - right); };
  const auto sy = [&](double v) { return top + (y1 - v) / (y1 - y0) * (height - top - bottom); };
  const auto num = [](double v) { return io::format_fixed(v, 2); };

  std::string band, line;
  for (const auto& p : curve) band += num(sx(p.x)) + "," + num(sy(p.effect + 2.0 * p.std_error)) + " ";
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
    band += num(sx(it->x)) + "," + num(sy(it->effect - 2.0 * it->std_error)) + " ";
  }
  for (const auto& p : curve) line += num(sx(p.x)) + "," + num(sy(p.effect)) + " ";

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"320\" viewBox=\"0 0 480 320\">\n";
  svg += "<rect width=\"480\" height=\"320\" fill=\"white\"/>\n";
  svg += "<text x=\"240\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + title +
         "</text>\n";
  svg += "<polygon points=\"" + band + "\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";
  svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\"/>\n";
  if (y0 < 0.0 && y1 > 0.0) {
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(sy(0.0)) + "\" x2=\"" + num(width - right) + "\" y2=\"" +
           num(sy(0.0)) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  }
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(height - bottom) + "\" x2=\"" + num(width - right) +
         "\" y2=\"" + num(height - bottom) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" +
         num(height - bottom) + "\" stroke=\"black\"/>\n";
  const auto label = [&](double xx, double yy, const std::string& anchor, const std::string& text) {
    svg += "<text x=\"" + num(xx) + "\" y=\"" + num(yy) + "\" text-anchor=\"" + anchor +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + text + "</text>\n";
  };
  label(left, height - bottom + 16, "middle", io::format_sig(x0, 4));
  label(width - right, height - bottom + 16, "middle", io::format_sig(x1, 4));
  label(left - 6, height - bottom, "end", io::format_sig(y0, 4));
  label(left - 6, top + 4, "end", io::format_sig(y1, 4));
  svg += "</svg>\n";
  return svg;
}

std::vector<AicEntry> compare_aic(std::span<const std::pair<std::string, const GamFit*>> fits) {
  if (fits.size() < 2) fail(ErrorCode::InvalidArgument, "AIC comparison needs at least two fits");
  for (const auto& [name, fit] : fits) {
    if (fit->y != fits.front().second->y) {
      fail(ErrorCode::Validation, "fit '" + name + "' was estimated on a different response vector");
    }
  }
  std::vector<AicEntry> out;
  for (const auto& [name, fit] : fits) out.push_back({name, fit->aic, 0.0});
  std::stable_sort(out.begin(), out.end(), [](const AicEntry& a, const AicEntry& b) { return a.aic < b.aic; });
  for (auto& e : out) e.delta = e.aic - out.front().aic;
  return out;
}

}  // namespace vgsim::gam
