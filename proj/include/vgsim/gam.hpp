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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vgsim::gam {

struct FactorTerm {
  std::string name;
  std::vector<std::string> levels;  // levels[0] is the reference level
};

struct InteractionTerm {
  std::string factor_a, level_a;
  std::string factor_b, level_b;

  std::string label() const { return factor_a + "=" + level_a + ":" + factor_b + "=" + level_b; }
};

struct SmoothTerm {
  std::string covariate;
  std::size_t k = 5;

  std::string label() const { return "s(" + covariate + ")"; }
};

/// Model formula: intercept, dummy-coded factors, linear covariates,
/// indicator interactions and univariate penalized smooths.
struct GamSpec {
  std::vector<FactorTerm> factors;
  std::vector<std::string> linear;
  std::vector<InteractionTerm> interactions;
  std::vector<SmoothTerm> smooths;
  std::vector<double> lambda_grid = default_lambda_grid();
  bool per_smooth_lambda = false;

  void validate() const;

  static std::vector<double> default_lambda_grid();

  // Plain-text key-value form, e.g.
  //   factor = Distance: far near max
  //   linear = Predicted Image #Objects
  //   interaction = WordType=concrete:Distance=near
  //   smooth = Inter-Image Similarity
  //   k = 5
  //   lambda_grid = 1e-3 1e-2 1e-1
  //   per_smooth_lambda = false
  static GamSpec parse(const std::string& text, const std::string& source = "<spec>");
  static GamSpec load(const std::filesystem::path& path);
  std::string to_text() const;
};

/// Column-oriented model inputs.
struct GamData {
  std::size_t rows = 0;
  std::map<std::string, std::vector<std::string>> factors;
  std::map<std::string, std::vector<double>> covariates;

  void add_factor(const std::string& name, std::vector<std::string> values);
  void add_covariate(const std::string& name, std::vector<double> values);
};

/// Cubic B-spline basis on one covariate with a sum-to-zero constraint over the
/// training values and a second-order difference penalty taken on the
/// Greville abscissae, so the penalty's null space is exactly the linear
/// functions.
class SmoothBasis {
 public:
  SmoothBasis(std::string covariate, std::size_t k, std::span<const double> x);

  const std::string& covariate() const noexcept { return covariate_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t width() const noexcept { return k_ - 1; }
  double lower() const noexcept { return lo_; }
  double upper() const noexcept { return hi_; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  const Eigen::MatrixXd& penalty() const noexcept { return penalty_; }

  // All k B-splines at x; linear extension outside the training range.
  Eigen::RowVectorXd raw(double x) const;
  // Constrained (centred) basis row of width k-1.
  Eigen::RowVectorXd row(double x) const;

 private:
  std::string covariate_;
  std::size_t k_;
  double lo_ = 0.0, hi_ = 1.0;
  std::vector<double> knots_;  // on the [0,1]-normalised scale
  Eigen::MatrixXd constraint_null_;
  Eigen::MatrixXd penalty_;

  Eigen::RowVectorXd eval(double u, int derivative) const;
};

struct Block {
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Everything needed to rebuild design rows for new data with the same
/// coding, knots and centring.
class DesignRecipe {
 public:
  DesignRecipe() = default;
  DesignRecipe(GamSpec spec, const GamData& training);

  const GamSpec& spec() const noexcept { return spec_; }
  const std::vector<std::string>& column_names() const noexcept { return columns_; }
  std::size_t n_columns() const noexcept { return columns_.size(); }
  std::size_t n_parametric() const noexcept { return n_param_; }
  const std::vector<SmoothBasis>& smooths() const noexcept { return smooths_; }
  const std::vector<Block>& smooth_blocks() const noexcept { return blocks_; }
  std::optional<std::size_t> smooth_index(const std::string& name) const;

  Eigen::MatrixXd build(const GamData& data) const;

 private:
  GamSpec spec_;
  std::vector<std::string> columns_;
  std::size_t n_param_ = 0;
  std::vector<SmoothBasis> smooths_;
  std::vector<Block> blocks_;
};

struct DesignMatrix {
  DesignRecipe recipe;
  Eigen::MatrixXd x;  // parametric columns first, then one block per smooth

  Eigen::MatrixXd parametric() const { return x.leftCols(static_cast<Eigen::Index>(recipe.n_parametric())); }
  Eigen::MatrixXd smooth(std::size_t i) const;
  const Eigen::MatrixXd& penalty(std::size_t i) const { return recipe.smooths().at(i).penalty(); }
};

DesignMatrix build_design(const GamData& data, const GamSpec& spec);

struct PirlsIteration {
  std::size_t iteration = 0;
  double deviance = 0.0;
  double penalized_deviance = 0.0;
  int step_halvings = 0;
};

struct GridPoint {
  std::vector<double> lambdas;
  bool converged = false;
  double deviance = 0.0;
  double edf_total = 0.0;
  double aic = 0.0;
  std::vector<double> smooth_edf;
};

struct GamFit {
  DesignRecipe recipe;
  Eigen::VectorXd beta;
  std::vector<double> lambdas;  // one per smooth
  Eigen::VectorXd coefficient_edf;
  std::vector<double> smooth_edf;
  double edf_total = 0.0;
  double deviance = 0.0;
  double penalized_deviance = 0.0;
  double aic = 0.0;
  Eigen::MatrixXd covariance;  // (X'WX + S)^-1
  std::vector<PirlsIteration> trace;
  std::vector<GridPoint> grid;
  std::vector<double> y;
};

inline constexpr std::size_t kMaxPirlsIterations = 200;
inline constexpr double kPirlsTolerance = 1e-8;
inline constexpr double kSeparationBound = 50.0;

/// Penalized IRLS at fixed smoothing parameters (one per smooth).
GamFit fit_gam_fixed(const DesignMatrix& design, std::span<const double> y, std::span<const double> lambdas);

/// Grid search over the spec's lambda grid (shared across smooths, or
/// coordinate-wise per smooth), keeping the AIC-minimising fit.
GamFit fit_gam(const DesignMatrix& design, std::span<const double> y, const GamSpec& spec);

Eigen::VectorXd linear_predictor(const GamFit& fit, const Eigen::MatrixXd& x);
Eigen::VectorXd predict_prob(const GamFit& fit, const Eigen::MatrixXd& x);
Eigen::VectorXd predict_prob(const GamFit& fit, const GamData& data);

struct ParametricRow {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  std::optional<double> p_value;
};

struct SmoothRow {
  std::string name;
  double edf = 0.0;
  double chi_sq = 0.0;
  double df = 0.0;
  std::optional<double> p_value;  // nullopt when the covariance block is singular
};

struct GamSummary {
  std::vector<ParametricRow> parametric;
  std::vector<SmoothRow> smooth;
  double deviance = 0.0;
  double aic = 0.0;
  double edf_total = 0.0;
  std::size_t n = 0;
};

GamSummary summarize(const GamFit& fit);
// Two blocks, four decimals: parametric coefficients, then smooth terms.
std::string format_summary_csv(const GamSummary& summary);

struct EffectPoint {
  double x = 0.0;
  double effect = 0.0;
  double std_error = 0.0;
};

std::vector<EffectPoint> partial_effects(const GamFit& fit, const std::string& smooth, std::size_t grid_size);
std::string format_partial_effects_csv(const std::vector<EffectPoint>& curve);
// Line plot with a +-2 SE band.
std::string partial_effects_svg(const std::vector<EffectPoint>& curve, const std::string& title);

struct AicEntry {
  std::string name;
  double aic = 0.0;
  double delta = 0.0;  // relative to the best (lowest) AIC
};

/// Ascending AIC; equal AICs keep input order. All fits must share one
/// response vector.
std::vector<AicEntry> compare_aic(std::span<const std::pair<std::string, const GamFit*>> fits);

}  // namespace vgsim::gam
