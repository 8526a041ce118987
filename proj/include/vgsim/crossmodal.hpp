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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vgsim/embeddings.hpp"

namespace vgsim {

enum class MapMode { Prototype, Exemplar, ZsgAlignment };

const char* map_mode_name(MapMode mode) noexcept;
MapMode parse_map_mode(std::string_view name);

/// Row-vector linear map x -> x * matrix, with matrix d_in x d_out.
class LinearMap {
 public:
  LinearMap() = default;
  LinearMap(Eigen::MatrixXd matrix, MapMode mode, double lambda);

  std::size_t d_in() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t d_out() const noexcept { return static_cast<std::size_t>(matrix_.cols()); }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  MapMode mode() const noexcept { return mode_; }
  double lambda() const noexcept { return lambda_; }

  Vector apply(std::span<const double> x) const;

 private:
  Eigen::MatrixXd matrix_;
  MapMode mode_ = MapMode::Prototype;
  double lambda_ = 0.0;
};

// Text format: header `d_in d_out mode lambda`, then d_in rows of d_out reals.
std::string format_linear_map(const LinearMap& map);
void save_linear_map(const LinearMap& map, const std::filesystem::path& path);
LinearMap load_linear_map(const std::filesystem::path& path);

struct MapFitReport {
  std::size_t rows = 0;
  double lambda = 0.0;
  double residual_norm = 0.0;     // |T M - V|_F
  double condition_number = 0.0;  // of T'T + lambda I
};

struct FittedMap {
  LinearMap map;
  MapFitReport report;
};

inline constexpr double kMaxConditionNumber = 1e12;

/// Default ridge strength: 1e-2 * trace(T'T) / d_in.
double default_ridge_lambda(const Eigen::MatrixXd& text);

/// Multivariate ridge solution M = (T'T + lambda I)^-1 T'V. At lambda = 0 the
/// system is solved by column-pivoted QR on T and rejected when the condition
/// number of T'T exceeds kMaxConditionNumber.
FittedMap fit_linear_map(const Eigen::MatrixXd& text, const Eigen::MatrixXd& target, double lambda,
                         MapMode mode);

using ClassMembership = std::map<std::string, std::vector<std::string>>;

// CSV `class,image_id`; member order follows the file.
ClassMembership load_class_membership(const std::filesystem::path& path);

struct Prototype {
  Vector vector;
  std::vector<std::string> members;
};

/// Class word -> averaged image vector plus its members. Iteration is in
/// lexicographic class order.
class PrototypeTable {
 public:
  explicit PrototypeTable(std::map<std::string, Prototype> entries);

  const std::map<std::string, Prototype>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const Prototype& at(const std::string& cls) const;

 private:
  std::map<std::string, Prototype> entries_;
};

PrototypeTable build_prototypes(const ImageVectorStore& store, const ClassMembership& membership);

struct TrainingRows {
  Eigen::MatrixXd text;    // n x d_in
  Eigen::MatrixXd target;  // n x d_out
  std::vector<std::string> words;
  std::vector<std::string> skipped_classes;  // class words missing from the space
};

// Prototype mode: one row per (class word, prototype). Exemplar mode: one row
// per (class word, member image) with the word vector repeated.
TrainingRows build_training_rows(const EmbeddingSpace& space, const ImageVectorStore& store,
                                 const ClassMembership& membership, MapMode mode);

Vector predict_image_vector(const LinearMap& map, const EmbeddingSpace& space, std::string_view word);

std::string retrieve_exemplar(const LinearMap& map, const EmbeddingSpace& space, std::string_view word,
                              const ImageVectorStore& training);

enum class PrototypeSearch { WithinClass, Global };

/// Two-step retrieval: the class whose prototype is closest to the prediction,
/// then the image closest to that prototype (within its members by default).
std::string retrieve_prototype(const LinearMap& map, const EmbeddingSpace& space, std::string_view word,
                               const PrototypeTable& protos, const ImageVectorStore& training,
                               PrototypeSearch search = PrototypeSearch::WithinClass);

}  // namespace vgsim
