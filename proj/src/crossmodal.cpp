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

#include "vgsim/crossmodal.hpp"

#include <cmath>
#include <limits>

#include "vgsim/error.hpp"
#include "vgsim/io.hpp"

namespace vgsim {

const char* map_mode_name(MapMode mode) noexcept {
  switch (mode) {
    case MapMode::Prototype: return "prototype";
    case MapMode::Exemplar: return "exemplar";
    case MapMode::ZsgAlignment: return "zsg-alignment";
  }
  return "prototype";
}

MapMode parse_map_mode(std::string_view name) {
  if (name == "prototype") return MapMode::Prototype;
  if (name == "exemplar") return MapMode::Exemplar;
  if (name == "zsg-alignment") return MapMode::ZsgAlignment;
  fail(ErrorCode::InvalidArgument, "unknown map mode '" + std::string(name) + "'");
}

LinearMap::LinearMap(Eigen::MatrixXd matrix, MapMode mode, double lambda)
    : matrix_(std::move(matrix)), mode_(mode), lambda_(lambda) {
  if (matrix_.rows() == 0 || matrix_.cols() == 0) fail(ErrorCode::InvalidArgument, "empty linear map");
  if (!matrix_.allFinite()) fail(ErrorCode::InvalidArgument, "linear map has non-finite entries");
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) fail(ErrorCode::InvalidArgument, "lambda must be >= 0");
}

Vector LinearMap::apply(std::span<const double> x) const {
  if (x.size() != d_in()) {
    fail(ErrorCode::DimensionMismatch, "map expects " + std::to_string(d_in()) + " inputs, got " +
                                           std::to_string(x.size()));
  }
  const Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::RowVectorXd out = row * matrix_;
  return Vector(out.data(), out.data() + out.size());
}

std::string format_linear_map(const LinearMap& map) {
  std::string out = std::to_string(map.d_in()) + " " + std::to_string(map.d_out()) + " " +
                    map_mode_name(map.mode()) + " " + io::format_roundtrip(map.lambda()) + "\n";
  const auto& m = map.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += io::format_roundtrip(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_linear_map(const LinearMap& map, const std::filesystem::path& path) {
  io::write_text(path, format_linear_map(map));
}

LinearMap load_linear_map(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_no;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto tokens = io::split_whitespace(lines[i]);
    if (tokens.empty()) continue;
    rows.push_back(std::move(tokens));
    line_no.push_back(i + 1);
  }
  const std::string src = path.string();
  if (rows.empty() || rows[0].size() != 4) fail(ErrorCode::Parse, src + ": header must be `d_in d_out mode lambda`");
  const auto where = [&](std::size_t r) { return src + ":" + std::to_string(line_no[r]); };
  const auto d_in = io::parse_int(rows[0][0], where(0));
  const auto d_out = io::parse_int(rows[0][1], where(0));
  if (d_in <= 0 || d_out <= 0) fail(ErrorCode::Parse, where(0) + ": dimensions must be positive");
  const MapMode mode = parse_map_mode(rows[0][2]);
  const double lambda = io::parse_double(rows[0][3], where(0));
  if (rows.size() - 1 != static_cast<std::size_t>(d_in)) {
    fail(ErrorCode::DimensionMismatch, src + ": expected " + std::to_string(d_in) + " matrix rows, found " +
                                           std::to_string(rows.size() - 1));
  }
  Eigen::MatrixXd m(d_in, d_out);
  for (Eigen::Index i = 0; i < d_in; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i) + 1];
    if (r.size() != static_cast<std::size_t>(d_out)) {
      fail(ErrorCode::DimensionMismatch, where(static_cast<std::size_t>(i) + 1) + ": expected " +
                                             std::to_string(d_out) + " values");
    }
    for (Eigen::Index j = 0; j < d_out; ++j) {
      m(i, j) = io::parse_double(r[static_cast<std::size_t>(j)], where(static_cast<std::size_t>(i) + 1));
    }
  }
  return LinearMap(std::move(m), mode, lambda);
}

double default_ridge_lambda(const Eigen::MatrixXd& text) {
  if (text.cols() == 0) fail(ErrorCode::InvalidArgument, "empty design");
  return 1e-2 * text.squaredNorm() / static_cast<double>(text.cols());
}

FittedMap fit_linear_map(const Eigen::MatrixXd& text, const Eigen::MatrixXd& target, double lambda,
                         MapMode mode) {
  if (text.rows() < 1) fail(ErrorCode::InvalidArgument, "fit_linear_map needs at least one row");
  if (text.rows() != target.rows()) {
    fail(ErrorCode::DimensionMismatch, "text has " + std::to_string(text.rows()) + " rows, target has " +
                                           std::to_string(target.rows()));
  }
  if (text.cols() == 0 || target.cols() == 0) fail(ErrorCode::DimensionMismatch, "zero-width design");
  if (!text.allFinite() || !target.allFinite()) fail(ErrorCode::InvalidArgument, "non-finite training input");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "lambda must be >= 0");

  const Eigen::Index d = text.cols();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(text);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double smin = (text.rows() < d || sv.size() == 0) ? 0.0 : sv(sv.size() - 1);
  const double lo = smin * smin + lambda;
  const double cond = lo > 0.0 ? (smax * smax + lambda) / lo : std::numeric_limits<double>::infinity();

  Eigen::MatrixXd m;
  if (lambda == 0.0) {
    if (!(cond <= kMaxConditionNumber)) {
      fail(ErrorCode::Singular, "singular system at lambda=0 (condition number " + io::format_sig(cond) +
                                    " > 1e12); use a positive ridge lambda");
    }
    m = text.colPivHouseholderQr().solve(target);
  } else {
    Eigen::MatrixXd gram = text.transpose() * text;
    gram.diagonal().array() += lambda;
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) fail(ErrorCode::Singular, "ridge system is not positive definite");
    m = llt.solve(text.transpose() * target);
  }
  FittedMap out{LinearMap(std::move(m), mode, lambda), {}};
  out.report.rows = static_cast<std::size_t>(text.rows());
  out.report.lambda = lambda;
  out.report.residual_norm = (text * out.map.matrix() - target).norm();
  out.report.condition_number = cond;
  return out;
}

ClassMembership load_class_membership(const std::filesystem::path& path) {
  const auto table = io::CsvTable::read(path);
  const auto c_cls = table.column("class");
  const auto c_img = table.column("image_id");
  ClassMembership out;
  for (const auto& row : table.rows()) {
    const auto& cls = row.fields[c_cls];
    const auto& img = row.fields[c_img];
    if (cls.empty() || img.empty()) fail(ErrorCode::Parse, table.where(row) + ": empty class or image id");
    out[cls].push_back(img);
  }
  if (out.empty()) fail(ErrorCode::Parse, path.string() + ": no class memberships");
  return out;
}

PrototypeTable::PrototypeTable(std::map<std::string, Prototype> entries) : entries_(std::move(entries)) {
  for (const auto& [cls, p] : entries_) {
    if (p.members.empty()) fail(ErrorCode::InvalidArgument, "class '" + cls + "' has no members");
  }
}

const Prototype& PrototypeTable::at(const std::string& cls) const {
  const auto it = entries_.find(cls);
  if (it == entries_.end()) fail(ErrorCode::NotFound, "no prototype for class '" + cls + "'");
  return it->second;
}

PrototypeTable build_prototypes(const ImageVectorStore& store, const ClassMembership& membership) {
  std::map<std::string, Prototype> entries;
  for (const auto& [cls, members] : membership) {
    if (members.empty()) fail(ErrorCode::InvalidArgument, "class '" + cls + "' has no members");
    Vector sum(store.dim(), 0.0);
    for (const auto& id : members) {
      const auto v = store.find(id);
      if (!v) fail(ErrorCode::NotFound, "class '" + cls + "' references unknown image '" + id + "'");
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += (*v)[j];
    }
    for (auto& x : sum) x /= static_cast<double>(members.size());
    entries.emplace(cls, Prototype{std::move(sum), members});
  }
  return PrototypeTable(std::move(entries));
}

TrainingRows build_training_rows(const EmbeddingSpace& space, const ImageVectorStore& store,
                                 const ClassMembership& membership, MapMode mode) {
  if (mode == MapMode::ZsgAlignment) {
    fail(ErrorCode::InvalidArgument, "word-level training rows are built for prototype or exemplar mode");
  }
  std::vector<std::pair<std::string, Vector>> rows;
  TrainingRows out;
  if (mode == MapMode::Prototype) {
    const auto protos = build_prototypes(store, membership);
    for (const auto& [cls, p] : protos.entries()) {
      if (!space.contains(cls)) {
        out.skipped_classes.push_back(cls);
        continue;
      }
      rows.emplace_back(cls, p.vector);
    }
  } else {
    for (const auto& [cls, members] : membership) {
      if (!space.contains(cls)) {
        out.skipped_classes.push_back(cls);
        continue;
      }
      for (const auto& id : members) {
        const auto v = store.find(id);
        if (!v) fail(ErrorCode::NotFound, "class '" + cls + "' references unknown image '" + id + "'");
        rows.emplace_back(cls, Vector(v->begin(), v->end()));
      }
    }
  }
  if (rows.empty()) fail(ErrorCode::InvalidArgument, "no class word of the membership is in " + space.name());
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.text.resize(n, static_cast<Eigen::Index>(space.dim()));
  out.target.resize(n, static_cast<Eigen::Index>(store.dim()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [word, target] = rows[static_cast<std::size_t>(i)];
    const auto t = *space.find(word);
    for (Eigen::Index j = 0; j < out.text.cols(); ++j) out.text(i, j) = t[static_cast<std::size_t>(j)];
    for (Eigen::Index j = 0; j < out.target.cols(); ++j) out.target(i, j) = target[static_cast<std::size_t>(j)];
    out.words.push_back(word);
  }
  return out;
}

Vector predict_image_vector(const LinearMap& map, const EmbeddingSpace& space, std::string_view word) {
  const auto t = space.find(word);
  if (!t) fail(ErrorCode::NotFound, "word '" + std::string(word) + "' not in " + space.name());
  if (space.dim() != map.d_in()) {
    fail(ErrorCode::DimensionMismatch, "space has dimension " + std::to_string(space.dim()) +
                                           ", map expects " + std::to_string(map.d_in()));
  }
  return map.apply(*t);
}

std::string retrieve_exemplar(const LinearMap& map, const EmbeddingSpace& space, std::string_view word,
                              const ImageVectorStore& training) {
  const auto predicted = predict_image_vector(map, space, word);
  return nearest_neighbors(training, predicted, 1).front().id;
}

std::string retrieve_prototype(const LinearMap& map, const EmbeddingSpace& space, std::string_view word,
                               const PrototypeTable& protos, const ImageVectorStore& training,
                               PrototypeSearch search) {
  if (protos.size() == 0) fail(ErrorCode::InvalidArgument, "empty prototype table");
  const auto predicted = predict_image_vector(map, space, word);
  const Prototype* best = nullptr;
  double best_cos = -2.0;
  // Lexicographic class order; strict '>' keeps the first class on ties.
  for (const auto& [cls, p] : protos.entries()) {
    const double c = cosine(predicted, p.vector);
    if (c > best_cos) {
      best_cos = c;
      best = &p;
    }
  }
  if (search == PrototypeSearch::Global) return nearest_neighbors(training, best->vector, 1).front().id;

  const std::string* best_id = nullptr;
  best_cos = -2.0;
  for (const auto& id : best->members) {
    const auto v = training.find(id);
    if (!v) fail(ErrorCode::NotFound, "prototype member '" + id + "' not in training images");
    const double c = cosine(best->vector, *v);
    if (c > best_cos || (c == best_cos && id < *best_id)) {
      best_cos = c;
      best_id = &id;
    }
  }
  return *best_id;
}

}  // namespace vgsim
