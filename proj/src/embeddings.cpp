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

#include "vgsim/embeddings.hpp"

#include <algorithm>
#include <cmath>

#include "vgsim/error.hpp"
#include "vgsim/io.hpp"

namespace vgsim {

VectorTable::VectorTable(std::size_t dim, std::vector<std::string> keys, std::vector<double> values)
    : dim_(dim), keys_(std::move(keys)), values_(std::move(values)) {
  if (dim_ == 0) fail(ErrorCode::InvalidArgument, "vector dimension must be positive");
  if (values_.size() != keys_.size() * dim_) {
    fail(ErrorCode::DimensionMismatch, "expected " + std::to_string(keys_.size() * dim_) +
                                           " components, got " + std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "non-finite vector component");
  }
  index_.reserve(keys_.size());
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    if (keys_[i].empty()) fail(ErrorCode::InvalidArgument, "empty key");
    if (!index_.emplace(keys_[i], i).second) {
      fail(ErrorCode::Duplicate, "duplicate key '" + keys_[i] + "'");
    }
  }
}

std::span<const double> VectorTable::row(std::size_t i) const {
  if (i >= keys_.size()) fail(ErrorCode::InvalidArgument, "row index out of range");
  return {values_.data() + i * dim_, dim_};
}

std::optional<std::size_t> VectorTable::index_of(std::string_view key) const {
  const auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::span<const double>> VectorTable::find(std::string_view key) const {
  const auto i = index_of(key);
  if (!i) return std::nullopt;
  return row(*i);
}

std::optional<Vector> EmbeddingSpace::vector(std::string_view word) const {
  const auto v = find(word);
  if (!v) return std::nullopt;
  return Vector(v->begin(), v->end());
}

EmbeddingSpace load_embeddings(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim, std::string name) {
  const auto lines = io::read_lines(path);
  std::vector<std::string> words;
  std::vector<double> values;
  std::size_t dim = expected_dim.value_or(0);
  if (expected_dim && *expected_dim == 0) {
    fail(ErrorCode::InvalidArgument, "expected dimension must be positive");
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto tokens = io::split_whitespace(lines[i]);
    if (tokens.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    const std::size_t found = tokens.size() - 1;
    if (dim == 0) {
      if (found == 0) fail(ErrorCode::Parse, where + ": entry has no components");
      dim = found;
    }
    if (found != dim) {
      fail(ErrorCode::DimensionMismatch, where + ": expected " + std::to_string(dim) +
                                             " components, found " + std::to_string(found));
    }
    words.push_back(tokens[0]);
    for (std::size_t j = 1; j < tokens.size(); ++j) values.push_back(io::parse_double(tokens[j], where));
  }
  if (words.empty()) fail(ErrorCode::Parse, path.string() + ": no embeddings in file");
  if (name.empty()) name = path.stem().string();
  try {
    return EmbeddingSpace(std::move(name), dim, std::move(words), std::move(values));
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::string format_embeddings(const EmbeddingSpace& space) {
  std::string out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    out += space.key(i);
    for (double v : space.row(i)) {
      out += ' ';
      out += io::format_roundtrip(v);
    }
    out += '\n';
  }
  return out;
}

void save_embeddings(const EmbeddingSpace& space, const std::filesystem::path& path) {
  io::write_text(path, format_embeddings(space));
}

ImageVectorStore load_image_vectors(const std::filesystem::path& path) {
  const auto table = io::CsvTable::read(path);
  const auto& header = table.header();
  if (header.size() < 2 || header[0] != "image_id") {
    fail(ErrorCode::Parse, path.string() + ": header must be image_id,v1,...,vd");
  }
  const std::size_t dim = header.size() - 1;
  std::vector<std::string> ids;
  std::vector<double> values;
  ids.reserve(table.rows().size());
  values.reserve(table.rows().size() * dim);
  for (const auto& row : table.rows()) {
    ids.push_back(row.fields[0]);
    for (std::size_t j = 1; j <= dim; ++j) values.push_back(io::parse_double(row.fields[j], table.where(row)));
  }
  if (ids.empty()) fail(ErrorCode::Parse, path.string() + ": no image vectors in file");
  try {
    return ImageVectorStore(dim, std::move(ids), std::move(values));
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::DimensionMismatch, "cosine of vectors with lengths " + std::to_string(a.size()) +
                                           " and " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::InvalidArgument, "cosine of a zero-norm vector");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

LabelSimilarity mean_label_similarity(const EmbeddingSpace& space, std::string_view target,
                                      std::span<const std::string> labels) {
  const auto t = space.find(target);
  if (!t) fail(ErrorCode::NotFound, "target '" + std::string(target) + "' not in " + space.name());
  LabelSimilarity result;
  double sum = 0.0;
  for (const auto& label : labels) {
    const auto v = space.find(label);
    if (!v) continue;
    sum += cosine(*t, *v);
    ++result.used;
  }
  if (result.used == 0) {
    fail(ErrorCode::NoUsableLabels, "no label for target '" + std::string(target) + "' is in " + space.name());
  }
  result.mean = sum / static_cast<double>(result.used);
  return result;
}

std::vector<Neighbor> nearest_neighbors(const VectorTable& store, std::span<const double> query,
                                        std::size_t k) {
  if (store.empty()) fail(ErrorCode::InvalidArgument, "nearest neighbours in an empty store");
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be positive");
  if (query.size() != store.dim()) {
    fail(ErrorCode::DimensionMismatch, "query has " + std::to_string(query.size()) +
                                           " components, store has " + std::to_string(store.dim()));
  }
  std::vector<Neighbor> all;
  all.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) all.push_back({store.key(i), cosine(query, store.row(i))});
  const auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.id < b.id;
  };
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

}  // namespace vgsim
