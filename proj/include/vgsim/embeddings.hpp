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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vgsim {

using Vector = std::vector<double>;

/// Immutable keyed store of equal-length dense vectors, kept in insertion
/// order. Construction validates that every vector has `dim` finite
/// components and that keys are unique and non-empty.
class VectorTable {
 public:
  VectorTable() = default;
  VectorTable(std::size_t dim, std::vector<std::string> keys, std::vector<double> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }

  const std::vector<std::string>& keys() const noexcept { return keys_; }
  const std::string& key(std::size_t i) const { return keys_.at(i); }
  std::span<const double> row(std::size_t i) const;

  std::optional<std::size_t> index_of(std::string_view key) const;
  std::optional<std::span<const double>> find(std::string_view key) const;
  bool contains(std::string_view key) const { return index_of(key).has_value(); }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> keys_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Word -> vector store. Lookups are exact-match and case-sensitive; multiword
/// labels such as "chocolate_sauce" are single tokens.
class EmbeddingSpace : public VectorTable {
 public:
  EmbeddingSpace() = default;
  EmbeddingSpace(std::string name, std::size_t dim, std::vector<std::string> words,
                 std::vector<double> values)
      : VectorTable(dim, std::move(words), std::move(values)), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

  /// Copy of the word's vector, or nullopt when the word is not in the space.
  std::optional<Vector> vector(std::string_view word) const;

 private:
  std::string name_;
};

/// Image id -> visual feature vector. Vectors are ingested, never computed.
class ImageVectorStore : public VectorTable {
 public:
  using VectorTable::VectorTable;
};

// Embedding file: one `word v1 ... vd` entry per line. The dimension is taken
// from the first line unless `expected_dim` is given.
EmbeddingSpace load_embeddings(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim = std::nullopt,
                               std::string name = {});
std::string format_embeddings(const EmbeddingSpace& space);
void save_embeddings(const EmbeddingSpace& space, const std::filesystem::path& path);

// Image vector file: CSV with header `image_id,v1,...,vd`.
ImageVectorStore load_image_vectors(const std::filesystem::path& path);

/// dot(a,b)/(|a||b|) clamped to [-1,1]. Throws on length mismatch or a
/// zero-norm argument.
double cosine(std::span<const double> a, std::span<const double> b);

struct LabelSimilarity {
  double mean = 0.0;
  std::size_t used = 0;
};

/// Mean cosine between `target` and every label present in the space. Absent
/// labels are skipped; NotFound when the target is absent, NoUsableLabels when
/// no label survives.
LabelSimilarity mean_label_similarity(const EmbeddingSpace& space, std::string_view target,
                                      std::span<const std::string> labels);

struct Neighbor {
  std::string id;
  double cosine = 0.0;
};

/// Top-k entries by descending cosine to `query`; ties go to the
/// lexicographically smaller id. k larger than the store returns everything.
std::vector<Neighbor> nearest_neighbors(const VectorTable& store, std::span<const double> query,
                                        std::size_t k);

}  // namespace vgsim
