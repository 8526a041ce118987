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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vgsim/crossmodal.hpp"
#include "vgsim/embeddings.hpp"

namespace vgsim {

enum class EncoderKind { MeanPool, GatedRecurrent };

const char* encoder_kind_name(EncoderKind kind) noexcept;
EncoderKind parse_encoder_kind(std::string_view name);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::MeanPool;
  std::size_t hidden_dim = 32;
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  double learning_rate = 1e-2;
  std::uint64_t seed = 1;
  // 0 disables early stopping.
  std::size_t early_stop_patience = 20;
  // Output dimension of the alignment; 0 keeps the textual dimension.
  std::size_t grounded_dim = 0;

  void validate() const;
};

enum class CorpusSplit { Train, Validation };

struct CaptionSample {
  std::string image_id;
  std::vector<std::string> tokens;
};

struct CaptionCorpus {
  std::vector<CaptionSample> samples;
  CorpusSplit split = CorpusSplit::Train;
};

// TSV `image_id<TAB>caption text`, tokenized on whitespace.
CaptionCorpus load_captions(const std::filesystem::path& path, CorpusSplit split);

/// Deterministic hold-out: shuffles with `seed` and moves `fraction` of the
/// samples (at least one) into a validation corpus.
std::pair<CaptionCorpus, CaptionCorpus> split_corpus(const CaptionCorpus& corpus, double fraction,
                                                     std::uint64_t seed);

/// Alignment M followed by a caption encoder and a linear read-out onto the
/// image space. Only M outlives training.
///
/// Parameters, in order: M (d_in x d_g), W (d_s x d_img), b (1 x d_img), and
/// for the gated-recurrent kind Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh. d_s is d_g
/// for mean pooling and the hidden size for the recurrent encoder.
class AlignmentModel {
 public:
  AlignmentModel(EncoderKind kind, std::size_t d_in, std::size_t d_grounded, std::size_t hidden,
                 std::size_t d_image, std::uint64_t seed,
                 std::optional<Eigen::MatrixXd> alignment_init = std::nullopt);

  EncoderKind kind() const noexcept { return kind_; }
  const Eigen::MatrixXd& alignment() const { return params_[0]; }

  std::vector<Eigen::MatrixXd>& parameters() noexcept { return params_; }
  const std::vector<Eigen::MatrixXd>& parameters() const noexcept { return params_; }

  // `tokens` holds one raw textual vector per row (L x d_in).
  Eigen::RowVectorXd encode(const Eigen::MatrixXd& tokens) const;
  Eigen::RowVectorXd predict(const Eigen::MatrixXd& tokens) const;

  /// Mean squared error over image components for one caption.
  double loss(const Eigen::MatrixXd& tokens, const Eigen::RowVectorXd& target) const;

  /// Adds `scale` * d(loss)/d(params) into `grad` (same shapes as the
  /// parameters) and returns the unscaled loss.
  double accumulate_gradient(const Eigen::MatrixXd& tokens, const Eigen::RowVectorXd& target, double scale,
                             std::vector<Eigen::MatrixXd>& grad) const;

 private:
  EncoderKind kind_;
  std::vector<Eigen::MatrixXd> params_;
};

/// Sentence representation of `caption` under the model's alignment. Tokens
/// missing from the space are skipped; NotFound when none remain.
Vector encode_caption(const AlignmentModel& model, const EmbeddingSpace& space,
                      std::span<const std::string> caption);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainingLog {
  double initial_train_mse = 0.0;
  double initial_val_mse = 0.0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 = initialization
  double best_val_mse = 0.0;
  bool stopped_early = false;
  std::size_t skipped_tokens = 0;
};

// CSV `epoch,train_mse,val_mse`, one row per completed epoch.
std::string format_training_log(const TrainingLog& log);

struct AlignmentResult {
  LinearMap alignment;
  TrainingLog log;
};

/// Mini-batch Adam on the caption -> image MSE; returns the alignment from the
/// epoch with the lowest validation MSE. Deterministic for a given seed.
AlignmentResult train_alignment(const EmbeddingSpace& space, const CaptionCorpus& train,
                                const CaptionCorpus& validation, const ImageVectorStore& images,
                                const EncoderConfig& cfg);

/// g = t * M for every word; the result is named "<name>-grounded".
EmbeddingSpace ground(const EmbeddingSpace& space, const LinearMap& alignment);

}  // namespace vgsim
