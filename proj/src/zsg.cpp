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

#include "vgsim/zsg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vgsim/error.hpp"
#include "vgsim/io.hpp"

namespace vgsim {

namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;

enum Param : std::size_t { kM = 0, kW, kB, kWz, kUz, kBz, kWr, kUr, kBr, kWh, kUh, kBh };

// Platform-independent uniform draw in [-a, a].
double uniform(std::mt19937_64& rng, double a) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * a;
}

MatrixXd uniform_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double a) {
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(rng, a);
  }
  return m;
}

RowVectorXd sigmoid(const RowVectorXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

struct GruStep {
  RowVectorXd x, h_prev, z, r, h_tilde, h;
};

struct ResolvedSample {
  MatrixXd tokens;
  RowVectorXd target;
};

std::vector<ResolvedSample> resolve(const EmbeddingSpace& space, const CaptionCorpus& corpus,
                                    const ImageVectorStore& images, std::size_t& skipped_tokens) {
  const char* split = corpus.split == CorpusSplit::Train ? "training" : "validation";
  std::vector<ResolvedSample> out;
  out.reserve(corpus.samples.size());
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const auto& s = corpus.samples[i];
    const auto img = images.find(s.image_id);
    if (!img) {
      fail(ErrorCode::NotFound, std::string(split) + " caption " + std::to_string(i + 1) +
                                    " references unknown image '" + s.image_id + "'");
    }
    std::vector<std::span<const double>> rows;
    for (const auto& tok : s.tokens) {
      if (const auto v = space.find(tok)) {
        rows.push_back(*v);
      } else {
        ++skipped_tokens;
      }
    }
    if (rows.empty()) {
      fail(ErrorCode::Validation, std::string(split) + " caption " + std::to_string(i + 1) + " (image '" +
                                      s.image_id + "') has no token in " + space.name());
    }
    ResolvedSample r;
    r.tokens.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(space.dim()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
      for (std::size_t j = 0; j < space.dim(); ++j) {
        r.tokens(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
      }
    }
    r.target = Eigen::Map<const RowVectorXd>(img->data(), static_cast<Eigen::Index>(img->size()));
    out.push_back(std::move(r));
  }
  return out;
}

double mean_loss(const AlignmentModel& model, const std::vector<ResolvedSample>& samples) {
  double sum = 0.0;
  for (const auto& s : samples) sum += model.loss(s.tokens, s.target);
  return sum / static_cast<double>(samples.size());
}

}  // namespace

const char* encoder_kind_name(EncoderKind kind) noexcept {
  return kind == EncoderKind::MeanPool ? "mean-pool" : "gated-recurrent";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "mean-pool" || name == "mean") return EncoderKind::MeanPool;
  if (name == "gated-recurrent" || name == "gru") return EncoderKind::GatedRecurrent;
  fail(ErrorCode::InvalidArgument, "unknown encoder kind '" + std::string(name) + "'");
}

void EncoderConfig::validate() const {
  if (hidden_dim == 0) fail(ErrorCode::InvalidArgument, "hidden_dim must be positive");
  if (batch_size == 0) fail(ErrorCode::InvalidArgument, "batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorCode::InvalidArgument, "learning_rate must be positive");
  }
}

CaptionCorpus load_captions(const std::filesystem::path& path, CorpusSplit split) {
  CaptionCorpus corpus;
  corpus.split = split;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    const auto tab = lines[i].find('\t');
    if (tab == std::string::npos) fail(ErrorCode::Parse, where + ": expected image_id<TAB>caption");
    CaptionSample s;
    s.image_id = std::string(io::trim(std::string_view(lines[i]).substr(0, tab)));
    s.tokens = io::split_whitespace(std::string_view(lines[i]).substr(tab + 1));
    if (s.image_id.empty()) fail(ErrorCode::Parse, where + ": empty image id");
    if (s.tokens.empty()) fail(ErrorCode::Parse, where + ": empty caption");
    corpus.samples.push_back(std::move(s));
  }
  if (corpus.samples.empty()) fail(ErrorCode::Parse, path.string() + ": no captions");
  return corpus;
}

std::pair<CaptionCorpus, CaptionCorpus> split_corpus(const CaptionCorpus& corpus, double fraction,
                                                     std::uint64_t seed) {
  if (corpus.samples.size() < 2) fail(ErrorCode::InvalidArgument, "need at least two captions to split");
  if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorCode::InvalidArgument, "split fraction must lie in (0, 1)");
  std::vector<std::size_t> order(corpus.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
  auto n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(order.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, order.size() - 1);
  std::vector<bool> is_val(order.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
  CaptionCorpus train{{}, CorpusSplit::Train}, val{{}, CorpusSplit::Validation};
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    (is_val[i] ? val : train).samples.push_back(corpus.samples[i]);
  }
  return {std::move(train), std::move(val)};
}

AlignmentModel::AlignmentModel(EncoderKind kind, std::size_t d_in, std::size_t d_grounded, std::size_t hidden,
                               std::size_t d_image, std::uint64_t seed,
                               std::optional<Eigen::MatrixXd> alignment_init)
    : kind_(kind) {
  if (d_in == 0 || d_grounded == 0 || d_image == 0 || hidden == 0) {
    fail(ErrorCode::InvalidArgument, "alignment model dimensions must be positive");
  }
  const auto di = static_cast<Eigen::Index>(d_in);
  const auto dg = static_cast<Eigen::Index>(d_grounded);
  const auto dv = static_cast<Eigen::Index>(d_image);
  const auto h = static_cast<Eigen::Index>(hidden);
  std::mt19937_64 rng(seed);

  MatrixXd m;
  if (alignment_init) {
    if (alignment_init->rows() != di || alignment_init->cols() != dg) {
      fail(ErrorCode::DimensionMismatch, "alignment initialization has the wrong shape");
    }
    m = *alignment_init;
  } else if (di == dg) {
    m = MatrixXd::Identity(di, dg);
  } else {
    m = uniform_matrix(rng, di, dg, 1.0 / std::sqrt(static_cast<double>(d_in)));
  }
  params_.push_back(std::move(m));

  const Eigen::Index ds = kind_ == EncoderKind::MeanPool ? dg : h;
  if (ds == dv) {
    params_.push_back(MatrixXd::Identity(ds, dv));
  } else {
    params_.push_back(uniform_matrix(rng, ds, dv, std::sqrt(6.0 / static_cast<double>(ds + dv))));
  }
  params_.push_back(MatrixXd::Zero(1, dv));

  if (kind_ == EncoderKind::GatedRecurrent) {
    const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (int gate = 0; gate < 3; ++gate) {
      params_.push_back(uniform_matrix(rng, dg, h, a));
      params_.push_back(uniform_matrix(rng, h, h, a));
      params_.push_back(MatrixXd::Zero(1, h));
    }
  }
}

Eigen::RowVectorXd AlignmentModel::encode(const Eigen::MatrixXd& tokens) const {
  if (tokens.rows() == 0) fail(ErrorCode::InvalidArgument, "cannot encode an empty caption");
  if (tokens.cols() != params_[kM].rows()) fail(ErrorCode::DimensionMismatch, "token dimension mismatch");
  if (kind_ == EncoderKind::MeanPool) {
    return tokens.colwise().mean() * params_[kM];
  }
  const MatrixXd x = tokens * params_[kM];
  RowVectorXd h = RowVectorXd::Zero(params_[kUz].rows());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const RowVectorXd xt = x.row(t);
    const RowVectorXd z = sigmoid(xt * params_[kWz] + h * params_[kUz] + params_[kBz]);
    const RowVectorXd r = sigmoid(xt * params_[kWr] + h * params_[kUr] + params_[kBr]);
    const RowVectorXd ht =
        (xt * params_[kWh] + r.cwiseProduct(h) * params_[kUh] + params_[kBh]).array().tanh().matrix();
    h = (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(ht);
  }
  return h;
}

Eigen::RowVectorXd AlignmentModel::predict(const Eigen::MatrixXd& tokens) const {
  return encode(tokens) * params_[kW] + params_[kB];
}

double AlignmentModel::loss(const Eigen::MatrixXd& tokens, const Eigen::RowVectorXd& target) const {
  if (target.size() != params_[kW].cols()) fail(ErrorCode::DimensionMismatch, "image dimension mismatch");
  return (predict(tokens) - target).squaredNorm() / static_cast<double>(target.size());
}

double AlignmentModel::accumulate_gradient(const Eigen::MatrixXd& tokens, const Eigen::RowVectorXd& target,
                                           double scale, std::vector<Eigen::MatrixXd>& grad) const {
  if (grad.size() != params_.size()) fail(ErrorCode::InvalidArgument, "gradient buffer has the wrong layout");
  if (tokens.rows() == 0) fail(ErrorCode::InvalidArgument, "cannot encode an empty caption");
  if (target.size() != params_[kW].cols()) fail(ErrorCode::DimensionMismatch, "image dimension mismatch");
  const double dv = static_cast<double>(target.size());

  if (kind_ == EncoderKind::MeanPool) {
    const RowVectorXd mean_t = tokens.colwise().mean();
    const RowVectorXd s = mean_t * params_[kM];
    const RowVectorXd err = s * params_[kW] + params_[kB] - target;
    const RowVectorXd dpred = (2.0 * scale / dv) * err;
    grad[kW].noalias() += s.transpose() * dpred;
    grad[kB] += dpred;
    const RowVectorXd ds = dpred * params_[kW].transpose();
    grad[kM].noalias() += mean_t.transpose() * ds;
    return err.squaredNorm() / dv;
  }

  const MatrixXd x = tokens * params_[kM];
  std::vector<GruStep> steps(static_cast<std::size_t>(x.rows()));
  RowVectorXd h = RowVectorXd::Zero(params_[kUz].rows());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    auto& st = steps[static_cast<std::size_t>(t)];
    st.x = x.row(t);
    st.h_prev = h;
    st.z = sigmoid(st.x * params_[kWz] + h * params_[kUz] + params_[kBz]);
    st.r = sigmoid(st.x * params_[kWr] + h * params_[kUr] + params_[kBr]);
    st.h_tilde =
        (st.x * params_[kWh] + st.r.cwiseProduct(h) * params_[kUh] + params_[kBh]).array().tanh().matrix();
    h = (1.0 - st.z.array()).matrix().cwiseProduct(h) + st.z.cwiseProduct(st.h_tilde);
    st.h = h;
  }
  const RowVectorXd err = h * params_[kW] + params_[kB] - target;
  const RowVectorXd dpred = (2.0 * scale / dv) * err;
  grad[kW].noalias() += h.transpose() * dpred;
  grad[kB] += dpred;
  RowVectorXd dh = dpred * params_[kW].transpose();

  for (std::size_t t = steps.size(); t-- > 0;) {
    const auto& st = steps[t];
    const RowVectorXd dz = dh.cwiseProduct(st.h_tilde - st.h_prev);
    const RowVectorXd dht = dh.cwiseProduct(st.z);
    RowVectorXd dh_prev = dh.cwiseProduct((1.0 - st.z.array()).matrix());

    const RowVectorXd da_h = dht.cwiseProduct((1.0 - st.h_tilde.array().square()).matrix());
    const RowVectorXd rh = st.r.cwiseProduct(st.h_prev);
    grad[kWh].noalias() += st.x.transpose() * da_h;
    grad[kUh].noalias() += rh.transpose() * da_h;
    grad[kBh] += da_h;
    const RowVectorXd drh = da_h * params_[kUh].transpose();
    const RowVectorXd dr = drh.cwiseProduct(st.h_prev);
    dh_prev += drh.cwiseProduct(st.r);

    const RowVectorXd da_r = dr.cwiseProduct((st.r.array() * (1.0 - st.r.array())).matrix());
    grad[kWr].noalias() += st.x.transpose() * da_r;
    grad[kUr].noalias() += st.h_prev.transpose() * da_r;
    grad[kBr] += da_r;
    dh_prev += da_r * params_[kUr].transpose();

    const RowVectorXd da_z = dz.cwiseProduct((st.z.array() * (1.0 - st.z.array())).matrix());
    grad[kWz].noalias() += st.x.transpose() * da_z;
    grad[kUz].noalias() += st.h_prev.transpose() * da_z;
    grad[kBz] += da_z;
    dh_prev += da_z * params_[kUz].transpose();

    const RowVectorXd dx =
        da_h * params_[kWh].transpose() + da_r * params_[kWr].transpose() + da_z * params_[kWz].transpose();
    grad[kM].noalias() += tokens.row(static_cast<Eigen::Index>(t)).transpose() * dx;
    dh = dh_prev;
  }
  return err.squaredNorm() / dv;
}

Vector encode_caption(const AlignmentModel& model, const EmbeddingSpace& space,
                      std::span<const std::string> caption) {
  std::vector<std::span<const double>> rows;
  for (const auto& tok : caption) {
    if (const auto v = space.find(tok)) rows.push_back(*v);
  }
  if (rows.empty()) fail(ErrorCode::NotFound, "no caption token is in " + space.name());
  MatrixXd tokens(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(space.dim()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t j = 0; j < space.dim(); ++j) {
      tokens(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    }
  }
  const RowVectorXd s = model.encode(tokens);
  return Vector(s.data(), s.data() + s.size());
}

std::string format_training_log(const TrainingLog& log) {
  std::string out = "epoch,train_mse,val_mse\n";
  for (const auto& e : log.epochs) {
    out += std::to_string(e.epoch) + "," + io::format_sig(e.train_mse) + "," + io::format_sig(e.val_mse) + "\n";
  }
  return out;
}

AlignmentResult train_alignment(const EmbeddingSpace& space, const CaptionCorpus& train,
                                const CaptionCorpus& validation, const ImageVectorStore& images,
                                const EncoderConfig& cfg) {
  cfg.validate();
  if (train.samples.empty()) fail(ErrorCode::InvalidArgument, "empty training corpus");
  if (validation.samples.empty()) fail(ErrorCode::InvalidArgument, "empty validation corpus");

  TrainingLog log;
  const auto train_set = resolve(space, train, images, log.skipped_tokens);
  const auto val_set = resolve(space, validation, images, log.skipped_tokens);

  const std::size_t d_in = space.dim();
  const std::size_t d_img = images.dim();
  const std::size_t d_g = cfg.grounded_dim ? cfg.grounded_dim : d_in;

  std::optional<MatrixXd> init;
  if (d_g != d_in && d_g == d_img) {
    // Ridge fit of caption-mean text vectors onto image vectors.
    MatrixXd t(static_cast<Eigen::Index>(train_set.size()), static_cast<Eigen::Index>(d_in));
    MatrixXd v(static_cast<Eigen::Index>(train_set.size()), static_cast<Eigen::Index>(d_img));
    for (std::size_t i = 0; i < train_set.size(); ++i) {
      t.row(static_cast<Eigen::Index>(i)) = train_set[i].tokens.colwise().mean();
      v.row(static_cast<Eigen::Index>(i)) = train_set[i].target;
    }
    init = fit_linear_map(t, v, default_ridge_lambda(t), MapMode::ZsgAlignment).map.matrix();
  }
  AlignmentModel model(cfg.kind, d_in, d_g, cfg.hidden_dim, d_img, cfg.seed, std::move(init));

  auto& params = model.parameters();
  std::vector<MatrixXd> grad, m1, m2;
  for (const auto& p : params) {
    grad.push_back(MatrixXd::Zero(p.rows(), p.cols()));
    m1.push_back(MatrixXd::Zero(p.rows(), p.cols()));
    m2.push_back(MatrixXd::Zero(p.rows(), p.cols()));
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  log.initial_train_mse = mean_loss(model, train_set);
  log.initial_val_mse = mean_loss(model, val_set);
  if (!std::isfinite(log.initial_train_mse) || !std::isfinite(log.initial_val_mse)) {
    fail(ErrorCode::Divergence, "non-finite loss at initialization (epoch 0)");
  }
  log.best_val_mse = log.initial_val_mse;
  MatrixXd best_alignment = model.alignment();

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0, since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto& g : grad) g.setZero();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = train_set[order[k]];
        batch_loss += model.accumulate_gradient(s.tokens, s.target, scale, grad);
      }
      if (!std::isfinite(batch_loss)) {
        fail(ErrorCode::Divergence, "training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
      }
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < params.size(); ++p) {
        m1[p] = beta1 * m1[p] + (1.0 - beta1) * grad[p];
        m2[p] = beta2 * m2[p] + (1.0 - beta2) * grad[p].cwiseProduct(grad[p]);
        params[p].array() -=
            cfg.learning_rate * (m1[p].array() / c1) / ((m2[p].array() / c2).sqrt() + eps);
      }
    }
    const EpochRecord rec{epoch, mean_loss(model, train_set), mean_loss(model, val_set)};
    if (!std::isfinite(rec.train_mse) || !std::isfinite(rec.val_mse)) {
      fail(ErrorCode::Divergence, "training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
    }
    log.epochs.push_back(rec);
    if (rec.val_mse < log.best_val_mse) {
      log.best_val_mse = rec.val_mse;
      log.best_epoch = epoch;
      best_alignment = model.alignment();
      since_best = 0;
    } else if (cfg.early_stop_patience > 0 && ++since_best >= cfg.early_stop_patience) {
      log.stopped_early = true;
      break;
    }
  }
  return {LinearMap(std::move(best_alignment), MapMode::ZsgAlignment, 0.0), std::move(log)};
}

EmbeddingSpace ground(const EmbeddingSpace& space, const LinearMap& alignment) {
  if (space.dim() != alignment.d_in()) {
    fail(ErrorCode::DimensionMismatch, "space has dimension " + std::to_string(space.dim()) +
                                           ", alignment expects " + std::to_string(alignment.d_in()));
  }
  std::vector<double> values;
  values.reserve(space.size() * alignment.d_out());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto g = alignment.apply(space.row(i));
    values.insert(values.end(), g.begin(), g.end());
  }
  return EmbeddingSpace(space.name() + "-grounded", alignment.d_out(), space.keys(), std::move(values));
}

}  // namespace vgsim
