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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "support.hpp"
#include "vgsim/crossmodal.hpp"
#include "vgsim/error.hpp"
#include "vgsim/io.hpp"
#include "vgsim/zsg.hpp"

using namespace vgsim;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;

namespace {

MatrixXd random_tokens(std::mt19937_64& rng, Eigen::Index len, Eigen::Index dim) {
  std::normal_distribution<double> nd;
  MatrixXd m(len, dim);
  for (Eigen::Index i = 0; i < len; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = nd(rng);
  }
  return m;
}

// Central differences on every parameter entry.
void check_gradient(EncoderKind kind) {
  std::mt19937_64 rng(21);
  AlignmentModel model(kind, 5, 4, 3, 2, 7);
  // Perturb away from the identity/zero initialization.
  std::normal_distribution<double> nd(0.0, 0.3);
  for (auto& p : model.parameters()) {
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] += nd(rng);
  }
  const MatrixXd tokens = random_tokens(rng, 4, 5);
  RowVectorXd target(2);
  target << 0.3, -0.7;

  std::vector<MatrixXd> grad;
  for (const auto& p : model.parameters()) grad.push_back(MatrixXd::Zero(p.rows(), p.cols()));
  const double l = model.accumulate_gradient(tokens, target, 1.0, grad);
  CHECK(l == doctest::Approx(model.loss(tokens, target)).epsilon(1e-14));

  const double h = 1e-6;
  for (std::size_t k = 0; k < model.parameters().size(); ++k) {
    auto& p = model.parameters()[k];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + h;
      const double up = model.loss(tokens, target);
      p.data()[i] = saved - h;
      const double down = model.loss(tokens, target);
      p.data()[i] = saved;
      const double numeric = (up - down) / (2 * h);
      INFO("parameter " << k << " entry " << i);
      CHECK(grad[k].data()[i] == doctest::Approx(numeric).epsilon(1e-5).scale(1e-3));
    }
  }
}

std::filesystem::path tmp(const std::string& name) { return std::filesystem::path(VGSIM_TEST_TMP) / name; }

}  // namespace

TEST_CASE("mean-pool gradient matches finite differences") { check_gradient(EncoderKind::MeanPool); }

TEST_CASE("gated-recurrent gradient matches finite differences") { check_gradient(EncoderKind::GatedRecurrent); }

TEST_CASE("gradient accumulation scales and adds") {
  std::mt19937_64 rng(2);
  const AlignmentModel model(EncoderKind::GatedRecurrent, 3, 3, 4, 2, 1);
  const MatrixXd tokens = random_tokens(rng, 2, 3);
  RowVectorXd target(2);
  target << 1, 2;
  std::vector<MatrixXd> once, twice;
  for (const auto& p : model.parameters()) {
    once.push_back(MatrixXd::Zero(p.rows(), p.cols()));
    twice.push_back(MatrixXd::Zero(p.rows(), p.cols()));
  }
  model.accumulate_gradient(tokens, target, 1.0, once);
  model.accumulate_gradient(tokens, target, 0.5, twice);
  model.accumulate_gradient(tokens, target, 0.5, twice);
  for (std::size_t k = 0; k < once.size(); ++k) CHECK((once[k] - twice[k]).norm() <= 1e-12 * (1 + once[k].norm()));
}

TEST_CASE("initialization") {
  const AlignmentModel square(EncoderKind::MeanPool, 4, 4, 8, 4, 3);
  CHECK(square.alignment() == MatrixXd::Identity(4, 4));
  CHECK(square.parameters()[1] == MatrixXd::Identity(4, 4));
  CHECK(square.parameters()[2] == MatrixXd::Zero(1, 4));
  const AlignmentModel gru(EncoderKind::GatedRecurrent, 4, 4, 8, 3, 3);
  CHECK(gru.parameters().size() == 12);
  const AlignmentModel a(EncoderKind::MeanPool, 4, 3, 8, 5, 9), b(EncoderKind::MeanPool, 4, 3, 8, 5, 9);
  CHECK(a.alignment() == b.alignment());
  CHECK_THROWS_AS(AlignmentModel(EncoderKind::MeanPool, 0, 3, 8, 5, 9), Error);
}

TEST_CASE("caption encoding") {
  const EmbeddingSpace space("s", 2, {"u", "v", "w"}, {1, 2, 3, -1, 0.5, 0.5});
  MatrixXd m(2, 2);
  m << 2, 0, 1, 1;
  const AlignmentModel model(EncoderKind::MeanPool, 2, 2, 4, 2, 1, m);
  const std::vector<std::string> one{"u"}, two{"u", "v"}, rev{"v", "u"}, oov{"u", "zz"}, none{"zz"};
  // u * M = [1*2 + 2*1, 2*1] = [4, 2]; v * M = [6 - 1, -1] = [5, -1]
  CHECK(encode_caption(model, space, one) == Vector{4, 2});
  CHECK(encode_caption(model, space, two) == Vector{4.5, 0.5});
  CHECK(encode_caption(model, space, rev) == encode_caption(model, space, two));
  CHECK(encode_caption(model, space, oov) == Vector{4, 2});
  try {
    encode_caption(model, space, none);
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFound);
  }

  const AlignmentModel gru(EncoderKind::GatedRecurrent, 2, 2, 3, 2, 5);
  const auto fwd = encode_caption(gru, space, two);
  const auto bwd = encode_caption(gru, space, rev);
  CHECK(fwd.size() == 3);
  CHECK(fwd != bwd);
}

TEST_CASE("config validation and names") {
  EncoderConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK(parse_encoder_kind("gru") == EncoderKind::GatedRecurrent);
  CHECK(parse_encoder_kind("mean-pool") == EncoderKind::MeanPool);
  CHECK(std::string(encoder_kind_name(EncoderKind::GatedRecurrent)) == "gated-recurrent");
  CHECK_THROWS_AS(parse_encoder_kind("lstm"), Error);
}

TEST_CASE("caption files and deterministic splits") {
  io::write_text(tmp("caps.tsv"), "img1\ta dog runs\nimg2\tthe cat\n\nimg3\tred\n");
  const auto c = load_captions(tmp("caps.tsv"), CorpusSplit::Train);
  REQUIRE(c.samples.size() == 3);
  CHECK(c.samples[0].tokens == std::vector<std::string>{"a", "dog", "runs"});
  io::write_text(tmp("caps_bad.tsv"), "img1 no tab here\n");
  CHECK_THROWS_AS(load_captions(tmp("caps_bad.tsv"), CorpusSplit::Train), Error);
  io::write_text(tmp("caps_empty.tsv"), "img1\t   \n");
  CHECK_THROWS_AS(load_captions(tmp("caps_empty.tsv"), CorpusSplit::Train), Error);

  const auto toy = testing::make_zsg_toy(1);
  const auto [tr, va] = split_corpus(toy.train, 0.2, 4);
  const auto [tr2, va2] = split_corpus(toy.train, 0.2, 4);
  CHECK(va.samples.size() == 10);
  CHECK(tr.samples.size() == 40);
  CHECK(va.split == CorpusSplit::Validation);
  for (std::size_t i = 0; i < va.samples.size(); ++i) CHECK(va.samples[i].image_id == va2.samples[i].image_id);
}

TEST_CASE("a single repeated caption is fitted") {
  const EmbeddingSpace space("s", 3, {"a", "b"}, {1, 0.5, -0.2, 0.3, 1, 0.1});
  const ImageVectorStore images(2, {"img"}, {0.8, -0.4});
  CaptionCorpus corpus;
  for (int i = 0; i < 8; ++i) corpus.samples.push_back({"img", {"a", "b"}});
  EncoderConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 4;
  cfg.early_stop_patience = 0;
  const auto r = train_alignment(space, corpus, corpus, images, cfg);
  REQUIRE(r.log.epochs.size() == 300);
  CHECK(r.log.epochs.back().train_mse < 1e-3);
}

TEST_CASE("zero epochs keep the initialization") {
  const auto toy = testing::make_zsg_toy(3);
  EncoderConfig cfg;
  cfg.epochs = 0;
  const auto r = train_alignment(toy.space, toy.train, toy.validation, toy.images, cfg);
  CHECK(r.log.epochs.empty());
  CHECK(r.log.best_epoch == 0);
  CHECK(r.alignment.matrix() == MatrixXd::Identity(8, 8));
  const auto g = ground(toy.space, r.alignment);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::equal(g.row(i).begin(), g.row(i).end(), toy.space.row(i).begin()));
  }
  CHECK(format_training_log(r.log) == "epoch,train_mse,val_mse\n");
}

TEST_CASE("toy corpus halves the validation error") {
  const auto toy = testing::make_zsg_toy(5);
  for (auto kind : {EncoderKind::MeanPool, EncoderKind::GatedRecurrent}) {
    EncoderConfig cfg;
    cfg.kind = kind;
    cfg.epochs = 200;
    cfg.batch_size = 10;
    cfg.seed = 11;
    const auto r = train_alignment(toy.space, toy.train, toy.validation, toy.images, cfg);
    INFO(encoder_kind_name(kind) << ": " << r.log.initial_val_mse << " -> " << r.log.best_val_mse);
    CHECK(r.log.best_val_mse <= 0.5 * r.log.initial_val_mse);
    CHECK(r.log.best_epoch >= 1);
    CHECK(r.log.best_val_mse == r.log.epochs[r.log.best_epoch - 1].val_mse);
  }
}

TEST_CASE("training is reproducible for a fixed seed") {
  const auto toy = testing::make_zsg_toy(6);
  EncoderConfig cfg;
  cfg.kind = EncoderKind::GatedRecurrent;
  cfg.epochs = 15;
  cfg.seed = 99;
  const auto a = train_alignment(toy.space, toy.train, toy.validation, toy.images, cfg);
  const auto b = train_alignment(toy.space, toy.train, toy.validation, toy.images, cfg);
  CHECK(a.alignment.matrix() == b.alignment.matrix());
  CHECK(format_training_log(a.log) == format_training_log(b.log));
  cfg.seed = 100;
  const auto c = train_alignment(toy.space, toy.train, toy.validation, toy.images, cfg);
  CHECK(c.alignment.matrix() != a.alignment.matrix());
}

TEST_CASE("early stopping returns the best epoch") {
  const auto toy = testing::make_zsg_toy(7);
  EncoderConfig cfg;
  cfg.epochs = 500;
  cfg.early_stop_patience = 5;
  cfg.learning_rate = 0.05;
  const auto r = train_alignment(toy.space, toy.train, toy.validation, toy.images, cfg);
  CHECK(r.log.stopped_early);
  CHECK(r.log.epochs.size() == r.log.best_epoch + 5);
}

TEST_CASE("single-token mean pooling approaches the least-squares oracle") {
  const auto p = testing::make_single_token_problem(8);
  const auto oracle = fit_linear_map(p.text, p.target, 0.0, MapMode::ZsgAlignment);
  const double oracle_mse = (p.text * oracle.map.matrix() - p.target).squaredNorm() /
                            static_cast<double>(p.target.size());
  EncoderConfig cfg;
  cfg.epochs = 1500;
  cfg.batch_size = 60;
  cfg.early_stop_patience = 0;
  cfg.learning_rate = 0.02;
  const auto r = train_alignment(p.space, p.corpus, p.corpus, p.images, cfg);
  INFO("oracle " << oracle_mse << " trained " << r.log.best_val_mse);
  CHECK(r.log.best_val_mse <= 1.05 * oracle_mse);
}

TEST_CASE("training errors") {
  const auto toy = testing::make_zsg_toy(9);
  EncoderConfig cfg;
  cfg.epochs = 3;
  CHECK_THROWS_AS(train_alignment(toy.space, CaptionCorpus{}, toy.validation, toy.images, cfg), Error);

  CaptionCorpus oov;
  oov.samples.push_back({"img0", {"nope", "never"}});
  try {
    train_alignment(toy.space, oov, toy.validation, toy.images, cfg);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
  }
  CaptionCorpus unknown_image;
  unknown_image.samples.push_back({"img_missing", {"w1"}});
  CHECK_THROWS_AS(train_alignment(toy.space, unknown_image, toy.validation, toy.images, cfg), Error);

  cfg.learning_rate = 1e300;
  cfg.epochs = 50;
  try {
    train_alignment(toy.space, toy.train, toy.validation, toy.images, cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Divergence);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("grounding is linear and keeps the vocabulary") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> nd;
  MatrixXd m(4, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  const LinearMap alignment(m, MapMode::ZsgAlignment, 0.0);
  Vector t1(4), t2(4);
  for (auto& x : t1) x = nd(rng);
  for (auto& x : t2) x = nd(rng);
  const double a = 0.7, b = -1.3;
  std::vector<double> values;
  for (const auto* t : {&t1, &t2}) values.insert(values.end(), t->begin(), t->end());
  for (std::size_t i = 0; i < 4; ++i) values.push_back(a * t1[i] + b * t2[i]);
  for (std::size_t i = 0; i < 4; ++i) values.push_back(0.0);
  const EmbeddingSpace space("base", 4, {"t1", "t2", "mix", "zero"}, values);
  const auto g = ground(space, alignment);
  CHECK(g.name() == "base-grounded");
  CHECK(g.keys() == space.keys());
  CHECK(g.dim() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::fabs(g.row(2)[j] - (a * g.row(0)[j] + b * g.row(1)[j])) <= 1e-10);
    CHECK(g.row(3)[j] == 0.0);
  }
  CHECK(cosine(g.row(0), g.row(1)) != doctest::Approx(cosine(space.row(0), space.row(1))));
  const LinearMap wrong(MatrixXd::Identity(3, 3), MapMode::ZsgAlignment, 0.0);
  CHECK_THROWS_AS(ground(space, wrong), Error);
}
