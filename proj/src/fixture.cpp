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

#include "vgsim/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "vgsim/embeddings.hpp"
#include "vgsim/io.hpp"
#include "vgsim/simulate.hpp"

namespace vgsim::fixture {

namespace {

constexpr std::size_t kWords = 240;
constexpr std::size_t kTextDim = 8;
constexpr std::size_t kImageDim = 6;
constexpr std::size_t kClasses = 20;
constexpr std::size_t kImagesPerClass = 3;
constexpr std::size_t kTrials = 100;
constexpr std::size_t kParticipants = 10;
constexpr std::size_t kMinLabels = 2;
constexpr std::size_t kLabelSpread = 4;  // 2..5 labels per image

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

double round4(double x) { return std::round(x * 1e4) / 1e4; }

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

std::string join(const std::vector<std::string>& xs, char sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

}  // namespace

report::OutputSet make_fixture(std::uint64_t seed) {
  Rng rng(seed);
  report::OutputSet out;

  // Word vectors.
  std::vector<std::string> words;
  std::vector<double> text;
  for (std::size_t i = 0; i < kWords; ++i) {
    words.push_back(numbered("w", i));
    for (std::size_t d = 0; d < kTextDim; ++d) text.push_back(round4(rng.normal()));
  }
  const EmbeddingSpace space("fixture", kTextDim, words, text);
  out.add("embeddings.txt", format_embeddings(space));

  // Images: a fixed linear view of their class word plus noise.
  std::vector<double> proj(kTextDim * kImageDim);
  for (auto& v : proj) v = rng.normal() / std::sqrt(static_cast<double>(kTextDim));
  std::vector<std::string> image_ids;
  std::vector<double> image_values;
  std::string membership = "class,image_id\n";
  std::string captions, val_captions;
  for (std::size_t c = 0; c < kClasses; ++c) {
    const std::string& cls = words[100 + c];
    const auto w = space.row(100 + c);
    for (std::size_t j = 0; j < kImagesPerClass; ++j) {
      const std::string id = numbered("img", c * kImagesPerClass + j);
      image_ids.push_back(id);
      for (std::size_t e = 0; e < kImageDim; ++e) {
        double v = 0.0;
        for (std::size_t d = 0; d < kTextDim; ++d) v += w[d] * proj[d * kImageDim + e];
        image_values.push_back(round4(v + 0.1 * rng.normal()));
      }
      membership += cls + "," + id + "\n";
      for (int k = 0; k < 2; ++k) {
        std::string caption = id + "\t" + cls;
        for (int extra = 0; extra < 2; ++extra) caption += " " + words[rng.below(kWords)];
        captions += caption + "\n";
      }
      val_captions += id + "\t" + words[rng.below(kWords)] + " " + cls + "\n";
    }
  }
  const ImageVectorStore images(kImageDim, image_ids, image_values);
  std::string image_csv = "image_id";
  for (std::size_t e = 1; e <= kImageDim; ++e) image_csv += ",v" + std::to_string(e);
  image_csv += "\n";
  for (std::size_t i = 0; i < images.size(); ++i) {
    image_csv += images.key(i);
    for (double v : images.row(i)) image_csv += "," + io::format_roundtrip(v);
    image_csv += "\n";
  }
  out.add("images.csv", image_csv);
  out.add("membership.csv", membership);
  out.add("captions.tsv", captions);
  out.add("val_captions.tsv", val_captions);

  // Trials: targets w000..w099, predicted labels = nearest words, random
  // labels = farthest words.
  struct Row {
    std::string id, target, type, distance, pred_img, rand_img;
    std::vector<std::string> pred, rand;
    bool is_catch = false;
    double margin = 0.0;
  };
  const char* types[] = {"abstract", "abstract", "concrete", "concrete", "concrete"};
  const char* distances[] = {"far", "near", "far", "near", "max"};
  std::vector<Row> rows;
  for (std::size_t t = 0; t < kTrials; ++t) {
    Row r;
    r.id = numbered("T", t + 1);
    r.target = words[t];
    r.type = types[t % kCellCount];
    r.distance = distances[t % kCellCount];
    std::vector<std::pair<double, std::string>> sims;
    for (std::size_t j = kTrials; j < kWords; ++j) sims.emplace_back(cosine(space.row(t), space.row(j)), words[j]);
    std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const std::size_t n_pred = kMinLabels + rng.below(kLabelSpread);
    const std::size_t n_rand = kMinLabels + rng.below(kLabelSpread);
    double pred_sim = 0.0, rand_sim = 0.0;
    for (std::size_t k = 0; k < n_pred; ++k) {
      r.pred.push_back(sims[k].second);
      pred_sim += sims[k].first / static_cast<double>(n_pred);
    }
    for (std::size_t k = 0; k < n_rand; ++k) {
      r.rand.push_back(sims[sims.size() - 1 - k].second);
      rand_sim += sims[sims.size() - 1 - k].first / static_cast<double>(n_rand);
    }
    if (t % 10 == 3) r.pred.push_back("zz_unknown_label");
    r.margin = pred_sim - rand_sim;
    r.pred_img = image_ids[(2 * t) % image_ids.size()];
    r.rand_img = image_ids[(2 * t + 1) % image_ids.size()];
    rows.push_back(std::move(r));
  }
  std::vector<Row> extra;
  for (std::size_t t = 0; t < 2; ++t) {
    Row r;
    r.id = numbered("X", t + 1);
    r.target = numbered("oov_target_", t);
    r.type = "concrete";
    r.distance = "near";
    r.pred = {words[200], words[201]};
    r.rand = {words[202], words[203]};
    r.pred_img = image_ids[t];
    r.rand_img = image_ids[t + 10];
    extra.push_back(std::move(r));
  }
  for (std::size_t t = 0; t < 4; ++t) {
    Row r;
    r.id = numbered("C", t + 1);
    r.target = words[t];
    r.type = "abstract";
    r.distance = "far";
    r.pred = {words[210 + t]};
    r.rand = {words[220 + t]};
    r.pred_img = image_ids[t + 20];
    r.rand_img = image_ids[t + 30];
    r.is_catch = true;
    extra.push_back(std::move(r));
  }
  std::string trials = "trial_id,target,word_type,distance,pred_image_id,rand_image_id,pred_labels,rand_labels,is_catch\n";
  for (const auto* set : {&rows, &extra}) {
    for (const auto& r : *set) {
      trials += r.id + "," + r.target + "," + r.type + "," + r.distance + "," + r.pred_img + "," + r.rand_img +
                "," + join(r.pred, ';') + "," + join(r.rand, ';') + "," + (r.is_catch ? "1" : "0") + "\n";
    }
  }
  out.add("trials.csv", trials);

  // Responses: the number of predicted choices per trial rises with the
  // similarity margin and sums to exactly 70% over the regular trials.
  std::vector<double> margins;
  for (const auto& r : rows) margins.push_back(r.margin);
  const double mean = std::accumulate(margins.begin(), margins.end(), 0.0) / static_cast<double>(kTrials);
  double sd = 0.0;
  for (double m : margins) sd += (m - mean) * (m - mean);
  sd = std::sqrt(sd / static_cast<double>(kTrials));
  std::vector<int> counts;
  for (double m : margins) {
    const double p = 1.0 / (1.0 + std::exp(-(0.85 + 0.8 * (m - mean) / sd)));
    counts.push_back(static_cast<int>(std::lround(p * kParticipants)));
  }
  const int want = static_cast<int>(7 * kTrials);
  for (std::size_t guard = 0; guard < 100 * kTrials; ++guard) {
    const int total = std::accumulate(counts.begin(), counts.end(), 0);
    if (total == want) break;
    auto& c = counts[guard % kTrials];
    if (total < want && c < static_cast<int>(kParticipants) - 1) ++c;
    if (total > want && c > 1) --c;
  }
  std::string responses = "participant_id,trial_id,choice\n";
  std::vector<std::string> lines;
  for (std::size_t t = 0; t < kTrials; ++t) {
    std::vector<std::size_t> who(kParticipants);
    std::iota(who.begin(), who.end(), std::size_t{0});
    rng.shuffle(who);
    std::vector<bool> predicted(kParticipants, false);
    for (int k = 0; k < counts[t]; ++k) predicted[who[static_cast<std::size_t>(k)]] = true;
    for (std::size_t p = 0; p < kParticipants; ++p) {
      lines.push_back(numbered("P", p + 1) + "," + rows[t].id + "," + (predicted[p] ? "predicted" : "random"));
    }
  }
  for (const auto& r : extra) {
    for (std::size_t p = 0; p < kParticipants; ++p) {
      lines.push_back(numbered("P", p + 1) + "," + r.id + "," + (p % 2 ? "random" : "predicted"));
    }
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) responses += l + "\n";
  out.add("responses.csv", responses);

  // Similarity benchmark scored by a noisy cosine.
  std::string bench;
  for (std::size_t i = 0; i < 40; ++i) {
    const std::size_t a = rng.below(kWords), b = rng.below(kWords);
    if (a == b) continue;
    const double score = 5.0 + 5.0 * cosine(space.row(a), space.row(b)) + 0.5 * rng.normal();
    bench += words[a] + "\t" + words[b] + "\t" + io::format_fixed(score, 2) + "\n";
  }
  bench += "w001\tzz_unknown_word\t3.00\n";
  out.add("bench.tsv", bench);

  out.add("gam_spec.txt",
          "# Five-measure model with design factors\n"
          "factor = WordType: abstract concrete\n"
          "factor = Distance: far near max\n"
          "linear = Predicted Image #Objects\n"
          "linear = Random Image #Objects\n"
          "interaction = WordType=concrete:Distance=near\n"
          "smooth = Random Image Similarity\n"
          "smooth = Predicted Image Similarity\n"
          "smooth = Inter-Image Similarity\n"
          "k = 5\n");
  out.add("gam_intercept.txt", "# Intercept only\n");

  out.add("config.txt",
          "# Synthetic study; paths are relative to this file\n"
          "embeddings = embeddings.txt\n"
          "images = images.csv\n"
          "membership = membership.csv\n"
          "captions = captions.tsv\n"
          "val-captions = val_captions.tsv\n"
          "trials = trials.csv\n"
          "responses = responses.csv\n"
          "benchmarks = bench.tsv\n"
          "gam-spec = gam_spec.txt\n"
          "epochs = 40\n"
          "seed = " + std::to_string(seed) + "\n");
  return out;
}

void write_fixture(const std::filesystem::path& dir, std::uint64_t seed) { make_fixture(seed).commit(dir); }

}  // namespace vgsim::fixture
