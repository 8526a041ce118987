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

#include "vgsim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vgsim/error.hpp"
#include "vgsim/io.hpp"
#include "vgsim/stats.hpp"

namespace vgsim {

const char* word_type_name(WordType t) noexcept { return t == WordType::Abstract ? "abstract" : "concrete"; }

const char* distance_name(Distance d) noexcept {
  switch (d) {
    case Distance::Far: return "far";
    case Distance::Near: return "near";
    case Distance::Max: return "max";
  }
  return "far";
}

const char* cell_label(Cell c) noexcept {
  switch (c) {
    case Cell::AbstractFar: return "A.Far";
    case Cell::AbstractNear: return "A.Near";
    case Cell::ConcreteFar: return "C.Far";
    case Cell::ConcreteNear: return "C.Near";
    case Cell::ConcreteMax: return "C.Max";
  }
  return "?";
}

WordType parse_word_type(std::string_view s) {
  if (s == "abstract") return WordType::Abstract;
  if (s == "concrete") return WordType::Concrete;
  fail(ErrorCode::Parse, "word_type must be abstract or concrete, got '" + std::string(s) + "'");
}

Distance parse_distance(std::string_view s) {
  if (s == "far") return Distance::Far;
  if (s == "near") return Distance::Near;
  if (s == "max") return Distance::Max;
  fail(ErrorCode::Parse, "distance must be far, near or max, got '" + std::string(s) + "'");
}

Cell cell_of(WordType t, Distance d) {
  if (t == WordType::Abstract) {
    if (d == Distance::Max) fail(ErrorCode::Validation, "distance=max is only defined for concrete words");
    return d == Distance::Far ? Cell::AbstractFar : Cell::AbstractNear;
  }
  switch (d) {
    case Distance::Far: return Cell::ConcreteFar;
    case Distance::Near: return Cell::ConcreteNear;
    case Distance::Max: return Cell::ConcreteMax;
  }
  return Cell::ConcreteFar;
}

namespace {

std::vector<std::string> split_labels(const std::string& field) {
  std::vector<std::string> out;
  if (io::trim(field).empty()) return out;
  for (auto& l : io::split(field, ';')) {
    const auto t = io::trim(l);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::size_t cell_index(Cell c) { return static_cast<std::size_t>(c); }

}  // namespace

std::vector<Trial> load_trials(const std::filesystem::path& path) {
  const auto table = io::CsvTable::read(path);
  const auto c_id = table.column("trial_id");
  const auto c_target = table.column("target");
  const auto c_type = table.column("word_type");
  const auto c_dist = table.column("distance");
  const auto c_pred = table.column("pred_image_id");
  const auto c_rand = table.column("rand_image_id");
  const auto c_pl = table.column("pred_labels");
  const auto c_rl = table.column("rand_labels");
  const auto c_catch = table.column("is_catch");
  std::vector<Trial> trials;
  std::set<std::string> ids;
  for (const auto& row : table.rows()) {
    const auto where = table.where(row);
    try {
      Trial t;
      t.trial_id = row.fields[c_id];
      t.target = row.fields[c_target];
      t.word_type = parse_word_type(row.fields[c_type]);
      t.distance = parse_distance(row.fields[c_dist]);
      t.pred_image_id = row.fields[c_pred];
      t.rand_image_id = row.fields[c_rand];
      t.pred_labels = split_labels(row.fields[c_pl]);
      t.rand_labels = split_labels(row.fields[c_rl]);
      t.is_catch = io::parse_bool(row.fields[c_catch], where);
      if (t.trial_id.empty() || t.target.empty()) fail(ErrorCode::Parse, "empty trial id or target");
      if (t.pred_image_id.empty() || t.rand_image_id.empty()) fail(ErrorCode::Parse, "empty image id");
      (void)t.cell();
      if (t.pred_labels.size() > kMaxLabels || t.rand_labels.size() > kMaxLabels) {
        fail(ErrorCode::Validation, "more than 10 labels for an image");
      }
      if (!ids.insert(t.trial_id).second) fail(ErrorCode::Duplicate, "duplicate trial id '" + t.trial_id + "'");
      trials.push_back(std::move(t));
    } catch (const Error& e) {
      const std::string msg = e.what();
      if (msg.rfind(where, 0) == 0) throw;
      fail(e.code(), where + ": " + msg);
    }
  }
  if (trials.empty()) fail(ErrorCode::Validation, path.string() + ": no trials");
  std::sort(trials.begin(), trials.end(), [](const Trial& a, const Trial& b) { return a.trial_id < b.trial_id; });
  return trials;
}

TrialMeasures compute_trial_measures(const Trial& trial, const EmbeddingSpace& space,
                                     const ImageVectorStore& images) {
  const auto pv = images.find(trial.pred_image_id);
  if (!pv) fail(ErrorCode::NotFound, "trial " + trial.trial_id + ": unknown image '" + trial.pred_image_id + "'");
  const auto rv = images.find(trial.rand_image_id);
  if (!rv) fail(ErrorCode::NotFound, "trial " + trial.trial_id + ": unknown image '" + trial.rand_image_id + "'");
  const auto pred = mean_label_similarity(space, trial.target, trial.pred_labels);
  const auto rand = mean_label_similarity(space, trial.target, trial.rand_labels);
  TrialMeasures m;
  m.pred_sim = pred.mean;
  m.rand_sim = rand.mean;
  m.pred_n_obj = pred.used;
  m.rand_n_obj = rand.used;
  m.inter_image_sim = cosine(*pv, *rv);
  return m;
}

const char* choice_name(Choice c) noexcept { return c == Choice::Predicted ? "predicted" : "random"; }

Choice parse_choice(std::string_view s) {
  if (s == "predicted") return Choice::Predicted;
  if (s == "random") return Choice::Random;
  fail(ErrorCode::Parse, "choice must be predicted or random, got '" + std::string(s) + "'");
}

Choice max_select(const TrialMeasures& m) {
  return m.pred_sim >= m.rand_sim ? Choice::Predicted : Choice::Random;
}

Simulation simulate_max(std::span<const Trial> trials, const EmbeddingSpace& space,
                        const ImageVectorStore& images, bool include_catch) {
  std::vector<const Trial*> ordered;
  for (const auto& t : trials) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(), [](const Trial* a, const Trial* b) { return a->trial_id < b->trial_id; });

  Simulation sim;
  sim.space_name = space.name();
  for (const Trial* t : ordered) {
    if (t->is_catch && !include_catch) {
      ++sim.catch_trials_skipped;
      continue;
    }
    TrialOutcome out;
    out.trial_id = t->trial_id;
    out.target = t->target;
    out.word_type = t->word_type;
    out.distance = t->distance;
    try {
      out.measures = compute_trial_measures(*t, space, images);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoUsableLabels || e.code() == ErrorCode::NotFound) {
        if (!space.contains(t->target)) {
          sim.excluded.push_back({t->trial_id, "target '" + t->target + "' not in embedding space"});
          continue;
        }
        if (e.code() == ErrorCode::NoUsableLabels) {
          sim.excluded.push_back({t->trial_id, "no in-vocabulary label on one of the images"});
          continue;
        }
      }
      throw;
    }
    out.choice = max_select(out.measures);
    out.tie = out.measures.pred_sim == out.measures.rand_sim;
    if (out.tie) ++sim.ties;
    sim.outcomes.push_back(std::move(out));
  }
  return sim;
}

double cell_mean(const CellValues& cells) {
  double s = 0.0;
  for (double v : cells) s += v;
  return s / static_cast<double>(cells.size());
}

ConditionReport ConditionReport::from_cells(const CellValues& model_cells, double participant_mean) {
  ConditionReport r;
  r.cells = model_cells;
  r.mean = cell_mean(model_cells);
  r.participant_mean = participant_mean;
  r.delta = std::fabs(r.mean - participant_mean);
  return r;
}

CellValues selection_percentages(const Simulation& sim) {
  std::array<std::size_t, kCellCount> hits{}, totals{};
  for (const auto& o : sim.outcomes) {
    const auto c = cell_index(o.cell());
    ++totals[c];
    if (o.choice == Choice::Predicted) ++hits[c];
  }
  CellValues out{};
  for (std::size_t c = 0; c < kCellCount; ++c) {
    if (totals[c] == 0) {
      fail(ErrorCode::Validation, std::string("no usable trial in cell ") + cell_label(kCells[c]) + " for " +
                                      sim.space_name);
    }
    out[c] = 100.0 * static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
  }
  return out;
}

ConditionReport virtual_report(const Simulation& sim, const CellValues& participant_cells) {
  return ConditionReport::from_cells(selection_percentages(sim), cell_mean(participant_cells));
}

ConditionReport virtual_report(std::span<const Trial> trials, const EmbeddingSpace& space,
                               const ImageVectorStore& images, const CellValues& participant_cells) {
  return virtual_report(simulate_max(trials, space, images), participant_cells);
}

ResponseSet load_responses(const std::filesystem::path& path) {
  const auto table = io::CsvTable::read(path);
  const auto c_p = table.column("participant_id");
  const auto c_t = table.column("trial_id");
  const auto c_c = table.column("choice");
  ResponseSet set;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& row : table.rows()) {
    Response r;
    r.participant_id = row.fields[c_p];
    r.trial_id = row.fields[c_t];
    try {
      r.choice = parse_choice(row.fields[c_c]);
    } catch (const Error& e) {
      fail(e.code(), table.where(row) + ": " + e.what());
    }
    if (!seen.emplace(r.participant_id, r.trial_id).second) {
      fail(ErrorCode::Duplicate, table.where(row) + ": duplicate response of participant '" + r.participant_id +
                                     "' to trial '" + r.trial_id + "'");
    }
    set.rows.push_back(std::move(r));
  }
  if (set.rows.empty()) fail(ErrorCode::Validation, path.string() + ": no responses");
  return set;
}

CellValues participant_percentages(const ResponseSet& responses, std::span<const Trial> trials) {
  std::map<std::string, Cell> cell_by_trial;
  for (const auto& t : trials) {
    if (!t.is_catch) cell_by_trial.emplace(t.trial_id, t.cell());
  }
  // participant -> per-cell (hits, total)
  std::map<std::string, std::array<std::pair<std::size_t, std::size_t>, kCellCount>> counts;
  for (const auto& r : responses.rows) {
    const auto it = cell_by_trial.find(r.trial_id);
    if (it == cell_by_trial.end()) continue;
    auto& c = counts[r.participant_id][cell_index(it->second)];
    ++c.second;
    if (r.choice == Choice::Predicted) ++c.first;
  }
  CellValues out{};
  for (std::size_t c = 0; c < kCellCount; ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [pid, cells] : counts) {
      if (cells[c].second == 0) continue;
      sum += 100.0 * static_cast<double>(cells[c].first) / static_cast<double>(cells[c].second);
      ++n;
    }
    if (n == 0) fail(ErrorCode::Validation, std::string("no responses in cell ") + cell_label(kCells[c]));
    out[c] = sum / static_cast<double>(n);
  }
  return out;
}

AccuracyTable accuracy_vs_participants(const std::map<std::string, ModelChoice>& model_choices,
                                       const ResponseSet& responses) {
  std::array<std::size_t, kCellCount> hits{}, totals{};
  for (const auto& r : responses.rows) {
    const auto it = model_choices.find(r.trial_id);
    if (it == model_choices.end()) {
      fail(ErrorCode::Validation, "response of participant '" + r.participant_id + "' refers to trial '" +
                                      r.trial_id + "' without a model choice");
    }
    const auto c = cell_index(it->second.cell);
    ++totals[c];
    if (it->second.choice == r.choice) ++hits[c];
  }
  AccuracyTable table;
  for (std::size_t c = 0; c < kCellCount; ++c) {
    if (totals[c] == 0) fail(ErrorCode::Validation, std::string("no responses in cell ") + cell_label(kCells[c]));
    table.cells[c] = 100.0 * static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
  }
  table.mean = cell_mean(table.cells);
  table.rows = responses.rows.size();
  return table;
}

AboveChance above_chance_check(std::span<const Choice> choices) {
  if (choices.empty()) fail(ErrorCode::InvalidArgument, "above-chance check needs at least one trial");
  AboveChance out;
  out.n = choices.size();
  out.successes = static_cast<std::uint64_t>(std::count(choices.begin(), choices.end(), Choice::Predicted));
  const auto test = stats::binomial_test(out.successes, out.n, 0.5);
  out.p_two_sided = test.two_sided;
  out.p_one_sided = test.greater;
  return out;
}

namespace {

SignComparison finish(SignComparison s) {
  s.p_value = s.n ? stats::sign_test(s.successes, s.n) : 1.0;
  return s;
}

}  // namespace

SignComparison sign_test_closer(const CellValues& textual, const CellValues& grounded,
                                const CellValues& participants) {
  SignComparison s;
  for (std::size_t c = 0; c < kCellCount; ++c) {
    const double dg = std::fabs(grounded[c] - participants[c]);
    const double dt = std::fabs(textual[c] - participants[c]);
    if (dg == dt) {
      ++s.ties;
      continue;
    }
    ++s.n;
    if (dg < dt) ++s.successes;
  }
  return finish(s);
}

SignComparison sign_test_larger(const CellValues& textual, const CellValues& grounded) {
  SignComparison s;
  for (std::size_t c = 0; c < kCellCount; ++c) {
    if (grounded[c] == textual[c]) {
      ++s.ties;
      continue;
    }
    ++s.n;
    if (grounded[c] > textual[c]) ++s.successes;
  }
  return finish(s);
}

}  // namespace vgsim
