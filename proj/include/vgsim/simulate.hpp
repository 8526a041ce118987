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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vgsim/embeddings.hpp"

namespace vgsim {

enum class WordType { Abstract, Concrete };
enum class Distance { Far, Near, Max };

// The five design cells, in report column order.
enum class Cell { AbstractFar, AbstractNear, ConcreteFar, ConcreteNear, ConcreteMax };
inline constexpr std::size_t kCellCount = 5;
inline constexpr std::array<Cell, kCellCount> kCells{Cell::AbstractFar, Cell::AbstractNear, Cell::ConcreteFar,
                                                    Cell::ConcreteNear, Cell::ConcreteMax};

const char* word_type_name(WordType t) noexcept;
const char* distance_name(Distance d) noexcept;
const char* cell_label(Cell c) noexcept;  // "A.Far", ..., "C.Max"
WordType parse_word_type(std::string_view s);
Distance parse_distance(std::string_view s);
Cell cell_of(WordType t, Distance d);

struct Trial {
  std::string trial_id;
  std::string target;
  WordType word_type = WordType::Abstract;
  Distance distance = Distance::Far;
  std::string pred_image_id;
  std::string rand_image_id;
  std::vector<std::string> pred_labels;
  std::vector<std::string> rand_labels;
  bool is_catch = false;

  Cell cell() const { return cell_of(word_type, distance); }
};

inline constexpr std::size_t kMaxLabels = 10;

// CSV `trial_id,target,word_type,distance,pred_image_id,rand_image_id,
// pred_labels,rand_labels,is_catch`, labels joined with ';'. Trials are
// returned sorted by trial id.
std::vector<Trial> load_trials(const std::filesystem::path& path);

struct TrialMeasures {
  double pred_sim = 0.0;
  double rand_sim = 0.0;
  double inter_image_sim = 0.0;
  std::size_t pred_n_obj = 0;
  std::size_t rand_n_obj = 0;
};

TrialMeasures compute_trial_measures(const Trial& trial, const EmbeddingSpace& space,
                                     const ImageVectorStore& images);

enum class Choice { Predicted, Random };
const char* choice_name(Choice c) noexcept;
Choice parse_choice(std::string_view s);

/// Picks the image whose labels are closer to the target; ties go to the
/// predicted image.
Choice max_select(const TrialMeasures& m);

struct TrialOutcome {
  std::string trial_id;
  std::string target;
  WordType word_type = WordType::Abstract;
  Distance distance = Distance::Far;
  TrialMeasures measures;
  Choice choice = Choice::Predicted;
  bool tie = false;

  Cell cell() const { return cell_of(word_type, distance); }
};

struct Exclusion {
  std::string trial_id;
  std::string reason;
};

struct Simulation {
  std::string space_name;
  std::vector<TrialOutcome> outcomes;  // trial-id order
  std::vector<Exclusion> excluded;
  std::size_t ties = 0;
  std::size_t catch_trials_skipped = 0;
};

/// Measures and Max choices for every trial. Trials whose target is missing
/// from the space or whose images have no usable label are excluded with a
/// reason; catch trials are skipped unless `include_catch` is set.
Simulation simulate_max(std::span<const Trial> trials, const EmbeddingSpace& space,
                        const ImageVectorStore& images, bool include_catch = false);

using CellValues = std::array<double, kCellCount>;

double cell_mean(const CellValues& cells);

struct ConditionReport {
  CellValues cells{};
  double mean = 0.0;
  double participant_mean = 0.0;
  double delta = 0.0;

  static ConditionReport from_cells(const CellValues& model_cells, double participant_mean);
};

/// Percentage of Max choices equal to "predicted", per cell.
CellValues selection_percentages(const Simulation& sim);

ConditionReport virtual_report(const Simulation& sim, const CellValues& participant_cells);
ConditionReport virtual_report(std::span<const Trial> trials, const EmbeddingSpace& space,
                               const ImageVectorStore& images, const CellValues& participant_cells);

struct Response {
  std::string participant_id;
  std::string trial_id;
  Choice choice = Choice::Predicted;
};

struct ResponseSet {
  std::vector<Response> rows;
};

// CSV `participant_id,trial_id,choice`; (participant, trial) pairs are unique.
ResponseSet load_responses(const std::filesystem::path& path);

/// Per cell: percentage of predicted-image choices for each participant,
/// averaged over participants.
CellValues participant_percentages(const ResponseSet& responses, std::span<const Trial> trials);

struct AccuracyTable {
  CellValues cells{};
  double mean = 0.0;
  std::size_t rows = 0;
};

struct ModelChoice {
  Cell cell = Cell::AbstractFar;
  Choice choice = Choice::Predicted;
};

/// Percentage of (participant, trial) rows where the model's choice matches
/// the participant's, per cell, and the unweighted mean over cells. Every
/// response must refer to a trial in `model_choices`.
AccuracyTable accuracy_vs_participants(const std::map<std::string, ModelChoice>& model_choices,
                                       const ResponseSet& responses);

struct AboveChance {
  std::uint64_t successes = 0;
  std::uint64_t n = 0;
  double p_two_sided = 1.0;
  double p_one_sided = 1.0;  // H1: predicted chosen more often than chance
};

AboveChance above_chance_check(std::span<const Choice> choices);

struct SignComparison {
  std::uint64_t successes = 0;
  std::uint64_t n = 0;  // ties excluded
  std::uint64_t ties = 0;
  double p_value = 1.0;
};

/// Success when the grounded cell is closer to the participants than the
/// textual one.
SignComparison sign_test_closer(const CellValues& textual, const CellValues& grounded,
                                const CellValues& participants);
/// Success when the grounded cell is larger than the textual one.
SignComparison sign_test_larger(const CellValues& textual, const CellValues& grounded);

}  // namespace vgsim
