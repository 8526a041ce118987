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

#include "vgsim/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <json.hpp>

#include "vgsim/crossmodal.hpp"
#include "vgsim/embeddings.hpp"
#include "vgsim/error.hpp"
#include "vgsim/io.hpp"
#include "vgsim/stats.hpp"
#include "vgsim/zsg.hpp"

namespace vgsim::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- RunConfig

namespace {

std::string normalize_key(std::string_view key) {
  std::string k(io::trim(key));
  std::replace(k.begin(), k.end(), '_', '-');
  return k;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const fs::path& base_dir, const std::string& source) {
  RunConfig cfg;
  const auto lines = io::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = io::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(i + 1) + ": expected key = value");
    }
    const auto key = normalize_key(line.substr(0, eq));
    if (key.empty()) fail(ErrorCode::Parse, source + ":" + std::to_string(i + 1) + ": empty key");
    cfg.set(key, std::string(io::trim(line.substr(eq + 1))), base_dir);
  }
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::Validation, "config file not found: " + path.string());
  std::string text;
  for (const auto& l : io::read_lines(path)) text += l + "\n";
  return parse(text, path.parent_path(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value, const fs::path& base_dir) {
  const auto k = normalize_key(key);
  values_[k] = value;
  base_[k] = base_dir;
}

std::optional<std::string> RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string RunConfig::require(const std::string& key) const {
  const auto v = get(key);
  if (!v || v->empty()) fail(ErrorCode::Validation, "missing required setting '" + key + "'");
  return *v;
}

fs::path RunConfig::path(const std::string& key) const {
  const fs::path p(require(key));
  const auto& base = base_.at(key);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::vector<fs::path> RunConfig::paths(const std::string& key) const {
  std::vector<fs::path> out;
  const auto& base = base_.at(key);
  for (const auto& part : io::split(require(key), ',')) {
    const fs::path p(std::string(io::trim(part)));
    if (p.empty()) continue;
    out.push_back(p.is_absolute() || base.empty() ? p : base / p);
  }
  return out;
}

double RunConfig::number(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? io::parse_double(*v, "setting '" + key + "'") : fallback;
}

std::size_t RunConfig::count(const std::string& key, std::size_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const auto n = io::parse_int(*v, "setting '" + key + "'");
  if (n < 0) fail(ErrorCode::Validation, "setting '" + key + "' must be non-negative");
  return static_cast<std::size_t>(n);
}

bool RunConfig::flag(const std::string& key, bool fallback) const {
  const auto v = get(key);
  return v ? io::parse_bool(*v, "setting '" + key + "'") : fallback;
}

std::uint64_t RunConfig::seed() const {
  const auto v = get("seed");
  if (!v) return 1;
  const auto n = io::parse_int(*v, "setting 'seed'");
  if (n < 0) fail(ErrorCode::Validation, "seed must be non-negative");
  return static_cast<std::uint64_t>(n);
}

std::string RunConfig::hash() const {
  std::string canonical;
  for (const auto& [k, v] : values_) {
    if (k == "out-dir" || k == "config") continue;
    canonical += k + "=" + v + "\n";
  }
  return report::hex64(report::fnv1a64(canonical));
}

// ---------------------------------------------------------------- helpers

namespace {

json jnum(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::stod(io::format_sig(x, 6));
}

json header(const RunConfig& cfg, const std::string& command) {
  json j;
  j["command"] = command;
  j["config_hash"] = cfg.hash();
  j["seed"] = cfg.seed();
  return j;
}

std::string provenance(const RunConfig& cfg) { return report::provenance_line(cfg.hash(), cfg.seed()); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path input(const RunConfig& cfg, const std::string& key) {
  const auto p = cfg.path(key);
  if (!fs::exists(p)) fail(ErrorCode::Validation, key + " file not found: " + p.string());
  return p;
}

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out += static_cast<char>(std::tolower(u));
    } else if (c == '#') {
      out += "n";
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

MapMode parse_setup(const RunConfig& cfg) {
  const auto s = cfg.get("setup").value_or("prototype");
  if (s == "prototype") return MapMode::Prototype;
  if (s == "exemplar") return MapMode::Exemplar;
  fail(ErrorCode::Validation, "--setup must be prototype or exemplar, got '" + s + "'");
}

CellValues parse_cells(const RunConfig& cfg, const std::string& key) {
  const auto parts = io::split(cfg.require(key), ',');
  if (parts.size() != kCellCount) {
    fail(ErrorCode::Validation, "setting '" + key + "' needs five comma-separated cell values");
  }
  CellValues cells{};
  for (std::size_t i = 0; i < kCellCount; ++i) cells[i] = io::parse_double(parts[i], "setting '" + key + "'");
  return cells;
}

json cells_json(const CellValues& cells) {
  json j = json::object();
  for (std::size_t i = 0; i < kCellCount; ++i) j[cell_label(kCells[i])] = jnum(cells[i]);
  return j;
}

struct NamedSpace {
  std::string tag;  // "textual" or "grounded"
  EmbeddingSpace space;
};

std::vector<std::string> space_tags(const RunConfig& cfg) {
  const auto which = cfg.get("space").value_or(cfg.has("grounded-embeddings") ? "both" : "textual");
  if (which == "textual") return {"textual"};
  if (which == "grounded") return {"grounded"};
  if (which == "both") return {"textual", "grounded"};
  fail(ErrorCode::Validation, "--space must be textual, grounded or both, got '" + which + "'");
}

std::vector<NamedSpace> load_spaces(const RunConfig& cfg) {
  std::vector<NamedSpace> out;
  for (const auto& tag : space_tags(cfg)) {
    const std::string key = tag == "textual" ? "embeddings" : "grounded-embeddings";
    out.push_back({tag, load_embeddings(input(cfg, key))});
  }
  return out;
}

std::optional<CellValues> participant_cells(const RunConfig& cfg, const std::optional<ResponseSet>& responses,
                                            std::span<const Trial> trials) {
  if (cfg.has("participant-cells")) return parse_cells(cfg, "participant-cells");
  if (responses) return participant_percentages(*responses, trials);
  return std::nullopt;
}

// Responses restricted to trials the model made a choice on.
ResponseSet covered(const ResponseSet& responses, const std::map<std::string, ModelChoice>& choices) {
  ResponseSet out;
  for (const auto& r : responses.rows) {
    if (choices.count(r.trial_id)) out.rows.push_back(r);
  }
  return out;
}

std::map<std::string, ModelChoice> choices_of(const std::vector<TrialOutcome>& outcomes) {
  std::map<std::string, ModelChoice> out;
  for (const auto& o : outcomes) out[o.trial_id] = {o.cell(), o.choice};
  return out;
}

// ---------------------------------------------------------------- train-map

report::OutputSet cmd_train_map(const RunConfig& cfg) {
  const auto space = load_embeddings(input(cfg, "embeddings"));
  const auto images = load_image_vectors(input(cfg, "images"));
  const auto membership = load_class_membership(input(cfg, "membership"));
  const MapMode mode = parse_setup(cfg);

  const auto rows = build_training_rows(space, images, membership, mode);
  const auto lambda_text = cfg.get("lambda").value_or("default");
  const double lambda =
      lambda_text == "default" ? default_ridge_lambda(rows.text) : io::parse_double(lambda_text, "setting 'lambda'");
  const auto fitted = fit_linear_map(rows.text, rows.target, lambda, mode);

  report::OutputSet out;
  out.add("map.txt", format_linear_map(fitted.map));

  json j = header(cfg, "train-map");
  j["setup"] = map_mode_name(mode);
  j["lambda"] = jnum(fitted.report.lambda);
  j["lambda_is_default"] = lambda_text == "default";
  j["rows"] = fitted.report.rows;
  j["d_in"] = fitted.map.d_in();
  j["d_out"] = fitted.map.d_out();
  j["residual_norm"] = jnum(fitted.report.residual_norm);
  j["condition_number"] = jnum(fitted.report.condition_number);
  j["skipped_classes"] = rows.skipped_classes;
  out.add("map_report.json", dump(j));

  if (cfg.has("retrieve")) {
    const auto search = cfg.get("prototype-search").value_or("within-class");
    if (search != "within-class" && search != "global") {
      fail(ErrorCode::Validation, "--prototype-search must be within-class or global");
    }
    std::string csv = provenance(cfg) + "word,image_id\n";
    std::optional<PrototypeTable> protos;
    if (mode == MapMode::Prototype) protos = build_prototypes(images, membership);
    for (const auto& part : io::split(cfg.require("retrieve"), ',')) {
      const std::string word(io::trim(part));
      if (word.empty()) continue;
      const auto id = mode == MapMode::Prototype
                          ? retrieve_prototype(fitted.map, space, word, *protos, images,
                                               search == "global" ? PrototypeSearch::Global
                                                                  : PrototypeSearch::WithinClass)
                          : retrieve_exemplar(fitted.map, space, word, images);
      csv += word + "," + id + "\n";
    }
    out.add("retrievals.csv", csv);
  }
  return out;
}

// ---------------------------------------------------------------- ground

EncoderConfig encoder_config(const RunConfig& cfg) {
  EncoderConfig ec;
  if (cfg.has("encoder")) ec.kind = parse_encoder_kind(cfg.require("encoder"));
  ec.hidden_dim = cfg.count("hidden", ec.hidden_dim);
  ec.epochs = cfg.count("epochs", ec.epochs);
  ec.batch_size = cfg.count("batch", ec.batch_size);
  ec.learning_rate = cfg.number("lr", ec.learning_rate);
  ec.early_stop_patience = cfg.count("patience", ec.early_stop_patience);
  ec.grounded_dim = cfg.count("grounded-dim", ec.grounded_dim);
  ec.seed = cfg.seed();
  ec.validate();
  return ec;
}

report::OutputSet cmd_ground(const RunConfig& cfg) {
  const auto space = load_embeddings(input(cfg, "embeddings"));
  report::OutputSet out;
  json j = header(cfg, "ground");
  j["textual"] = space.name();
  j["words"] = space.size();

  if (cfg.has("alignment")) {
    const auto alignment = load_linear_map(input(cfg, "alignment"));
    const auto grounded = ground(space, alignment);
    out.add("grounded.txt", format_embeddings(grounded));
    j["mode"] = "apply";
    j["d_in"] = alignment.d_in();
    j["d_grounded"] = alignment.d_out();
    out.add("ground_report.json", dump(j));
    return out;
  }

  const auto images = load_image_vectors(input(cfg, "images"));
  const auto captions = load_captions(input(cfg, "captions"), CorpusSplit::Train);
  const auto ec = encoder_config(cfg);
  CaptionCorpus train, val;
  if (cfg.has("val-captions")) {
    train = captions;
    val = load_captions(input(cfg, "val-captions"), CorpusSplit::Validation);
  } else {
    std::tie(train, val) = split_corpus(captions, cfg.number("val-fraction", 0.1), cfg.seed());
  }
  const auto result = train_alignment(space, train, val, images, ec);
  const auto grounded = ground(space, result.alignment);

  out.add("alignment.txt", format_linear_map(result.alignment));
  out.add("grounded.txt", format_embeddings(grounded));
  out.add("training_log.csv", provenance(cfg) + format_training_log(result.log));

  const auto& log = result.log;
  j["mode"] = "train";
  j["encoder"] = encoder_kind_name(ec.kind);
  j["d_in"] = result.alignment.d_in();
  j["d_grounded"] = result.alignment.d_out();
  j["d_image"] = images.dim();
  j["train_captions"] = train.samples.size();
  j["validation_captions"] = val.samples.size();
  j["initial_train_mse"] = jnum(log.initial_train_mse);
  j["initial_val_mse"] = jnum(log.initial_val_mse);
  j["epochs_run"] = log.epochs.size();
  j["best_epoch"] = log.best_epoch;
  j["best_val_mse"] = jnum(log.best_val_mse);
  j["stopped_early"] = log.stopped_early;
  j["skipped_tokens"] = log.skipped_tokens;
  out.add("ground_report.json", dump(j));
  return out;
}

// ---------------------------------------------------------------- simulate

report::OutputSet cmd_simulate(const RunConfig& cfg) {
  const auto trials = load_trials(input(cfg, "trials"));
  if (trials.empty()) fail(ErrorCode::Validation, "trials file has no trials");
  const auto images = load_image_vectors(input(cfg, "images"));
  const auto spaces = load_spaces(cfg);
  const bool include_catch = cfg.flag("include-catch", false);

  std::optional<ResponseSet> responses;
  if (cfg.has("responses")) responses = load_responses(input(cfg, "responses"));
  const auto participants = participant_cells(cfg, responses, trials);
  std::optional<double> participant_mean;
  if (participants) participant_mean = cell_mean(*participants);
  if (cfg.has("participant-mean")) participant_mean = cfg.number("participant-mean", 0.0);

  report::OutputSet out;
  json j = header(cfg, "simulate");
  j["trials"] = trials.size();
  if (participant_mean) {
    json pj;
    if (participants) pj["cells"] = cells_json(*participants);
    pj["mean"] = jnum(*participant_mean);
    j["participants"] = pj;
  }
  json spaces_json = json::array();
  std::vector<report::CellRow> table;
  std::vector<report::CellRow> accuracy_rows;
  std::string chance_csv = provenance(cfg) + "space,successes,n,rate,p_two_sided,p_one_sided\n";
  std::map<std::string, CellValues> by_tag;

  for (const auto& ns : spaces) {
    const auto sim = simulate_max(trials, ns.space, images, include_catch);
    out.add("measures_" + ns.tag + ".csv", format_measures_csv(sim, provenance(cfg)));
    std::string excl = provenance(cfg) + "trial_id,reason\n";
    for (const auto& e : sim.excluded) excl += e.trial_id + "," + e.reason + "\n";
    out.add("exclusions_" + ns.tag + ".csv", excl);

    const auto cells = selection_percentages(sim);
    by_tag[ns.tag] = cells;
    report::CellRow row{"Max: " + ns.space.name(), cells, cell_mean(cells), std::nullopt};
    if (participant_mean) row.delta = ConditionReport::from_cells(cells, *participant_mean).delta;
    table.push_back(row);

    std::vector<Choice> choices;
    for (const auto& o : sim.outcomes) choices.push_back(o.choice);
    const auto chance = above_chance_check(choices);
    const double rate = chance.n ? static_cast<double>(chance.successes) / static_cast<double>(chance.n) : 0.0;
    chance_csv += ns.tag + "," + std::to_string(chance.successes) + "," + std::to_string(chance.n) + "," +
                  report::num(rate) + "," + report::num(chance.p_two_sided) + "," +
                  report::num(chance.p_one_sided) + "\n";

    json sj;
    sj["tag"] = ns.tag;
    sj["name"] = ns.space.name();
    sj["cells"] = cells_json(cells);
    sj["mean"] = jnum(row.mean);
    sj["delta"] = row.delta ? jnum(*row.delta) : json(nullptr);
    sj["simulated"] = sim.outcomes.size();
    sj["excluded"] = sim.excluded.size();
    sj["ties"] = sim.ties;
    sj["catch_trials_skipped"] = sim.catch_trials_skipped;
    sj["above_chance"] = {{"successes", chance.successes},
                          {"n", chance.n},
                          {"rate", jnum(rate)},
                          {"p_two_sided", jnum(chance.p_two_sided)},
                          {"p_one_sided", jnum(chance.p_one_sided)}};

    if (responses) {
      const auto model = choices_of(sim.outcomes);
      const auto acc = accuracy_vs_participants(model, covered(*responses, model));
      accuracy_rows.push_back({"Max: " + ns.space.name(), acc.cells, acc.mean, std::nullopt});
      sj["accuracy"] = {{"cells", cells_json(acc.cells)}, {"mean", jnum(acc.mean)}, {"responses", acc.rows}};
    }
    spaces_json.push_back(sj);
  }
  j["spaces"] = spaces_json;

  if (participant_mean) {
    report::CellRow prow{"Participants", participants.value_or(CellValues{}), *participant_mean, std::nullopt};
    if (!participants) prow.cells.fill(std::nan(""));
    table.push_back(prow);
  }
  out.add("report.csv", provenance(cfg) + report::cell_table_csv(table, participant_mean.has_value()));
  out.add("above_chance.csv", chance_csv);
  if (!accuracy_rows.empty()) {
    out.add("accuracy.csv", provenance(cfg) + report::cell_table_csv(accuracy_rows, false));
  }

  if (by_tag.size() == 2) {
    const auto& t = by_tag.at("textual");
    const auto& g = by_tag.at("grounded");
    std::string cmp = provenance(cfg) + "cell,textual,grounded" + (participants ? ",participants" : "") + "\n";
    for (std::size_t c = 0; c < kCellCount; ++c) {
      cmp += std::string(cell_label(kCells[c])) + "," + report::fixed2(t[c]) + "," + report::fixed2(g[c]);
      if (participants) cmp += "," + report::fixed2((*participants)[c]);
      cmp += "\n";
    }
    out.add("comparison.csv", cmp);

    std::string signs = provenance(cfg) + "test,successes,n,ties,p_value\n";
    json sjson = json::object();
    const auto add_sign = [&](const std::string& name, const SignComparison& s) {
      signs += name + "," + std::to_string(s.successes) + "," + std::to_string(s.n) + "," +
               std::to_string(s.ties) + "," + report::num(s.p_value) + "\n";
      sjson[name] = {{"successes", s.successes}, {"n", s.n}, {"ties", s.ties}, {"p_value", jnum(s.p_value)}};
    };
    if (participants) add_sign("grounded_closer", sign_test_closer(t, g, *participants));
    add_sign("grounded_larger", sign_test_larger(t, g));
    out.add("sign_tests.csv", signs);
    j["sign_tests"] = sjson;
  }
  out.add("report.json", dump(j));
  return out;
}

// ---------------------------------------------------------------- fit-gam

struct MeasureSet {
  std::string tag;
  std::string name;
  std::vector<TrialOutcome> outcomes;
};

report::OutputSet cmd_fit_gam(const RunConfig& cfg) {
  const auto responses = load_responses(input(cfg, "responses"));

  std::vector<MeasureSet> sets;
  if (cfg.has("measures") || cfg.has("grounded-measures")) {
    if (cfg.has("measures")) sets.push_back({"textual", "textual", load_measures(input(cfg, "measures"))});
    if (cfg.has("grounded-measures")) {
      sets.push_back({"grounded", "grounded", load_measures(input(cfg, "grounded-measures"))});
    }
  } else {
    const auto trials = load_trials(input(cfg, "trials"));
    const auto images = load_image_vectors(input(cfg, "images"));
    for (const auto& ns : load_spaces(cfg)) {
      auto sim = simulate_max(trials, ns.space, images, false);
      sets.push_back({ns.tag, ns.space.name(), std::move(sim.outcomes)});
    }
  }

  auto spec = cfg.has("gam-spec") ? gam::GamSpec::load(input(cfg, "gam-spec")) : default_gam_spec();
  if (cfg.has("lambda-grid")) {
    spec.lambda_grid.clear();
    for (const auto& tok : io::split_whitespace(cfg.require("lambda-grid"))) {
      spec.lambda_grid.push_back(io::parse_double(tok, "setting 'lambda-grid'"));
    }
  }
  if (cfg.has("per-smooth-lambda")) spec.per_smooth_lambda = cfg.flag("per-smooth-lambda", false);
  spec.validate();
  const std::size_t grid_size = cfg.count("grid-size", 100);

  // Only trials usable in every space, so all fits share one response vector.
  std::vector<std::map<std::string, const TrialOutcome*>> lookup(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (const auto& o : sets[s].outcomes) lookup[s][o.trial_id] = &o;
  }
  ResponseSet used;
  std::vector<double> y;
  std::size_t dropped = 0;
  for (const auto& r : responses.rows) {
    const bool everywhere = std::all_of(lookup.begin(), lookup.end(),
                                        [&](const auto& m) { return m.count(r.trial_id) > 0; });
    if (!everywhere) {
      ++dropped;
      continue;
    }
    used.rows.push_back(r);
    y.push_back(r.choice == Choice::Predicted ? 1.0 : 0.0);
  }
  if (y.empty()) fail(ErrorCode::Validation, "no response refers to a usable trial");

  report::OutputSet out;
  json j = header(cfg, "fit-gam");
  j["responses"] = responses.rows.size();
  j["rows"] = y.size();
  j["responses_dropped"] = dropped;
  json fits_json = json::array();
  std::vector<gam::GamFit> fits;
  std::vector<report::CellRow> accuracy_rows;

  for (std::size_t s = 0; s < sets.size(); ++s) {
    std::vector<const TrialOutcome*> rows;
    for (const auto& r : used.rows) rows.push_back(lookup[s].at(r.trial_id));
    const auto data = gam_data(rows);
    const auto design = gam::build_design(data, spec);
    auto fit = gam::fit_gam(design, y, spec);
    const auto& tag = sets[s].tag;

    out.add("gam_summary_" + tag + ".csv", provenance(cfg) + gam::format_summary_csv(gam::summarize(fit)));
    json smooths = json::array();
    for (std::size_t k = 0; k < spec.smooths.size(); ++k) {
      const auto& name = spec.smooths[k].covariate;
      const auto curve = gam::partial_effects(fit, name, grid_size);
      const auto base = "partial_" + tag + "_" + slug(name);
      out.add(base + ".csv", provenance(cfg) + gam::format_partial_effects_csv(curve));
      out.add(base + ".svg", gam::partial_effects_svg(curve, spec.smooths[k].label() + " (" + sets[s].name + ")"));
      smooths.push_back({{"name", spec.smooths[k].label()},
                         {"lambda", jnum(fit.lambdas[k])},
                         {"edf", jnum(fit.smooth_edf[k])}});
    }

    // Per-trial GAM choice: predicted when the fitted probability is >= 0.5.
    std::map<std::string, ModelChoice> model;
    const auto prob = gam::predict_prob(fit, design.x);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      model[rows[i]->trial_id] = {rows[i]->cell(),
                                  prob(static_cast<Eigen::Index>(i)) >= 0.5 ? Choice::Predicted : Choice::Random};
    }
    const auto acc = accuracy_vs_participants(model, used);
    accuracy_rows.push_back({"GAM: " + sets[s].name, acc.cells, acc.mean, std::nullopt});

    json grid = json::array();
    for (const auto& g : fit.grid) {
      json gl = json::array();
      for (double l : g.lambdas) gl.push_back(jnum(l));
      grid.push_back({{"lambdas", gl},
                      {"converged", g.converged},
                      {"aic", g.converged ? jnum(g.aic) : json(nullptr)},
                      {"edf", g.converged ? jnum(g.edf_total) : json(nullptr)}});
    }
    fits_json.push_back({{"tag", tag},
                         {"name", sets[s].name},
                         {"deviance", jnum(fit.deviance)},
                         {"edf", jnum(fit.edf_total)},
                         {"aic", jnum(fit.aic)},
                         {"pirls_iterations", fit.trace.size()},
                         {"smooths", smooths},
                         {"accuracy", {{"cells", cells_json(acc.cells)}, {"mean", jnum(acc.mean)}}},
                         {"grid", grid}});
    fits.push_back(std::move(fit));
  }
  j["fits"] = fits_json;
  out.add("gam_accuracy.csv", provenance(cfg) + report::cell_table_csv(accuracy_rows, false));

  if (fits.size() >= 2) {
    std::vector<std::pair<std::string, const gam::GamFit*>> named;
    for (std::size_t s = 0; s < fits.size(); ++s) named.emplace_back(sets[s].name, &fits[s]);
    std::string csv = provenance(cfg) + "model,aic,delta_aic\n";
    json cj = json::array();
    for (const auto& e : gam::compare_aic(named)) {
      csv += e.name + "," + report::num(e.aic) + "," + report::num(e.delta) + "\n";
      cj.push_back({{"model", e.name}, {"aic", jnum(e.aic)}, {"delta_aic", jnum(e.delta)}});
    }
    out.add("aic_comparison.csv", csv);
    j["aic_comparison"] = cj;
  }
  out.add("gam_report.json", dump(j));
  return out;
}

// ---------------------------------------------------------------- bench

report::OutputSet cmd_bench(const RunConfig& cfg) {
  const auto spaces = load_spaces(cfg);
  std::vector<stats::BenchmarkPairs> benches;
  for (const auto& p : cfg.paths("benchmarks")) {
    if (!fs::exists(p)) fail(ErrorCode::Validation, "benchmark file not found: " + p.string());
    benches.push_back(stats::load_benchmark(p));
  }
  std::string csv = provenance(cfg) + "space,benchmark,rho,coverage,covered,total\n";
  json j = header(cfg, "bench");
  json rows = json::array();
  for (const auto& ns : spaces) {
    for (const auto& b : benches) {
      const auto r = stats::benchmark_eval(ns.space, b);
      csv += ns.space.name() + "," + b.name + "," + report::num(r.rho) + "," + report::num(r.coverage) + "," +
             std::to_string(r.covered) + "," + std::to_string(r.total) + "\n";
      rows.push_back({{"space", ns.space.name()},
                      {"benchmark", b.name},
                      {"rho", jnum(r.rho)},
                      {"coverage", jnum(r.coverage)},
                      {"covered", r.covered},
                      {"total", r.total}});
    }
  }
  j["results"] = rows;
  report::OutputSet out;
  out.add("bench.csv", csv);
  out.add("bench.json", dump(j));
  return out;
}

// ---------------------------------------------------------------- stats

report::OutputSet cmd_stats(const RunConfig& cfg) {
  const auto test = cfg.require("test");
  json j = header(cfg, "stats");
  j["test"] = test;
  const auto uint_of = [&](const std::string& key) {
    const auto v = io::parse_int(cfg.require(key), "setting '" + key + "'");
    if (v < 0) fail(ErrorCode::Validation, "setting '" + key + "' must be non-negative");
    return static_cast<std::uint64_t>(v);
  };
  if (test == "sign" || test == "binomial") {
    const auto k = uint_of("successes");
    const auto n = uint_of("n");
    const double p0 = test == "sign" ? 0.5 : cfg.number("p0", 0.5);
    if (k > n) fail(ErrorCode::Validation, "successes exceed n");
    const auto r = stats::binomial_test(k, n, p0);
    j["successes"] = k;
    j["n"] = n;
    j["p0"] = jnum(p0);
    j["exact"] = r.exact;
    j["p_two_sided"] = jnum(r.two_sided);
    j["p_greater"] = jnum(r.greater);
    j["p_less"] = jnum(r.less);
  } else if (test == "cell-report") {
    const auto cells = parse_cells(cfg, "cells");
    const auto rep = ConditionReport::from_cells(cells, io::parse_double(cfg.require("participant-mean"),
                                                                         "setting 'participant-mean'"));
    j["cells"] = cells_json(cells);
    j["mean"] = std::stod(report::fixed2(rep.mean));
    j["participant_mean"] = jnum(rep.participant_mean);
    j["delta"] = std::stod(report::fixed2(rep.delta));
  } else if (test == "sign-cells") {
    const auto t = parse_cells(cfg, "textual-cells");
    const auto g = parse_cells(cfg, "grounded-cells");
    const auto add = [&](const std::string& name, const SignComparison& s) {
      j[name] = {{"successes", s.successes}, {"n", s.n}, {"ties", s.ties}, {"p_value", jnum(s.p_value)}};
    };
    if (cfg.has("participant-cells")) add("grounded_closer", sign_test_closer(t, g, parse_cells(cfg, "participant-cells")));
    add("grounded_larger", sign_test_larger(t, g));
  } else {
    fail(ErrorCode::Validation, "--test must be sign, binomial, cell-report or sign-cells, got '" + test + "'");
  }
  report::OutputSet out;
  out.add("stats.json", dump(j));
  return out;
}

}  // namespace

// ---------------------------------------------------------------- public

gam::GamSpec default_gam_spec() {
  gam::GamSpec spec;
  spec.factors = {{"WordType", {"abstract", "concrete"}}, {"Distance", {"far", "near", "max"}}};
  spec.linear = {"Predicted Image #Objects", "Random Image #Objects"};
  spec.interactions = {{"WordType", "concrete", "Distance", "near"}};
  spec.smooths = {{"Random Image Similarity", 5}, {"Predicted Image Similarity", 5}, {"Inter-Image Similarity", 5}};
  return spec;
}

std::string format_measures_csv(const Simulation& sim, const std::string& provenance) {
  std::string out = provenance +
                    "trial_id,target,word_type,distance,cell,pred_sim,rand_sim,inter_image_sim,pred_n_obj,"
                    "rand_n_obj,choice,tie\n";
  for (const auto& o : sim.outcomes) {
    const auto& m = o.measures;
    out += o.trial_id + "," + o.target + "," + word_type_name(o.word_type) + "," + distance_name(o.distance) + "," +
           cell_label(o.cell()) + "," + report::num(m.pred_sim) + "," + report::num(m.rand_sim) + "," +
           report::num(m.inter_image_sim) + "," + std::to_string(m.pred_n_obj) + "," +
           std::to_string(m.rand_n_obj) + "," + choice_name(o.choice) + "," + (o.tie ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<TrialOutcome> load_measures(const fs::path& path) {
  const auto table = io::CsvTable::read(path);
  const auto c_id = table.column("trial_id"), c_target = table.column("target"),
             c_type = table.column("word_type"), c_dist = table.column("distance"),
             c_ps = table.column("pred_sim"), c_rs = table.column("rand_sim"),
             c_ii = table.column("inter_image_sim"), c_pn = table.column("pred_n_obj"),
             c_rn = table.column("rand_n_obj"), c_choice = table.column("choice"), c_tie = table.column("tie");
  std::vector<TrialOutcome> out;
  std::set<std::string> seen;
  for (const auto& row : table.rows()) {
    const auto where = table.where(row);
    try {
      TrialOutcome o;
      o.trial_id = row.fields[c_id];
      o.target = row.fields[c_target];
      o.word_type = parse_word_type(row.fields[c_type]);
      o.distance = parse_distance(row.fields[c_dist]);
      (void)o.cell();
      o.measures.pred_sim = io::parse_double(row.fields[c_ps], where);
      o.measures.rand_sim = io::parse_double(row.fields[c_rs], where);
      o.measures.inter_image_sim = io::parse_double(row.fields[c_ii], where);
      const auto pn = io::parse_int(row.fields[c_pn], where);
      const auto rn = io::parse_int(row.fields[c_rn], where);
      if (pn < 0 || rn < 0) fail(ErrorCode::Parse, "object counts must be non-negative");
      o.measures.pred_n_obj = static_cast<std::size_t>(pn);
      o.measures.rand_n_obj = static_cast<std::size_t>(rn);
      o.choice = parse_choice(row.fields[c_choice]);
      o.tie = io::parse_bool(row.fields[c_tie], where);
      if (!seen.insert(o.trial_id).second) fail(ErrorCode::Duplicate, "trial '" + o.trial_id + "' listed twice");
      out.push_back(std::move(o));
    } catch (const Error& e) {
      if (std::string(e.what()).rfind(where, 0) == 0) throw;
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  if (out.empty()) fail(ErrorCode::Validation, path.string() + ": no measures");
  return out;
}

gam::GamData gam_data(const std::vector<const TrialOutcome*>& rows) {
  std::vector<std::string> type, dist;
  std::vector<double> ps, rs, ii, pn, rn;
  for (const auto* o : rows) {
    type.emplace_back(word_type_name(o->word_type));
    dist.emplace_back(distance_name(o->distance));
    ps.push_back(o->measures.pred_sim);
    rs.push_back(o->measures.rand_sim);
    ii.push_back(o->measures.inter_image_sim);
    pn.push_back(static_cast<double>(o->measures.pred_n_obj));
    rn.push_back(static_cast<double>(o->measures.rand_n_obj));
  }
  gam::GamData data;
  data.add_factor("WordType", std::move(type));
  data.add_factor("Distance", std::move(dist));
  data.add_covariate("Predicted Image Similarity", std::move(ps));
  data.add_covariate("Random Image Similarity", std::move(rs));
  data.add_covariate("Inter-Image Similarity", std::move(ii));
  data.add_covariate("Predicted Image #Objects", std::move(pn));
  data.add_covariate("Random Image #Objects", std::move(rn));
  return data;
}

report::OutputSet run(const std::string& command, const RunConfig& cfg) {
  if (command == "train-map") return cmd_train_map(cfg);
  if (command == "ground") return cmd_ground(cfg);
  if (command == "simulate") return cmd_simulate(cfg);
  if (command == "fit-gam") return cmd_fit_gam(cfg);
  if (command == "bench") return cmd_bench(cfg);
  if (command == "stats") return cmd_stats(cfg);
  fail(ErrorCode::Validation, "unknown command '" + command + "'");
}

report::OutputSet run_and_write(const std::string& command, const RunConfig& cfg) {
  auto out = run(command, cfg);
  const fs::path dir = cfg.has("out-dir") ? cfg.path("out-dir") : fs::path("out");
  out.commit(dir);
  return out;
}

}  // namespace vgsim::pipeline
