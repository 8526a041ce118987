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

#include "vgsim/vgsim.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "vgsim/crossmodal.hpp"
#include "vgsim/embeddings.hpp"
#include "vgsim/error.hpp"
#include "vgsim/fixture.hpp"
#include "vgsim/pipeline.hpp"
#include "vgsim/simulate.hpp"
#include "vgsim/stats.hpp"

struct vgsim_config {
  vgsim::pipeline::RunConfig cfg;
};

struct vgsim_space {
  vgsim::EmbeddingSpace space;
};

struct vgsim_map {
  vgsim::LinearMap map;
};

namespace {

thread_local std::string g_last_error;

vgsim_status set_error(vgsim_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
vgsim_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return VGSIM_OK;
  } catch (const vgsim::Error& e) {
    return set_error(static_cast<vgsim_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(VGSIM_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(VGSIM_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(VGSIM_E_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) vgsim::fail(vgsim::ErrorCode::InvalidArgument, what);
}

}  // namespace

extern "C" {

const char* vgsim_version(void) { return "1.0.0"; }

const char* vgsim_status_name(vgsim_status status) {
  if (status == VGSIM_OK) return "ok";
  if (status < VGSIM_E_INVALID_ARGUMENT || status > VGSIM_E_INTERNAL) return "unknown";
  return vgsim::error_code_name(static_cast<vgsim::ErrorCode>(status));
}

const char* vgsim_last_error(void) { return g_last_error.c_str(); }

vgsim_status vgsim_config_new(vgsim_config** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    *out = new vgsim_config{};
  });
}

vgsim_status vgsim_config_load(const char* path, vgsim_config** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    auto cfg = vgsim::pipeline::RunConfig::load(path);
    *out = new vgsim_config{std::move(cfg)};
  });
}

vgsim_status vgsim_config_set(vgsim_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg != nullptr && key != nullptr && value != nullptr, "null argument");
    require(*key != '\0', "empty key");
    cfg->cfg.set(key, value);
  });
}

vgsim_status vgsim_config_hash(const vgsim_config* cfg, char* buf, size_t len) {
  return guarded([&] {
    require(cfg != nullptr && buf != nullptr, "null argument");
    const auto h = cfg->cfg.hash();
    require(len > h.size(), "buffer too small for the config hash");
    std::memcpy(buf, h.c_str(), h.size() + 1);
  });
}

void vgsim_config_free(vgsim_config* cfg) { delete cfg; }

vgsim_status vgsim_run(const char* command, const vgsim_config* cfg, size_t* n_files) {
  return guarded([&] {
    require(command != nullptr && cfg != nullptr, "null argument");
    const auto out = vgsim::pipeline::run_and_write(command, cfg->cfg);
    if (n_files) *n_files = out.files().size();
  });
}

vgsim_status vgsim_make_fixture(const char* dir, uint64_t seed) {
  return guarded([&] {
    require(dir != nullptr, "null directory");
    vgsim::fixture::write_fixture(dir, seed);
  });
}

vgsim_status vgsim_space_load(const char* path, vgsim_space** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    auto space = vgsim::load_embeddings(path);
    *out = new vgsim_space{std::move(space)};
  });
}

size_t vgsim_space_dim(const vgsim_space* space) { return space ? space->space.dim() : 0; }

size_t vgsim_space_size(const vgsim_space* space) { return space ? space->space.size() : 0; }

vgsim_status vgsim_space_vector(const vgsim_space* space, const char* word, double* buf, size_t len) {
  return guarded([&] {
    require(space != nullptr && word != nullptr && buf != nullptr, "null argument");
    require(len >= space->space.dim(), "buffer shorter than the space dimension");
    const auto v = space->space.find(word);
    if (!v) vgsim::fail(vgsim::ErrorCode::NotFound, std::string("word not in space: ") + word);
    std::memcpy(buf, v->data(), v->size() * sizeof(double));
  });
}

vgsim_status vgsim_space_cosine(const vgsim_space* space, const char* a, const char* b, double* out) {
  return guarded([&] {
    require(space != nullptr && a != nullptr && b != nullptr && out != nullptr, "null argument");
    const auto va = space->space.find(a);
    const auto vb = space->space.find(b);
    if (!va) vgsim::fail(vgsim::ErrorCode::NotFound, std::string("word not in space: ") + a);
    if (!vb) vgsim::fail(vgsim::ErrorCode::NotFound, std::string("word not in space: ") + b);
    *out = vgsim::cosine(*va, *vb);
  });
}

void vgsim_space_free(vgsim_space* space) { delete space; }

vgsim_status vgsim_map_load(const char* path, vgsim_map** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    auto map = vgsim::load_linear_map(path);
    *out = new vgsim_map{std::move(map)};
  });
}

size_t vgsim_map_d_in(const vgsim_map* map) { return map ? map->map.d_in() : 0; }

size_t vgsim_map_d_out(const vgsim_map* map) { return map ? map->map.d_out() : 0; }

vgsim_status vgsim_map_apply(const vgsim_map* map, const double* x, size_t n_in, double* y, size_t n_out) {
  return guarded([&] {
    require(map != nullptr && x != nullptr && y != nullptr, "null argument");
    if (n_in != map->map.d_in() || n_out < map->map.d_out()) {
      vgsim::fail(vgsim::ErrorCode::DimensionMismatch, "map expects " + std::to_string(map->map.d_in()) +
                                                           " inputs and " + std::to_string(map->map.d_out()) +
                                                           " outputs");
    }
    const auto r = map->map.apply({x, n_in});
    std::memcpy(y, r.data(), r.size() * sizeof(double));
  });
}

void vgsim_map_free(vgsim_map* map) { delete map; }

vgsim_status vgsim_sign_test(uint64_t successes, uint64_t n, double* p_two_sided) {
  return guarded([&] {
    require(p_two_sided != nullptr, "null output pointer");
    *p_two_sided = vgsim::stats::sign_test(successes, n);
  });
}

vgsim_status vgsim_binomial_test(uint64_t successes, uint64_t n, double p0, double* two_sided, double* greater,
                                 double* less) {
  return guarded([&] {
    const auto r = vgsim::stats::binomial_test(successes, n, p0);
    if (two_sided) *two_sided = r.two_sided;
    if (greater) *greater = r.greater;
    if (less) *less = r.less;
  });
}

vgsim_status vgsim_cell_report(const double cells[VGSIM_CELL_COUNT], double participant_mean, double* mean,
                               double* delta) {
  return guarded([&] {
    require(cells != nullptr, "null cells");
    vgsim::CellValues values{};
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = cells[i];
    const auto rep = vgsim::ConditionReport::from_cells(values, participant_mean);
    if (mean) *mean = rep.mean;
    if (delta) *delta = rep.delta;
  });
}

}  // extern "C"
