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

#ifndef VGSIM_VGSIM_H_
#define VGSIM_VGSIM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(VGSIM_BUILDING_LIBRARY)
#define VGSIM_API __declspec(dllexport)
#else
#define VGSIM_API __declspec(dllimport)
#endif
#else
#define VGSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every function returning vgsim_status leaves a message for
 * vgsim_last_error() on failure. */
typedef enum vgsim_status {
  VGSIM_OK = 0,
  VGSIM_E_INVALID_ARGUMENT = 1,
  VGSIM_E_IO = 2,
  VGSIM_E_PARSE = 3,
  VGSIM_E_DIMENSION_MISMATCH = 4,
  VGSIM_E_NOT_FOUND = 5,
  VGSIM_E_DUPLICATE = 6,
  VGSIM_E_SINGULAR = 7,
  VGSIM_E_NO_USABLE_LABELS = 8,
  VGSIM_E_CONVERGENCE = 9,
  VGSIM_E_SEPARATION = 10,
  VGSIM_E_DIVERGENCE = 11,
  VGSIM_E_VALIDATION = 12,
  VGSIM_E_INTERNAL = 13
} vgsim_status;

#define VGSIM_CELL_COUNT 5

VGSIM_API const char* vgsim_version(void);
VGSIM_API const char* vgsim_status_name(vgsim_status status);
/* Message of the last failing call on the calling thread; "" if none. */
VGSIM_API const char* vgsim_last_error(void);

/* ---- run configuration (key-value, keys are the long CLI flag names) ---- */

typedef struct vgsim_config vgsim_config;

VGSIM_API vgsim_status vgsim_config_new(vgsim_config** out);
/* Relative paths in the file resolve against the file's directory. */
VGSIM_API vgsim_status vgsim_config_load(const char* path, vgsim_config** out);
/* Relative paths set here resolve against the working directory. */
VGSIM_API vgsim_status vgsim_config_set(vgsim_config* cfg, const char* key, const char* value);
/* Writes the 16-hex-digit config hash; `len` must be at least 17. */
VGSIM_API vgsim_status vgsim_config_hash(const vgsim_config* cfg, char* buf, size_t len);
VGSIM_API void vgsim_config_free(vgsim_config* cfg);

/* Runs one subcommand (train-map, ground, simulate, fit-gam, bench, stats)
 * and writes its files into `out-dir`. No file is written when the command
 * fails. `n_files` may be NULL. */
VGSIM_API vgsim_status vgsim_run(const char* command, const vgsim_config* cfg, size_t* n_files);

/* Writes the bundled synthetic study into `dir`. */
VGSIM_API vgsim_status vgsim_make_fixture(const char* dir, uint64_t seed);

/* ---- embedding spaces ---- */

typedef struct vgsim_space vgsim_space;

VGSIM_API vgsim_status vgsim_space_load(const char* path, vgsim_space** out);
VGSIM_API size_t vgsim_space_dim(const vgsim_space* space);
VGSIM_API size_t vgsim_space_size(const vgsim_space* space);
/* Copies the word's vector into `buf` (length `len` >= dim). */
VGSIM_API vgsim_status vgsim_space_vector(const vgsim_space* space, const char* word, double* buf, size_t len);
VGSIM_API vgsim_status vgsim_space_cosine(const vgsim_space* space, const char* a, const char* b, double* out);
VGSIM_API void vgsim_space_free(vgsim_space* space);

/* ---- linear maps (cross-modal maps and grounding alignments) ---- */

typedef struct vgsim_map vgsim_map;

VGSIM_API vgsim_status vgsim_map_load(const char* path, vgsim_map** out);
VGSIM_API size_t vgsim_map_d_in(const vgsim_map* map);
VGSIM_API size_t vgsim_map_d_out(const vgsim_map* map);
/* y = x * M with x of length d_in and y of length d_out. */
VGSIM_API vgsim_status vgsim_map_apply(const vgsim_map* map, const double* x, size_t n_in, double* y, size_t n_out);
VGSIM_API void vgsim_map_free(vgsim_map* map);

/* ---- statistics ---- */

VGSIM_API vgsim_status vgsim_sign_test(uint64_t successes, uint64_t n, double* p_two_sided);
VGSIM_API vgsim_status vgsim_binomial_test(uint64_t successes, uint64_t n, double p0, double* two_sided,
                                           double* greater, double* less);
/* Unweighted mean of five cell percentages and its absolute distance from
 * the participant mean. */
VGSIM_API vgsim_status vgsim_cell_report(const double cells[VGSIM_CELL_COUNT], double participant_mean,
                                         double* mean, double* delta);

#ifdef __cplusplus
}
#endif

#endif /* VGSIM_VGSIM_H_ */
