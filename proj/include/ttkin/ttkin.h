/*
 * Copyright 2026 The ttkin Authors
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
#ifndef TTKIN_TTKIN_H_
#define TTKIN_TTKIN_H_

/*
 * C interface to the ttkin travel-time reconstruction library.
 *
 * Objects are opaque handles created and destroyed through this API. Every
 * fallible call returns a ttkin_status; on failure the message of the most
 * recent error on the calling thread is available from ttkin_last_error().
 * Strings returned through char** parameters are owned by the caller and
 * released with ttkin_string_free().
 */

#include <stddef.h>

#if defined(_WIN32)
#define TTKIN_API __declspec(dllexport)
#else
#define TTKIN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ttkin_status {
  TTKIN_OK = 0,
  TTKIN_INVALID_ARGUMENT = 1,
  TTKIN_DOMAIN = 2,
  TTKIN_POSITIVITY = 3,
  TTKIN_STENCIL = 4,
  TTKIN_DEFINITENESS = 5,
  TTKIN_PRECONDITION = 6,
  TTKIN_DEGENERATE_BOUNDARY = 7,
  TTKIN_UNREACHABLE = 8,
  TTKIN_INSUFFICIENT_SOURCES = 9,
  TTKIN_GENERICITY = 10,
  TTKIN_FIELD_FAILURE = 11,
  TTKIN_PARAMETER = 12,
  TTKIN_PARAMETRIZATION = 13,
  TTKIN_GEOMETRY = 14,
  TTKIN_DIVERGENCE = 15,
  TTKIN_INSTABILITY = 16,
  TTKIN_DEGENERATE_SPEED = 17,
  TTKIN_PARSE = 18,
  TTKIN_VERSION_MISMATCH = 19,
  TTKIN_UNAVAILABLE = 20,
  TTKIN_IO = 21,
  TTKIN_VARIANCE_MISMATCH = 22,
  TTKIN_INTERNAL = 99
} ttkin_status;

typedef struct ttkin_config ttkin_config;
typedef struct ttkin_dataset ttkin_dataset;
typedef struct ttkin_result ttkin_result;

/* Synthesis overrides; zero fields keep the phantom's value. */
typedef struct ttkin_synthesis_overrides {
  int sources_per_node;
  double source_radius;
  double fmm_h;
  double dt;
} ttkin_synthesis_overrides;

TTKIN_API const char* ttkin_version(void);
TTKIN_API const char* ttkin_status_name(ttkin_status status);
/* Message of the last failed call on this thread ("" if none). */
TTKIN_API const char* ttkin_last_error(void);
TTKIN_API void ttkin_string_free(char* s);

/* Built-in phantoms. */
TTKIN_API int ttkin_phantom_count(void);
TTKIN_API const char* ttkin_phantom_name(int index);

/* Solver configuration. A NULL phantom gives library defaults, otherwise
 * the phantom's tuned settings. */
TTKIN_API ttkin_status ttkin_config_create(const char* phantom, ttkin_config** out);
TTKIN_API void ttkin_config_destroy(ttkin_config* config);
/* Merges a JSON object of solver settings; unknown keys are a parse error. */
TTKIN_API ttkin_status ttkin_config_update(ttkin_config* config, const char* json);
TTKIN_API ttkin_status ttkin_config_to_json(const ttkin_config* config, char** out);
/* Worker threads (0 = hardware concurrency). Results do not depend on it. */
TTKIN_API ttkin_status ttkin_config_set_threads(ttkin_config* config, unsigned threads);

/* Datasets. */
TTKIN_API ttkin_status ttkin_synthesize(const char* phantom, const ttkin_synthesis_overrides* overrides,
                                        unsigned threads, ttkin_dataset** out);
TTKIN_API ttkin_status ttkin_dataset_read(const char* path, ttkin_dataset** out);
TTKIN_API ttkin_status ttkin_dataset_write(const ttkin_dataset* dataset, const char* path);
TTKIN_API void ttkin_dataset_destroy(ttkin_dataset* dataset);
TTKIN_API ttkin_status ttkin_dataset_info(const ttkin_dataset* dataset, int* n, int* boundary_nodes,
                                          size_t* valid_nodes);
/* Phantom id recorded at synthesis time, or NULL. Owned by the dataset. */
TTKIN_API const char* ttkin_dataset_phantom(const ttkin_dataset* dataset);
/* Schema and invariant checks. *ok is 1 when the dataset is consistent;
 * *report receives a JSON object with the individual checks and issues. */
TTKIN_API ttkin_status ttkin_validate(const ttkin_dataset* dataset, int* ok, char** report);

/* Reconstruction. These return TTKIN_OK whenever a report was produced;
 * stage failures are recorded in the result. */
TTKIN_API ttkin_status ttkin_reconstruct(const ttkin_dataset* dataset, const ttkin_config* config,
                                         ttkin_result** out);
TTKIN_API ttkin_status ttkin_roundtrip(const char* phantom, const ttkin_synthesis_overrides* overrides,
                                       const ttkin_config* config, ttkin_result** out);
TTKIN_API void ttkin_result_destroy(ttkin_result* result);
TTKIN_API int ttkin_result_passed(const ttkin_result* result);
/* TTKIN_OK, or the code of the stage that failed. */
TTKIN_API ttkin_status ttkin_result_stage_status(const ttkin_result* result);
TTKIN_API ttkin_status ttkin_result_report(const ttkin_result* result, char** out);
/* Writes a per-node CSV of one field: gamma, rho, v, jacobian, metric,
 * condition, truth-gamma, truth-rho. */
TTKIN_API ttkin_status ttkin_result_dump(const ttkin_result* result, const char* field, const char* path);
/* Comma-separated list of field names accepted by ttkin_result_dump. */
TTKIN_API const char* ttkin_dump_fields(void);

#ifdef __cplusplus
}
#endif

#endif  // TTKIN_TTKIN_H_
