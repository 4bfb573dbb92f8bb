/* Copyright 2026 The Freecat Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/* C interface to the freecat library. Every call returns an fcat_status;
   on failure fcat_last_error() holds a message for the calling thread.
   Strings returned through char** are owned by the caller and released
   with fcat_string_free. */

#ifndef FREECAT_FREECAT_H_
#define FREECAT_FREECAT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(FCAT_BUILDING)
#define FCAT_API __attribute__((visibility("default")))
#else
#define FCAT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct fcat_spec fcat_spec;

/* Values match the command-line exit codes. */
typedef enum {
  FCAT_OK = 0,
  FCAT_ERR_INVALID = 1,
  FCAT_ERR_SAMPLING = 2,
  FCAT_ERR_NUMERICAL = 3,
  FCAT_ERR_INTERNAL = 4
} fcat_status;

FCAT_API const char* fcat_last_error(void);
FCAT_API void fcat_string_free(char* s);

FCAT_API fcat_status fcat_spec_load(const char* path, fcat_spec** out);
FCAT_API fcat_status fcat_spec_parse(const char* text, size_t len, fcat_spec** out);
FCAT_API void fcat_spec_free(fcat_spec* spec);

typedef struct {
  size_t objects; /* including the unit */
  size_t generators; /* including macros */
  size_t macros;
  size_t vertices; /* arrow-graph size */
  size_t data_dim;
} fcat_counts;

FCAT_API fcat_status fcat_spec_counts(const fcat_spec* spec, fcat_counts* out);

typedef struct {
  size_t min_generators;
  size_t max_steps;
  size_t max_macro_depth;
} fcat_walk_config;

FCAT_API fcat_walk_config fcat_walk_config_default(void);

/* Newline-separated warnings, empty when the spec is fine under cfg. */
FCAT_API fcat_status fcat_spec_check(const fcat_spec* spec, const fcat_walk_config* cfg, char** warnings);

/* Fixed hyper-variables, or a fresh Gamma(1,1) draw of beta and every W
   entry per sample when hyperprior is nonzero. */
typedef struct {
  double beta;
  double w_const;
  int hyperprior;
} fcat_hyper;

FCAT_API fcat_hyper fcat_hyper_default(void);

/* Return nonzero to stop early. dot is NULL unless requested. */
typedef int (*fcat_sample_fn)(void* user, const char* signature, double logp, const char* dot);

FCAT_API fcat_status fcat_sample(const fcat_spec* spec, const fcat_walk_config* cfg, const fcat_hyper* hyper,
                                 uint64_t seed, size_t count, int want_dot, fcat_sample_fn fn, void* user);

/* Table of -log P(v, data) for every arrow-graph vertex v. */
FCAT_API fcat_status fcat_distances(const fcat_spec* spec, const fcat_hyper* hyper, uint64_t seed, char** table);

typedef struct {
  size_t epochs;
  size_t batch_size;
  size_t elbo_samples;
  double step_size;
} fcat_train_config;

FCAT_API fcat_train_config fcat_train_config_default(void);

/* Splits the CSV dataset 90/10 by seed, trains on the first part and writes
   checkpoint.json and metrics.tsv into out_dir. */
FCAT_API fcat_status fcat_train(const fcat_spec* spec, const fcat_walk_config* cfg, const fcat_train_config* train,
                                const char* dataset_path, uint64_t seed, const char* out_dir, char** summary);

/* Held-out ELBO of every dataset row and the structure posterior table. */
FCAT_API fcat_status fcat_eval(const fcat_spec* spec, const fcat_walk_config* cfg, const char* checkpoint_path,
                               const char* dataset_path, uint64_t seed, size_t posterior_samples,
                               size_t elbo_samples, char** report);

#ifdef __cplusplus
}
#endif

#endif /* FREECAT_FREECAT_H_ */
