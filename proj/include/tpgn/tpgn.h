/* Copyright 2026 The TPGN Authors.
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

/* C interface to the TPGN library.
 *
 * Every fallible call returns a tpgn_status. On failure the message is
 * available from tpgn_last_error() on the same thread until the next call.
 * Handles are opaque and owned by the caller; free them with the matching
 * *_free function (NULL is accepted).
 */

#ifndef TPGN_TPGN_H_
#define TPGN_TPGN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(TPGN_BUILDING_LIBRARY)
#define TPGN_API __attribute__((visibility("default")))
#else
#define TPGN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tpgn_status {
  TPGN_OK = 0,
  TPGN_ERR_INVALID_ARGUMENT = 1,
  TPGN_ERR_NOT_FINITE = 2,
  TPGN_ERR_IO = 3,
  TPGN_ERR_FORMAT = 4,
  TPGN_ERR_CONFIG = 5,
  TPGN_ERR_NUMERIC = 6,
  TPGN_ERR_INTERNAL = 7
} tpgn_status;

typedef struct tpgn_config tpgn_config;
typedef struct tpgn_model tpgn_model;

/* Receives one NUL-terminated line of output (no trailing newline). */
typedef void (*tpgn_line_fn)(const char* line, void* user);

TPGN_API const char* tpgn_last_error(void);
TPGN_API const char* tpgn_version(void);
TPGN_API const char* tpgn_status_name(tpgn_status status);

/* Configuration: flat key=value text, '#' comments. */
TPGN_API tpgn_status tpgn_config_load(const char* path, tpgn_config** out);
TPGN_API tpgn_status tpgn_config_parse(const char* text, tpgn_config** out);
/* Sets or replaces one key; unknown keys and bad values are rejected. */
TPGN_API tpgn_status tpgn_config_set(tpgn_config* config, const char* key,
                                     const char* value);
TPGN_API void tpgn_config_free(tpgn_config* config);

/* Writes a synthetic dataset; needs samples and seed. */
TPGN_API tpgn_status tpgn_gen_data(const tpgn_config* config, const char* out_path,
                                   size_t* n_samples);

typedef struct tpgn_train_summary {
  double final_loss;
  size_t epochs;
  double token_accuracy; /* teacher-forced, training set */
  double exact_match;    /* free-running greedy, training set */
} tpgn_train_summary;

/* Needs dataset, d, epochs and seed. Writes model.ckpt, loss.csv and
 * train.log into out_dir (last_good.ckpt on divergence). summary may be
 * NULL. */
TPGN_API tpgn_status tpgn_train(const tpgn_config* config, const char* out_dir,
                                tpgn_train_summary* summary);

TPGN_API tpgn_status tpgn_model_load(const char* path, tpgn_model** out);
TPGN_API tpgn_status tpgn_model_save(const tpgn_model* model, const char* path);
TPGN_API void tpgn_model_free(tpgn_model* model);

typedef struct tpgn_model_info {
  size_t d;
  size_t vocab_size;
  size_t feature_dim;
  size_t max_len;
  int wx_free; /* 0: tied-average decoding, 1: free Wx */
  uint64_t seed;
} tpgn_model_info;

TPGN_API tpgn_status tpgn_model_get_info(const tpgn_model* model, tpgn_model_info* info);

/* One "index<TAB>caption" line per dataset sample. sample != 0 draws words
 * from the softmax with the given seed; otherwise decoding is greedy. */
TPGN_API tpgn_status tpgn_generate(const tpgn_model* model, const char* data_path,
                                   int sample, uint64_t seed, tpgn_line_fn sink,
                                   void* user);

/* Writes conformity.csv, clusters.csv, projection.csv and summary.txt into
 * out_dir and streams the summary lines to sink (may be NULL). tags_path
 * ("word TAG" per line) may be NULL. */
TPGN_API tpgn_status tpgn_analyze(const tpgn_model* model, const char* data_path,
                                  const char* tags_path, size_t n_clusters,
                                  uint64_t seed, const char* out_dir,
                                  tpgn_line_fn sink, void* user);

/* Corpus BLEU-1..4 of greedy captions against the dataset captions. */
TPGN_API tpgn_status tpgn_eval_bleu(const tpgn_model* model, const char* data_path,
                                    double scores[4]);

typedef struct tpgn_grad_report {
  double max_relative_error;
  size_t checked;
  size_t total;
  char worst_tensor[32];
} tpgn_grad_report;

/* Finite-difference check of the analytic gradient at V=5, T=4, both Wx
 * modes. */
TPGN_API tpgn_status tpgn_grad_check(size_t d, uint64_t seed, tpgn_grad_report* report);

TPGN_API tpgn_status tpgn_tpr_demo(tpgn_line_fn sink, void* user);

#ifdef __cplusplus
}
#endif

#endif /* TPGN_TPGN_H_ */
