/*
 * Copyright 2026 The ordhash Authors.
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

/*
 * C interface to libordhash: ranking-based (K-ary) hash functions learned
 * from attention-weighted spatial features and global features, plus code
 * indexing and retrieval evaluation.
 *
 * Objects are opaque handles created by *_load / *_train / *_generate calls
 * and released with the matching *_free. Every fallible call returns an
 * oh_status; on failure oh_last_error() describes the problem. The message
 * is thread-local and valid until the next failing call on the same thread.
 */

#ifndef ORDHASH_ORDHASH_H_
#define ORDHASH_ORDHASH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(ORDHASH_BUILDING_LIBRARY)
#define OH_API __attribute__((visibility("default")))
#else
#define OH_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum oh_status {
  OH_OK = 0,
  OH_ERR_INVALID_ARGUMENT = 1,
  OH_ERR_DIMENSION_MISMATCH = 2,
  OH_ERR_NON_FINITE = 3,
  OH_ERR_TRUNCATED = 4,
  OH_ERR_CHECKSUM = 5,
  OH_ERR_FORMAT = 6,
  OH_ERR_SAMPLING = 7,
  OH_ERR_NUMERICAL = 8,
  OH_ERR_IO = 9,
  OH_ERR_INTERNAL = 10
} oh_status;

typedef enum oh_distance {
  OH_DISTANCE_SYMBOL = 0,
  OH_DISTANCE_BINARY_EXPANSION = 1
} oh_distance;

typedef struct oh_dataset oh_dataset;
typedef struct oh_attention oh_attention;
typedef struct oh_head oh_head;
typedef struct oh_codes oh_codes;

OH_API const char* oh_version(void);
OH_API const char* oh_status_string(oh_status status);
OH_API const char* oh_last_error(void);

/* ---- datasets ---------------------------------------------------------- */

typedef struct oh_synth_options {
  size_t n_per_class;
  size_t classes;
  size_t channels; /* M */
  size_t width;    /* X */
  size_t height;   /* Y */
  double noise_sigma;
  uint64_t seed;
} oh_synth_options;

OH_API void oh_synth_options_default(oh_synth_options* options);

/* split is "train", "database" or "query". Writes base.manifest + base.feat. */
OH_API oh_status oh_synth_generate(const oh_synth_options* options, const char* split,
                                   const char* base_path);

typedef struct oh_dataset_info {
  size_t channels;
  size_t width;
  size_t height;
  size_t classes;
  size_t count;
  uint64_t checksum;
} oh_dataset_info;

OH_API oh_status oh_dataset_load(const char* base_path, oh_dataset** out);
OH_API oh_status oh_dataset_info_get(const oh_dataset* dataset, oh_dataset_info* info);
OH_API void oh_dataset_free(oh_dataset* dataset);

/* ---- attention model --------------------------------------------------- */

typedef struct oh_attention_options {
  size_t epochs;
  double lr;
  size_t batch;
  uint64_t seed;
} oh_attention_options;

OH_API void oh_attention_options_default(oh_attention_options* options);
OH_API oh_status oh_attention_train(const oh_dataset* train, const oh_attention_options* options,
                                    oh_attention** out);
/* Fraction of records whose most probable class is one of their labels. */
OH_API oh_status oh_attention_accuracy(const oh_attention* model, const oh_dataset* dataset,
                                       double* accuracy);
OH_API oh_status oh_attention_save(const oh_attention* model, const char* path);
OH_API oh_status oh_attention_load(const char* path, oh_attention** out);
/* One CSV grid per record, named <record id>.csv, under dir. */
OH_API oh_status oh_attention_dump_maps(const oh_attention* model, const oh_dataset* dataset,
                                        const char* dir);
OH_API void oh_attention_free(oh_attention* model);

/* ---- hash head --------------------------------------------------------- */

typedef struct oh_train_options {
  size_t k;
  size_t r;
  size_t iters;
  size_t batch;
  double lr;
  uint64_t seed;
  double balance;
  size_t log_every;
} oh_train_options;

typedef struct oh_train_summary {
  double initial_loss; /* mean over the first 10% of iterations */
  double final_loss;   /* mean over the last 10% of iterations */
  double last_grad_norm;
  size_t iterations;
} oh_train_summary;

OH_API void oh_train_options_default(oh_train_options* options);

/* log_csv_path may be NULL. */
OH_API oh_status oh_head_train(const oh_dataset* train, const oh_attention* attention,
                               const oh_train_options* options, const char* log_csv_path,
                               oh_head** out, oh_train_summary* summary);
/* Writes path (DOHH) and path.config when the head came from oh_head_train. */
OH_API oh_status oh_head_save(const oh_head* head, const char* path);
OH_API oh_status oh_head_load(const char* path, oh_head** out);
OH_API oh_status oh_head_shape(const oh_head* head, size_t* m, size_t* k, size_t* r);
OH_API void oh_head_free(oh_head* head);

/* ---- gradient verification --------------------------------------------- */

typedef struct oh_gradcheck_options {
  size_t channels;
  size_t width;
  size_t height;
  size_t classes;
  size_t k_min, k_max;
  size_t r_min, r_max;
  size_t draws;
  size_t pairs;
  double step;
  uint64_t seed;
} oh_gradcheck_options;

OH_API void oh_gradcheck_options_default(oh_gradcheck_options* options);
/* Writes "K,R,block,max_rel_err" rows to csv_path (may be NULL) and reports
 * the overall maximum relative error. */
OH_API oh_status oh_gradcheck(const oh_gradcheck_options* options, const char* csv_path,
                              double* max_rel_err);

/* ---- codes, search, evaluation ----------------------------------------- */

/* R = bits / log2(K). */
OH_API oh_status oh_bit_budget(size_t bits, size_t k, size_t* r);

OH_API oh_status oh_encode(const oh_head* head, const oh_attention* attention,
                           const oh_dataset* dataset, oh_codes** out);
OH_API oh_status oh_codes_save(const oh_codes* codes, const char* path);
OH_API oh_status oh_codes_load(const char* path, oh_codes** out);
OH_API oh_status oh_codes_count(const oh_codes* codes, size_t* count);
/* Copies the R symbols of code `index` into symbols[0..capacity). */
OH_API oh_status oh_codes_get(const oh_codes* codes, size_t index, uint16_t* symbols,
                              size_t capacity);
OH_API void oh_codes_free(oh_codes* codes);

/* "query_id,rank,db_id,distance" CSV of the top_n matches of every query. */
OH_API oh_status oh_search(const oh_codes* database, const oh_codes* queries, size_t top_n,
                           oh_distance distance, const char* csv_path);

typedef struct oh_eval_options {
  oh_distance distance;
  size_t map_depth; /* 0 = full ranking */
} oh_eval_options;

/* Writes map.csv, p_at.csv and pr.csv under out_dir. map may be NULL. */
OH_API oh_status oh_evaluate(const oh_codes* database, const oh_codes* queries,
                             const oh_eval_options* options, const char* out_dir, double* map);

#ifdef __cplusplus
}  /* extern "C" */
#endif

#endif /* ORDHASH_ORDHASH_H_ */
