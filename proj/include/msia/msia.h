// Copyright 2026 The msia-matte Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MSIA_MSIA_H
#define MSIA_MSIA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(MSIA_BUILDING_LIBRARY)
#define MSIA_API __attribute__((visibility("default")))
#else
#define MSIA_API
#endif

typedef enum msia_status {
    MSIA_OK = 0,
    MSIA_ERR_INVALID_ARGUMENT = 1,
    MSIA_ERR_CONFIG = 2,
    MSIA_ERR_IO = 3,
    MSIA_ERR_SHAPE = 4,
    MSIA_ERR_CHECKPOINT = 5,
    MSIA_ERR_TRAINING = 6,
    MSIA_ERR_INTERNAL = 7
} msia_status;

MSIA_API const char* msia_version(void);
MSIA_API const char* msia_status_name(msia_status status);
/* Message of the last failed call on this thread ("" if none). */
MSIA_API const char* msia_last_error(void);

/* Line-oriented progress sink; `line` is only valid during the call. */
typedef void (*msia_progress_fn)(const char* line, void* user);

/* ---- configuration ---------------------------------------------------- */

typedef struct msia_config msia_config;

MSIA_API msia_status msia_config_create(msia_config** out);
/* Parses a "key = value" file; unknown keys fail with MSIA_ERR_CONFIG. */
MSIA_API msia_status msia_config_load(const char* path, msia_config** out);
MSIA_API msia_status msia_config_set(msia_config* config, const char* key, const char* value);
/* Copies the value (NUL-terminated) into buf when it fits; *needed receives
 * the required size including the terminator. */
MSIA_API msia_status msia_config_get(const msia_config* config, const char* key, char* buf, size_t buf_size,
                                     size_t* needed);
/* Whole configuration in file syntax, same buffer protocol as msia_config_get. */
MSIA_API msia_status msia_config_to_text(const msia_config* config, char* buf, size_t buf_size, size_t* needed);
MSIA_API msia_status msia_config_validate(const msia_config* config);
MSIA_API void msia_config_destroy(msia_config* config);

/* ---- run results ------------------------------------------------------ */

typedef struct msia_run msia_run;

MSIA_API const char* msia_run_summary(const msia_run* run);
MSIA_API size_t msia_run_output_count(const msia_run* run);
MSIA_API const char* msia_run_output(const msia_run* run, size_t index);
MSIA_API void msia_run_destroy(msia_run* run);

/* ---- pipelines -------------------------------------------------------- */

/* Renders composites for config.split into config.data_dir. With
 * generate_shapes != 0 a synthetic foreground/alpha/background set is drawn
 * first (shape_* keys); otherwise fg_dir/alpha_dir/bg_dir are used. On any
 * record failure no manifest is written and MSIA_ERR_IO is returned; the
 * failure report path is then the run's only output. */
MSIA_API msia_status msia_synth(const msia_config* config, int generate_shapes, msia_run** out);

MSIA_API msia_status msia_train(const msia_config* config, msia_progress_fn progress, void* user, msia_run** out);

/* Scores predictions against config.test_manifest. Exactly one of
 * checkpoint_path (run inference) and predictions_dir (read <id>.png files)
 * must be non-NULL. The JSON report is written to report_path, or
 * <output_dir>/report.json when NULL. */
MSIA_API msia_status msia_eval(const msia_config* config, const char* checkpoint_path, const char* predictions_dir,
                               const char* report_path, int allow_missing, msia_run** out);

MSIA_API msia_status msia_ablate(const msia_config* config, msia_progress_fn progress, void* user, msia_run** out);

/* Renders the metric table for one or more JSON reports; bar charts are
 * written to plot_dir when it is non-NULL. */
MSIA_API msia_status msia_report(const char* const* report_paths, size_t count, const char* plot_dir, msia_run** out);

/* Writes an 8-bit alpha PNG at the input's resolution. expected_variant and
 * preview_path may be NULL. */
MSIA_API msia_status msia_predict_file(const char* checkpoint_path, const char* image_path, const char* output_path,
                                       const char* expected_variant, const char* preview_path);

/* ---- models ----------------------------------------------------------- */

typedef struct msia_model msia_model;

/* Fresh network from the config's profile, variant and seed. */
MSIA_API msia_status msia_model_create(const msia_config* config, msia_model** out);
MSIA_API msia_status msia_model_load(const char* checkpoint_path, msia_model** out);
MSIA_API msia_status msia_model_save(const msia_model* model, const char* checkpoint_path);
MSIA_API size_t msia_model_parameter_count(const msia_model* model);
MSIA_API const char* msia_model_variant(const msia_model* model);
/* rgb: height*width*3 interleaved floats in [0,1]; alpha: height*width floats. */
MSIA_API msia_status msia_model_predict(msia_model* model, const float* rgb, int height, int width, float* alpha);
MSIA_API void msia_model_destroy(msia_model* model);

#ifdef __cplusplus
}
#endif

#endif /* MSIA_MSIA_H */
