// Copyright 2026 The sfd Authors
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

/*
 * C interface to the smoke/fire detection pipeline.
 *
 * Every call returns an sfd_status; on failure sfd_last_error() holds a
 * one-line description for the calling thread. Strings handed out through
 * char** parameters are owned by the caller and released with
 * sfd_string_free(). Handles are opaque and released by their _destroy
 * function; passing NULL to a _destroy function is a no-op.
 */
#ifndef SFD_H_
#define SFD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SFD_API __declspec(dllexport)
#else
#define SFD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sfd_status {
  SFD_OK = 0,
  SFD_ERR_INVALID_ARGUMENT = 1,
  SFD_ERR_IO = 2,
  SFD_ERR_FORMAT = 3,
  SFD_ERR_NUMERIC = 4,
  SFD_ERR_INTERNAL = 5
} sfd_status;

typedef struct sfd_config sfd_config;
typedef struct sfd_model sfd_model;

SFD_API const char* sfd_version(void);
SFD_API const char* sfd_status_name(sfd_status status);
SFD_API const char* sfd_last_error(void);
SFD_API void sfd_string_free(char* s);

/* Configuration. path may be NULL for the built-in defaults. */
SFD_API sfd_status sfd_config_load(const char* path, int strict, sfd_config** out);
/* Overrides are range-checked together by sfd_config_validate and by
 * every pipeline call, not one at a time. */
SFD_API sfd_status sfd_config_set(sfd_config* cfg, const char* dotted_key, const char* json_value);
SFD_API sfd_status sfd_config_validate(const sfd_config* cfg);
SFD_API sfd_status sfd_config_to_json(const sfd_config* cfg, char** out_json);
SFD_API sfd_status sfd_config_save(const sfd_config* cfg, const char* path);
SFD_API void sfd_config_destroy(sfd_config* cfg);

/* Synthetic corpus: writes <out_dir>/images/<id>.png, manifest.jsonl and
 * objects.json. shifted != 0 selects the small-object, unseen-palette
 * domain. */
typedef struct sfd_synth_params {
  int fire;
  int smoke;
  int both;
  int simple_negative;
  int complex_negative;
  int image_size;
  uint64_t seed;
  int shifted;
  const char* id_prefix; /* may be NULL */
} sfd_synth_params;

SFD_API sfd_status sfd_synth(const sfd_synth_params* params, const char* out_dir, size_t* written);

/* Stratified split into <out_dir>/train.jsonl and <out_dir>/val.jsonl.
 * warnings (optional) receives newline-separated notes. */
SFD_API sfd_status sfd_split(const char* manifest, const char* out_dir, double train_fraction,
                             uint64_t seed, char** warnings);

/* Stage 1 into run_dir (rounds/0, history.json, config.json). */
SFD_API sfd_status sfd_train(const sfd_config* cfg, const char* train_manifest,
                             const char* val_manifest, const char* run_dir,
                             double* best_val_loss);

/* Stage 2; resumes from run_dir. history_json (optional) receives the
 * final loop state. */
SFD_API sfd_status sfd_selflearn(const sfd_config* cfg, const char* train_manifest,
                                 const char* val_manifest, const char* run_dir, int max_rounds,
                                 char** history_json);

/* checkpoint may be a .sfck file or a run directory (its best round is
 * used). Either output pointer may be NULL. */
SFD_API sfd_status sfd_evaluate(const sfd_config* cfg, const char* checkpoint,
                                const char* manifest, char** report_json, char** table);

SFD_API sfd_status sfd_model_load(const char* checkpoint, sfd_model** out);
SFD_API int sfd_model_input_size(const sfd_model* model);
SFD_API sfd_status sfd_model_round(const sfd_model* model, int* round);
/* pixels: height x width x channels, row-major, values in [0,1]. */
SFD_API sfd_status sfd_model_predict(const sfd_model* model, const double* pixels, int height,
                                     int width, int channels, double out_probs[2]);
SFD_API sfd_status sfd_model_predict_file(const sfd_model* model, const char* image_path,
                                          double out_probs[2]);
SFD_API void sfd_model_destroy(sfd_model* model);

/* Splices `count` positives from the manifest against its simple
 * negatives; writes PNGs plus preview.json. */
SFD_API sfd_status sfd_augment_preview(const sfd_config* cfg, const char* manifest,
                                       const char* out_dir, int count, uint64_t seed);

/* Per-class CAM overlays for one sample (sample_id) or every positive
 * (sample_id NULL), plus cam.json with bbox, mask area and the
 * GAP-CAM residual per class. */
SFD_API sfd_status sfd_cam_overlay(const sfd_config* cfg, const char* checkpoint,
                                   const char* manifest, const char* sample_id,
                                   const char* out_dir, double alpha);

#ifdef __cplusplus
}
#endif

#endif /* SFD_H_ */
