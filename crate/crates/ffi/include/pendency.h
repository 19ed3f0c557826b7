#ifndef PENDENCY_H
#define PENDENCY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum PdStatus {
  PD_STATUS_OK = 0,
  PD_STATUS_NULL_POINTER = 1,
  PD_STATUS_INVALID_UTF8 = 2,
  PD_STATUS_IO = 3,
  PD_STATUS_PARSE = 4,
  PD_STATUS_FORMAT_VERSION = 5,
  PD_STATUS_SHAPE_MISMATCH = 6,
  PD_STATUS_INVALID_ARGUMENT = 7,
  PD_STATUS_UNDEFINED_METRIC = 8,
  PD_STATUS_PANIC = 9,
} PdStatus;

// A loaded model.
typedef struct PdModel PdModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *pd_version(void);

// Copy of the last error message on this thread, or NULL if the last call
// succeeded. Release with [`pd_string_free`].
char *pd_last_error(void);

// Frees a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from [`pd_last_error`] and not be freed twice.
void pd_string_free(char *s);

// Loads a model from a JSON file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` a writable pointer.
enum PdStatus pd_model_load_file(const char *path, struct PdModel **out);

// Loads a model from a JSON string.
//
// # Safety
// `json` must be a NUL-terminated string; `out` a writable pointer.
enum PdStatus pd_model_load_json(const char *json, struct PdModel **out);

// Releases a model. NULL is ignored.
//
// # Safety
// `model` must come from a load call and not be freed twice.
void pd_model_free(struct PdModel *model);

// # Safety
// `model` must be a live handle; `out` a writable pointer.
enum PdStatus pd_model_n_features(const struct PdModel *model, size_t *out);

// # Safety
// `model` must be a live handle; `out` a writable pointer.
enum PdStatus pd_model_n_classes(const struct PdModel *model, size_t *out);

// Class probabilities for `n_rows` row-major rows of width `n_features`.
// `out` receives `n_rows * n_classes` values, row-major.
//
// # Safety
// `x` must hold `n_rows * n_features` doubles and `out` `out_len` doubles.
enum PdStatus pd_model_predict_proba(const struct PdModel *model,
                                     const double *x,
                                     size_t n_rows,
                                     size_t n_features,
                                     double *out,
                                     size_t out_len);

// Per-feature attributions of one row for `class`. Averaging models
// explain the class probability; boosted models explain the margin.
// `contributions` receives `n_features` values.
//
// # Safety
// `row` and `contributions` must hold `n_features` doubles; `base_value`
// may be NULL.
enum PdStatus pd_model_shap(const struct PdModel *model,
                            const double *row,
                            size_t n_features,
                            size_t class_,
                            double *contributions,
                            double *base_value);

// Normalized impurity importance, `n_features` values.
//
// # Safety
// `out` must hold `out_len` doubles.
enum PdStatus pd_model_importance(const struct PdModel *model, double *out, size_t out_len);

// ROC AUC of `scores` against 0/1 `labels`.
//
// # Safety
// `scores` and `labels` must hold `n` elements; `out` a writable pointer.
enum PdStatus pd_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

// Average precision of `scores` against 0/1 `labels`.
//
// # Safety
// `scores` and `labels` must hold `n` elements; `out` a writable pointer.
enum PdStatus pd_pr_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

// Mean log loss of row-major `n x n_classes` probabilities, clipped to
// `[eps, 1 - eps]`.
//
// # Safety
// `probs` must hold `n * n_classes` doubles, `labels` `n` values.
enum PdStatus pd_log_loss(const double *probs,
                          const uint32_t *labels,
                          size_t n,
                          size_t n_classes,
                          double eps,
                          double *out);

// Five-band class index for a duration in days; `ongoing != 0` ignores
// `duration_days`.
//
// # Safety
// `out` must be a writable pointer.
enum PdStatus pd_target_multiclass(int64_t duration_days, uint8_t ongoing, uint32_t *out);

// Three-year binary class index; `ongoing != 0` ignores `duration_days`.
//
// # Safety
// `out` must be a writable pointer.
enum PdStatus pd_target_binary(int64_t duration_days, uint8_t ongoing, uint32_t *out);

// Hash bucket of a `column=value` token for a power-of-two width.
//
// # Safety
// `token` must be a NUL-terminated string; `out` a writable pointer.
enum PdStatus pd_hash_bucket(const char *token, size_t width, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PENDENCY_H */
