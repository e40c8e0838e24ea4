#ifndef NATURAL_LEARNING_H
#define NATURAL_LEARNING_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Opaque labeled dataset.
 */
typedef struct NlDataset NlDataset;

/*
 Opaque trained model.
 */
typedef struct NlModel NlModel;

/*
 Status code returned by every fallible function.
 */
typedef int32_t NlStatus;

#define NL_OK 0

/*
 A required pointer argument was null.
 */
#define NL_ERR_NULL_POINTER 1

/*
 An argument was out of range or inconsistent with the model.
 */
#define NL_ERR_INVALID_ARGUMENT 2

/*
 Input data could not be parsed or violates dataset requirements.
 */
#define NL_ERR_DATA 3

/*
 Training found no usable prototype pair.
 */
#define NL_ERR_TRAINING 4

#define NL_ERR_IO 5

/*
 A model document is malformed or unsupported.
 */
#define NL_ERR_MODEL 6

/*
 The library panicked; the call had no effect on its outputs.
 */
#define NL_ERR_PANIC 7

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *nl_version(void);

/*
 Message for the most recent failed call on this thread, or null after
 a successful call. Valid until the next library call on this thread.
 */
const char *nl_last_error_message(void);

/*
 Builds a dataset from `n * p` row-major values and `n` labels in {0, 1}.

 # Safety
 `values` must point to `n * p` doubles and `labels` to `n` bytes.
 */
NlStatus nl_dataset_new(const double *values,
                        size_t n,
                        size_t p,
                        const uint8_t *labels,
                        struct NlDataset **out);

/*
 Loads a CSV with a header row. `label_column` is a header name or a
 0-based index; null selects the last column.

 # Safety
 `path` and a non-null `label_column` must be NUL-terminated strings.
 */
NlStatus nl_dataset_load_csv(const char *path, const char *label_column, struct NlDataset **out);

/*
 Number of samples, or 0 for a null handle.

 # Safety
 `ds` must be null or a live dataset handle.
 */
size_t nl_dataset_n(const struct NlDataset *ds);

/*
 Number of features, or 0 for a null handle.

 # Safety
 `ds` must be null or a live dataset handle.
 */
size_t nl_dataset_p(const struct NlDataset *ds);

/*
 # Safety
 `ds` must be null or a handle not yet freed.
 */
void nl_dataset_free(struct NlDataset *ds);

/*
 Trains a model. `threads == 0` uses all available cores. Exact neighbor
 search is used up to 2000 samples and hashing above that.

 # Safety
 `ds` must be a live dataset handle and `out` writable.
 */
NlStatus nl_train(const struct NlDataset *ds,
                  uint64_t seed,
                  size_t threads,
                  bool scale,
                  struct NlModel **out);

/*
 Parses a model from its JSON text.

 # Safety
 `json` must be a NUL-terminated string and `out` writable.
 */
NlStatus nl_model_from_json(const char *json, struct NlModel **out);

/*
 # Safety
 `path` must be a NUL-terminated string and `out` writable.
 */
NlStatus nl_model_load(const char *path, struct NlModel **out);

/*
 # Safety
 `model` must be a live handle and `path` a NUL-terminated string.
 */
NlStatus nl_model_save(const struct NlModel *model, const char *path);

/*
 Serializes the model to canonical JSON. Release the string with
 `nl_string_free`.

 # Safety
 `model` must be a live handle and `out` writable.
 */
NlStatus nl_model_to_json(const struct NlModel *model, char **out);

/*
 # Safety
 `s` must be null or a string returned by this library and not yet freed.
 */
void nl_string_free(char *s);

/*
 Classifies one row. `len` is either the training width or the number
 of model features (values already restricted, in index order). The
 distance outputs may be null.

 # Safety
 `row` must point to `len` doubles; non-null outputs must be writable.
 */
NlStatus nl_model_predict(const struct NlModel *model,
                          const double *row,
                          size_t len,
                          uint8_t *out_label,
                          double *out_d_same,
                          double *out_d_opposite);

/*
 Classifies `n` row-major rows of width `p` into `out_labels[n]`.

 # Safety
 `values` must point to `n * p` doubles and `out_labels` to `n` bytes.
 */
NlStatus nl_model_predict_batch(const struct NlModel *model,
                                const double *values,
                                size_t n,
                                size_t p,
                                uint8_t *out_labels);

/*
 Number of features the model compares, or 0 for a null handle.

 # Safety
 `model` must be null or a live handle.
 */
size_t nl_model_num_features(const struct NlModel *model);

/*
 Training-schema index of the `k`-th model feature.

 # Safety
 `model` must be a live handle and `out` writable.
 */
NlStatus nl_model_feature_index(const struct NlModel *model, size_t k, size_t *out);

/*
 Training-set sample ids of the `same` and `opposite` prototypes.

 # Safety
 `model` must be a live handle; non-null outputs must be writable.
 */
NlStatus nl_model_prototypes(const struct NlModel *model,
                             size_t *out_same_id,
                             size_t *out_opposite_id);

/*
 Misclassified training samples, or 0 for a null handle.

 # Safety
 `model` must be null or a live handle.
 */
size_t nl_model_train_error(const struct NlModel *model);

/*
 # Safety
 `model` must be null or a handle not yet freed.
 */
void nl_model_free(struct NlModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NATURAL_LEARNING_H */
