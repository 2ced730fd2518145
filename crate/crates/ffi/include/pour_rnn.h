#ifndef POUR_RNN_H
#define POUR_RNN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PourStatus {
  POUR_STATUS_OK = 0,
  POUR_STATUS_NULL_POINTER = 1,
  POUR_STATUS_INVALID_ARGUMENT = 2,
  POUR_STATUS_DATA_ERROR = 3,
  POUR_STATUS_NUMERICAL_ERROR = 4,
  POUR_STATUS_PANIC = 5,
} PourStatus;

typedef enum PourRegime {
  POUR_REGIME_IN_DISTRIBUTION = 0,
  POUR_REGIME_OUT_OF_DISTRIBUTION = 1,
} PourRegime;

typedef enum PourLoss {
  POUR_LOSS_MSE = 0,
  POUR_LOSS_EUCLIDEAN = 1,
} PourLoss;

/**
 * Opaque dataset handle.
 */
typedef struct PourDataset PourDataset;

/**
 * Opaque model handle: parameters plus the input/target scaling.
 */
typedef struct PourModel PourModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on this thread.
 */
const char *pour_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pour_version(void);

/**
 * Liquid volume (mm³) a cylinder of `radius` × `height` mm holds when
 * tilted `tilt_deg` degrees from upright.
 *
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum PourStatus pour_retained_volume(double radius, double height, double tilt_deg, double *out);

/**
 * Measured weight (lbf) of a cup holding `volume_mm3` of liquid with
 * relative density `rho_rel`, given the empty weight `f_empty` (lbf).
 *
 * # Safety
 * `out` must be valid for a write of one `double`.
 */
enum PourStatus pour_weight_from_volume(double volume_mm3,
                                        double rho_rel,
                                        double f_empty,
                                        double *out);

/**
 * Train/validation/test sizes for `n` records.
 *
 * # Safety
 * The three output pointers must be valid for writes.
 */
enum PourStatus pour_split_sizes(size_t n,
                                 uint64_t seed,
                                 double train_ratio,
                                 double val_ratio,
                                 size_t *out_train,
                                 size_t *out_val,
                                 size_t *out_test);

/**
 * Finite-difference check of backpropagation on the built-in small
 * model. Writes the worst relative error over all four cases and whether
 * every case is below `tol`.
 *
 * # Safety
 * Output pointers must be valid for writes.
 */
enum PourStatus pour_gradcheck(uint64_t seed,
                               double h,
                               double tol,
                               double *out_max_rel_error,
                               bool *out_passed);

/**
 * Simulates `n` pouring trials of `min_len..=max_len` steps with weight
 * noise `noise` (lbf).
 *
 * # Safety
 * `out` must be valid for a write of one pointer.
 */
enum PourStatus pour_dataset_generate(size_t n,
                                      uint64_t seed,
                                      enum PourRegime regime,
                                      size_t min_len,
                                      size_t max_len,
                                      double noise,
                                      struct PourDataset **out);

/**
 * Reads a JSON Lines dataset.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for one write.
 */
enum PourStatus pour_dataset_load(const char *path, struct PourDataset **out);

/**
 * # Safety
 * `dataset` must be a live handle; `path` a NUL-terminated string.
 */
enum PourStatus pour_dataset_save(const struct PourDataset *dataset, const char *path);

/**
 * # Safety
 * `dataset` must be a live handle; `out` valid for one write.
 */
enum PourStatus pour_dataset_len(const struct PourDataset *dataset, size_t *out);

/**
 * Number of timesteps of record `index`.
 *
 * # Safety
 * `dataset` must be a live handle; `out` valid for one write.
 */
enum PourStatus pour_dataset_record_len(const struct PourDataset *dataset,
                                        size_t index,
                                        size_t *out);

/**
 * # Safety
 * `dataset` must be null or a handle not yet freed.
 */
void pour_dataset_free(struct PourDataset *dataset);

/**
 * Untrained default model (9 features, five LSTM layers, dense relu
 * head) initialized from `seed`, with no input scaling.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum PourStatus pour_model_default(uint64_t seed, struct PourModel **out);

/**
 * Trains the default model on `dataset` with the default 80/14/6 split,
 * min-max scaling, Adam and batch size 32. Writes the new model and its
 * final training loss.
 *
 * # Safety
 * `dataset` must be a live handle; output pointers valid for writes.
 */
enum PourStatus pour_model_train(const struct PourDataset *dataset,
                                 uint64_t seed,
                                 size_t epochs,
                                 double lr,
                                 enum PourLoss loss,
                                 struct PourModel **out,
                                 double *out_final_loss);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for one write.
 */
enum PourStatus pour_model_load(const char *path, struct PourModel **out);

/**
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated string.
 */
enum PourStatus pour_model_save(const struct PourModel *model, const char *path);

/**
 * # Safety
 * `model` must be a live handle; `out` valid for one write.
 */
enum PourStatus pour_model_num_params(const struct PourModel *model, size_t *out);

/**
 * Per-layer parameter counts. Writes up to `capacity` values to `buf`
 * and the layer count to `out_len`; fails if `capacity` is too small.
 *
 * # Safety
 * `buf` must be valid for `capacity` writes; `out_len` for one.
 */
enum PourStatus pour_model_layer_param_counts(const struct PourModel *model,
                                              size_t *buf,
                                              size_t capacity,
                                              size_t *out_len);

/**
 * Predicted weight series (lbf) for record `index`, one value per valid
 * timestep. Writes the series length to `out_len`; fails if `capacity`
 * is too small.
 *
 * # Safety
 * Handles must be live; `buf` valid for `capacity` writes; `out_len` for one.
 */
enum PourStatus pour_model_predict(const struct PourModel *model,
                                   const struct PourDataset *dataset,
                                   size_t index,
                                   double *buf,
                                   size_t capacity,
                                   size_t *out_len);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void pour_model_free(struct PourModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POUR_RNN_H */
