/* C ABI for the mtnam seizure-detection models.
 *
 * Load model files produced by the `mtnam` pipeline, run single-window
 * inference on raw feature vectors, and drive the online adapter.
 *
 * Handles are opaque and owned by the library; free them with the matching
 * *_free function. Every fallible call returns mtnam_status; on failure a
 * thread-local message is available via mtnam_last_error_message() until
 * the next failing call on the same thread.
 *
 * Maintained by hand alongside crates/mtnam-ffi/src/lib.rs.
 */

#ifndef MTNAM_H
#define MTNAM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mtnam_status {
  MTNAM_OK = 0,
  MTNAM_NULL_ARGUMENT = 1,
  MTNAM_INVALID_UTF8 = 2,
  MTNAM_IO = 3,
  MTNAM_PARSE = 4,
  MTNAM_DIMENSION_MISMATCH = 5,
  MTNAM_NUMERIC = 6,
  MTNAM_INTERNAL = 7,
} mtnam_status;

/* Opaque handles. */
typedef struct MtnamNam mtnam_nam;
typedef struct MtnamMt mtnam_mt;
typedef struct MtnamAdapter mtnam_adapter;

/* One online adaptation step. */
typedef struct mtnam_adapt_result {
  double y_offline;
  double y_adjusted;
  /* 1 when the window updated a centroid, 0 when gated. */
  int32_t accepted;
  /* 0 or 1 when accepted, -1 when gated. */
  int32_t class_assigned;
} mtnam_adapt_result;

/* Library version string (static storage). */
const char *mtnam_version(void);

/* Message for the most recent error on this thread. */
const char *mtnam_last_error_message(void);

/* --- additive (teacher) model ------------------------------------------ */

mtnam_status mtnam_nam_load(const char *path, mtnam_nam **out);
void mtnam_nam_free(mtnam_nam *handle);

/* Number of input features; 0 for NULL. */
size_t mtnam_nam_num_features(const mtnam_nam *handle);

/* Seizure probability for one window of raw (unscaled) features; the
 * model's embedded scaler is applied first. len must equal
 * mtnam_nam_num_features(). */
mtnam_status mtnam_nam_predict(const mtnam_nam *handle, const double *features,
                               size_t len, double *out_y);

/* Per-feature contribution vector (scaled space) for one raw window;
 * out_contrib must hold len doubles. Feed this to mtnam_adapter_step. */
mtnam_status mtnam_nam_contributions(const mtnam_nam *handle,
                                     const double *features, size_t len,
                                     double *out_contrib);

/* --- distilled tree model ---------------------------------------------- */

mtnam_status mtnam_mt_load(const char *path, mtnam_mt **out);
void mtnam_mt_free(mtnam_mt *handle);
size_t mtnam_mt_num_features(const mtnam_mt *handle);

/* Tree depth bound; 0 for NULL. */
size_t mtnam_mt_depth(const mtnam_mt *handle);

mtnam_status mtnam_mt_predict(const mtnam_mt *handle, const double *features,
                              size_t len, double *out_y);
mtnam_status mtnam_mt_contributions(const mtnam_mt *handle,
                                    const double *features, size_t len,
                                    double *out_contrib);

/* --- online adapter ----------------------------------------------------- */

/* Create an adapter for m features with entropy gate h0 (nats). */
mtnam_status mtnam_adapter_new(size_t m, double h0, mtnam_adapter **out);
void mtnam_adapter_free(mtnam_adapter *handle);

/* One online step: gate on prediction entropy, update the predicted class's
 * centroid with the normalized contribution vector, and return offline plus
 * adjusted predictions. */
mtnam_status mtnam_adapter_step(mtnam_adapter *handle, const double *contrib,
                                size_t len, mtnam_adapt_result *out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MTNAM_H */
