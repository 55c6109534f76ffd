#ifndef ROADCAST_H
#define ROADCAST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of doubles in the lag array: five (volume, speed) pairs, oldest
 * first, raw units (vehicles/hour and km/h).
 */
#define RC_LAG_VALUES 10

/**
 * Result of an FFI call.
 */
typedef enum {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_ARGUMENT = 1,
  RC_STATUS_INVALID_ARGUMENT = 2,
  RC_STATUS_IO_ERROR = 3,
  RC_STATUS_FORMAT_ERROR = 4,
  RC_STATUS_DIMENSION_ERROR = 5,
  RC_STATUS_INTERNAL_ERROR = 6,
} RcStatus;

/**
 * Opaque predictor handle: a loaded checkpoint (weights, layer dims,
 * feature encoding, and the normalization statistics of its training
 * split).
 */
typedef struct RcPredictor RcPredictor;

/**
 * Calendar and road-state context of the interval to predict.
 *
 * `holiday`: 1 calendar holiday, 2 weekend holiday, 3 not a holiday.
 * `weather`: 1 rainy, 2 sunny, 3 snowy. Flags are 0/1.
 */
typedef struct {
  /**
   * 1-12.
   */
  int32_t month;
  /**
   * 1-31.
   */
  int32_t day;
  /**
   * 1 spring .. 4 winter.
   */
  int32_t season;
  /**
   * 1 Monday .. 7 Sunday.
   */
  int32_t day_of_week;
  /**
   * Which 5-minute interval of the day, 1-288.
   */
  int32_t hour288;
  /**
   * 1-24.
   */
  int32_t hour;
  int32_t is_7_21;
  int32_t is_day;
  int32_t holiday;
  int32_t weather;
  int32_t one_way;
  int32_t double_capacity;
} RcCalendar;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. The pointer stays
 * valid until the next `rc_*` call on the same thread.
 */
const char *rc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rc_version(void);

/**
 * Loads a checkpoint file (JSON produced by `roadcast train`) into a new
 * predictor. On success writes the handle to `out`.
 *
 * # Safety
 * `path` must point to a NUL-terminated string; `out` must be a valid
 * pointer. The returned handle must be released with [`rc_predictor_free`].
 */
RcStatus rc_predictor_load(const char *path, RcPredictor **out);

/**
 * Releases a predictor handle. Null is a no-op.
 *
 * # Safety
 * `p` must be null or a handle returned by [`rc_predictor_load`] that has
 * not been freed yet.
 */
void rc_predictor_free(RcPredictor *p);

/**
 * Total model input width (10 lag variables plus the exogenous vector):
 * 34 with cyclic encoding, 45 with one-hot. Returns 0 on a null handle.
 *
 * # Safety
 * `p` must be null or a live handle from [`rc_predictor_load`].
 */
size_t rc_predictor_input_dim(const RcPredictor *p);

/**
 * Series interval of the model in minutes (5, 15, or 30); 0 on null.
 *
 * # Safety
 * `p` must be null or a live handle from [`rc_predictor_load`].
 */
uint32_t rc_predictor_interval_minutes(const RcPredictor *p);

/**
 * 1 when the checkpoint is the attention variant, 0 for the plain LSTM,
 * -1 on a null handle.
 *
 * # Safety
 * `p` must be null or a live handle from [`rc_predictor_load`].
 */
int32_t rc_predictor_is_attention(const RcPredictor *p);

/**
 * Predicts the next interval.
 *
 * `lags` points to [`RC_LAG_VALUES`] doubles: five (volume, speed) pairs,
 * oldest first, in vehicles/hour and km/h. `reverse_volume` /
 * `reverse_speed` are the opposite direction's values at the predicted
 * interval. Outputs are denormalized vehicles/hour and km/h.
 *
 * # Safety
 * `p` must be a live handle; `lags` must point to at least
 * [`RC_LAG_VALUES`] readable doubles; `calendar`, `out_volume_vph`, and
 * `out_speed_kmh` must be valid pointers.
 */
RcStatus rc_predictor_predict(const RcPredictor *p,
                              const double *lags,
                              double reverse_volume,
                              double reverse_speed,
                              const RcCalendar *calendar,
                              double *out_volume_vph,
                              double *out_speed_kmh);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ROADCAST_H */
