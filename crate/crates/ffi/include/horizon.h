#ifndef HORIZON_H
#define HORIZON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HzStatus {
  HZ_STATUS_OK = 0,
  HZ_STATUS_NULL_POINTER = 1,
  HZ_STATUS_INVALID_ARGUMENT = 2,
  HZ_STATUS_INVALID_UTF8 = 3,
  HZ_STATUS_PARSE = 4,
  HZ_STATUS_UNKNOWN_ID = 5,
  HZ_STATUS_SOLVER = 6,
  HZ_STATUS_COVERAGE_GAP = 7,
  HZ_STATUS_PANIC = 8,
} HzStatus;

typedef struct HzBattery HzBattery;

typedef struct HzSchedule HzSchedule;

typedef struct HzSeries HzSeries;

/**
 * Buy/sell spread and grid limits. A cap `<= 0` means `max(P_c, P_d)`.
 */
typedef struct HzMarket {
  double buy_multiplier;
  double buy_offset;
  double sell_offset;
  double grid_import_cap;
  double grid_export_cap;
} HzMarket;

typedef struct HzScheduleStep {
  double charge;
  double discharge;
  double soc;
  double grid_in;
  double grid_out;
  bool charge_mode;
  bool trade_mode;
} HzScheduleStep;

/**
 * Rolling-horizon run on synthetic forecasts from the default error model.
 */
typedef struct HzMpcOptions {
  size_t horizon_hours;
  /**
   * Also the publication interval.
   */
  size_t stride_hours;
  size_t forecast_horizon_hours;
  double uncertainty_factor;
  uint64_t seed;
} HzMpcOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *hz_last_error(void);

/**
 * Library version, static storage.
 */
const char *hz_version(void);

struct HzMarket hz_market_default(void);

/**
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
enum HzStatus hz_series_new(const double *values,
                            size_t len,
                            double step_hours,
                            struct HzSeries **out);

/**
 * # Safety
 * `series` must be a live handle or null.
 */
size_t hz_series_len(const struct HzSeries *series);

/**
 * Copies up to `capacity` values into `buffer` and stores the total length
 * in `len_out`.
 *
 * # Safety
 * `series` must be a live handle; `buffer` must hold `capacity` doubles.
 */
enum HzStatus hz_series_values(const struct HzSeries *series,
                               double *buffer,
                               size_t capacity,
                               size_t *len_out);

/**
 * # Safety
 * `series` must come from this library and not be used afterwards.
 */
void hz_series_free(struct HzSeries *series);

/**
 * Ground truth from a JSON signal spec.
 *
 * # Safety
 * `spec_json` must be a nul-terminated string; `out` must be writable.
 */
enum HzStatus hz_ground_truth_from_json(const char *spec_json, struct HzSeries **out);

/**
 * Ground truth of a shipped catalog dataset.
 *
 * # Safety
 * `dataset_id` must be a nul-terminated string; `out` must be writable.
 */
enum HzStatus hz_ground_truth_from_catalog(const char *dataset_id, struct HzSeries **out);

/**
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum HzStatus hz_revenue_proxy(const struct HzSeries *series, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum HzStatus hz_amplitude_for_target(double target,
                                      double period_hours,
                                      size_t length,
                                      double step_hours,
                                      double *out);

/**
 * # Safety
 * `spot` and `market` must be valid; both out pointers must be writable.
 */
enum HzStatus hz_split_prices(const struct HzSeries *spot,
                              const struct HzMarket *market,
                              struct HzSeries **buy_out,
                              struct HzSeries **sell_out);

/**
 * # Safety
 * `out` must be writable.
 */
enum HzStatus hz_battery_new(double capacity,
                             double p_charge_max,
                             double p_discharge_max,
                             double efficiency,
                             double soc_initial,
                             struct HzBattery **out);

/**
 * # Safety
 * `battery_id` must be a nul-terminated string; `out` must be writable.
 */
enum HzStatus hz_battery_from_catalog(const char *battery_id, struct HzBattery **out);

/**
 * # Safety
 * `battery` must come from this library and not be used afterwards.
 */
void hz_battery_free(struct HzBattery *battery);

/**
 * Solves one window exactly.
 *
 * # Safety
 * All handles must be live; `out` must be writable.
 */
enum HzStatus hz_solve_window(const struct HzSeries *buy,
                              const struct HzSeries *sell,
                              const struct HzBattery *battery,
                              const struct HzMarket *market,
                              double soc_start,
                              struct HzSchedule **out);

/**
 * # Safety
 * `schedule` must be a live handle or null.
 */
size_t hz_schedule_len(const struct HzSchedule *schedule);

/**
 * # Safety
 * `schedule` must be a live handle; `out` must be writable.
 */
enum HzStatus hz_schedule_objective(const struct HzSchedule *schedule, double *out);

/**
 * # Safety
 * `schedule` must be a live handle; `out` must be writable.
 */
enum HzStatus hz_schedule_step(const struct HzSchedule *schedule,
                               size_t index,
                               struct HzScheduleStep *out);

/**
 * # Safety
 * `schedule` must come from this library and not be used afterwards.
 */
void hz_schedule_free(struct HzSchedule *schedule);

/**
 * Realized revenue of one rolling-horizon run.
 *
 * # Safety
 * All handles must be live; `revenue_out` must be writable.
 */
enum HzStatus hz_run_mpc(const struct HzSeries *ground_truth,
                         const struct HzBattery *battery,
                         const struct HzMarket *market,
                         const struct HzMpcOptions *options,
                         double *revenue_out);

/**
 * # Safety
 * `horizons` and `revenues` must each hold `len` values; `out` must be writable.
 */
enum HzStatus hz_optimal_horizon(const size_t *horizons,
                                 const double *revenues,
                                 size_t len,
                                 size_t *out);

/**
 * # Safety
 * `horizons` and `revenues` must each hold `len` values; `out` must be writable.
 */
enum HzStatus hz_effective_horizon(const size_t *horizons,
                                   const double *revenues,
                                   size_t len,
                                   double epsilon,
                                   size_t *out);

/**
 * Stores the loss in `out` and whether it is defined (positive maximum) in
 * `defined_out`; `out` is set to NaN when undefined.
 *
 * # Safety
 * `horizons` and `revenues` must each hold `len` values; both outs must be writable.
 */
enum HzStatus hz_loss_beyond_optimum(const size_t *horizons,
                                     const double *revenues,
                                     size_t len,
                                     double *out,
                                     bool *defined_out);

/**
 * `h_eff - h_opt`.
 */
int64_t hz_uncertainty_gap(size_t h_eff, size_t h_opt);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HORIZON_H */
