#ifndef URLLC_H
#define URLLC_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UrllcObjective {
  URLLC_OBJECTIVE_SUM_RATE = 0,
  URLLC_OBJECTIVE_ENERGY_EFFICIENCY = 1,
  URLLC_OBJECTIVE_MAX_MIN = 2,
  URLLC_OBJECTIVE_ZERO_FORCING = 3,
  URLLC_OBJECTIVE_MIN_POWER = 4,
} UrllcObjective;

/**
 * Result code of every fallible call.
 */
typedef enum UrllcStatus {
  URLLC_STATUS_OK = 0,
  URLLC_STATUS_NULL_POINTER = 1,
  URLLC_STATUS_INVALID_ARGUMENT = 2,
  URLLC_STATUS_DOMAIN = 3,
  URLLC_STATUS_INFEASIBLE = 4,
  URLLC_STATUS_DEGENERATE = 5,
  URLLC_STATUS_NUMERIC = 6,
  URLLC_STATUS_SERIALIZATION = 7,
  URLLC_STATUS_PANIC = 8,
} UrllcStatus;

/**
 * Channel realization of `K` users on `N_t` antennas.
 */
typedef struct UrllcChannels UrllcChannels;

/**
 * Reliability regime built from `(ε, n, D)`.
 */
typedef struct UrllcRegime UrllcRegime;

/**
 * Optimized downlink design.
 */
typedef struct UrllcSolution UrllcSolution;

/**
 * SINR thresholds and derived quantities of a regime.
 */
typedef struct UrllcThresholds {
  double vartheta;
  /**
   * Payload rate in nats per channel use.
   */
  double r_min;
  double nu0;
  double nu2;
  double nu3;
  double nu4;
} UrllcThresholds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *urllc_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer returned by this library that has not been
 * freed yet.
 */
void urllc_string_free(char *s);

/**
 * Finite-blocklength rate `R(γ)` in nats per channel use.
 *
 * # Safety
 * `out_rate` must be a valid pointer to writable memory.
 */
enum UrllcStatus urllc_rate(double gamma, double vartheta, double *out_rate);

/**
 * Largest SINR `γ` solving `R(γ) = α`.
 *
 * # Safety
 * `out_gamma` must be a valid pointer to writable memory.
 */
enum UrllcStatus urllc_solve_rate_eq(double alpha, double vartheta, double *out_gamma);

/**
 * Builds a regime for error probability `epsilon`, blocklength `n` and
 * payload `d_bits`. With `shannon` set, the dispersion penalty is dropped.
 *
 * # Safety
 * `out_regime` must be a valid pointer to writable memory.
 */
enum UrllcStatus urllc_regime_new(double epsilon,
                                  uint32_t n,
                                  uint32_t d_bits,
                                  bool shannon,
                                  struct UrllcRegime **out_regime);

/**
 * # Safety
 * `regime` must be a live handle and `out_thresholds` writable.
 */
enum UrllcStatus urllc_regime_thresholds(const struct UrllcRegime *regime,
                                         struct UrllcThresholds *out_thresholds);

/**
 * # Safety
 * `regime` must be null or a handle from [`urllc_regime_new`] not yet freed.
 */
void urllc_regime_free(struct UrllcRegime *regime);

/**
 * Draws users uniformly in the default cell with Rayleigh fading.
 *
 * # Safety
 * `out_channels` must be a valid pointer to writable memory.
 */
enum UrllcStatus urllc_channels_sample(size_t k_users,
                                       size_t n_tx,
                                       uint64_t seed,
                                       struct UrllcChannels **out_channels);

/**
 * Builds channels from noise-normalized vectors given as separate real and
 * imaginary arrays, user-major: entry `(k, i)` sits at `k * n_tx + i`.
 *
 * # Safety
 * `re` and `im` must each point to `k_users * n_tx` readable values and
 * `out_channels` must be writable.
 */
enum UrllcStatus urllc_channels_from_normalized(size_t k_users,
                                                size_t n_tx,
                                                const double *re,
                                                const double *im,
                                                struct UrllcChannels **out_channels);

/**
 * # Safety
 * `channels` must be a live handle; the out-pointers must be writable.
 */
enum UrllcStatus urllc_channels_dims(const struct UrllcChannels *channels,
                                     size_t *out_k_users,
                                     size_t *out_n_tx);

/**
 * # Safety
 * `channels` must be null or a handle from this library not yet freed.
 */
void urllc_channels_free(struct UrllcChannels *channels);

/**
 * Runs one optimizer with default options and unit user weights split
 * evenly. Returns [`UrllcStatus::Infeasible`] when the SINR thresholds
 * cannot be met within `p_max`; the zero-forcing baseline always succeeds
 * and reports whether it met them via [`urllc_solution_meets_targets`].
 *
 * # Safety
 * `channels` and `regime` must be live handles and `out_solution` writable.
 */
enum UrllcStatus urllc_solve(const struct UrllcChannels *channels,
                             const struct UrllcRegime *regime,
                             double p_max,
                             enum UrllcObjective objective,
                             struct UrllcSolution **out_solution);

/**
 * # Safety
 * `solution` must be a live handle.
 */
size_t urllc_solution_users(const struct UrllcSolution *solution);

/**
 * Objective value; `NaN` for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
double urllc_solution_objective(const struct UrllcSolution *solution);

/**
 * Whether every user reaches the regime's SINR threshold.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
bool urllc_solution_meets_targets(const struct UrllcSolution *solution);

/**
 * Copies the per-user downlink powers into `buf`.
 *
 * # Safety
 * `solution` must be a live handle and `buf` must hold `len` writable values.
 */
enum UrllcStatus urllc_solution_powers(const struct UrllcSolution *solution,
                                       double *buf,
                                       size_t len);

/**
 * Copies the per-user SINRs into `buf`.
 *
 * # Safety
 * `solution` must be a live handle and `buf` must hold `len` writable values.
 */
enum UrllcStatus urllc_solution_sinrs(const struct UrllcSolution *solution,
                                      double *buf,
                                      size_t len);

/**
 * Copies the per-user rates into `buf`.
 *
 * # Safety
 * `solution` must be a live handle and `buf` must hold `len` writable values.
 */
enum UrllcStatus urllc_solution_rates(const struct UrllcSolution *solution,
                                      double *buf,
                                      size_t len);

/**
 * Full solution, beamformers included, as a JSON string to be released
 * with [`urllc_string_free`].
 *
 * # Safety
 * `solution` must be a live handle and `out_json` writable.
 */
enum UrllcStatus urllc_solution_to_json(const struct UrllcSolution *solution, char **out_json);

/**
 * # Safety
 * `solution` must be null or a handle from [`urllc_solve`] not yet freed.
 */
void urllc_solution_free(struct UrllcSolution *solution);

/**
 * Monte Carlo run of a JSON experiment configuration. The summary comes
 * back as JSON and must be released with [`urllc_string_free`].
 * `workers = 0` uses every core.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out_summary` writable.
 */
enum UrllcStatus urllc_monte_carlo(const char *config_json, size_t workers, char **out_summary);

/**
 * Message of the last failed call on this thread, or null if it succeeded.
 *
 * The string is owned by the caller and must be released with
 * [`urllc_string_free`](crate::urllc_string_free).
 */
char *urllc_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* URLLC_H */
