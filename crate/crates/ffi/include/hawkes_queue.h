#ifndef HAWKES_QUEUE_H
#define HAWKES_QUEUE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum HqStatus {
  HQ_STATUS_OK = 0,
  HQ_STATUS_NULL_POINTER = 1,
  HQ_STATUS_INVALID_ARGUMENT = 2,
  HQ_STATUS_UNSTABLE = 3,
  HQ_STATUS_SINGULAR = 4,
  HQ_STATUS_NO_CONVERGENCE = 5,
  HQ_STATUS_NUMERIC = 6,
  HQ_STATUS_SIMULATION = 7,
  HQ_STATUS_PANIC = 8,
} HqStatus;

// Opaque queue model: Hawkes arrivals feeding a phase-type infinite-server queue.
typedef struct HqModel HqModel;

// Point estimate and its standard error from a simulation run.
typedef struct HqEstimate {
  double point;
  double std_error;
} HqEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a model from a general sub-generator `s` (n×n, row-major) and
// initial phase distribution `theta` (length n).
//
// # Safety
// `s` must point to n*n doubles, `theta` to n doubles and `out` to writable
// storage for one pointer. On success `*out` owns a model that must be
// released with [`hq_model_free`].
enum HqStatus hq_model_new(double baseline,
                           double jump,
                           double decay,
                           double initial_intensity,
                           const double *s,
                           const double *theta,
                           size_t n,
                           struct HqModel **out);

// Builds a model with Erlang(`phases`, `rate`) service.
//
// # Safety
// `out` must point to writable storage for one pointer.
enum HqStatus hq_model_new_erlang(double baseline,
                                  double jump,
                                  double decay,
                                  double initial_intensity,
                                  size_t phases,
                                  double rate,
                                  struct HqModel **out);

// Builds a model with hyper-exponential service: branch i is taken with
// probability `theta[i]` and served at `rates[i]`.
//
// # Safety
// `theta` and `rates` must each point to n doubles and `out` to writable
// storage for one pointer.
enum HqStatus hq_model_new_hyperexp(double baseline,
                                    double jump,
                                    double decay,
                                    double initial_intensity,
                                    const double *theta,
                                    const double *rates,
                                    size_t n,
                                    struct HqModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must be null or a pointer obtained from an `hq_model_new*` call
// that has not been freed yet.
void hq_model_free(struct HqModel *model);

// Number of service phases, or 0 for a null model.
//
// # Safety
// `model` must be null or a live model.
size_t hq_model_phases(const struct HqModel *model);

// Writes E[Q_t] (n), Cov[λ_t, Q_t] (n) and Cov[Q_t, Q_t] (n×n). Any output
// pointer may be null to skip it.
//
// # Safety
// `model` must be a live model and each non-null output must have room for
// the number of doubles listed above.
enum HqStatus hq_moments(const struct HqModel *model,
                         double t,
                         double *mean,
                         double *cov_lq,
                         double *cov_qq);

// Stationary counterparts of [`hq_moments`]; requires jump < decay.
//
// # Safety
// Same contract as [`hq_moments`].
enum HqStatus hq_steady_state(const struct HqModel *model,
                              double *mean,
                              double *cov_lq,
                              double *cov_qq);

// Writes Cov[Q_t, Q_{t−τ}] (n×n) for 0 ≤ τ ≤ t.
//
// # Safety
// `model` must be a live model and `out` must have room for n*n doubles.
enum HqStatus hq_autocov(const struct HqModel *model, double t, double tau, double *out);

// Joint cumulant generating function log E[exp(δ₀λ_t + Σ δᵢ Q_t,i)].
// `delta` holds n + 1 entries, the intensity coefficient first.
//
// # Safety
// `model` must be a live model, `delta` must point to n + 1 doubles and
// `out` to one writable double.
enum HqStatus hq_cgf(const struct HqModel *model, const double *delta, double t, double *out);

// Monte Carlo estimate of the total queue mean (`variance` = 0) or variance
// (`variance` ≠ 0) at time t. Results depend only on `seed` and `reps`.
//
// # Safety
// `model` must be a live model and `out` must point to one writable
// [`HqEstimate`].
enum HqStatus hq_simulate(const struct HqModel *model,
                          double t,
                          size_t reps,
                          uint64_t seed,
                          int32_t variance,
                          struct HqEstimate *out);

// Message for the most recent failure on this thread, or null if none.
// The pointer stays valid until the next failing call on the same thread.
const char *hq_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAWKES_QUEUE_H */
