#ifndef TUPLEWISE_H
#define TUPLEWISE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Built-in parameter-free pair kernels.
 */
enum TwKernel
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  TW_KERNEL_AUC_INDICATOR = 0,
  TW_KERNEL_AUC_HALF_TIES = 1,
  TW_KERNEL_PRODUCT = 2,
  TW_KERNEL_GINI = 3,
  TW_KERNEL_SAMPLE_VARIANCE = 4,
  TW_KERNEL_KENDALL_TAU = 5,
  TW_KERNEL_VUS = 6,
};
#ifndef __cplusplus
typedef int32_t TwKernel;
#endif // __cplusplus

/**
 * Repartitioning schemes.
 */
enum TwScheme
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  TW_SCHEME_PROP_SWOR = 0,
  TW_SCHEME_SWOR = 1,
  TW_SCHEME_PROP_SWR = 2,
  TW_SCHEME_DETERMINISTIC_SHUFFLE = 3,
};
#ifndef __cplusplus
typedef int32_t TwScheme;
#endif // __cplusplus

/**
 * Call outcome. Anything other than `TW_OK` leaves out-parameters untouched.
 */
enum TwStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  TW_STATUS_OK = 0,
  TW_STATUS_NULL_ARGUMENT = 1,
  TW_STATUS_INVALID_ARGUMENT = 2,
  TW_STATUS_DIVISIBILITY = 3,
  TW_STATUS_DIMENSION_MISMATCH = 4,
  TW_STATUS_EMPTY_SAMPLE = 5,
  TW_STATUS_BUDGET_EXCEEDED = 6,
  TW_STATUS_UNSUPPORTED = 7,
  TW_STATUS_INTERNAL = 8,
};
#ifndef __cplusplus
typedef int32_t TwStatus;
#endif // __cplusplus

/**
 * Estimation strategies with closed-form variances.
 */
enum TwStrategy
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  TW_STRATEGY_COMPLETE = 0,
  TW_STRATEGY_INCOMPLETE_SINGLE = 1,
  TW_STRATEGY_LOCAL_COMPLETE = 2,
  TW_STRATEGY_LOCAL_INCOMPLETE = 3,
  TW_STRATEGY_REPART_COMPLETE = 4,
  TW_STRATEGY_REPART_INCOMPLETE = 5,
  TW_STRATEGY_BOOTSTRAP_SINGLE = 6,
};
#ifndef __cplusplus
typedef int32_t TwStrategy;
#endif // __cplusplus

/**
 * Opaque two-sample dataset handle.
 */
typedef struct TwDataset TwDataset;

/**
 * Hoeffding variance components of a pair kernel.
 */
typedef struct {
  double sigma0_sq;
  double sigma1_sq;
  double sigma2_sq;
  double sigma_sq;
} TwComponents;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static name for a status code; never null.
 */
const char *tw_status_name(TwStatus status);

/**
 * Closed-form components of the AUC indicator under the two-atom model
 * (positives on {0, 2} with P(X=2)=q, negatives on {-1, +1} with P(Z=+1)=p).
 *
 * # Safety
 * `out` must be a valid, writable pointer.
 */
TwStatus tw_components_auc(double p, double q, TwComponents *out);

/**
 * Closed-form components of the product kernel under independent Gaussians.
 *
 * # Safety
 * `out` must be a valid, writable pointer.
 */
TwStatus tw_components_product(double mu_x,
                               double sigma_x,
                               double mu_z,
                               double sigma_z,
                               TwComponents *out);

/**
 * Exact components of any built-in pair kernel under the two-atom AUC
 * model, by enumeration of the support.
 *
 * # Safety
 * `out` must be a valid, writable pointer.
 */
TwStatus tw_components_enumerated(TwKernel kernel, double p, double q, TwComponents *out);

/**
 * True AUC U(h) = q + (1-q)(1-p) of the two-atom model.
 *
 * # Safety
 * `out` must be a valid, writable pointer.
 */
TwStatus tw_auc_mean(double p, double q, double *out);

/**
 * Closed-form variance of a strategy. `batch`/`rounds` are ignored by
 * strategies that do not use them.
 *
 * # Safety
 * `components` and `out` must be valid pointers.
 */
TwStatus tw_variance(TwStrategy strategy,
                     TwScheme scheme,
                     const TwComponents *components,
                     uint64_t n,
                     uint64_t m,
                     uint64_t workers,
                     uint64_t batch,
                     uint64_t rounds,
                     double *out);

/**
 * Total kernel evaluations consumed by a strategy.
 *
 * # Safety
 * `out` must be a valid, writable pointer.
 */
TwStatus tw_pair_budget(TwStrategy strategy,
                        uint64_t n,
                        uint64_t m,
                        uint64_t workers,
                        uint64_t batch,
                        uint64_t rounds,
                        uint64_t *out);

/**
 * Dominance gap Var(repart incomplete at (batch, rounds_incomplete)) -
 * Var(repart complete at rounds_complete) at equal pair budgets, prop-SWOR.
 *
 * # Safety
 * `components` and `out` must be valid pointers.
 */
TwStatus tw_dominance_gap(const TwComponents *components,
                          uint64_t n,
                          uint64_t m,
                          uint64_t workers,
                          uint64_t rounds_incomplete,
                          uint64_t rounds_complete,
                          uint64_t batch,
                          double *out);

/**
 * Build a dataset from row-major coordinate buffers: `xs` holds n*dim
 * doubles, `zs` holds m*dim. The buffers are copied.
 *
 * # Safety
 * `xs` and `zs` must point to `n * dim` and `m * dim` readable doubles and
 * `out` must be a valid, writable pointer.
 */
TwStatus tw_dataset_new(const double *xs,
                        uintptr_t n,
                        const double *zs,
                        uintptr_t m,
                        uintptr_t dim,
                        TwDataset **out);

/**
 * Draw an i.i.d. dataset of the two-atom AUC model, deterministic in `seed`.
 *
 * # Safety
 * `out` must be a valid, writable pointer.
 */
TwStatus tw_dataset_sample_auc(double p,
                               double q,
                               uintptr_t n,
                               uintptr_t m,
                               uint64_t seed,
                               TwDataset **out);

/**
 * Release a dataset handle; accepts null.
 *
 * # Safety
 * `ds` must be null or a pointer returned by a `tw_dataset_*` constructor,
 * not yet freed.
 */
void tw_dataset_free(TwDataset *ds);

/**
 * Sample sizes and dimension of a dataset.
 *
 * # Safety
 * `ds` must be a live dataset handle; out-pointers must be valid.
 */
TwStatus tw_dataset_shape(const TwDataset *ds, uintptr_t *n, uintptr_t *m, uintptr_t *dim);

/**
 * Complete two-sample statistic of a built-in kernel over the dataset.
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be valid.
 */
TwStatus tw_complete_two_sample(const TwDataset *ds, TwKernel kernel, double *out);

/**
 * Run the simulated master/worker estimation protocol on a dataset:
 * `rounds` repartition epochs under `scheme`, complete local statistics
 * when `batch` is 0 and `batch`-pair incomplete ones otherwise. Writes the
 * estimate and the kernel evaluations consumed.
 *
 * # Safety
 * `ds` must be a live dataset handle; out-pointers must be valid.
 */
TwStatus tw_estimate(const TwDataset *ds,
                     TwKernel kernel,
                     TwScheme scheme,
                     uintptr_t workers,
                     uint64_t rounds,
                     uint64_t batch,
                     uint64_t seed,
                     double *out_value,
                     uint64_t *out_pairs);

/**
 * Monte Carlo study of the AUC estimator on the two-atom model: `runs`
 * replications with fresh data and partitions, reduced deterministically.
 * Writes the empirical mean and unbiased variance of the estimator.
 *
 * # Safety
 * Out-pointers must be valid.
 */
TwStatus tw_monte_carlo_auc(double p,
                            double q,
                            uintptr_t n,
                            uintptr_t m,
                            TwScheme scheme,
                            uintptr_t workers,
                            uint64_t rounds,
                            uint64_t batch,
                            uint64_t runs,
                            uint64_t seed,
                            double *out_mean,
                            double *out_variance);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TUPLEWISE_H */
