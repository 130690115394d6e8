#ifndef ROBUSTRISK_H
#define ROBUSTRISK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RrStatus {
  RR_STATUS_OK = 0,
  RR_STATUS_NULL_POINTER = 1,
  RR_STATUS_INVALID_INPUT = 2,
  RR_STATUS_SHAPE = 3,
  RR_STATUS_DOMAIN = 4,
  RR_STATUS_NOT_LIPSCHITZ = 5,
  RR_STATUS_DIVERGED = 6,
  RR_STATUS_UNSUPPORTED = 7,
  RR_STATUS_PARSE = 8,
  RR_STATUS_IO = 9,
  RR_STATUS_PANIC = 10,
} RrStatus;

typedef enum RrLossKind {
  RR_LOSS_KIND_LAD = 0,
  RR_LOSS_KIND_HUBER = 1,
  RR_LOSS_KIND_CAUCHY = 2,
  RR_LOSS_KIND_TUKEY = 3,
  RR_LOSS_KIND_LEAST_SQUARES = 4,
} RrLossKind;

/**
 * Opaque dataset handle.
 */
typedef struct RrDataset RrDataset;

/**
 * Opaque network handle.
 */
typedef struct RrNetwork RrNetwork;

/**
 * A loss and its scale `k` (ignored by LAD and least squares). `kind`
 * holds an `RrLossKind` value; it is a plain integer so that out-of-range
 * values from C are rejected instead of being undefined behavior.
 */
typedef struct RrLoss {
  uint32_t kind;
  double scale;
} RrLoss;

/**
 * Log-normal contamination model; see `ContaminationConfig`.
 */
typedef struct RrContamination {
  double sigma;
  double corruption_level;
  double gamma;
  double noise_std;
} RrContamination;

/**
 * Projected subgradient descent settings. `batch_size = 0` means full
 * batch; `init_scale < 0` selects the default `ball_radius / sqrt(width)`.
 */
typedef struct RrTrainOptions {
  double step_size;
  size_t iterations;
  size_t batch_size;
  double init_scale;
  size_t restarts;
  uint64_t seed;
} RrTrainOptions;

typedef struct RrBoundInputs {
  double empirical_risk;
  double oracle_population_risk;
  double oracle_empirical_risk;
  double c_h;
  double c_f;
  double w_f;
  double s_x;
  double s_y_given_x;
  size_t n;
  double t;
  double b;
  size_t l;
  double a_constant;
} RrBoundInputs;

/**
 * Bounds whose preconditions fail are reported as NaN.
 */
typedef struct RrBoundReport {
  double theorem1_rhs;
  double corollary2_rhs;
  double theorem3_first_rhs;
  double theorem3_second_rhs;
  bool theorem3_second_valid;
} RrBoundReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty after a success).
 * The pointer stays valid until the next call on the same thread.
 */
const char *rr_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed, or be null.
 */
void rr_string_free(char *s);

/**
 * Parses `lad`, `huber:k`, `cauchy:k`, `tukey:k` or `ls`; the scale may be
 * omitted for its default.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum RrStatus rr_loss_parse(const char *text, struct RrLoss *out);

/**
 * `h(residual)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RrStatus rr_loss_eval(struct RrLoss loss, double residual, double *out);

/**
 * An element of the subdifferential of `h` at `residual`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RrStatus rr_loss_subgradient(struct RrLoss loss, double residual, double *out);

/**
 * Lipschitz constant `c_h`; `RR_STATUS_NOT_LIPSCHITZ` for least squares.
 *
 * # Safety
 * `out` must be writable.
 */
enum RrStatus rr_loss_lipschitz_constant(struct RrLoss loss, double *out);

/**
 * All-zero network for architecture `d:h1,h2,...` in the ball of radius
 * `ball_radius`.
 *
 * # Safety
 * `arch` must be a NUL-terminated string and `out` writable.
 */
enum RrStatus rr_network_zeros(const char *arch, double ball_radius, struct RrNetwork **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum RrStatus rr_network_from_json(const char *json, struct RrNetwork **out);

/**
 * Serializes the network; free the result with [`rr_string_free`].
 *
 * # Safety
 * `net` must be a live handle and `out` writable.
 */
enum RrStatus rr_network_to_json(const struct RrNetwork *net, char **out);

/**
 * Scalar output `f_Θ(x)` for an input of length `len`.
 *
 * # Safety
 * `net` must be a live handle, `x` must point to `len` doubles and `out`
 * must be writable.
 */
enum RrStatus rr_network_forward(const struct RrNetwork *net,
                                 const double *x,
                                 size_t len,
                                 double *out);

/**
 * Projects the weights onto the ball in place.
 *
 * # Safety
 * `net` must be a live handle.
 */
enum RrStatus rr_network_project(struct RrNetwork *net);

/**
 * `max_j ‖Θ^j‖_F`.
 *
 * # Safety
 * `net` must be a live handle and `out` writable.
 */
enum RrStatus rr_network_max_layer_norm(const struct RrNetwork *net, double *out);

/**
 * # Safety
 * `net` must be a handle from this library that has not been freed, or
 * null.
 */
void rr_network_free(struct RrNetwork *net);

/**
 * Samples `n` rows with `y = f*(x) + noise`, where `oracle` plays `f*` and
 * must lie in its ball.
 *
 * # Safety
 * `cfg` and `oracle` must be valid, `out` writable.
 */
enum RrStatus rr_dataset_sample(const struct RrContamination *cfg,
                                const struct RrNetwork *oracle,
                                size_t n,
                                uint64_t seed,
                                struct RrDataset **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum RrStatus rr_dataset_load_csv(const char *path, struct RrDataset **out);

/**
 * # Safety
 * `data` must be a live handle and `path` a NUL-terminated string.
 */
enum RrStatus rr_dataset_save_csv(const struct RrDataset *data, const char *path);

/**
 * Number of rows, or 0 for a null handle.
 *
 * # Safety
 * `data` must be a live handle or null.
 */
size_t rr_dataset_len(const struct RrDataset *data);

/**
 * Input dimension, or 0 for a null handle.
 *
 * # Safety
 * `data` must be a live handle or null.
 */
size_t rr_dataset_dim(const struct RrDataset *data);

/**
 * # Safety
 * `data` must be a handle from this library that has not been freed, or
 * null.
 */
void rr_dataset_free(struct RrDataset *data);

/**
 * Library defaults.
 */
struct RrTrainOptions rr_train_options_default(void);

/**
 * Trains a network of architecture `arch` in the ball of radius
 * `ball_radius`; writes the best iterate and its empirical risk.
 *
 * # Safety
 * Pointers must be valid; `opts` may be null for the defaults.
 */
enum RrStatus rr_train(const struct RrDataset *data,
                       struct RrLoss loss,
                       const char *arch,
                       double ball_radius,
                       const struct RrTrainOptions *opts,
                       struct RrNetwork **out_net,
                       double *out_risk);

/**
 * `3 b^{l+1} √(l+1) s_x / √n`.
 */
double rr_rademacher_upper_bound(double b, size_t l, double s_x, size_t n);

/**
 * `4 b^{l+1} l s_x`.
 */
double rr_envelope_upper_bound(double b, size_t l, double s_x);

/**
 * `sqrt(mean ‖x_i‖²)` of a dataset.
 *
 * # Safety
 * `data` must be a live handle and `out` writable.
 */
enum RrStatus rr_estimate_s_x(const struct RrDataset *data, double *out);

/**
 * # Safety
 * `inputs` must be valid and `out` writable.
 */
enum RrStatus rr_bound_report(const struct RrBoundInputs *inputs, struct RrBoundReport *out);

/**
 * The constant `a` used by the large-sample bounds.
 */
double rr_default_a_constant(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUSTRISK_H */
