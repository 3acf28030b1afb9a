#ifndef PNSGD_PRIVACY_H
#define PNSGD_PRIVACY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdint.h>

typedef enum PnsgdStatus {
  PNSGD_STATUS_OK = 0,
  PNSGD_STATUS_NULL_POINTER = 1,
  PNSGD_STATUS_DOMAIN = 2,
  PNSGD_STATUS_INDEX_OUT_OF_RANGE = 3,
  PNSGD_STATUS_GEOMETRY_MISMATCH = 4,
  PNSGD_STATUS_NON_CONVERGENCE = 5,
  PNSGD_STATUS_QUADRATURE = 6,
  PNSGD_STATUS_DIMENSION_MISMATCH = 7,
  PNSGD_STATUS_NO_ROOT = 8,
  PNSGD_STATUS_PANIC = 9,
} PnsgdStatus;

typedef enum PnsgdNoiseKind {
  PNSGD_NOISE_KIND_GAUSSIAN = 0,
  PNSGD_NOISE_KIND_LAPLACE = 1,
} PnsgdNoiseKind;

typedef enum PnsgdGeometryKind {
  // Convex set of diameter `diameter`; pairs with Gaussian noise.
  PNSGD_GEOMETRY_KIND_BALL = 0,
  // Interval `[lower, upper]`; pairs with Laplace noise.
  PNSGD_GEOMETRY_KIND_INTERVAL = 1,
} PnsgdGeometryKind;

// Noise model, loss profile and geometry of one PNSGD run.
typedef struct PnsgdMechanism PnsgdMechanism;

// A noise-decay schedule bound to a noise kind, loss profile and geometry.
typedef struct PnsgdSchedule PnsgdSchedule;

typedef struct PnsgdLossProfile {
  double lipschitz;
  double smoothness;
  double strong_convexity;
  double learning_rate;
} PnsgdLossProfile;

// Fields not used by `kind` are ignored.
typedef struct PnsgdGeometry {
  enum PnsgdGeometryKind kind;
  double diameter;
  double lower;
  double upper;
} PnsgdGeometry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null after a success.
//
// The pointer stays valid until the next call into this library from the
// same thread.
const char *pnsgd_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *pnsgd_version(void);

// Gaussian upper tail `Q(t)`.
double pnsgd_q_function(double t);

// `ln Q(t)`, finite far past the underflow of `Q`.
double pnsgd_log_q(double t);

// # Safety
// `out` must be valid for writes.
enum PnsgdStatus pnsgd_theta(double gamma, double r, double *out);

// # Safety
// `out` must be valid for writes.
enum PnsgdStatus pnsgd_lambert_w0(double x, double *out);

// Limit of the shuffled bound under the fixed schedule with constant `c1`.
//
// # Safety
// `out` must be valid for writes.
enum PnsgdStatus pnsgd_delta_star_fixed(enum PnsgdNoiseKind kind,
                                        double epsilon,
                                        double c1,
                                        double *out);

// # Safety
// `profile` and `geometry` must be valid for reads, `out` for writes.
enum PnsgdStatus pnsgd_mechanism_new(enum PnsgdNoiseKind kind,
                                     double scale,
                                     const struct PnsgdLossProfile *profile,
                                     const struct PnsgdGeometry *geometry,
                                     struct PnsgdMechanism **out);

// # Safety
// `mechanism` must be null or come from [`pnsgd_mechanism_new`] and not
// have been freed.
void pnsgd_mechanism_free(struct PnsgdMechanism *mechanism);

// The pair `(A, B)` of the per-index bound `A·B^{n−i}`.
//
// # Safety
// `mechanism` must be a live handle; `out_a` and `out_b` valid for writes.
enum PnsgdStatus pnsgd_mechanism_constants(const struct PnsgdMechanism *mechanism,
                                           double epsilon,
                                           double *out_a,
                                           double *out_b);

// # Safety
// `mechanism` must be a live handle; `out` valid for writes.
enum PnsgdStatus pnsgd_mechanism_per_index_delta(const struct PnsgdMechanism *mechanism,
                                                 double epsilon,
                                                 uint64_t n,
                                                 uint64_t index,
                                                 double *out);

// # Safety
// `mechanism` must be a live handle; `out` valid for writes.
enum PnsgdStatus pnsgd_mechanism_randomly_stopped_delta(const struct PnsgdMechanism *mechanism,
                                                        double epsilon,
                                                        uint64_t n,
                                                        uint64_t index,
                                                        double *out);

// # Safety
// `mechanism` must be a live handle; `out` valid for writes.
enum PnsgdStatus pnsgd_mechanism_shuffled_delta(const struct PnsgdMechanism *mechanism,
                                                double epsilon,
                                                uint64_t n,
                                                double *out);

// Fixed schedule: one noise level per dataset size `n`.
//
// # Safety
// `profile` and `geometry` must be valid for reads, `out` for writes.
enum PnsgdStatus pnsgd_schedule_new_fixed(enum PnsgdNoiseKind kind,
                                          double c1,
                                          double c2,
                                          const struct PnsgdLossProfile *profile,
                                          const struct PnsgdGeometry *geometry,
                                          struct PnsgdSchedule **out);

// Online schedule: the `j`-th update uses the fixed-schedule level at `j^alpha`.
//
// # Safety
// `profile` and `geometry` must be valid for reads, `out` for writes.
enum PnsgdStatus pnsgd_schedule_new_online(enum PnsgdNoiseKind kind,
                                           double c1,
                                           double c2,
                                           double alpha,
                                           const struct PnsgdLossProfile *profile,
                                           const struct PnsgdGeometry *geometry,
                                           struct PnsgdSchedule **out);

// # Safety
// `schedule` must be null or a handle that has not been freed.
void pnsgd_schedule_free(struct PnsgdSchedule *schedule);

// Noise scale at dataset size `n` (fixed) or update index `n` (online).
//
// # Safety
// `schedule` must be a live handle; `out` valid for writes.
enum PnsgdStatus pnsgd_schedule_scale(const struct PnsgdSchedule *schedule,
                                      uint64_t n,
                                      double *out);

// Shuffled `δ` at size `n` under a fixed schedule.
//
// # Safety
// `schedule` must be a live handle; `out` valid for writes.
enum PnsgdStatus pnsgd_schedule_shuffled_delta(const struct PnsgdSchedule *schedule,
                                               double epsilon,
                                               uint64_t n,
                                               double *out);

// Online bound for differing index `index` after `n` updates.
//
// # Safety
// `schedule` must be a live handle; `out` valid for writes.
enum PnsgdStatus pnsgd_schedule_online_delta(const struct PnsgdSchedule *schedule,
                                             double epsilon,
                                             uint64_t n,
                                             uint64_t index,
                                             double *out);

// Lower and upper integral bounds on the `n → ∞` limit of the online bound.
//
// # Safety
// `schedule` must be a live handle; `out_lower` and `out_upper` valid for writes.
enum PnsgdStatus pnsgd_schedule_online_bracket(const struct PnsgdSchedule *schedule,
                                               double epsilon,
                                               uint64_t index,
                                               double *out_lower,
                                               double *out_upper);

// `μ` such that `μ`-GDP implies `(epsilon, delta)`-DP exactly.
//
// # Safety
// `out_mu` must be valid for writes.
enum PnsgdStatus pnsgd_dp_to_gdp(double epsilon, double delta, double *out_mu);

// # Safety
// `out_delta` must be valid for writes.
enum PnsgdStatus pnsgd_gdp_to_dp(double mu, double epsilon, double *out_delta);

// # Safety
// `out_mu` must be valid for writes.
enum PnsgdStatus pnsgd_gdp_compose(double mu, uint64_t epochs, double *out_mu);

// Rényi epsilon at `order`; may be negative.
//
// # Safety
// `out` must be valid for writes.
enum PnsgdStatus pnsgd_dp_to_rdp(double epsilon, double delta, double order, double *out);

// # Safety
// `out_epsilon` must be valid for writes.
enum PnsgdStatus pnsgd_rdp_to_dp(double order,
                                 double rdp_epsilon,
                                 double delta,
                                 double *out_epsilon);

// `epochs`-fold composition of a per-epoch guarantee through GDP; writes
// the `δ` at `epsilon_target`.
//
// # Safety
// `out_delta` must be valid for writes.
enum PnsgdStatus pnsgd_compose_gdp(double epsilon,
                                   double delta,
                                   uint64_t epochs,
                                   double epsilon_target,
                                   double *out_delta);

// `epochs`-fold composition through RDP at `order`; writes the `ε` at
// `delta_target`.
//
// # Safety
// `out_epsilon` must be valid for writes.
enum PnsgdStatus pnsgd_compose_rdp(double epsilon,
                                   double delta,
                                   uint64_t epochs,
                                   double order,
                                   double delta_target,
                                   double *out_epsilon);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PNSGD_PRIVACY_H */
