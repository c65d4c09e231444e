#ifndef NMK_H
#define NMK_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum NmkStatus {
  NMK_STATUS_OK = 0,
  NMK_STATUS_NULL_POINTER = 1,
  NMK_STATUS_INVALID_UTF8 = 2,
  NMK_STATUS_SYNTAX = 3,
  NMK_STATUS_INVALID_ARGUMENT = 4,
  NMK_STATUS_NUMERICAL = 5,
  NMK_STATUS_BUFFER_TOO_SMALL = 6,
  NMK_STATUS_PANIC = 7,
} NmkStatus;

/*
 Closed-form `q(t)` of a two-site process.
 */
typedef struct NmkQFunction NmkQFunction;

/*
 Parsed and validated waiting-time distribution.
 */
typedef struct NmkSpec NmkSpec;

/*
 Message of the last failed call on this thread, or NULL. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *nmk_last_error(void);

/*
 Parse and validate a waiting-time expression such as `"erlang(2,1)"`.

 `dsl` must be a NUL-terminated string; `out_spec` must be writable.
 */
enum NmkStatus nmk_spec_parse(const char *dsl, struct NmkSpec **out_spec);

/*
 `spec` must come from `nmk_spec_parse` and not be freed twice. NULL is
 ignored.
 */
void nmk_spec_free(struct NmkSpec *spec);

/*
 Mean waiting time.

 `spec` must be a live handle; `out_mean` must be writable.
 */
enum NmkStatus nmk_spec_mean(const struct NmkSpec *spec, double *out_mean);

/*
 Canonical text of the spec. Writes at most `len` bytes including the NUL
 and stores the required size (including the NUL) in `needed`. Returns
 `NMK_STATUS_BUFFER_TOO_SMALL` when `len` is insufficient; `buf` may then be NULL.

 `buf` must hold `len` bytes; `needed` must be writable.
 */
enum NmkStatus nmk_spec_to_string(const struct NmkSpec *spec,
                                  char *buf,
                                  size_t len,
                                  size_t *needed);

/*
 Build `q(t)` for the two-site process driven by `spec`.

 `spec` must be a live handle; `out_q` must be writable.
 */
enum NmkStatus nmk_qfunction_new(const struct NmkSpec *spec, struct NmkQFunction **out_q);

/*
 `q` must come from `nmk_qfunction_new` and not be freed twice. NULL is
 ignored.
 */
void nmk_qfunction_free(struct NmkQFunction *q);

/*
 `q(t)`.

 `q` must be a live handle; `out_value` must be writable.
 */
enum NmkStatus nmk_q_eval(const struct NmkQFunction *q, double t, double *out_value);

/*
 Rate `γ(t) = −q'(t)/(2q(t))`. At a zero of `q` the rate is singular:
 `*is_pole` is set to 1 and `*out_value` to NaN.

 `q` must be a live handle; the out pointers must be writable.
 */
enum NmkStatus nmk_gamma_eval(const struct NmkQFunction *q,
                              double t,
                              double *out_value,
                              int *is_pole);

/*
 Memory measure `N_C` of the two-site process, with the bound on growth
 beyond the analysed horizon. `tail_bound` may be NULL.

 `spec` must be a live handle; `n_c` must be writable.
 */
enum NmkStatus nmk_n_c(const struct NmkSpec *spec,
                       double tail_tol,
                       double *n_c,
                       double *tail_bound);

/*
 Half the L1 distance between two probability vectors of length `n`.

 `p1` and `p2` must each hold `n` doubles; `out_value` must be writable.
 */
enum NmkStatus nmk_kolmogorov_distance(const double *p1,
                                       const double *p2,
                                       size_t n,
                                       double *out_value);

/*
 `N_C` of the special Erlang distributions of order `1..=n_max` at `rate`,
 written to `n_c_out[0..n_max]`.

 `n_c_out` must hold `len` doubles.
 */
enum NmkStatus nmk_erlang_sweep(uint32_t n_max,
                                double rate,
                                double tail_tol,
                                double *n_c_out,
                                size_t len);

/*
 `N_C` of `h∗h` with `h` the two-exponential mixture of weight `mus[i]` at
 rate `rate1` and `1 − mus[i]` at `rate1·ratio`, written to `n_c_out[i]`.

 `mus` and `n_c_out` must each hold `n` doubles.
 */
enum NmkStatus nmk_mixture_sweep(const double *mus,
                                 size_t n,
                                 double rate1,
                                 double ratio,
                                 double tail_tol,
                                 double *n_c_out);

/*
 Kolmogorov distance at time `t` between two-site distributions started at
 `p1` and `p2` (two doubles each) under the rate equations with `gamma1`,
 `gamma2` given in rate syntax (`const:A`, `sin:AMP,OFFSET[,OMEGA]`,
 `table:T=V,...`).

 Strings must be NUL-terminated; `p1`, `p2` must hold two doubles.
 */
enum NmkStatus nmk_dk_closed_form(const char *gamma1,
                                  const char *gamma2,
                                  const double *p1,
                                  const double *p2,
                                  double t,
                                  double *out_value);

#endif  /* NMK_H */
