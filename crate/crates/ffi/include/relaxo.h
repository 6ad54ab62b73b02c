#ifndef RELAXO_H
#define RELAXO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Number of values written by `relaxo_fit_profile`: narrow C1, C2, q,
// broad C1, C2, q, offset.
#define RELAXO_PROFILE_PARAMS 7

typedef enum RelaxoStatus {
  RELAXO_STATUS_OK = 0,
  RELAXO_STATUS_NULL_POINTER = 1,
  RELAXO_STATUS_VALIDATION = 2,
  RELAXO_STATUS_NUMERICAL = 3,
  RELAXO_STATUS_IO = 4,
  RELAXO_STATUS_PANIC = 5,
  RELAXO_STATUS_INVALID_UTF8 = 6,
} RelaxoStatus;

// Opaque relaxation-rate model.
typedef struct RelaxoModel RelaxoModel;

// Knee fields in tesla; NaN where a definition has no solution.
typedef struct RelaxoKnees {
  double saturation_rate;
  double twice_saturation;
  double lowest_inflection;
  double analytic_bk1;
  size_t n_inflections;
} RelaxoKnees;

typedef struct RelaxoEstimate {
  double value;
  double sd;
  size_t n_realizations;
} RelaxoEstimate;

// Stretched-exponential fit; errors are NaN when the covariance is
// unavailable.
typedef struct RelaxoDecayFit {
  double t1;
  double t1_err;
  double p;
  double p_err;
  double eps0;
  double eps0_err;
  bool converged;
} RelaxoDecayFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static, nul-terminated library version.
const char *relaxo_version(void);

// Length in bytes of the last error message on this thread, without the
// terminating nul; 0 when the last call succeeded.
size_t relaxo_last_error_length(void);

// Copies the last error message into `buf` (at most `len` bytes including
// the nul, truncated if needed). Returns the full message length.
//
// # Safety
// `buf` must be valid for `len` bytes or null.
size_t relaxo_last_error_message(char *buf, size_t len);

// Parses a model from TOML text.
//
// # Safety
// `toml` must be a nul-terminated string; `out` must be writable.
enum RelaxoStatus relaxo_model_from_toml(const char *toml, struct RelaxoModel **out);

// Single P1-bath channel with A2 in kHz^2 and width d_ee in Hz.
//
// # Safety
// `out` must be writable.
enum RelaxoStatus relaxo_model_p1_bath(double a2_khz2, double d_ee_hz, struct RelaxoModel **out);

// Releases a model; null is ignored.
//
// # Safety
// `model` must come from this library and not be used afterwards.
void relaxo_model_free(struct RelaxoModel *model);

// R1 (1/s) or its field derivative of order 1 or 2 at `b` tesla.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum RelaxoStatus relaxo_model_rate(const struct RelaxoModel *model,
                                    double b,
                                    uint8_t order,
                                    double *out);

// # Safety
// `model` must be a live handle and `out` writable.
enum RelaxoStatus relaxo_model_knees(const struct RelaxoModel *model, struct RelaxoKnees *out);

// Tsallian C1 [1 + (2^(q-1) - 1)(B/C2)^2]^(-1/(q-1)) + C3 or its
// B-derivative; q = 1 evaluates the Gaussian limit.
//
// # Safety
// `out` must be writable.
enum RelaxoStatus relaxo_tsallian(double c1,
                                  double c2,
                                  double c3,
                                  double q,
                                  double b,
                                  uint8_t order,
                                  double *out);

// # Safety
// `out` must be writable.
enum RelaxoStatus relaxo_poisson_distance_nm(double ppm, double *out);

// # Safety
// `out` must be writable.
enum RelaxoStatus relaxo_electron_linewidth_hz(double ppm, double *out);

// Mean RMS carbon-carbon coupling <d_CC> (Hz) over `realizations` lattices.
//
// # Safety
// `out` must be writable.
enum RelaxoStatus relaxo_carbon_second_moment(double eta,
                                              double lattice_size_nm,
                                              size_t realizations,
                                              uint64_t seed,
                                              struct RelaxoEstimate *out);

// t_2D / t_1D for N fields, n samples of step dt, wait t_w and N_d
// calibration curves.
//
// # Safety
// `out` must be writable.
enum RelaxoStatus relaxo_time_gain(uint64_t n_fields,
                                   uint64_t n_samples,
                                   double dt,
                                   double t_w,
                                   uint64_t n_cal,
                                   double *out);

// # Safety
// `out` must be writable.
enum RelaxoStatus relaxo_reconstruct_r1(double eps_tw,
                                        double eps0,
                                        double p,
                                        double t_w,
                                        double *out);

// # Safety
// `out` must be writable.
enum RelaxoStatus relaxo_dynamic_wait_time(double t1, double p, double *out);

// # Safety
// `times` and `signals` must hold `n` values; `out` must be writable.
enum RelaxoStatus relaxo_fit_decay(const double *times,
                                   const double *signals,
                                   size_t n,
                                   struct RelaxoDecayFit *out);

// Two-Tsallian fit of a relaxation profile. `errors` may be null for an
// unweighted fit. `params` and `stderrs` receive 7 values each.
//
// # Safety
// Input arrays must hold `n` values; outputs must hold 7.
enum RelaxoStatus relaxo_fit_profile(const double *fields,
                                     const double *rates,
                                     const double *errors,
                                     size_t n,
                                     double *params,
                                     double *stderrs,
                                     bool *converged);

// Runs a named pipeline ("lattice-stats", "model-eval", "profile-fit",
// "decay-fit", "acq-sim", "epr", "paper-repro") with an optional TOML
// configuration, writing into `out_dir`.
//
// # Safety
// Strings must be nul-terminated; `config_toml` may be null.
enum RelaxoStatus relaxo_run_pipeline(const char *name,
                                      const char *config_toml,
                                      const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELAXO_H */
