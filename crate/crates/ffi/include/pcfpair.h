/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef PCFPAIR_H
#define PCFPAIR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum PcfStatus {
  PCF_STATUS_OK = 0,
  // A required pointer argument was null.
  PCF_STATUS_ERR_NULL = 1,
  // Parameter outside its allowed domain.
  PCF_STATUS_ERR_INVALID = 2,
  // Malformed input file or table.
  PCF_STATUS_ERR_PARSE = 3,
  // Frequency outside the dispersion model's range.
  PCF_STATUS_ERR_RANGE = 4,
  // Numerical method failed (no root, fit or quadrature not converged).
  PCF_STATUS_ERR_NUMERICAL = 5,
  // File could not be read.
  PCF_STATUS_ERR_IO = 6,
  // Output buffer too small; the required length was written.
  PCF_STATUS_ERR_BUFFER_TOO_SMALL = 7,
  // Internal panic caught at the boundary.
  PCF_STATUS_ERR_PANIC = 8,
} PcfStatus;

// Opaque Monte Carlo coincidence scan.
typedef struct PcfCoincidenceScan PcfCoincidenceScan;

// Opaque dispersion model.
typedef struct PcfDispersionModel PcfDispersionModel;

// Fiber and pump parameters (SI units except wavelengths in nm).
typedef struct PcfFwmConfig {
  // Nonlinear coefficient, 1/(W·m).
  double gamma;
  // Pump power, W.
  double power;
  // Fiber length, m.
  double length;
  double lambda_p_nm;
  double loss_db_per_km;
} PcfFwmConfig;

// Fringe fit result; `period_stderr` is zero for fixed-period fits.
typedef struct PcfFringeFit {
  double visibility;
  double visibility_stderr;
  double phase_rad;
  double offset;
  double amplitude;
  double period;
  double period_stderr;
  double reduced_chi2;
} PcfFringeFit;

// Photon source and detector model of the Monte Carlo (rates in 1/s,
// times in s).
typedef struct PcfSourceParams {
  double pair_rate;
  double eta_s;
  double eta_i;
  double dark_s;
  double dark_i;
  double background_s;
  double background_i;
  double mu;
  double tau;
  double jitter_sigma;
} PcfSourceParams;

// Coincidence gate and TAC settings, s.
typedef struct PcfGateConfig {
  double t_gate;
  double tac_bin;
  double tac_range;
} PcfGateConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread, NUL-terminated, into
// `buf`. Returns the message length excluding the terminator; nothing is
// written if `buf` is null or `len` is too small.
//
// # Safety
// `buf` must be valid for `len` bytes or null.
size_t pcf_last_error_message(char *buf, size_t len);

// Library version, static NUL-terminated string.
const char *pcf_version(void);

// The experiment's fiber and pump (100 mW at 760.4 nm).
struct PcfFwmConfig pcf_fwm_config_default(void);

// Built-in calibrated fiber model.
//
// # Safety
// `out` must be valid for writes.
enum PcfStatus pcf_model_default(struct PcfDispersionModel **out);

// Model from a dispersion table of `n` rows: wavelengths (nm, strictly
// increasing) and D (ps/(nm·km)).
//
// # Safety
// `wavelength_nm` and `d_ps_nm_km` must hold `n` values; `out` must be
// valid for writes.
enum PcfStatus pcf_model_from_table(const double *wavelength_nm,
                                    const double *d_ps_nm_km,
                                    size_t n,
                                    struct PcfDispersionModel **out);

// Model from a CSV file `wavelength_nm,D_ps_nm_km`.
//
// # Safety
// `path` must be a NUL-terminated UTF-8 string; `out` valid for writes.
enum PcfStatus pcf_model_from_csv(const char *path, struct PcfDispersionModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must come from a `pcf_model_*` constructor and not be used again.
void pcf_model_free(struct PcfDispersionModel *model);

// Shortest zero-dispersion wavelength, nm.
//
// # Safety
// `model` must be a live handle; `out_nm` valid for writes.
enum PcfStatus pcf_model_zdw(const struct PcfDispersionModel *model, double *out_nm);

// β₂ at angular frequency `omega` (rad/s), s²/m.
//
// # Safety
// `model` must be a live handle; `out` valid for writes.
enum PcfStatus pcf_model_beta2(const struct PcfDispersionModel *model, double omega, double *out);

// Linear phase mismatch `k(ωp+Δω) + k(ωp−Δω) − 2k(ωp)`, rad/m.
//
// # Safety
// `model` must be a live handle; `out` valid for writes.
enum PcfStatus pcf_delta_k(const struct PcfDispersionModel *model,
                           double lambda_p_nm,
                           double delta_omega,
                           double *out);

// Idler wavelength conjugate to `lambda_s_nm` under pump `lambda_p_nm`.
//
// # Safety
// `out_nm` must be valid for writes.
enum PcfStatus pcf_conjugate_wavelength(double lambda_p_nm, double lambda_s_nm, double *out_nm);

// Pair density per unit bandwidth and time at detuning `delta_omega`.
//
// # Safety
// `model` must be a live handle; `out` valid for writes.
enum PcfStatus pcf_pair_density(const struct PcfDispersionModel *model,
                                struct PcfFwmConfig config,
                                double delta_omega,
                                double *out);

// Branch (Δk = 0) solutions: signal and idler wavelengths in nm. Writes the
// solution count to `out_count`; returns `PCF_STATUS_ERR_BUFFER_TOO_SMALL` if it
// exceeds `capacity`.
//
// # Safety
// Buffers must hold `capacity` values; `model` must be a live handle.
enum PcfStatus pcf_branch_solutions(const struct PcfDispersionModel *model,
                                    struct PcfFwmConfig config,
                                    double *out_lambda_s,
                                    double *out_lambda_i,
                                    size_t capacity,
                                    size_t *out_count);

// Trunk (Δk = −4γP) solutions; conventions as [`pcf_branch_solutions`].
//
// # Safety
// As [`pcf_branch_solutions`].
enum PcfStatus pcf_trunk_solutions(const struct PcfDispersionModel *model,
                                   struct PcfFwmConfig config,
                                   double *out_lambda_s,
                                   double *out_lambda_i,
                                   size_t capacity,
                                   size_t *out_count);

// Fiber attenuation e-folding length, m.
//
// # Safety
// `out_m` must be valid for writes.
enum PcfStatus pcf_attenuation_length(double loss_db_per_km, double *out_m);

// `1 + (μ/2)cos(2kpΔL)`; `k_p` in rad/m, `delta_l` in m.
double pcf_coincidence_full(double k_p, double delta_l, double mu);

// `1 + μcos(2kpΔL)`.
double pcf_coincidence_postselected(double k_p, double delta_l, double mu);

// Fits `A(1 + V cos(2πx/period + φ))` to `n` points. With `free_period`
// non-zero the period is refined starting from `period`.
//
// # Safety
// `x` and `y` must hold `n` values; `out` valid for writes.
enum PcfStatus pcf_fit_visibility(const double *x,
                                  const double *y,
                                  size_t n,
                                  double period,
                                  int32_t free_period,
                                  struct PcfFringeFit *out);

// Monte Carlo fringe scan over `n` offsets `delta_x_nm`, each simulated for
// `duration_s`. The result is reproducible from `seed`.
//
// # Safety
// `params` and `gate` must be valid; `delta_x_nm` must hold `n` values;
// `out` valid for writes.
enum PcfStatus pcf_simulate_scan(const struct PcfSourceParams *params,
                                 const struct PcfGateConfig *gate,
                                 double pump_nm,
                                 double delta_l_m,
                                 const double *delta_x_nm,
                                 size_t n,
                                 double duration_s,
                                 uint64_t seed,
                                 struct PcfCoincidenceScan **out);

// Number of scan points.
//
// # Safety
// `scan` must be a live handle or null (returns 0).
size_t pcf_scan_len(const struct PcfCoincidenceScan *scan);

// Coincidence counts per point for gate width `t_gate` (s), re-gated from
// the same event streams.
//
// # Safety
// `scan` must be a live handle; `out` must hold `capacity` values.
enum PcfStatus pcf_scan_counts(const struct PcfCoincidenceScan *scan,
                               double t_gate,
                               uint64_t *out,
                               size_t capacity);

// Releases a scan. Null is ignored.
//
// # Safety
// `scan` must come from [`pcf_simulate_scan`] and not be used again.
void pcf_scan_free(struct PcfCoincidenceScan *scan);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCFPAIR_H */
