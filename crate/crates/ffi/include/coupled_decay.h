#ifndef COUPLED_DECAY_H
#define COUPLED_DECAY_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CdStatus {
  CD_STATUS_OK = 0,
  CD_STATUS_NULL_POINTER = 1,
  CD_STATUS_INVALID_ARGUMENT = 2,
  CD_STATUS_DOMAIN = 3,
  CD_STATUS_CERTIFICATE = 4,
  CD_STATUS_OUT_OF_RANGE = 5,
  CD_STATUS_INTERNAL = 6,
} CdStatus;

typedef struct CdCertificate CdCertificate;

typedef struct CdSpectrum CdSpectrum;

typedef struct CdTrajectory CdTrajectory;

/**
 * System coefficients: `u'' + b u' + A u + α A^β v = 0`,
 * `v'' + (A² + ζ A) v + α A^β u = 0`.
 */
typedef struct CdSystemParams {
  double alpha;
  double beta;
  double damping_b;
  double zeta_pert;
} CdSystemParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Release with
 * [`cd_string_free`].
 */
char *cd_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 */
void cd_string_free(char *s);

/**
 * Builds a spectrum from `n` positive nondecreasing eigenvalues.
 */
enum CdStatus cd_spectrum_new(const double *eigenvalues, size_t n, struct CdSpectrum **out);

/**
 * Builds a spectrum from a preset such as `dirichlet:N=64`.
 */
enum CdStatus cd_spectrum_from_example(const char *preset, struct CdSpectrum **out);

enum CdStatus cd_spectrum_n_modes(const struct CdSpectrum *spectrum, size_t *out);

enum CdStatus cd_spectrum_lambda1(const struct CdSpectrum *spectrum, double *out);

void cd_spectrum_free(struct CdSpectrum *spectrum);

/**
 * `λ₁^{(3−2β)/2}`, the strict bound on `|α|`.
 */
enum CdStatus cd_coupling_bound(const struct CdSpectrum *spectrum, double beta, double *out);

/**
 * Certifies the Lyapunov function over the spectrum and a geometric probe
 * grid up to `grid_max_factor·λ₁` with `grid_per_decade` points per decade.
 * A failing certificate is still returned with `CD_STATUS_OK`.
 */
enum CdStatus cd_certify(const struct CdSpectrum *spectrum,
                         const struct CdSystemParams *params,
                         double grid_max_factor,
                         size_t grid_per_decade,
                         struct CdCertificate **out);

enum CdStatus cd_certificate_passed(const struct CdCertificate *cert, bool *out);

/**
 * Uniform `γ*` with `−H_ε' ≥ γ*·K`.
 */
enum CdStatus cd_certificate_gamma(const struct CdCertificate *cert, double *out);

/**
 * The failing `λ`, or NaN for a passing certificate.
 */
enum CdStatus cd_certificate_failing_lambda(const struct CdCertificate *cert, double *out);

/**
 * Full report as JSON. Release with [`cd_string_free`].
 */
enum CdStatus cd_certificate_to_json(const struct CdCertificate *cert, char **out);

void cd_certificate_free(struct CdCertificate *cert);

/**
 * Propagates `init` (`4·n_modes` values, `(u, v, u', v')` per mode) to
 * `t_end` in `n_steps` exact steps.
 */
enum CdStatus cd_trajectory_run(const struct CdSpectrum *spectrum,
                                const struct CdSystemParams *params,
                                const double *init,
                                size_t init_len,
                                double t_end,
                                size_t n_steps,
                                struct CdTrajectory **out);

/**
 * Number of samples, `n_steps + 1`.
 */
enum CdStatus cd_trajectory_len(const struct CdTrajectory *traj, size_t *out);

enum CdStatus cd_trajectory_time(const struct CdTrajectory *traj, size_t k, double *out);

/**
 * Copies sample `k` into `buf` (`4·n_modes` values).
 */
enum CdStatus cd_trajectory_state(const struct CdTrajectory *traj,
                                  size_t k,
                                  double *buf,
                                  size_t buf_len);

/**
 * Weak-norm energy `K` at every sample, written into `buf` (`len` values).
 */
enum CdStatus cd_trajectory_k_series(const struct CdTrajectory *traj, double *buf, size_t buf_len);

void cd_trajectory_free(struct CdTrajectory *traj);

/**
 * Tail decay rate of `K` for the scalar system and its spectral-abscissa
 * reference, `init` holding `(u, v, u', v')`.
 */
enum CdStatus cd_scalar_decay_check(double lambda,
                                    double mu,
                                    double c,
                                    const double *init,
                                    double t_end,
                                    size_t n_steps,
                                    double *measured_rate,
                                    double *oracle_rate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COUPLED_DECAY_H */
