/* C interface of the linear Boltzmann laboratory. */

#ifndef QLBE_H
#define QLBE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Number of doubles per record written by `qlbe_gaussian_propagate`:
// t, mean_x, mean_p, sigma_xx, sigma_xp, sigma_pp.
#define QLBE_GAUSSIAN_RECORD_LEN 6

// Result of every fallible call in this ABI.
typedef enum QlbeStatus {
  // The call succeeded and all out parameters are set.
  QLBE_STATUS_OK = 0,
  // A required pointer argument was NULL.
  QLBE_STATUS_NULL_POINTER = 1,
  // An argument failed validation; see `qlbe_last_error_message`.
  QLBE_STATUS_INVALID_ARGUMENT = 2,
  // Inputs were structurally valid but outside a formula's domain.
  QLBE_STATUS_DOMAIN_ERROR = 3,
  // A solver or quadrature failed to converge or lost stability.
  QLBE_STATUS_NUMERICAL_ERROR = 4,
  // A caller-provided buffer cannot hold the result; the required
  // size has been written to the corresponding count parameter.
  QLBE_STATUS_BUFFER_TOO_SMALL = 5,
} QlbeStatus;

// Gas autocorrelation entering rates: the exact ideal-gas form or its
// quadratic (Brownian) approximation.
typedef enum QlbeForm {
  QLBE_FORM_MAXWELL_BOLTZMANN = 0,
  QLBE_FORM_BROWNIAN = 1,
} QlbeForm;

// Scattering weight Sigma(q) as a function of transfer modulus.
typedef struct QlbeCrossSection QlbeCrossSection;

// Validated physical inputs: masses, inverse temperature, gas density,
// hbar. hbar = 0 selects the classical theory.
typedef struct QlbeParams QlbeParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread, NUL terminated.
// Empty string when no call has failed yet. The pointer is invalidated
// by the next failing call on the same thread.
const char *qlbe_last_error_message(void);

// Version of the underlying library, NUL terminated, static lifetime.
const char *qlbe_version(void);

// Creates a validated parameter set. On success `*out` owns the handle.
//
// # Safety
// `out` must point to writable storage for one pointer.
enum QlbeStatus qlbe_params_new(double test_mass,
                                double gas_mass,
                                double inv_temperature,
                                double gas_density,
                                double hbar,
                                struct QlbeParams **out);

// Releases a parameter handle. NULL is accepted and ignored.
//
// # Safety
// `params` must be NULL or a pointer returned by `qlbe_params_new` that
// has not been freed yet.
void qlbe_params_free(struct QlbeParams *params);

// Constant scattering weight Sigma(q) = sigma0.
//
// # Safety
// `out` must point to writable storage for one pointer.
enum QlbeStatus qlbe_cross_section_constant(double sigma0, struct QlbeCrossSection **out);

// Gaussian scattering weight Sigma(q) = sigma0 exp(-q^2 / (2 q_width^2)).
//
// # Safety
// `out` must point to writable storage for one pointer.
enum QlbeStatus qlbe_cross_section_gaussian(double sigma0,
                                            double q_width,
                                            struct QlbeCrossSection **out);

// Piecewise-linear scattering weight through `len` (q, Sigma) samples,
// constant beyond the extreme abscissae. Abscissae must increase strictly.
//
// # Safety
// `q_values` and `sigma_values` must point to `len` readable doubles;
// `out` must point to writable storage for one pointer.
enum QlbeStatus qlbe_cross_section_tabulated(const double *q_values,
                                             const double *sigma_values,
                                             size_t len,
                                             struct QlbeCrossSection **out);

// Releases a cross-section handle. NULL is accepted and ignored.
//
// # Safety
// `xs` must be NULL or an unfreed pointer from a cross-section constructor.
void qlbe_cross_section_free(struct QlbeCrossSection *xs);

// Kinetic energy the test particle gains in one collision with momentum
// transfer (qx, qy, qz) at incoming momentum (px, py, pz).
//
// # Safety
// All pointers must be valid; `out` must be writable.
enum QlbeStatus qlbe_energy_transfer(const struct QlbeParams *params,
                                     double qx,
                                     double qy,
                                     double qz,
                                     double px,
                                     double py,
                                     double pz,
                                     double *out);

// Dynamic structure factor S(q, E) at transfer modulus `q_mod` and energy
// transfer `energy`, in the chosen form.
//
// # Safety
// All pointers must be valid; `out` must be writable.
enum QlbeStatus qlbe_structure_factor(const struct QlbeParams *params,
                                      enum QlbeForm form,
                                      double q_mod,
                                      double energy,
                                      double *out);

// Detailed-balance defect S(q,-E) e^(-beta E) / S(q,E) - 1, evaluated in
// log space; zero in exact arithmetic for both forms.
//
// # Safety
// All pointers must be valid; `out` must be writable.
enum QlbeStatus qlbe_detailed_balance_residual(const struct QlbeParams *params,
                                               enum QlbeForm form,
                                               double q_mod,
                                               double energy,
                                               double *out);

// Friction rate eta of the Brownian limit, by adaptive quadrature over
// the momentum-transfer distribution.
//
// # Safety
// All pointers must be valid; `out` must be writable.
enum QlbeStatus qlbe_friction_coefficient(const struct QlbeParams *params,
                                          const struct QlbeCrossSection *xs,
                                          double *out);

// Quantum position-diffusion coefficient D_xx = eta beta hbar^2 / (16 M).
//
// # Safety
// All pointers must be valid; `out` must be writable.
enum QlbeStatus qlbe_position_diffusion(const struct QlbeParams *params, double eta, double *out);

// High-friction diffusion coefficient 1/(eta M beta) + D_xx.
//
// # Safety
// All pointers must be valid; `out` must be writable.
enum QlbeStatus qlbe_smoluchowski_diffusion(const struct QlbeParams *params,
                                            double eta,
                                            double *out);

// Ratio of the corrected to the classical high-friction diffusion
// coefficient, 1 + (eta beta hbar)^2 / 16.
//
// # Safety
// All pointers must be valid; `out` must be writable.
enum QlbeStatus qlbe_quantum_correction_ratio(const struct QlbeParams *params,
                                              double eta,
                                              double *out);

// Exponential damping rate of a spatial coherence at wavenumber `kappa`
// caused by position diffusion: D_xx kappa^2.
//
// # Safety
// All pointers must be valid; `out` must be writable.
enum QlbeStatus qlbe_coherence_decay_rate(const struct QlbeParams *params,
                                          double eta,
                                          double kappa,
                                          double *out);

// Total collision rate R(p) at incoming momentum (px, py, pz), by nested
// quadrature over the scattering kernel.
//
// # Safety
// All pointers must be valid; `out` must be writable.
enum QlbeStatus qlbe_total_rate(const struct QlbeParams *params,
                                const struct QlbeCrossSection *xs,
                                enum QlbeForm form,
                                double px,
                                double py,
                                double pz,
                                double *out);

// Propagates a Gaussian state under the damped quantum dynamics to
// `t_end` with an adaptive integrator.
//
// `out_final` receives mean_x, mean_p, sigma_xx, sigma_xp, sigma_pp of
// the final state. When `out_records` is non-NULL it receives up to
// `max_records` records of QLBE_GAUSSIAN_RECORD_LEN doubles each, laid
// out record-major; `*out_record_count` is always set to the number of
// records the run produced. If the buffer is too small, the status is
// `BufferTooSmall` and nothing is written to `out_records`; call once
// with `out_records` = NULL to size the buffer.
//
// `include_position_diffusion` != 0 enables the quantum D_xx source term.
//
// # Safety
// `out_final` must hold 5 writable doubles, `out_record_count` one
// writable size_t, and `out_records` either NULL or `max_records *
// QLBE_GAUSSIAN_RECORD_LEN` writable doubles.
enum QlbeStatus qlbe_gaussian_propagate(const struct QlbeParams *params,
                                        double eta,
                                        double mean_x,
                                        double mean_p,
                                        double sigma_xx,
                                        double sigma_xp,
                                        double sigma_pp,
                                        double t_end,
                                        int include_position_diffusion,
                                        double *out_final,
                                        double *out_records,
                                        size_t max_records,
                                        size_t *out_record_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QLBE_H */
