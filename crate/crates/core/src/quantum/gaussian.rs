//! Exact-moment propagation of Gaussian states under friction, thermal
//! momentum diffusion, and optional position diffusion.
//!
//! Gaussian states stay Gaussian under this generator, so the five moments
//! (two means, three covariances) close on themselves:
//!
//!   d<x>/dt   = <p>/M
//!   d<p>/dt   = -eta <p>
//!   d sxx/dt  = 2 sxp / M + 2 d_xx
//!   d sxp/dt  = spp / M - eta sxp
//!   d spp/dt  = -2 eta (spp - M/beta)
//!
//! After every accepted step the uncertainty determinant
//! sxx spp - sxp^2 is checked against the minimum-uncertainty bound
//! hbar^2/4; dropping below it is a hard error, because a completely
//! positive evolution cannot do that. Without the position-diffusion term
//! the generator is not completely positive and squeezed states expose the
//! defect quickly.

use serde::{Deserialize, Serialize};

use crate::physics::{position_diffusion_coefficient, PhysicalParams, PhysicsError};

use super::QuantumError;

/// Relative tolerance of the adaptive integrator.
const RTOL: f64 = 1e-10;
/// Absolute tolerance floor.
const ATOL: f64 = 1e-13;
/// Slack on the uncertainty bound so rounding never trips the certificate.
const CERTIFICATE_SLACK: f64 = 1e-6;
const MAX_STEPS: usize = 10_000_000;

/// Mean vector and covariance matrix of a one-dimensional Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean_x: f64,
    pub mean_p: f64,
    pub sigma_xx: f64,
    pub sigma_xp: f64,
    pub sigma_pp: f64,
}

impl GaussianState {
    pub fn uncertainty_det(&self) -> f64 {
        self.sigma_xx * self.sigma_pp - self.sigma_xp * self.sigma_xp
    }

    /// Thermal state centred at the origin: momentum variance M/beta,
    /// position variance chosen by the caller.
    pub fn thermal(params: &PhysicalParams, sigma_xx: f64) -> Self {
        Self {
            mean_x: 0.0,
            mean_p: 0.0,
            sigma_xx,
            sigma_xp: 0.0,
            sigma_pp: params.thermal_momentum_sq(),
        }
    }

    /// Minimum-uncertainty state with the given momentum variance:
    /// sxx = hbar^2 / (4 spp).
    pub fn minimum_uncertainty(params: &PhysicalParams, sigma_pp: f64) -> Result<Self, PhysicsError> {
        params.require_quantum()?;
        if !(sigma_pp > 0.0) {
            return Err(PhysicsError::InvalidParameter(format!(
                "momentum variance must be positive, got {sigma_pp}"
            )));
        }
        Ok(Self {
            mean_x: 0.0,
            mean_p: 0.0,
            sigma_xx: params.hbar * params.hbar / (4.0 * sigma_pp),
            sigma_xp: 0.0,
            sigma_pp,
        })
    }

    fn validate(&self, params: &PhysicalParams) -> Result<(), QuantumError> {
        for (v, name) in [
            (self.mean_x, "mean_x"),
            (self.mean_p, "mean_p"),
            (self.sigma_xp, "sigma_xp"),
        ] {
            if !v.is_finite() {
                return Err(PhysicsError::InvalidParameter(format!(
                    "{name} must be finite, got {v}"
                ))
                .into());
            }
        }
        if !(self.sigma_xx > 0.0) || !(self.sigma_pp > 0.0) {
            return Err(PhysicsError::InvalidParameter(format!(
                "variances must be positive, got sxx = {}, spp = {}",
                self.sigma_xx, self.sigma_pp
            ))
            .into());
        }
        let det = self.uncertainty_det();
        if !(det > 0.0) {
            return Err(PhysicsError::InvalidParameter(format!(
                "covariance matrix is not positive definite, det = {det}"
            ))
            .into());
        }
        certificate_check(self, 0.0, params)?;
        Ok(())
    }
}

fn certificate_check(
    state: &GaussianState,
    t: f64,
    params: &PhysicalParams,
) -> Result<(), QuantumError> {
    if params.hbar > 0.0 {
        let bound = params.hbar * params.hbar / 4.0;
        let det = state.uncertainty_det();
        if det < bound * (1.0 - CERTIFICATE_SLACK) {
            return Err(QuantumError::CertificateViolation { t, det, bound });
        }
    }
    Ok(())
}

/// One recorded instant along a Gaussian trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianRecord {
    pub t: f64,
    pub state: GaussianState,
}

/// Trajectory of a Gaussian state.
#[derive(Debug, Clone)]
pub struct GaussianRun {
    pub records: Vec<GaussianRecord>,
    pub final_state: GaussianState,
    /// Position-diffusion coefficient actually applied.
    pub d_xx: f64,
}

impl GaussianRun {
    /// Writes `t, mean_x, mean_p, sxx, sxp, spp, uncertainty_det` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "mean_x", "mean_p", "sxx", "sxp", "spp", "uncertainty_det"])?;
        for r in &self.records {
            let s = r.state;
            wtr.write_record([
                format!("{:.12e}", r.t),
                format!("{:.12e}", s.mean_x),
                format!("{:.12e}", s.mean_p),
                format!("{:.12e}", s.sigma_xx),
                format!("{:.12e}", s.sigma_xp),
                format!("{:.12e}", s.sigma_pp),
                format!("{:.12e}", s.uncertainty_det()),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

type State = [f64; 5];

fn pack(s: &GaussianState) -> State {
    [s.mean_x, s.mean_p, s.sigma_xx, s.sigma_xp, s.sigma_pp]
}

fn unpack(y: &State) -> GaussianState {
    GaussianState {
        mean_x: y[0],
        mean_p: y[1],
        sigma_xx: y[2],
        sigma_xp: y[3],
        sigma_pp: y[4],
    }
}

/// Propagates a Gaussian state to t_end with an adaptive embedded
/// Runge-Kutta 5(4) pair. `include_position_diffusion` toggles the 2 d_xx
/// source in sxx; everything else is identical, so the two settings isolate
/// the effect of the extra term.
pub fn gaussian_propagate(
    state0: &GaussianState,
    eta: f64,
    t_end: f64,
    params: &PhysicalParams,
    include_position_diffusion: bool,
) -> Result<GaussianRun, QuantumError> {
    params.validate().map_err(QuantumError::from)?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(PhysicsError::InvalidParameter(format!(
            "friction rate must be finite and > 0, got {eta}"
        ))
        .into());
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(PhysicsError::InvalidParameter(format!(
            "horizon must be finite and > 0, got {t_end}"
        ))
        .into());
    }
    state0.validate(params)?;

    let d_xx = if include_position_diffusion {
        position_diffusion_coefficient(eta, params)?
    } else {
        0.0
    };
    let inv_m = 1.0 / params.test_mass;
    let spp_eq = params.thermal_momentum_sq();
    let rhs = |y: &State| -> State {
        [
            y[1] * inv_m,
            -eta * y[1],
            2.0 * y[3] * inv_m + 2.0 * d_xx,
            y[4] * inv_m - eta * y[3],
            -2.0 * eta * (y[4] - spp_eq),
        ]
    };

    let mut t = 0.0;
    let mut y = pack(state0);
    let mut h = (t_end / 100.0).min(0.1 / eta);
    let mut records = vec![GaussianRecord { t, state: *state0 }];

    for _ in 0..MAX_STEPS {
        if t >= t_end {
            break;
        }
        h = h.min(t_end - t);
        if h < 1e-14 * t_end {
            return Err(QuantumError::Integration {
                t,
                message: "step size underflow".into(),
            });
        }
        match rk45_step(&rhs, &y, h) {
            StepResult::Accept { y_next, err_ratio } => {
                t += h;
                y = y_next;
                let state = unpack(&y);
                certificate_check(&state, t, params)?;
                records.push(GaussianRecord { t, state });
                h *= (0.9 * err_ratio.powf(-0.2)).clamp(0.2, 5.0);
            }
            StepResult::Reject { err_ratio } => {
                h *= (0.9 * err_ratio.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
    }
    if t < t_end {
        return Err(QuantumError::Integration {
            t,
            message: format!("step budget exhausted before t_end = {t_end}"),
        });
    }

    let final_state = unpack(&y);
    Ok(GaussianRun { records, final_state, d_xx })
}

enum StepResult {
    Accept { y_next: State, err_ratio: f64 },
    Reject { err_ratio: f64 },
}

/// One Dormand-Prince 5(4) step; err_ratio is the scaled error norm, with
/// values <= 1 meaning the step meets tolerance.
fn rk45_step(rhs: &impl Fn(&State) -> State, y: &State, h: f64) -> StepResult {
    const A2: [f64; 1] = [1.0 / 5.0];
    const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
    const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
    const A5: [f64; 4] = [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ];
    const A6: [f64; 5] = [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ];
    const B5: [f64; 6] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let stage = |coeffs: &[f64], ks: &[State]| -> State {
        let mut out = *y;
        for (c, k) in coeffs.iter().zip(ks) {
            for i in 0..5 {
                out[i] += h * c * k[i];
            }
        }
        out
    };

    let k1 = rhs(y);
    let k2 = rhs(&stage(&A2, &[k1]));
    let k3 = rhs(&stage(&A3, &[k1, k2]));
    let k4 = rhs(&stage(&A4, &[k1, k2, k3]));
    let k5 = rhs(&stage(&A5, &[k1, k2, k3, k4]));
    let k6 = rhs(&stage(&A6, &[k1, k2, k3, k4, k5]));
    let ks = [k1, k2, k3, k4, k5, k6];
    let y5 = stage(&B5, &ks);
    let k7 = rhs(&y5);

    let mut err_ratio = 0.0_f64;
    for i in 0..5 {
        let mut y4_i = y[i];
        for (c, k) in B4.iter().zip(ks.iter().chain(std::iter::once(&k7))) {
            y4_i += h * c * k[i];
        }
        let scale = ATOL + RTOL * y[i].abs().max(y5[i].abs());
        err_ratio = err_ratio.max(((y5[i] - y4_i) / scale).abs());
    }

    if err_ratio <= 1.0 {
        StepResult::Accept { y_next: y5, err_ratio: err_ratio.max(1e-10) }
    } else {
        StepResult::Reject { err_ratio }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lab() -> PhysicalParams {
        PhysicalParams::default_lab()
    }

    /// Closed-form moments for the linear system, used as the oracle.
    fn exact(state0: &GaussianState, eta: f64, d_xx: f64, params: &PhysicalParams, t: f64) -> GaussianState {
        let m = params.test_mass;
        let spp_eq = params.thermal_momentum_sq();
        let e1 = (-eta * t).exp();
        let e2 = (-2.0 * eta * t).exp();
        let mean_p = state0.mean_p * e1;
        let mean_x = state0.mean_x + state0.mean_p / (m * eta) * (1.0 - e1);
        let dspp = state0.sigma_pp - spp_eq;
        let sigma_pp = spp_eq + dspp * e2;
        // sxp(t) = sxp_inf + c2 e^{-2 eta t} + c1 e^{-eta t}
        let sxp_inf = spp_eq / (m * eta);
        let c2 = -dspp / (m * eta);
        let c1 = state0.sigma_xp - sxp_inf - c2;
        let sigma_xp = sxp_inf + c2 * e2 + c1 * e1;
        // sxx(t) = sxx0 + int_0^t (2 sxp / m + 2 d_xx)
        let sigma_xx = state0.sigma_xx
            + 2.0 / m
                * (sxp_inf * t + c2 * (1.0 - e2) / (2.0 * eta) + c1 * (1.0 - e1) / eta)
            + 2.0 * d_xx * t;
        GaussianState { mean_x, mean_p, sigma_xx, sigma_xp, sigma_pp }
    }

    #[test]
    fn matches_closed_form_moments() {
        let params = lab();
        let eta = 0.7;
        let state0 = GaussianState {
            mean_x: 0.3,
            mean_p: 1.2,
            sigma_xx: 2.0,
            sigma_xp: 0.1,
            sigma_pp: 1.7,
        };
        for include in [false, true] {
            let run = gaussian_propagate(&state0, eta, 4.0, &params, include).unwrap();
            let d_xx = run.d_xx;
            if include {
                assert_relative_eq!(d_xx, eta / 16.0, max_relative = 1e-14);
            } else {
                assert_eq!(d_xx, 0.0);
            }
            for r in &run.records {
                let e = exact(&state0, eta, d_xx, &params, r.t);
                assert_relative_eq!(r.state.mean_x, e.mean_x, max_relative = 1e-8, epsilon = 1e-12);
                assert_relative_eq!(r.state.mean_p, e.mean_p, max_relative = 1e-8, epsilon = 1e-12);
                assert_relative_eq!(r.state.sigma_xx, e.sigma_xx, max_relative = 1e-8);
                assert_relative_eq!(r.state.sigma_xp, e.sigma_xp, max_relative = 1e-7, epsilon = 1e-10);
                assert_relative_eq!(r.state.sigma_pp, e.sigma_pp, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn squeezed_state_without_position_diffusion_breaks_the_certificate() {
        let params = lab();
        let eta = 0.5;
        // Hot in momentum, squeezed to minimum uncertainty in position.
        let state0 =
            GaussianState::minimum_uncertainty(&params, 4.0 * params.thermal_momentum_sq())
                .unwrap();
        assert_relative_eq!(state0.uncertainty_det(), 0.25, max_relative = 1e-14);

        let err = gaussian_propagate(&state0, eta, 10.0, &params, false)
            .expect_err("truncated generator must violate the uncertainty bound");
        match err {
            QuantumError::CertificateViolation { t, det, bound } => {
                assert!(t > 0.0 && t < 1.0 / eta, "violation at t = {t}");
                assert!(det < bound);
            }
            other => panic!("wrong error: {other}"),
        }

        // With the position-diffusion term the same state stays physical.
        let run = gaussian_propagate(&state0, eta, 10.0, &params, true).unwrap();
        let bound = params.hbar * params.hbar / 4.0;
        for r in &run.records {
            assert!(r.state.uncertainty_det() >= bound * (1.0 - 1e-9));
        }
    }

    #[test]
    fn classical_parameters_skip_the_certificate() {
        let params = PhysicalParams::new(1.0, 0.1, 1.0, 1.0, 0.0).unwrap();
        // Strongly squeezed: fine classically, d_xx = 0 identically.
        let state0 = GaussianState {
            mean_x: 0.0,
            mean_p: 0.0,
            sigma_xx: 1e-6,
            sigma_xp: 0.0,
            sigma_pp: 4.0,
        };
        let run = gaussian_propagate(&state0, 0.5, 2.0, &params, true).unwrap();
        assert_eq!(run.d_xx, 0.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let params = lab();
        let good = GaussianState::thermal(&params, 1.0);
        assert!(gaussian_propagate(&good, 0.0, 1.0, &params, true).is_err());
        assert!(gaussian_propagate(&good, 1.0, 0.0, &params, true).is_err());
        let bad = GaussianState { sigma_xx: -1.0, ..good };
        assert!(gaussian_propagate(&bad, 1.0, 1.0, &params, true).is_err());
        // Initial state below the uncertainty bound is refused immediately.
        let sub_planck = GaussianState {
            mean_x: 0.0,
            mean_p: 0.0,
            sigma_xx: 1e-4,
            sigma_xp: 0.0,
            sigma_pp: 1.0,
        };
        match gaussian_propagate(&sub_planck, 1.0, 1.0, &params, true) {
            Err(QuantumError::CertificateViolation { t, .. }) => assert_eq!(t, 0.0),
            other => panic!("expected certificate violation, got {other:?}"),
        }
    }

    #[test]
    fn csv_has_the_pinned_header_and_final_time() {
        let params = lab();
        let state0 = GaussianState::thermal(&params, 1.0);
        let run = gaussian_propagate(&state0, 1.0, 2.0, &params, true).unwrap();
        let mut buf = Vec::new();
        run.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,mean_x,mean_p,sxx,sxp,spp,uncertainty_det"
        );
        let last = lines.last().unwrap();
        let t_last: f64 = last.split(',').next().unwrap().parse().unwrap();
        assert_relative_eq!(t_last, 2.0, max_relative = 1e-12);
    }
}
