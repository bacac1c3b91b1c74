//! Overdamped position-space dynamics and the friction sweep that compares
//! it against the full phase-space solution.
//!
//! In the high-friction regime the phase-space dynamics collapses onto a
//! heat equation for the position density with diffusion coefficient
//! 1/(eta M beta) plus the momentum-exchange position-diffusion term; the
//! discrepancy between the two descriptions shrinks as the friction grows.

use serde::{Deserialize, Serialize};

use crate::collision::log_log_slope;
use crate::physics::{smoluchowski_diffusion, PhysicalParams, PhysicsError};

use super::grid::{PhaseSpaceField, PositionField};
use super::kramers::{max_stable_dt, quantum_kramers_solve};
use super::transport::TransportScheme;
use super::SolverError;

const MAX_RECORDS: usize = 512;

/// Moments of a position density at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionMoments {
    pub t: f64,
    pub mean_x: f64,
    pub var_x: f64,
    pub norm: f64,
}

/// Output of an overdamped run.
#[derive(Debug, Clone)]
pub struct SmoluchowskiRun {
    pub field: PositionField,
    pub records: Vec<PositionMoments>,
    /// Diffusion coefficient actually used, 1/(eta M beta) + d_xx.
    pub diffusion: f64,
}

impl SmoluchowskiRun {
    /// Writes `t, mean_x, var_x, norm` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "mean_x", "var_x", "norm"])?;
        for r in &self.records {
            wtr.write_record([
                format!("{:.12e}", r.t),
                format!("{:.12e}", r.mean_x),
                format!("{:.12e}", r.var_x),
                format!("{:.12e}", r.norm),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Largest stable FTCS step for the overdamped equation, 0.4 safety factor.
pub fn max_stable_dt_position(field: &PositionField, diffusion: f64) -> f64 {
    0.4 * field.dx() * field.dx() / (2.0 * diffusion)
}

/// Evolves a position density under the corrected-diffusion heat equation
/// with periodic boundaries.
pub fn smoluchowski_solve(
    sigma0: &PositionField,
    eta: f64,
    t_end: f64,
    dt: f64,
    params: &PhysicalParams,
) -> Result<SmoluchowskiRun, SolverError> {
    params.validate()?;
    let diffusion = smoluchowski_diffusion(eta, params)?;
    if !(t_end > 0.0) || !(dt > 0.0) || !t_end.is_finite() || !dt.is_finite() {
        return Err(PhysicsError::InvalidParameter(format!(
            "need positive finite t_end and dt, got t_end = {t_end}, dt = {dt}"
        ))
        .into());
    }
    let max_dt = max_stable_dt_position(sigma0, diffusion);
    if dt > max_dt {
        return Err(SolverError::UnstableTimestep { dt, max_dt });
    }

    let mut field = sigma0.clone();
    field.time = 0.0;
    let n = field.data.len();
    let dx = field.dx();

    let n_full = (t_end / dt + 1e-9).floor() as usize;
    let remainder = t_end - n_full as f64 * dt;
    let has_tail = remainder > 1e-9 * dt;
    let n_steps = n_full + usize::from(has_tail);
    let stride = (n_steps / MAX_RECORDS).max(1);

    let record = |f: &PositionField| PositionMoments {
        t: f.time,
        mean_x: f.mean(),
        var_x: f.variance(),
        norm: f.norm(),
    };
    let mut records = Vec::with_capacity(n_steps / stride + 2);
    records.push(record(&field));

    let mut old = vec![0.0; n];
    for k in 0..n_steps {
        let h = if k < n_full { dt } else { remainder };
        let r = diffusion * h / (dx * dx);
        old.copy_from_slice(&field.data);
        for i in 0..n {
            let lap = old[(i + 1) % n] - 2.0 * old[i] + old[(i + n - 1) % n];
            field.data[i] = old[i] + r * lap;
        }
        field.time = if k + 1 == n_steps {
            t_end
        } else {
            (k + 1) as f64 * dt
        };
        if (k + 1) % stride == 0 || k + 1 == n_steps {
            records.push(record(&field));
        }
    }

    Ok(SmoluchowskiRun { field, records, diffusion })
}

/// One point of the friction sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighFrictionPoint {
    pub eta: f64,
    /// L1 distance between the phase-space position marginal and the
    /// overdamped density at t_end.
    pub l1_deviation: f64,
}

/// Result of sweeping the friction rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighFrictionComparison {
    pub points: Vec<HighFrictionPoint>,
    /// Fitted slope of log(deviation) against log(eta).
    pub slope: f64,
}

/// For each friction value, evolves the full phase-space equation and the
/// overdamped equation from the same position profile (times a Maxwell
/// momentum distribution) and measures their L1 distance at t_end.
///
/// Timesteps are chosen internally just below the stability bound of each
/// solver, so the caller only picks grids and horizon.
pub fn high_friction_compare(
    sigma0: &PositionField,
    etas: &[f64],
    t_end: f64,
    p_max: f64,
    n_p: usize,
    params: &PhysicalParams,
    scheme: TransportScheme,
) -> Result<HighFrictionComparison, SolverError> {
    if etas.len() < 2 {
        return Err(PhysicsError::InvalidParameter(
            "friction sweep needs at least two eta values".into(),
        )
        .into());
    }
    if etas.windows(2).any(|w| w[0] >= w[1]) || etas[0] <= 0.0 {
        return Err(PhysicsError::InvalidParameter(
            "friction sweep values must be positive and strictly increasing".into(),
        )
        .into());
    }

    let mut points = Vec::with_capacity(etas.len());
    for &eta in etas {
        let f0 = PhaseSpaceField::from_position_profile(sigma0, p_max, n_p, params)?;
        let d_xx = crate::physics::position_diffusion_coefficient(eta, params)?;
        let dt_kramers = 0.9 * max_stable_dt(&f0.grid, eta, d_xx, params);
        let kramers = quantum_kramers_solve(&f0, eta, t_end, dt_kramers, params, scheme)?;
        let marginal = kramers.field.position_marginal();

        let diffusion = smoluchowski_diffusion(eta, params)?;
        let dt_smol = 0.9 * max_stable_dt_position(sigma0, diffusion);
        let overdamped = smoluchowski_solve(sigma0, eta, t_end, dt_smol, params)?;

        points.push(HighFrictionPoint {
            eta,
            l1_deviation: marginal.l1_distance(&overdamped.field)?,
        });
    }

    let xs: Vec<f64> = points.iter().map(|p| p.eta).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.l1_deviation).collect();
    let slope = log_log_slope(&xs, &ys)?;
    Ok(HighFrictionComparison { points, slope })
}
