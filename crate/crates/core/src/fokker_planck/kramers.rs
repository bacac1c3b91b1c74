//! Strang-split phase-space solver for friction, thermal noise, streaming,
//! and (optionally) position diffusion.
//!
//! One step of length h applies
//!   stream(h/2)  xdiff(h/2)  collide(h)  xdiff(h/2)  stream(h/2)
//! where the xdiff passes are skipped entirely when the position-diffusion
//! coefficient is exactly zero. The classical solver is the special case
//! d_xx = 0, so a quantum run at hbar = 0 reproduces it bit for bit.

use crate::physics::{position_diffusion_coefficient, PhysicalParams, PhysicsError};

use super::collision_op::MomentumOperator;
use super::grid::{PhaseMoments, PhaseSpaceField, PhaseSpaceGrid};
use super::transport::{advect_line, TransportScheme};
use super::SolverError;

/// Maximum number of moment records kept along a trajectory.
const MAX_RECORDS: usize = 512;

/// Moment history of a phase-space run.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub records: Vec<PhaseMoments>,
}

impl MomentSeries {
    pub fn last(&self) -> &PhaseMoments {
        self.records.last().expect("moment series is never empty")
    }

    /// Writes `t, mean_x, mean_p, var_x, var_p, cov_xp, norm` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "mean_x", "mean_p", "var_x", "var_p", "cov_xp", "norm"])?;
        for r in &self.records {
            wtr.write_record([
                format!("{:.12e}", r.t),
                format!("{:.12e}", r.mean_x),
                format!("{:.12e}", r.mean_p),
                format!("{:.12e}", r.var_x),
                format!("{:.12e}", r.var_p),
                format!("{:.12e}", r.cov_xp),
                format!("{:.12e}", r.norm),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Output of a Kramers-type run: final field, moment history, and the
/// position-diffusion coefficient that was actually applied.
#[derive(Debug, Clone)]
pub struct KramersRun {
    pub field: PhaseSpaceField,
    pub moments: MomentSeries,
    pub d_xx: f64,
}

/// Largest timestep the explicit update tolerates, with a 0.4 safety factor:
/// streaming Courant, momentum-diffusion, and (if active) position-diffusion
/// limits combined.
pub fn max_stable_dt(
    grid: &PhaseSpaceGrid,
    eta: f64,
    d_xx: f64,
    params: &PhysicalParams,
) -> f64 {
    let stream = grid.dx() / (grid.p_max / params.test_mass);
    let collide = grid.dp() * grid.dp() / (2.0 * eta * params.thermal_momentum_sq());
    let mut bound = stream.min(collide);
    if d_xx > 0.0 {
        bound = bound.min(grid.dx() * grid.dx() / (2.0 * d_xx));
    }
    0.4 * bound
}

/// Classical Kramers equation: streaming plus momentum friction-diffusion.
pub fn kramers_solve(
    f0: &PhaseSpaceField,
    eta: f64,
    t_end: f64,
    dt: f64,
    params: &PhysicalParams,
    scheme: TransportScheme,
) -> Result<KramersRun, SolverError> {
    solve_with_diffusion(f0, eta, t_end, dt, params, scheme, 0.0)
}

/// Kramers equation with the momentum-exchange position-diffusion term
/// d_xx = eta beta hbar^2 / (16 M) added along x. At hbar = 0 the extra
/// term vanishes and the run matches [`kramers_solve`] exactly.
pub fn quantum_kramers_solve(
    f0: &PhaseSpaceField,
    eta: f64,
    t_end: f64,
    dt: f64,
    params: &PhysicalParams,
    scheme: TransportScheme,
) -> Result<KramersRun, SolverError> {
    let d_xx = position_diffusion_coefficient(eta, params)?;
    solve_with_diffusion(f0, eta, t_end, dt, params, scheme, d_xx)
}

fn solve_with_diffusion(
    f0: &PhaseSpaceField,
    eta: f64,
    t_end: f64,
    dt: f64,
    params: &PhysicalParams,
    scheme: TransportScheme,
    d_xx: f64,
) -> Result<KramersRun, SolverError> {
    params.validate()?;
    f0.grid.validate_for(params)?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(PhysicsError::InvalidParameter(format!(
            "friction rate must be finite and > 0, got {eta}"
        ))
        .into());
    }
    if !(t_end > 0.0) || !(dt > 0.0) || !t_end.is_finite() || !dt.is_finite() {
        return Err(PhysicsError::InvalidParameter(format!(
            "need positive finite t_end and dt, got t_end = {t_end}, dt = {dt}"
        ))
        .into());
    }
    let max_dt = max_stable_dt(&f0.grid, eta, d_xx, params);
    if dt > max_dt {
        return Err(SolverError::UnstableTimestep { dt, max_dt });
    }

    let grid = f0.grid;
    let op = MomentumOperator::new(&grid, eta, params);
    let mut field = f0.clone();
    field.time = 0.0;

    let n_full = (t_end / dt + 1e-9).floor() as usize;
    let remainder = t_end - n_full as f64 * dt;
    let has_tail = remainder > 1e-9 * dt;
    let n_steps = n_full + usize::from(has_tail);
    let stride = (n_steps / MAX_RECORDS).max(1);

    let mut stepper = Stepper::new(&grid, scheme, d_xx);
    let mut records = Vec::with_capacity(n_steps / stride + 2);
    records.push(field.moments());

    for k in 0..n_steps {
        let h = if k < n_full { dt } else { remainder };
        stepper.advance(&mut field, &op, params, h);
        field.time = if k + 1 == n_steps {
            t_end
        } else {
            (k + 1) as f64 * dt
        };
        if (k + 1) % stride == 0 || k + 1 == n_steps {
            records.push(field.moments());
        }
    }

    Ok(KramersRun { field, moments: MomentSeries { records }, d_xx })
}

/// Scratch buffers plus the split-step schedule.
struct Stepper {
    scheme: TransportScheme,
    d_xx: f64,
    line_in: Vec<f64>,
    line_out: Vec<f64>,
    flux: Vec<f64>,
}

impl Stepper {
    fn new(grid: &PhaseSpaceGrid, scheme: TransportScheme, d_xx: f64) -> Self {
        Self {
            scheme,
            d_xx,
            line_in: vec![0.0; grid.n_x],
            line_out: vec![0.0; grid.n_x],
            flux: vec![0.0; grid.n_p],
        }
    }

    fn advance(
        &mut self,
        field: &mut PhaseSpaceField,
        op: &MomentumOperator,
        params: &PhysicalParams,
        h: f64,
    ) {
        self.stream(field, params, 0.5 * h);
        if self.d_xx > 0.0 {
            self.diffuse_x(field, 0.5 * h);
        }
        self.collide(field, op, h);
        if self.d_xx > 0.0 {
            self.diffuse_x(field, 0.5 * h);
        }
        self.stream(field, params, 0.5 * h);
    }

    fn stream(&mut self, field: &mut PhaseSpaceField, params: &PhysicalParams, h: f64) {
        let grid = field.grid;
        let scale = h / (params.test_mass * grid.dx());
        for j in 0..grid.n_p {
            let nu = grid.p(j) * scale;
            for i in 0..grid.n_x {
                self.line_in[i] = field.data[[i, j]];
            }
            advect_line(&self.line_in, &mut self.line_out, nu, self.scheme);
            for i in 0..grid.n_x {
                field.data[[i, j]] = self.line_out[i];
            }
        }
    }

    fn diffuse_x(&mut self, field: &mut PhaseSpaceField, h: f64) {
        let grid = field.grid;
        let n = grid.n_x;
        let r = self.d_xx * h / (grid.dx() * grid.dx());
        for j in 0..grid.n_p {
            for i in 0..n {
                self.line_in[i] = field.data[[i, j]];
            }
            for i in 0..n {
                let lap = self.line_in[(i + 1) % n] - 2.0 * self.line_in[i]
                    + self.line_in[(i + n - 1) % n];
                field.data[[i, j]] = self.line_in[i] + r * lap;
            }
        }
    }

    fn collide(&mut self, field: &mut PhaseSpaceField, op: &MomentumOperator, h: f64) {
        for mut row in field.data.rows_mut() {
            let slice = row.as_slice_mut().expect("field rows are contiguous");
            op.step_row(slice, &mut self.flux, h);
        }
    }
}
