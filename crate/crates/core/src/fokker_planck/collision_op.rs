//! Momentum-space friction-diffusion operator in Chang-Cooper form.
//!
//! The operator is d/dp [ eta ( p f + (M/beta) df/dp ) ], discretised as a
//! flux balance over momentum cells with interpolation weights chosen so the
//! discrete flux vanishes identically on the node-sampled Maxwell
//! distribution. Zero flux through both momentum boundaries makes the update
//! conserve the Riemann-sum norm to rounding.

use crate::physics::PhysicalParams;

use super::grid::PhaseSpaceGrid;

/// Interpolation weight delta(w) = 1/(1 - e^{-w}) - 1/w.
///
/// w is the dimensionless drift-to-diffusion ratio across one cell face.
/// delta -> 1/2 recovers centred differencing, delta -> {0, 1} is full
/// upwinding; this choice zeroes the flux on exp(-beta p^2 / 2M) exactly.
fn chang_cooper_weight(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        // Series about w = 0; next term is w^5/30240, below rounding here.
        0.5 + w / 12.0 - w.powi(3) / 720.0
    } else {
        1.0 / (-(-w).exp_m1()) - 1.0 / w
    }
}

/// Precomputed per-face flux coefficients for one (grid, eta, params) triple.
///
/// Face k sits between momentum nodes k and k+1; the flux there is
/// `lo[k] * f_k + hi[k] * f_{k+1}`, and faces outside the grid carry none.
#[derive(Debug, Clone)]
pub struct MomentumOperator {
    lo: Vec<f64>,
    hi: Vec<f64>,
    dp: f64,
    eta: f64,
}

impl MomentumOperator {
    pub fn new(grid: &PhaseSpaceGrid, eta: f64, params: &PhysicalParams) -> Self {
        let dp = grid.dp();
        let diff = params.thermal_momentum_sq() / dp; // (M/beta)/dp
        let n_faces = grid.n_p - 1;
        let mut lo = Vec::with_capacity(n_faces);
        let mut hi = Vec::with_capacity(n_faces);
        for k in 0..n_faces {
            let p_face = 0.5 * (grid.p(k) + grid.p(k + 1));
            let w = p_face * dp / params.thermal_momentum_sq();
            let delta = chang_cooper_weight(w);
            lo.push(eta * (p_face * (1.0 - delta) - diff));
            hi.push(eta * (p_face * delta + diff));
        }
        Self { lo, hi, dp, eta }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Largest stable Euler step (conservative factor included by callers).
    pub fn stability_limit(&self, params: &PhysicalParams) -> f64 {
        self.dp * self.dp / (2.0 * self.eta * params.thermal_momentum_sq())
    }

    /// One explicit Euler step of length dt on a single momentum row.
    ///
    /// `row` and `scratch` must both have length n_p; `scratch` receives the
    /// face fluxes.
    pub fn step_row(&self, row: &mut [f64], scratch: &mut [f64], dt: f64) {
        let n_faces = self.lo.len();
        debug_assert_eq!(row.len(), n_faces + 1);
        debug_assert!(scratch.len() >= n_faces);
        for k in 0..n_faces {
            scratch[k] = self.lo[k] * row[k] + self.hi[k] * row[k + 1];
        }
        let r = dt / self.dp;
        row[0] += r * scratch[0];
        for j in 1..n_faces {
            row[j] += r * (scratch[j] - scratch[j - 1]);
        }
        row[n_faces] += r * -scratch[n_faces - 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::PhysicalParams;
    use approx::assert_relative_eq;

    fn setup(n_p: usize) -> (PhaseSpaceGrid, PhysicalParams, MomentumOperator) {
        let params = PhysicalParams::default_lab();
        let grid = PhaseSpaceGrid::new(-1.0, 1.0, 8, 8.0, n_p).unwrap();
        let op = MomentumOperator::new(&grid, 1.0, &params);
        (grid, params, op)
    }

    fn maxwell_row(grid: &PhaseSpaceGrid, params: &PhysicalParams) -> Vec<f64> {
        let var = params.thermal_momentum_sq();
        let mut row: Vec<f64> =
            (0..grid.n_p).map(|j| (-grid.p(j).powi(2) / (2.0 * var)).exp()).collect();
        let norm: f64 = row.iter().sum::<f64>() * grid.dp();
        row.iter_mut().for_each(|v| *v /= norm);
        row
    }

    #[test]
    fn weight_limits_and_series_join() {
        assert_relative_eq!(chang_cooper_weight(0.0), 0.5);
        // Symmetric about 1/2: delta(-w) = 1 - delta(w).
        for &w in &[0.3, 1.0, 4.0, 30.0] {
            assert_relative_eq!(
                chang_cooper_weight(-w),
                1.0 - chang_cooper_weight(w),
                max_relative = 1e-12
            );
        }
        // Series and closed form agree across the switch point. The closed
        // form loses ~1e-12 to cancellation there, which is the very reason
        // the series branch exists; compare just above that floor.
        for &w in &[9.9e-5, 1.01e-4] {
            let series = 0.5 + w / 12.0 - w * w * w / 720.0;
            let closed = 1.0 / (-(-w as f64).exp_m1()) - 1.0 / w;
            assert_relative_eq!(series, closed, epsilon = 5e-12);
        }
        // Strong drift upwinds fully.
        assert!(chang_cooper_weight(50.0) > 0.97);
        assert!(chang_cooper_weight(-50.0) < 0.03);
    }

    #[test]
    fn maxwell_row_is_stationary_to_rounding() {
        let (grid, params, op) = setup(96);
        let mut row = maxwell_row(&grid, &params);
        let reference = row.clone();
        let mut scratch = vec![0.0; grid.n_p];
        let dt = 0.4 * op.stability_limit(&params);
        for _ in 0..2_000 {
            op.step_row(&mut row, &mut scratch, dt);
        }
        let drift = row
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(drift < 1e-13, "Maxwell drifted by {drift:.3e}");
    }

    #[test]
    fn step_conserves_mass_and_positivity() {
        let (grid, params, op) = setup(64);
        // Lopsided start: shifted Gaussian.
        let mut row: Vec<f64> =
            (0..grid.n_p).map(|j| (-(grid.p(j) - 3.0).powi(2)).exp()).collect();
        let mass0: f64 = row.iter().sum::<f64>() * grid.dp();
        let mut scratch = vec![0.0; grid.n_p];
        let dt = 0.4 * op.stability_limit(&params);
        for _ in 0..500 {
            op.step_row(&mut row, &mut scratch, dt);
            assert!(row.iter().all(|&v| v >= 0.0), "positivity lost");
        }
        let mass1: f64 = row.iter().sum::<f64>() * grid.dp();
        assert_relative_eq!(mass0, mass1, max_relative = 1e-13);
    }

    #[test]
    fn relaxes_toward_maxwell() {
        let (grid, params, op) = setup(64);
        let mut row: Vec<f64> =
            (0..grid.n_p).map(|j| (-(grid.p(j) - 2.0).powi(2) * 2.0).exp()).collect();
        let norm0: f64 = row.iter().sum::<f64>() * grid.dp();
        row.iter_mut().for_each(|v| *v /= norm0);
        let target = maxwell_row(&grid, &params);
        let mut scratch = vec![0.0; grid.n_p];
        let dt = 0.4 * op.stability_limit(&params);
        // 16 relaxation times at eta = 1: the slowest mode decays like
        // e^{-eta t}, so the residual sits well under the 1e-5 bound.
        let steps = (16.0 / dt).ceil() as usize;
        for _ in 0..steps {
            op.step_row(&mut row, &mut scratch, dt);
        }
        let l1: f64 = row
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * grid.dp();
        assert!(l1 < 1e-5, "L1 distance to Maxwell after relaxation: {l1:.3e}");
    }
}
