//! One-dimensional jump kernel on a uniform momentum lattice.
//!
//! Jumps are integer multiples of the lattice spacing, q_k = k dp, so every
//! scattering event maps lattice nodes to lattice nodes exactly. The rate
//! for a jump q from momentum p factorises as
//!
//!   rate(q | p) = dp K(q) exp(-(beta / 2M) q p),
//!   K(q) = (n / M^2) sqrt(beta m / 2 pi) (Sigma(|q|) / |q|)
//!          exp(-(beta (1 + 2 alpha) / 8 m) q^2),
//!
//! which satisfies detailed balance against the node-sampled Maxwell
//! distribution identically on the lattice: the q-dependent parts cancel
//! between forward and reverse jumps with no spacing error.

use crate::physics::{CrossSectionModel, PhysicalParams, PhysicsError};

pub(crate) struct LatticeKernel {
    /// Signed index offsets k, |k| = 1..=n-1.
    shifts: Vec<isize>,
    /// q_k = shifts[k] * dp.
    qs: Vec<f64>,
    /// dp * K(q_k).
    weights: Vec<f64>,
    /// beta / (2 M), the momentum-drift scale in the exponent.
    drift: f64,
}

impl LatticeKernel {
    pub fn new(
        p_max: f64,
        n: usize,
        params: &PhysicalParams,
        xs: &CrossSectionModel,
    ) -> Result<Self, PhysicsError> {
        params.validate()?;
        xs.validate()?;
        if n < 8 {
            return Err(PhysicsError::InvalidParameter(format!(
                "momentum lattice n = {n} too coarse; need at least 8 nodes"
            )));
        }
        if !(p_max > 0.0) || !p_max.is_finite() {
            return Err(PhysicsError::InvalidParameter(format!(
                "momentum cutoff p_max = {p_max} must be positive"
            )));
        }
        let dp = 2.0 * p_max / (n - 1) as f64;
        let beta = params.inv_temperature;
        let m = params.gas_mass;
        let big_m = params.test_mass;
        let alpha = params.mass_ratio();
        let prefactor = params.gas_density / (big_m * big_m)
            * (beta * m / (2.0 * std::f64::consts::PI)).sqrt();
        let gauss = beta * (1.0 + 2.0 * alpha) / (8.0 * m);

        let mut shifts = Vec::with_capacity(2 * (n - 1));
        let mut qs = Vec::with_capacity(2 * (n - 1));
        let mut weights = Vec::with_capacity(2 * (n - 1));
        for k in 1..n as isize {
            for s in [k, -k] {
                let q = s as f64 * dp;
                shifts.push(s);
                qs.push(q);
                weights.push(dp * prefactor * xs.evaluate(q.abs()) / q.abs()
                    * (-gauss * q * q).exp());
            }
        }
        Ok(Self { shifts, qs, weights, drift: beta / (2.0 * big_m) })
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn shift(&self, idx: usize) -> isize {
        self.shifts[idx]
    }

    pub fn q(&self, idx: usize) -> f64 {
        self.qs[idx]
    }

    /// rate(q_idx | p), per unit time.
    pub fn rate(&self, idx: usize, p: f64) -> f64 {
        self.weights[idx] * (-self.drift * self.qs[idx] * p).exp()
    }

    /// Total scattering rate out of momentum p, counting jumps that leave
    /// the lattice (loss-only boundary).
    pub fn total_rate(&self, p: f64) -> f64 {
        (0..self.len()).map(|i| self.rate(i, p)).sum()
    }

    /// Small-momentum friction rate of the lattice model,
    /// eta_lat = (beta / 2M) sum_k w_k q_k^2, from expanding the mean jump
    /// rate to first order in p.
    pub fn lattice_friction(&self) -> f64 {
        self.drift
            * self
                .weights
                .iter()
                .zip(&self.qs)
                .map(|(w, q)| w * q * q)
                .sum::<f64>()
    }
}
