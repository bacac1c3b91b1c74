//! Collision kernel of the linear Boltzmann equation: total rates by nested
//! quadrature, exact momentum-transfer sampling by rejection from a tabulated
//! radial envelope, and waiting times by Poisson thinning of the envelope
//! rate (which preserves the exact exponential law at state-dependent rates).

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use rand::Rng;
use thiserror::Error;

use crate::physics::quadrature::integrate_adaptive;
use crate::physics::{
    CrossSectionModel, MomentumVector, PhysicalParams, PhysicsError, StructureFactorForm,
    TransferVector, Vec3,
};

/// Uniform cells in the radial envelope table.
const ENVELOPE_CELLS: usize = 10_000;
/// Headroom on cell majorants; the envelope check makes violations loud.
const MAJORANT_SLACK: f64 = 1.0 + 1e-3;
/// Geometric spacing of the |p| ladder nodes the tables are built at.
const LADDER_RATIO: f64 = 1.3;
/// Proposal budget before sampling is declared stalled.
const MAX_PROPOSALS_PER_DRAW: u64 = 10_000_000;

#[derive(Debug, Clone, Error)]
pub enum CollisionError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("envelope majorant violated at q = {q:.6e}: density/majorant = {ratio:.6e}")]
    EnvelopeViolated { q: f64, ratio: f64 },
    #[error("rejection sampling stalled after {proposals} proposals")]
    SamplingStalled { proposals: u64 },
}

/// Piecewise-constant majorant of the radial candidate density
/// h(q) = q Σ(q) √(βm/2π) e^(envelope exponent), valid for every |p| up to
/// `node_p`. `cumulative` holds prefix sums of cell masses for inverse-CDF
/// cell selection.
struct EnvelopeTable {
    dq: f64,
    majorants: Vec<f64>,
    cumulative: Vec<f64>,
    mass: f64,
    /// Candidate-generation rate (n/M²)·4π·mass; an upper bound on R(p).
    rate: f64,
}

pub struct CollisionKernel {
    params: PhysicalParams,
    xs: CrossSectionModel,
    form: StructureFactorForm,
    log_prefactor: f64,
    thermal_p: f64,
    tables: RwLock<Vec<Option<Arc<EnvelopeTable>>>>,
    proposals: AtomicU64,
    accepts: AtomicU64,
}

impl CollisionKernel {
    pub fn new(
        params: PhysicalParams,
        xs: CrossSectionModel,
        form: StructureFactorForm,
    ) -> Result<Self, PhysicsError> {
        params.validate()?;
        xs.validate()?;
        let beta = params.inv_temperature;
        let m = params.gas_mass;
        Ok(Self {
            params,
            xs,
            form,
            log_prefactor: 0.5 * (beta * m / (2.0 * std::f64::consts::PI)).ln(),
            thermal_p: params.thermal_momentum_sq().sqrt(),
            tables: RwLock::new(Vec::new()),
            proposals: AtomicU64::new(0),
            accepts: AtomicU64::new(0),
        })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn form(&self) -> StructureFactorForm {
        self.form
    }

    /// Exponent of the reduced structure factor at signed momentum component
    /// `p_along` along the transfer axis.
    fn exponent(&self, q: f64, p_along: f64) -> f64 {
        let beta = self.params.inv_temperature;
        let m = self.params.gas_mass;
        let alpha = self.params.mass_ratio();
        match self.form {
            StructureFactorForm::MaxwellBoltzmann => {
                let s = (1.0 + alpha) * q + 2.0 * alpha * p_along;
                -beta / (8.0 * m) * s * s
            }
            StructureFactorForm::Brownian => {
                -beta / (8.0 * m) * (1.0 + 2.0 * alpha) * q * q
                    - beta / (2.0 * self.params.test_mass) * q * p_along
            }
        }
    }

    /// Upper bound of `exponent` over all |p| ≤ p_node and all angles; both
    /// forms are monotone in |p|, so a table built at a ladder node stays a
    /// valid majorant for smaller momenta.
    fn envelope_exponent(&self, q: f64, p_node: f64) -> f64 {
        let beta = self.params.inv_temperature;
        let m = self.params.gas_mass;
        let alpha = self.params.mass_ratio();
        match self.form {
            StructureFactorForm::MaxwellBoltzmann => {
                let s = ((1.0 + alpha) * q - 2.0 * alpha * p_node).max(0.0);
                -beta / (8.0 * m) * s * s
            }
            StructureFactorForm::Brownian => {
                -beta / (8.0 * m) * (1.0 + 2.0 * alpha) * q * q
                    + beta / (2.0 * self.params.test_mass) * q * p_node
            }
        }
    }

    /// Candidate density q² Σ(q) S_env(q) = q Σ(q) √(βm/2π) e^(env exponent).
    fn envelope_density(&self, q: f64, p_node: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        let sigma = self.xs.evaluate(q);
        if sigma == 0.0 {
            return 0.0;
        }
        q * sigma * (self.log_prefactor + self.envelope_exponent(q, p_node)).exp()
    }

    /// Exact joint density q² Σ(q) S₁(q, p_along) of the transfer modulus and
    /// direction cosine (up to the common (n/M²)·2π·du measure).
    fn joint_density(&self, q: f64, p_along: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        let sigma = self.xs.evaluate(q);
        if sigma == 0.0 {
            return 0.0;
        }
        q * sigma * (self.log_prefactor + self.exponent(q, p_along)).exp()
    }

    /// Transfer cutoff: beyond it the Gaussian exponent is below e^(−100) of
    /// its peak for every angle, so the neglected tail is irrelevant next to
    /// any statistical resolution.
    fn q_cutoff(&self, p_norm: f64) -> f64 {
        let m = self.params.gas_mass;
        let beta = self.params.inv_temperature;
        2.0 * self.params.mass_ratio() * p_norm + 10.0 * (8.0 * m / beta).sqrt()
    }

    fn ladder_level(&self, p_norm: f64) -> usize {
        if p_norm <= self.thermal_p {
            0
        } else {
            ((p_norm / self.thermal_p).ln() / LADDER_RATIO.ln()).ceil() as usize
        }
    }

    fn node_momentum(&self, level: usize) -> f64 {
        self.thermal_p * LADDER_RATIO.powi(level as i32)
    }

    fn build_table(&self, level: usize) -> EnvelopeTable {
        let node_p = self.node_momentum(level);
        let q_hi = self.q_cutoff(node_p);
        let dq = q_hi / ENVELOPE_CELLS as f64;
        let mut edge_values = Vec::with_capacity(ENVELOPE_CELLS + 1);
        for i in 0..=ENVELOPE_CELLS {
            edge_values.push(self.envelope_density(i as f64 * dq, node_p));
        }
        let mut majorants = Vec::with_capacity(ENVELOPE_CELLS);
        let mut cumulative = Vec::with_capacity(ENVELOPE_CELLS + 1);
        cumulative.push(0.0);
        let mut mass = 0.0;
        for i in 0..ENVELOPE_CELLS {
            let m_i = edge_values[i].max(edge_values[i + 1]) * MAJORANT_SLACK;
            majorants.push(m_i);
            mass += m_i * dq;
            cumulative.push(mass);
        }
        let n = self.params.gas_density;
        let big_m = self.params.test_mass;
        let rate = n / (big_m * big_m) * 4.0 * std::f64::consts::PI * mass;
        EnvelopeTable {
            dq,
            majorants,
            cumulative,
            mass,
            rate,
        }
    }

    fn table_for(&self, p_norm: f64) -> Arc<EnvelopeTable> {
        let level = self.ladder_level(p_norm);
        {
            let tables = self.tables.read().expect("table lock poisoned");
            if let Some(Some(t)) = tables.get(level) {
                return Arc::clone(t);
            }
        }
        let built = Arc::new(self.build_table(level));
        let mut tables = self.tables.write().expect("table lock poisoned");
        if tables.len() <= level {
            tables.resize(level + 1, None);
        }
        let slot = &mut tables[level];
        if let Some(t) = slot {
            Arc::clone(t)
        } else {
            *slot = Some(Arc::clone(&built));
            built
        }
    }

    /// Total collision rate R(p) = (n/M²)∫d³q Σ(q) S(q, E(q,p)), reduced to a
    /// nested (q, cosθ) quadrature by azimuthal symmetry about p.
    pub fn total_rate(&self, p: MomentumVector) -> Result<f64, PhysicsError> {
        self.rate_integral(p.norm(), |_, _| 1.0)
    }

    /// R(p) together with the mean energy transfer per collision.
    pub fn rate_and_mean_energy(&self, p: MomentumVector) -> Result<(f64, f64), PhysicsError> {
        let p_norm = p.norm();
        let rate = self.rate_integral(p_norm, |_, _| 1.0)?;
        if rate <= 0.0 {
            return Err(PhysicsError::Domain(
                "mean energy transfer undefined at zero collision rate".into(),
            ));
        }
        let big_m = self.params.test_mass;
        let weighted = self.rate_integral(p_norm, |q, p_along| {
            (q * q + 2.0 * q * p_along) / (2.0 * big_m)
        })?;
        Ok((rate, weighted / rate))
    }

    /// (n/M²)·2π·∫dq ∫du q²Σ(q)S₁(q,|p|u)·weight(q,|p|u). The inner angular
    /// integral runs adaptively inside the outer radial one.
    fn rate_integral<W: Fn(f64, f64) -> f64>(
        &self,
        p_norm: f64,
        weight: W,
    ) -> Result<f64, PhysicsError> {
        let q_hi = self.q_cutoff(p_norm);
        let outer = integrate_adaptive(
            |q| {
                if q <= 0.0 {
                    return 0.0;
                }
                let sigma = self.xs.evaluate(q);
                if sigma == 0.0 {
                    return 0.0;
                }
                let inner = integrate_adaptive(
                    |u| {
                        let p_along = p_norm * u;
                        self.exponent(q, p_along).exp() * weight(q, p_along)
                    },
                    -1.0,
                    1.0,
                    1e-9,
                    1e-300,
                )
                .map(|r| r.value)
                .unwrap_or(f64::NAN);
                q * sigma * self.log_prefactor.exp() * inner
            },
            0.0,
            q_hi,
            1e-8,
            1e-300,
        )?;
        let n = self.params.gas_density;
        let big_m = self.params.test_mass;
        let value = n / (big_m * big_m) * 2.0 * std::f64::consts::PI * outer.value;
        if !value.is_finite() {
            return Err(PhysicsError::QuadratureConvergence {
                achieved: f64::NAN,
                requested: 1e-8,
            });
        }
        Ok(value)
    }

    /// One rejection proposal against `table`. Returns the accepted transfer
    /// vector or None on rejection; errors if the majorant is violated.
    fn propose<R: Rng + ?Sized>(
        &self,
        table: &EnvelopeTable,
        p: MomentumVector,
        rng: &mut R,
    ) -> Result<Option<TransferVector>, CollisionError> {
        self.proposals.fetch_add(1, Ordering::Relaxed);
        let target = rng.random::<f64>() * table.mass;
        // First cell whose cumulative upper edge exceeds the target.
        let cell = table
            .cumulative
            .partition_point(|&c| c <= target)
            .saturating_sub(1)
            .min(table.majorants.len() - 1);
        let majorant = table.majorants[cell];
        if majorant <= 0.0 {
            return Ok(None);
        }
        let q = cell as f64 * table.dq + (target - table.cumulative[cell]) / majorant;
        let p_norm = p.norm();
        let u = rng.random_range(-1.0..1.0);
        let density = self.joint_density(q, p_norm * u);
        let ratio = density / majorant;
        if ratio > 1.0 + 1e-9 {
            return Err(CollisionError::EnvelopeViolated { q, ratio });
        }
        if rng.random::<f64>() >= ratio {
            return Ok(None);
        }
        self.accepts.fetch_add(1, Ordering::Relaxed);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let (e1, e2, e3) = orthonormal_frame(p);
        let sin_theta = (1.0 - u * u).max(0.0).sqrt();
        let q_vec = e1.scale(q * sin_theta * phi.cos())
            + e2.scale(q * sin_theta * phi.sin())
            + e3.scale(q * u);
        Ok(Some(q_vec))
    }

    /// Draws one momentum transfer with density ∝ Σ(q)S(q, E(q,p)) in d³q.
    pub fn sample_transfer<R: Rng + ?Sized>(
        &self,
        p: MomentumVector,
        rng: &mut R,
    ) -> Result<TransferVector, CollisionError> {
        let table = self.table_for(p.norm());
        if table.mass <= 0.0 {
            return Err(CollisionError::Physics(PhysicsError::Domain(
                "cannot sample transfers from a zero-rate kernel".into(),
            )));
        }
        for attempt in 0..MAX_PROPOSALS_PER_DRAW {
            if let Some(q) = self.propose(&table, p, rng)? {
                return Ok(q);
            }
            let _ = attempt;
        }
        Err(CollisionError::SamplingStalled {
            proposals: MAX_PROPOSALS_PER_DRAW,
        })
    }

    /// Waiting time to the next collision at fixed p plus its transfer, by
    /// thinning: candidates arrive at the envelope rate and each is accepted
    /// with the exact density ratio, so the accepted event time is exactly
    /// Exp(R(p)). Returns (∞, 0) when the kernel has zero rate.
    pub fn sample_collision<R: Rng + ?Sized>(
        &self,
        p: MomentumVector,
        rng: &mut R,
    ) -> Result<(f64, TransferVector), CollisionError> {
        let table = self.table_for(p.norm());
        if table.mass <= 0.0 || table.rate <= 0.0 {
            return Ok((f64::INFINITY, Vec3::ZERO));
        }
        let mut elapsed = 0.0;
        for _ in 0..MAX_PROPOSALS_PER_DRAW {
            // -ln(1-U)/rate with U in [0,1) keeps the argument in (0,1].
            let gap = -(1.0 - rng.random::<f64>()).ln() / table.rate;
            elapsed += gap;
            if let Some(q) = self.propose(&table, p, rng)? {
                return Ok((elapsed, q));
            }
        }
        Err(CollisionError::SamplingStalled {
            proposals: MAX_PROPOSALS_PER_DRAW,
        })
    }

    /// Fraction of proposals accepted so far; a diagnostic for envelope
    /// quality. Below ~1e-3 the envelope is pathologically loose.
    pub fn acceptance_fraction(&self) -> Option<f64> {
        let proposals = self.proposals.load(Ordering::Relaxed);
        if proposals == 0 {
            None
        } else {
            Some(self.accepts.load(Ordering::Relaxed) as f64 / proposals as f64)
        }
    }
}

fn orthonormal_frame(p: Vec3) -> (Vec3, Vec3, Vec3) {
    let n = p.norm();
    let e3 = if n > 0.0 {
        p.scale(1.0 / n)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    let helper = if e3.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let mut e1 = helper - e3.scale(helper.dot(e3));
    e1 = e1.scale(1.0 / e1.norm());
    let e2 = e3.cross(e1);
    (e1, e2, e3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn kernel(m: f64, sigma0: f64, form: StructureFactorForm) -> CollisionKernel {
        let params = PhysicalParams::new(1.0, m, 1.0, 1.0, 1.0).unwrap();
        let xs = CrossSectionModel::constant(sigma0).unwrap();
        CollisionKernel::new(params, xs, form).unwrap()
    }

    #[test]
    fn rate_at_rest_matches_closed_forms() {
        // Brownian, constant Σ: R(0) = (16πnσ0m/(M²β(1+2α)))√(βm/2π).
        let k = kernel(0.1, 1.0, StructureFactorForm::Brownian);
        let r = k.total_rate(Vec3::ZERO).unwrap();
        assert_relative_eq!(r, 0.5284436396808015, max_relative = 1e-8);

        let k_light = kernel(0.01, 1.0, StructureFactorForm::Brownian);
        let r_light = k_light.total_rate(Vec3::ZERO).unwrap();
        assert_relative_eq!(r_light, 0.019659829604949025, max_relative = 1e-8);

        // MB form at p = 0 replaces (1+2α) by (1+α)² in the exponent.
        let k_mb = kernel(0.1, 1.0, StructureFactorForm::MaxwellBoltzmann);
        let r_mb = k_mb.total_rate(Vec3::ZERO).unwrap();
        let alpha: f64 = 0.1;
        let m: f64 = 0.1;
        let expect = 16.0 * std::f64::consts::PI * m / (1.0 + alpha).powi(2)
            * (m / (2.0 * std::f64::consts::PI)).sqrt();
        assert_relative_eq!(r_mb, expect, max_relative = 1e-8);
    }

    #[test]
    fn rate_is_isotropic_and_null_for_zero_cross_section() {
        let k = kernel(0.1, 1.0, StructureFactorForm::MaxwellBoltzmann);
        let r1 = k.total_rate(Vec3::new(0.0, 0.0, 1.7)).unwrap();
        let r2 = k.total_rate(Vec3::new(1.7, 0.0, 0.0)).unwrap();
        let r3 = k
            .total_rate(Vec3::new(1.0, 1.0, 1.0).scale(1.7 / 3.0f64.sqrt()))
            .unwrap();
        assert_relative_eq!(r1, r2, max_relative = 1e-12);
        assert_relative_eq!(r1, r3, max_relative = 1e-10);

        let null = kernel(0.1, 0.0, StructureFactorForm::MaxwellBoltzmann);
        assert_eq!(null.total_rate(Vec3::new(0.0, 0.0, 1.0)).unwrap(), 0.0);
        let (t, _) = null
            .sample_collision(Vec3::new(0.0, 0.0, 1.0), &mut ChaCha12Rng::seed_from_u64(1))
            .unwrap();
        assert!(t.is_infinite());
    }

    #[test]
    fn waiting_times_are_exponential_with_the_quadrature_rate() {
        let k = kernel(0.1, 1.0, StructureFactorForm::MaxwellBoltzmann);
        let p = Vec3::new(0.0, 0.0, 1.0);
        let rate = k.total_rate(p).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4242);
        let n = 100_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let (t, _) = k.sample_collision(p, &mut rng).unwrap();
            sum += t;
            sum_sq += t * t;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        let expect = 1.0 / rate;
        assert!(
            (mean - expect).abs() < 3.0 * se,
            "waiting-time mean {mean:.6} vs 1/R = {expect:.6} (se {se:.2e})"
        );
    }

    #[test]
    fn sampled_energy_transfer_matches_quadrature_moment() {
        let k = kernel(0.1, 1.0, StructureFactorForm::MaxwellBoltzmann);
        let p = Vec3::ZERO;
        let (_, mean_e) = k.rate_and_mean_energy(p).unwrap();
        let params = *k.params();
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let q = k.sample_transfer(p, &mut rng).unwrap();
            let e = crate::physics::energy_transfer(q, p, &params);
            sum += e;
            sum_sq += e * e;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!(
            (mean - mean_e).abs() < 3.0 * se,
            "sampled ⟨E⟩ = {mean:.6e} vs quadrature {mean_e:.6e} (se {se:.2e})"
        );
        // At rest every collision heats the particle.
        assert!(mean_e > 0.0);
    }

    #[test]
    fn azimuthal_angle_about_p_is_uniform() {
        let k = kernel(0.1, 1.0, StructureFactorForm::MaxwellBoltzmann);
        let p = Vec3::new(0.0, 0.0, 2.0);
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        let n = 10_000usize;
        let mut phis: Vec<f64> = (0..n)
            .map(|_| {
                let q = k.sample_transfer(p, &mut rng).unwrap();
                (q.y.atan2(q.x) + std::f64::consts::PI) / std::f64::consts::TAU
            })
            .collect();
        phis.sort_by(f64::total_cmp);
        let mut ks = 0.0f64;
        for (i, v) in phis.iter().enumerate() {
            let hi = ((i + 1) as f64 / n as f64 - v).abs();
            let lo = (v - i as f64 / n as f64).abs();
            ks = ks.max(hi).max(lo);
        }
        let critical = 1.6276 / (n as f64).sqrt();
        assert!(ks < critical, "KS statistic {ks:.5} vs 1% critical {critical:.5}");
    }

    #[test]
    fn radial_marginal_matches_quadrature_chi_squared() {
        let k = kernel(0.1, 1.0, StructureFactorForm::MaxwellBoltzmann);
        let p = Vec3::new(0.0, 0.0, 1.5);
        let p_norm = p.norm();
        let rate = k.total_rate(p).unwrap();

        // CDF of |q| from the same nested quadrature the rate uses.
        let cdf = |q_up: f64| -> f64 {
            if q_up <= 0.0 {
                return 0.0;
            }
            let outer = integrate_adaptive(
                |q| {
                    if q <= 0.0 {
                        return 0.0;
                    }
                    let inner = integrate_adaptive(
                        |u| k.exponent(q, p_norm * u).exp(),
                        -1.0,
                        1.0,
                        1e-9,
                        1e-300,
                    )
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN);
                    q * k.xs.evaluate(q) * k.log_prefactor.exp() * inner
                },
                0.0,
                q_up,
                1e-9,
                1e-300,
            )
            .unwrap();
            let n_density = k.params.gas_density;
            let big_m = k.params.test_mass;
            n_density / (big_m * big_m) * 2.0 * std::f64::consts::PI * outer.value / rate
        };

        // 40 equal-probability bins by bisection on the CDF.
        let n_bins = 40usize;
        let q_hi = k.q_cutoff(p_norm);
        let mut edges = vec![0.0];
        for b in 1..n_bins {
            let target = b as f64 / n_bins as f64;
            let (mut lo, mut hi) = (0.0, q_hi);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if cdf(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            edges.push(0.5 * (lo + hi));
        }
        edges.push(f64::INFINITY);

        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let n = 40_000usize;
        let mut counts = vec![0usize; n_bins];
        for _ in 0..n {
            let q = k.sample_transfer(p, &mut rng).unwrap().norm();
            let bin = edges.partition_point(|&e| e <= q).saturating_sub(1);
            counts[bin.min(n_bins - 1)] += 1;
        }
        let expected = n as f64 / n_bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 1% upper critical value of chi-squared with 39 dof.
        assert!(chi2 < 62.428, "chi² = {chi2:.2} vs 62.428");
    }

    #[test]
    fn transfer_sampling_is_deterministic_per_seed() {
        let k = kernel(0.1, 1.0, StructureFactorForm::MaxwellBoltzmann);
        let p = Vec3::new(0.3, -0.2, 1.1);
        let draw = |seed: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            (0..16)
                .map(|_| k.sample_transfer(p, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        let a = draw(5);
        let b = draw(5);
        for (u, v) in a.iter().zip(&b) {
            assert_eq!(u.x, v.x);
            assert_eq!(u.y, v.y);
            assert_eq!(u.z, v.z);
        }
    }
}
