//! Position-frequency (spectral Wigner) form of the one-dimensional
//! quantum linear Boltzmann equation.
//!
//! The field rho(p, kappa) is the Fourier transform of the Wigner function
//! in position; kappa = 0 is the classical momentum distribution and
//! kappa > 0 carries spatial coherence at wavelength 2 pi / kappa. Free
//! streaming is diagonal here, a pure phase exp(-i kappa p t / M), and is
//! applied exactly. Collisions shift p by lattice jumps with the classical
//! gain weight, while the loss rate picks up a factor
//! cosh((beta hbar / 4M) q kappa) per jump in the quantum theory: coherent
//! superpositions decohere faster than populations relax, and at hbar = 0
//! (or kappa = 0) the factor is exactly 1, collapsing the equation onto the
//! classical master equation term by term.
//!
//! Only kappa >= 0 is stored; reality of the Wigner function fixes the
//! kappa < 0 half to the complex conjugate.

use ndarray::Array2;
use num_complex::Complex64;

use crate::physics::{CrossSectionModel, PhysicalParams, PhysicsError};

use super::kernel1d::LatticeKernel;
use super::QuantumError;

const MAX_RECORDS: usize = 512;

/// Collision model: classical loss weights, or the cosh-enhanced quantum
/// loss that encodes collisional decoherence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMode {
    Classical,
    Quantum,
}

/// Complex field rho(p_j, kappa_l); data\[\[l, j\]\] holds mode l at node j.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerSpectralField {
    pub p_max: f64,
    pub n_p: usize,
    pub kappa_max: f64,
    pub n_kappa: usize,
    pub data: Array2<Complex64>,
    pub time: f64,
}

impl WignerSpectralField {
    pub fn zeros(
        p_max: f64,
        n_p: usize,
        kappa_max: f64,
        n_kappa: usize,
    ) -> Result<Self, PhysicsError> {
        if n_p < 8 {
            return Err(PhysicsError::InvalidParameter(format!(
                "momentum lattice n_p = {n_p} too coarse; need at least 8 nodes"
            )));
        }
        if n_kappa < 2 {
            return Err(PhysicsError::InvalidParameter(format!(
                "need at least two frequency modes, got {n_kappa}"
            )));
        }
        if !(p_max > 0.0) || !(kappa_max > 0.0) {
            return Err(PhysicsError::InvalidParameter(format!(
                "cutoffs must be positive, got p_max = {p_max}, kappa_max = {kappa_max}"
            )));
        }
        Ok(Self {
            p_max,
            n_p,
            kappa_max,
            n_kappa,
            data: Array2::zeros((n_kappa, n_p)),
            time: 0.0,
        })
    }

    pub fn dp(&self) -> f64 {
        2.0 * self.p_max / (self.n_p - 1) as f64
    }

    pub fn p(&self, j: usize) -> f64 {
        -self.p_max + j as f64 * self.dp()
    }

    pub fn dkappa(&self) -> f64 {
        self.kappa_max / (self.n_kappa - 1) as f64
    }

    pub fn kappa(&self, l: usize) -> f64 {
        l as f64 * self.dkappa()
    }

    /// Maxwell momentum profile in every mode, each normalised to unit sum.
    pub fn maxwell_all_modes(
        p_max: f64,
        n_p: usize,
        kappa_max: f64,
        n_kappa: usize,
        params: &PhysicalParams,
    ) -> Result<Self, PhysicsError> {
        let mut field = Self::zeros(p_max, n_p, kappa_max, n_kappa)?;
        let var = params.thermal_momentum_sq();
        let mut profile: Vec<f64> =
            (0..n_p).map(|j| (-field.p(j).powi(2) / (2.0 * var)).exp()).collect();
        let norm: f64 = profile.iter().sum::<f64>() * field.dp();
        profile.iter_mut().for_each(|v| *v /= norm);
        for l in 0..n_kappa {
            for j in 0..n_p {
                field.data[[l, j]] = Complex64::new(profile[j], 0.0);
            }
        }
        Ok(field)
    }

    /// Integral of mode l over momentum: the amplitude of spatial coherence
    /// at frequency kappa_l.
    pub fn mode_sum(&self, l: usize) -> Complex64 {
        let dp = self.dp();
        (0..self.n_p).map(|j| self.data[[l, j]]).sum::<Complex64>() * dp
    }
}

/// Mode amplitudes at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRecord {
    pub t: f64,
    pub mode_sums: Vec<Complex64>,
}

/// Output of a spectral evolution.
#[derive(Debug, Clone)]
pub struct WignerSpectralRun {
    pub field: WignerSpectralField,
    pub records: Vec<SpectralRecord>,
}

/// Precomputed jump rates and loss tables for one grid geometry.
pub struct WignerSpectralSolver {
    kernel: LatticeKernel,
    mode: SpectralMode,
    n_p: usize,
    n_kappa: usize,
    p_max: f64,
    kappa_max: f64,
    inv_mass: f64,
    /// rates[[k, j]] = rate of jump k out of node j.
    rates: Array2<f64>,
    /// loss[[l, j]] = total loss rate at node j in mode l (cosh-weighted in
    /// quantum mode).
    loss: Array2<f64>,
    max_loss: f64,
}

impl WignerSpectralSolver {
    pub fn new(
        p_max: f64,
        n_p: usize,
        kappa_max: f64,
        n_kappa: usize,
        mode: SpectralMode,
        params: &PhysicalParams,
        xs: &CrossSectionModel,
    ) -> Result<Self, QuantumError> {
        let template = WignerSpectralField::zeros(p_max, n_p, kappa_max, n_kappa)?;
        let kernel = LatticeKernel::new(p_max, n_p, params, xs)?;
        let n_q = kernel.len();

        let mut rates = Array2::zeros((n_q, n_p));
        for k in 0..n_q {
            for j in 0..n_p {
                rates[[k, j]] = kernel.rate(k, template.p(j));
            }
        }

        // Quantum decoherence factor per jump: cosh((beta hbar / 4M) q kappa).
        let cosh_scale = match mode {
            SpectralMode::Classical => 0.0,
            SpectralMode::Quantum => {
                params.inv_temperature * params.hbar / (4.0 * params.test_mass)
            }
        };
        let mut loss = Array2::zeros((n_kappa, n_p));
        let mut max_loss = 0.0_f64;
        for l in 0..n_kappa {
            let kap = template.kappa(l);
            for j in 0..n_p {
                let mut total = 0.0;
                for k in 0..n_q {
                    total += rates[[k, j]] * (cosh_scale * kernel.q(k) * kap).cosh();
                }
                loss[[l, j]] = total;
                max_loss = max_loss.max(total);
            }
        }

        Ok(Self {
            kernel,
            mode,
            n_p,
            n_kappa,
            p_max,
            kappa_max,
            inv_mass: 1.0 / params.test_mass,
            rates,
            loss,
            max_loss,
        })
    }

    pub fn mode(&self) -> SpectralMode {
        self.mode
    }

    /// Small-momentum friction rate of the underlying lattice kernel.
    pub fn lattice_friction(&self) -> f64 {
        self.kernel.lattice_friction()
    }

    /// Largest explicit step: dt max_loss <= 1/2.
    pub fn max_stable_dt(&self) -> f64 {
        0.5 / self.max_loss
    }

    fn check_geometry(&self, field: &WignerSpectralField) -> Result<(), QuantumError> {
        if field.n_p != self.n_p
            || field.n_kappa != self.n_kappa
            || field.p_max != self.p_max
            || field.kappa_max != self.kappa_max
        {
            return Err(PhysicsError::InvalidParameter(
                "field geometry does not match the solver".into(),
            )
            .into());
        }
        Ok(())
    }

    /// One step: exact streaming phase for dt/2, explicit Euler collision
    /// for dt, exact streaming phase for dt/2.
    pub fn step(&self, field: &mut WignerSpectralField, dt: f64) -> Result<(), QuantumError> {
        self.check_geometry(field)?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(PhysicsError::InvalidParameter(format!(
                "step must be positive and finite, got {dt}"
            ))
            .into());
        }
        let max_dt = self.max_stable_dt();
        if dt > max_dt {
            return Err(QuantumError::UnstableTimestep { dt, max_dt });
        }

        self.apply_phase(field, 0.5 * dt);
        self.collide(field, dt);
        self.apply_phase(field, 0.5 * dt);
        field.time += dt;
        Ok(())
    }

    fn apply_phase(&self, field: &mut WignerSpectralField, h: f64) {
        for l in 0..self.n_kappa {
            let kap = field.kappa(l);
            if kap == 0.0 {
                continue; // identity phase; keeps the classical row exactly real
            }
            for j in 0..self.n_p {
                let angle = -kap * field.p(j) * h * self.inv_mass;
                field.data[[l, j]] *= Complex64::from_polar(1.0, angle);
            }
        }
    }

    fn collide(&self, field: &mut WignerSpectralField, h: f64) {
        let n_q = self.kernel.len();
        let mut row = vec![Complex64::default(); self.n_p];
        for l in 0..self.n_kappa {
            for j in 0..self.n_p {
                row[j] = field.data[[l, j]];
            }
            for j in 0..self.n_p {
                let mut gain = Complex64::default();
                for k in 0..n_q {
                    let src = j as isize - self.kernel.shift(k);
                    if src >= 0 && (src as usize) < self.n_p {
                        gain += row[src as usize] * self.rates[[k, src as usize]];
                    }
                }
                field.data[[l, j]] = row[j] + (gain - row[j] * self.loss[[l, j]]) * h;
            }
        }
    }

    /// Evolves a copy of `f0` to t_end with fixed step dt (shortened final
    /// step), recording mode amplitudes along the way.
    pub fn evolve(
        &self,
        f0: &WignerSpectralField,
        t_end: f64,
        dt: f64,
    ) -> Result<WignerSpectralRun, QuantumError> {
        self.check_geometry(f0)?;
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(PhysicsError::InvalidParameter(format!(
                "horizon must be positive and finite, got {t_end}"
            ))
            .into());
        }
        let mut field = f0.clone();
        field.time = 0.0;

        let n_full = (t_end / dt + 1e-9).floor() as usize;
        let remainder = t_end - n_full as f64 * dt;
        let has_tail = remainder > 1e-9 * dt;
        let n_steps = n_full + usize::from(has_tail);
        let stride = (n_steps / MAX_RECORDS).max(1);

        let record = |f: &WignerSpectralField| SpectralRecord {
            t: f.time,
            mode_sums: (0..f.n_kappa).map(|l| f.mode_sum(l)).collect(),
        };
        let mut records = vec![record(&field)];
        for k in 0..n_steps {
            let h = if k < n_full { dt } else { remainder };
            self.step(&mut field, h)?;
            field.time = if k + 1 == n_steps {
                t_end
            } else {
                (k + 1) as f64 * dt
            };
            if (k + 1) % stride == 0 || k + 1 == n_steps {
                records.push(record(&field));
            }
        }
        Ok(WignerSpectralRun { field, records })
    }
}

/// Builds a solver for the geometry of `f0` and evolves it to t_end.
pub fn wigner_spectral_evolve(
    f0: &WignerSpectralField,
    t_end: f64,
    dt: f64,
    mode: SpectralMode,
    params: &PhysicalParams,
    xs: &CrossSectionModel,
) -> Result<WignerSpectralRun, QuantumError> {
    let solver = WignerSpectralSolver::new(
        f0.p_max, f0.n_p, f0.kappa_max, f0.n_kappa, mode, params, xs,
    )?;
    solver.evolve(f0, t_end, dt)
}
