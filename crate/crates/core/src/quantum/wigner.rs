//! Discrete Wigner transform of a momentum-space density matrix.
//!
//! Antidiagonals of rho carry the spatial information: the transform at
//! momentum node c sums rho[c+r, c-r] with phases exp(i 2 pi r l / n_w),
//! which places position samples at x_l = pi hbar l / (dp n_w). Restricting
//! to integer antidiagonal offsets r keeps the transform exact: summing the
//! position axis recovers the populations identically because only r = 0
//! survives the phase average, and Hermiticity pairs +r with -r so the
//! result is real to round-off.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::physics::{PhysicalParams, PhysicsError};

use super::nalbe::MomentumDensityMatrix;
use super::QuantumError;

/// Real phase-space table W(x_l, p_c); data\[\[l, c\]\] with l the position
/// index (symmetric around x = 0) and c the momentum node.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    pub p_max: f64,
    pub n_p: usize,
    pub n_w: usize,
    /// Position sample spacing pi hbar / (dp n_w).
    pub w_x: f64,
    pub data: Array2<f64>,
    /// Largest imaginary part discarded when taking the real part; a
    /// Hermitian input keeps this at round-off level.
    pub imag_residual: f64,
    pub time: f64,
}

impl WignerField {
    pub fn dp(&self) -> f64 {
        2.0 * self.p_max / (self.n_p - 1) as f64
    }

    pub fn p(&self, c: usize) -> f64 {
        -self.p_max + c as f64 * self.dp()
    }

    pub fn x(&self, l: usize) -> f64 {
        (l as isize - (self.n_w / 2) as isize) as f64 * self.w_x
    }

    /// Integral over position at fixed momentum; equals the population
    /// rho[c, c] exactly.
    pub fn momentum_marginal(&self, c: usize) -> f64 {
        (0..self.n_w).map(|l| self.data[[l, c]]).sum::<f64>() * self.w_x
    }

    /// Integral over momentum at fixed position.
    pub fn position_density(&self, l: usize) -> f64 {
        (0..self.n_p).map(|c| self.data[[l, c]]).sum::<f64>() * self.dp()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), std::io::Error> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "x,p,f")?;
        for l in 0..self.n_w {
            for c in 0..self.n_p {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e}",
                    self.x(l),
                    self.p(c),
                    self.data[[l, c]]
                )?;
            }
        }
        w.flush()
    }
}

/// Exact discrete Wigner transform on n_w position samples (n_w >= n_p so
/// every antidiagonal fits one phase period without aliasing).
pub fn wigner_transform(
    rho: &MomentumDensityMatrix,
    n_w: usize,
    params: &PhysicalParams,
) -> Result<WignerField, QuantumError> {
    params.require_quantum()?;
    let n_p = rho.n_p;
    if n_w < n_p {
        return Err(PhysicsError::InvalidParameter(format!(
            "need at least as many position samples as momentum nodes, got {n_w} < {n_p}"
        ))
        .into());
    }
    let dp = rho.dp();
    let w_x = std::f64::consts::PI * params.hbar / (dp * n_w as f64);
    let prefactor = 1.0 / (n_w as f64 * w_x);

    let mut data = Array2::zeros((n_w, n_p));
    let mut imag_residual = 0.0_f64;
    for c in 0..n_p {
        let r_max = c.min(n_p - 1 - c);
        for l in 0..n_w {
            let l_signed = (l as isize - (n_w / 2) as isize) as f64;
            let mut acc = rho.data[[c, c]];
            for r in 1..=r_max {
                let angle = 2.0 * std::f64::consts::PI * r as f64 * l_signed / n_w as f64;
                let phase = Complex64::from_polar(1.0, angle);
                acc += phase * rho.data[[c + r, c - r]];
                acc += phase.conj() * rho.data[[c - r, c + r]];
            }
            data[[l, c]] = prefactor * acc.re;
            imag_residual = imag_residual.max((prefactor * acc.im).abs());
        }
    }

    Ok(WignerField {
        p_max: rho.p_max,
        n_p,
        n_w,
        w_x,
        data,
        imag_residual,
        time: rho.time,
    })
}
