//! Ensemble moment records, CSV export, and the small fitting helpers used
//! to extract relaxation rates and power-law slopes from time series.

use std::io::Write;

use crate::physics::{PhysicsError, Vec3};

#[derive(Debug, Clone, Copy)]
pub struct MomentRecord {
    pub t: f64,
    pub mean_p: Vec3,
    pub mean_x: Vec3,
    pub mean_p2: f64,
    pub mean_x2: f64,
    /// Standard error of mean_p2.
    pub se_p2: f64,
    /// Per-component momentum variances.
    pub var_p: Vec3,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub records: Vec<MomentRecord>,
    /// Rejection-sampling acceptance fraction over the run, if any proposals
    /// were made; below ~1e-3 the envelope is pathologically loose.
    pub acceptance_fraction: Option<f64>,
}

impl EnsembleStats {
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "t",
            "mean_px",
            "mean_py",
            "mean_pz",
            "mean_p2",
            "mean_x2",
            "se_p2",
            "n_samples",
        ])?;
        for r in &self.records {
            out.write_record([
                format!("{:.12e}", r.t),
                format!("{:.12e}", r.mean_p.x),
                format!("{:.12e}", r.mean_p.y),
                format!("{:.12e}", r.mean_p.z),
                format!("{:.12e}", r.mean_p2),
                format!("{:.12e}", r.mean_x2),
                format!("{:.12e}", r.se_p2),
                format!("{}", r.n),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Weighted least squares for y = intercept + slope·x; returns (slope,
/// intercept). Weights must be nonnegative with at least two distinct
/// abscissae carrying positive weight.
pub fn weighted_linear_fit(
    xs: &[f64],
    ys: &[f64],
    weights: &[f64],
) -> Result<(f64, f64), PhysicsError> {
    if xs.len() != ys.len() || xs.len() != weights.len() {
        return Err(PhysicsError::InvalidParameter(
            "fit inputs must have equal lengths".into(),
        ));
    }
    let mut s = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
        if !(w >= 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(PhysicsError::InvalidParameter(
                "fit inputs must be finite with nonnegative weights".into(),
            ));
        }
        s += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(PhysicsError::InvalidParameter(
            "fit needs two or more distinct abscissae with positive weight".into(),
        ));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sy * sxx - sx * sxy) / det;
    Ok((slope, intercept))
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), PhysicsError> {
    weighted_linear_fit(xs, ys, &vec![1.0; xs.len()])
}

/// Fits y ≈ amplitude·e^(−rate·t) by weighted least squares on ln y; points
/// with y ≤ 0 are dropped together with their weights. Weights should be
/// inverse variances of y (they are converted to ln-space internally).
pub fn fit_exponential_rate(
    ts: &[f64],
    ys: &[f64],
    weights: &[f64],
) -> Result<(f64, f64), PhysicsError> {
    if ts.len() != ys.len() || ts.len() != weights.len() {
        return Err(PhysicsError::InvalidParameter(
            "fit inputs must have equal lengths".into(),
        ));
    }
    let mut xs_kept = Vec::with_capacity(ts.len());
    let mut ln_y = Vec::with_capacity(ts.len());
    let mut w_ln = Vec::with_capacity(ts.len());
    for ((&t, &y), &w) in ts.iter().zip(ys).zip(weights) {
        if y > 0.0 && w > 0.0 {
            xs_kept.push(t);
            ln_y.push(y.ln());
            // Var(ln y) = Var(y)/y², so inverse-variance weights scale by y².
            w_ln.push(w * y * y);
        }
    }
    let (slope, intercept) = weighted_linear_fit(&xs_kept, &ln_y, &w_ln)?;
    Ok((-slope, intercept.exp()))
}

/// Slope of ln y against ln x; requires strictly positive data.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64, PhysicsError> {
    if xs.iter().any(|&x| !(x > 0.0)) || ys.iter().any(|&y| !(y > 0.0)) {
        return Err(PhysicsError::InvalidParameter(
            "log-log fit requires strictly positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (slope, intercept) = linear_fit(&xs, &ys).unwrap();
        assert_relative_eq!(slope, 2.0, max_relative = 1e-14);
        assert_relative_eq!(intercept, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn exponential_fit_recovers_rate_and_amplitude() {
        let ts: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| 2.5 * (-0.7 * t).exp()).collect();
        let ws = vec![1.0; ts.len()];
        let (rate, amp) = fit_exponential_rate(&ts, &ys, &ws).unwrap();
        assert_relative_eq!(rate, 0.7, max_relative = 1e-12);
        assert_relative_eq!(amp, 2.5, max_relative = 1e-12);
    }

    #[test]
    fn exponential_fit_skips_nonpositive_points() {
        let ts = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, (-0.5f64).exp(), -1e-9, (-1.5f64).exp()];
        let ws = [1.0, 1.0, 1.0, 1.0];
        let (rate, _) = fit_exponential_rate(&ts, &ys, &ws).unwrap();
        assert_relative_eq!(rate, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn log_log_slope_recovers_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|&x: &f64| 3.0 * x.powf(-1.3)).collect();
        let slope = log_log_slope(&xs, &ys).unwrap();
        assert_relative_eq!(slope, -1.3, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_fits_error_out() {
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(weighted_linear_fit(&[1.0, 2.0], &[2.0, 3.0], &[1.0]).is_err());
        assert!(log_log_slope(&[1.0, -2.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn csv_has_pinned_header_and_row_count() {
        let stats = EnsembleStats {
            records: vec![MomentRecord {
                t: 0.5,
                mean_p: Vec3::new(0.1, 0.2, 0.3),
                mean_x: Vec3::ZERO,
                mean_p2: 2.9,
                mean_x2: 0.01,
                se_p2: 0.05,
                var_p: Vec3::new(1.0, 1.0, 1.0),
                n: 100,
            }],
            acceptance_fraction: None,
        };
        let mut buf = Vec::new();
        stats.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,mean_px,mean_py,mean_pz,mean_p2,mean_x2,se_p2,n_samples"
        );
        assert_eq!(lines.count(), 1);
    }
}
