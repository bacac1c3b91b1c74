//! Periodic advection along the position axis at fixed momentum.
//!
//! Both schemes are conservative flux-difference updates, so each momentum
//! row keeps its mass to rounding and the momentum marginal of the full
//! field is untouched by transport.

use serde::{Deserialize, Serialize};

/// Spatial reconstruction used by the streaming substep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportScheme {
    /// First-order donor cell. Robust, diffusive.
    Upwind,
    /// Flux-limited second order (van Leer limiter, Courant-weighted
    /// correction). Total-variation diminishing for |nu| <= 1, reduces to
    /// Lax-Wendroff where the solution is smooth.
    MusclVanLeer,
}

fn van_leer(r: f64) -> f64 {
    if r <= 0.0 || !r.is_finite() {
        0.0
    } else {
        (r + r.abs()) / (1.0 + r.abs())
    }
}

/// Advances one periodic line by one step of signed Courant number
/// nu = v dt / dx. `out` receives the update; `line` is unchanged.
pub(crate) fn advect_line(line: &[f64], out: &mut [f64], nu: f64, scheme: TransportScheme) {
    let n = line.len();
    debug_assert_eq!(out.len(), n);
    debug_assert!(nu.abs() <= 1.0, "Courant number {nu} out of range");
    if nu == 0.0 {
        out.copy_from_slice(line);
        return;
    }
    let prev = |i: usize| (i + n - 1) % n;
    let next = |i: usize| (i + 1) % n;

    // Interface values u[i] ~ f at face i+1/2, chosen from the upwind side.
    let mut face = vec![0.0; n];
    match scheme {
        TransportScheme::Upwind => {
            if nu > 0.0 {
                face.copy_from_slice(line);
            } else {
                for i in 0..n {
                    face[i] = line[next(i)];
                }
            }
        }
        TransportScheme::MusclVanLeer => {
            if nu > 0.0 {
                for i in 0..n {
                    let d = line[next(i)] - line[i];
                    let correction = if d == 0.0 {
                        0.0
                    } else {
                        let r = (line[i] - line[prev(i)]) / d;
                        0.5 * (1.0 - nu) * van_leer(r) * d
                    };
                    face[i] = line[i] + correction;
                }
            } else {
                for i in 0..n {
                    let up = next(i);
                    let d = line[i] - line[up];
                    let correction = if d == 0.0 {
                        0.0
                    } else {
                        let r = (line[up] - line[next(up)]) / d;
                        0.5 * (1.0 + nu) * van_leer(r) * d
                    };
                    face[i] = line[up] + correction;
                }
            }
        }
    }

    for i in 0..n {
        out[i] = line[i] - nu * (face[i] - face[prev(i)]);
    }
}
