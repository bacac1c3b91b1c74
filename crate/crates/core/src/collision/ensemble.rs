//! Jump-process ensembles: ballistic free flight interrupted by sampled
//! collisions, recorded on a fixed wall-time grid. Trajectories own
//! independent counter-derived RNG streams and are reduced in a fixed chunk
//! order, so results do not depend on thread scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{CollisionError, CollisionKernel};
use super::statistics::{EnsembleStats, MomentRecord};
use crate::physics::{PhysicalParams, PhysicsError, Vec3};

/// Trajectories per parallel work unit; fixed so the reduction order (and
/// thus the floating-point result) is independent of the thread count.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Every trajectory starts at exactly this momentum.
    Point { p0: Vec3 },
    /// Maxwell distribution at the gas temperature.
    Maxwell,
    /// Maxwell distribution drifting at p0.
    ShiftedMaxwell { p0: Vec3 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    pub t_end: f64,
    pub dt_record: f64,
    pub seed: u64,
    pub init: InitialCondition,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        if self.n_trajectories == 0 {
            return Err(PhysicsError::InvalidParameter(
                "n_trajectories must be at least 1".into(),
            ));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(PhysicsError::InvalidParameter(format!(
                "t_end must be finite and > 0, got {}",
                self.t_end
            )));
        }
        if !(self.dt_record > 0.0) || self.dt_record > self.t_end {
            return Err(PhysicsError::InvalidParameter(format!(
                "dt_record must lie in (0, t_end], got {}",
                self.dt_record
            )));
        }
        Ok(())
    }

    /// Recording instants k·dt_record up to t_end.
    pub fn record_times(&self) -> Vec<f64> {
        let count = (self.t_end / self.dt_record + 1e-9).floor() as usize + 1;
        (0..count).map(|k| k as f64 * self.dt_record).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct RecordSums {
    sum_p: Vec3,
    sum_x: Vec3,
    /// Per-component second moments Σp_c².
    sum_pc2: Vec3,
    /// Σ|p|⁴, for the standard error of ⟨p²⟩.
    sum_p4: f64,
    sum_x2: f64,
}

impl RecordSums {
    fn add(&mut self, x: Vec3, p: Vec3) {
        self.sum_p += p;
        self.sum_x += x;
        self.sum_pc2 += Vec3::new(p.x * p.x, p.y * p.y, p.z * p.z);
        let p2 = p.norm_sq();
        self.sum_p4 += p2 * p2;
        self.sum_x2 += x.norm_sq();
    }

    fn merge(&mut self, other: &RecordSums) {
        self.sum_p += other.sum_p;
        self.sum_x += other.sum_x;
        self.sum_pc2 += other.sum_pc2;
        self.sum_p4 += other.sum_p4;
        self.sum_x2 += other.sum_x2;
    }
}

/// Counter-based per-trajectory stream: the (seed, index) pair is whitened
/// through splitmix64 into a ChaCha key, so streams are independent of how
/// trajectories are scheduled onto threads.
fn trajectory_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut state = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

fn draw_initial_momentum<R: Rng + ?Sized>(
    init: &InitialCondition,
    params: &PhysicalParams,
    rng: &mut R,
) -> Vec3 {
    let maxwell = |rng: &mut R| {
        let std = params.thermal_momentum_sq().sqrt();
        let normal = Normal::new(0.0, std).expect("validated params");
        Vec3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng))
    };
    match init {
        InitialCondition::Point { p0 } => *p0,
        InitialCondition::Maxwell => maxwell(rng),
        InitialCondition::ShiftedMaxwell { p0 } => *p0 + maxwell(rng),
    }
}

fn run_trajectory<R: Rng + ?Sized>(
    kernel: &CollisionKernel,
    init: &InitialCondition,
    times: &[f64],
    rng: &mut R,
    sums: &mut [RecordSums],
) -> Result<(), CollisionError> {
    let big_m = kernel.params().test_mass;
    let mut x = Vec3::ZERO;
    let mut p = draw_initial_momentum(init, kernel.params(), rng);
    let mut t = 0.0;
    let (tau, q) = kernel.sample_collision(p, rng)?;
    let mut next_collision = tau;
    let mut pending_transfer = q;
    for (k, &t_rec) in times.iter().enumerate() {
        while next_collision <= t_rec {
            x += p.scale((next_collision - t) / big_m);
            t = next_collision;
            p += pending_transfer;
            let (tau, q) = kernel.sample_collision(p, rng)?;
            next_collision = t + tau;
            pending_transfer = q;
        }
        x += p.scale((t_rec - t) / big_m);
        t = t_rec;
        sums[k].add(x, p);
    }
    Ok(())
}

/// Runs the ensemble and returns per-record moment statistics. Deterministic
/// for a fixed seed at any thread count: per-trajectory streams are derived
/// from (seed, index) and partial sums are merged in index order.
pub fn evolve_ensemble(
    kernel: &CollisionKernel,
    config: &EnsembleConfig,
) -> Result<EnsembleStats, CollisionError> {
    config.validate()?;
    let times = config.record_times();
    let n = config.n_trajectories;
    let n_chunks = n.div_ceil(CHUNK);

    let chunk_sums: Vec<Vec<RecordSums>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<RecordSums>, CollisionError> {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut sums = vec![RecordSums::default(); times.len()];
            for index in lo..hi {
                let mut rng = trajectory_rng(config.seed, index as u64);
                run_trajectory(kernel, &config.init, &times, &mut rng, &mut sums)?;
            }
            Ok(sums)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut totals = vec![RecordSums::default(); times.len()];
    for chunk in &chunk_sums {
        for (acc, part) in totals.iter_mut().zip(chunk) {
            acc.merge(part);
        }
    }

    let nf = n as f64;
    let records = times
        .iter()
        .zip(&totals)
        .map(|(&t, s)| {
            let mean_p = s.sum_p.scale(1.0 / nf);
            let mean_pc2 = s.sum_pc2.scale(1.0 / nf);
            let mean_p2 = mean_pc2.x + mean_pc2.y + mean_pc2.z;
            let var_p = Vec3::new(
                mean_pc2.x - mean_p.x * mean_p.x,
                mean_pc2.y - mean_p.y * mean_p.y,
                mean_pc2.z - mean_p.z * mean_p.z,
            );
            let var_p2 = (s.sum_p4 / nf - mean_p2 * mean_p2).max(0.0);
            MomentRecord {
                t,
                mean_p,
                mean_x: s.sum_x.scale(1.0 / nf),
                mean_p2,
                mean_x2: s.sum_x2 / nf,
                se_p2: (var_p2 / nf).sqrt(),
                var_p,
                n,
            }
        })
        .collect();

    Ok(EnsembleStats {
        records,
        acceptance_fraction: kernel.acceptance_fraction(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{CrossSectionModel, StructureFactorForm};
    use approx::assert_relative_eq;

    fn kernel(sigma0: f64) -> CollisionKernel {
        let params = PhysicalParams::new(1.0, 0.1, 1.0, 1.0, 1.0).unwrap();
        let xs = CrossSectionModel::constant(sigma0).unwrap();
        CollisionKernel::new(params, xs, StructureFactorForm::MaxwellBoltzmann).unwrap()
    }

    #[test]
    fn zero_cross_section_is_exact_ballistic_flight() {
        let k = kernel(0.0);
        let p0 = Vec3::new(1.0, 2.0, -3.0);
        let config = EnsembleConfig {
            n_trajectories: 1,
            t_end: 2.0,
            dt_record: 0.25,
            seed: 9,
            init: InitialCondition::Point { p0 },
        };
        let stats = evolve_ensemble(&k, &config).unwrap();
        for rec in &stats.records {
            let expect = p0.scale(rec.t);
            assert_eq!(rec.mean_x.x, expect.x);
            assert_eq!(rec.mean_x.y, expect.y);
            assert_eq!(rec.mean_x.z, expect.z);
            assert_eq!(rec.mean_p.z, p0.z);
        }
    }

    #[test]
    fn results_are_bit_identical_across_thread_counts() {
        let k1 = kernel(1.0);
        let k2 = kernel(1.0);
        let config = EnsembleConfig {
            n_trajectories: 300,
            t_end: 1.0,
            dt_record: 0.5,
            seed: 31,
            init: InitialCondition::Maxwell,
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| evolve_ensemble(&k1, &config).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| evolve_ensemble(&k2, &config).unwrap());
        for (a, b) in single.records.iter().zip(&multi.records) {
            assert_eq!(a.mean_p.x, b.mean_p.x);
            assert_eq!(a.mean_p.y, b.mean_p.y);
            assert_eq!(a.mean_p.z, b.mean_p.z);
            assert_eq!(a.mean_p2, b.mean_p2);
            assert_eq!(a.mean_x2, b.mean_x2);
        }
    }

    #[test]
    fn maxwell_start_stays_at_equilibrium() {
        // Equipartition: <p²> = 3M/β and no drift develops, within 3 SE.
        let k = kernel(1.0);
        let config = EnsembleConfig {
            n_trajectories: 4000,
            t_end: 8.0,
            dt_record: 2.0,
            seed: 1234,
            init: InitialCondition::Maxwell,
        };
        let stats = evolve_ensemble(&k, &config).unwrap();
        let equil = 3.0 * 1.0 / 1.0;
        for rec in &stats.records {
            assert!(
                (rec.mean_p2 - equil).abs() < 3.0 * rec.se_p2,
                "t={}: <p²>={} vs {} (se {})",
                rec.t,
                rec.mean_p2,
                equil,
                rec.se_p2
            );
            for c in [rec.mean_p.x, rec.mean_p.y, rec.mean_p.z] {
                let se_c = (1.0 / config.n_trajectories as f64).sqrt();
                assert!(c.abs() < 3.5 * se_c, "drift {c} at t={}", rec.t);
            }
        }
    }

    #[test]
    fn record_grid_includes_both_endpoints() {
        let config = EnsembleConfig {
            n_trajectories: 1,
            t_end: 1.0,
            dt_record: 0.25,
            seed: 0,
            init: InitialCondition::Maxwell,
        };
        let times = config.record_times();
        assert_eq!(times.len(), 5);
        assert_relative_eq!(times[4], 1.0);
    }
}
