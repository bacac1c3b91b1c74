//! Experiment implementations: each takes a validated config, runs one of
//! the compute modules, writes `results.csv` plus any extra artifacts into
//! the output directory, and returns the scalar summary with its built-in
//! checks evaluated.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collision::{
    evolve_ensemble, fit_exponential_rate, linear_fit, CollisionKernel, EnsembleConfig,
    EnsembleStats,
};
use crate::fokker_planck::{
    high_friction_compare, kramers_solve, max_stable_dt, max_stable_dt_position,
    quantum_kramers_solve, smoluchowski_solve, KramersRun, PhaseSpaceField, PhaseSpaceGrid,
    PositionField,
};
use crate::physics::{
    detailed_balance_residual, friction_coefficient, friction_constant_sigma_closed_form,
    position_diffusion_coefficient, quantum_correction_ratio, smoluchowski_diffusion,
    CrossSectionModel, PhysicalParams, StructureFactorForm,
};
use crate::quantum::kernel1d::LatticeKernel;
use crate::quantum::{
    gaussian_propagate, nonabelian_grid_evolve, wigner_transform, GaussianState,
    MomentumDensityMatrix, SpectralMode, WignerSpectralField, WignerSpectralSolver,
};

use super::config::{ExperimentTag, LatticeInit, ScenarioConfig};
use super::RunnerError;

/// One named pass/fail verdict inside a run summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

/// Key scalars and check results of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: String,
    pub scalars: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub all_passed: bool,
}

impl RunSummary {
    fn new(tag: ExperimentTag) -> Self {
        Self {
            experiment: tag.to_string(),
            scalars: BTreeMap::new(),
            checks: Vec::new(),
            all_passed: true,
        }
    }

    fn scalar(&mut self, name: &str, value: f64) {
        self.scalars.insert(name.to_string(), value);
    }

    fn check(&mut self, c: Check) {
        self.all_passed &= c.passed;
        self.checks.push(c);
    }

    pub fn scalar_value(&self, name: &str) -> Result<f64, RunnerError> {
        self.scalars.get(name).copied().ok_or_else(|| {
            RunnerError::Config(format!(
                "summary for `{}` has no scalar `{name}`",
                self.experiment
            ))
        })
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> RunnerError {
    RunnerError::Config(e.to_string())
}

fn numerical_err<E: std::fmt::Display>(e: E) -> RunnerError {
    RunnerError::Numerical(e.to_string())
}

fn rel_err(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs().max(f64::MIN_POSITIVE)
}

fn check_rel(name: &str, value: f64, target: f64, tol: f64) -> Check {
    let rel = rel_err(value, target);
    Check::new(
        name,
        rel <= tol,
        format!("value {value:.6e} vs target {target:.6e}, relative error {rel:.2e} (tolerance {tol:.0e})"),
    )
}

fn write_text(path: &Path, text: &str) -> Result<(), RunnerError> {
    std::fs::write(path, text)?;
    Ok(())
}

fn eta_or_quadrature(
    explicit: Option<f64>,
    params: &PhysicalParams,
    xs: &CrossSectionModel,
) -> Result<f64, RunnerError> {
    match explicit {
        Some(eta) if eta.is_finite() && eta > 0.0 => Ok(eta),
        Some(eta) => Err(RunnerError::Config(format!(
            "eta must be finite and > 0, got {eta}"
        ))),
        None => friction_coefficient(params, xs).map_err(numerical_err),
    }
}

/// Dispatches one experiment, writing artifacts into `out_dir`.
pub fn run_experiment(
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<RunSummary, RunnerError> {
    std::fs::create_dir_all(out_dir)?;
    match config.experiment {
        ExperimentTag::Coefficients => run_coefficients(config, out_dir),
        ExperimentTag::McRelax => run_mc_relax(config, out_dir),
        ExperimentTag::Kramers => run_kramers(config, out_dir, false),
        ExperimentTag::QuantumKramers => run_kramers(config, out_dir, true),
        ExperimentTag::Smoluchowski => run_smoluchowski(config, out_dir),
        ExperimentTag::HighFrictionSweep => run_high_friction_sweep(config, out_dir),
        ExperimentTag::GaussianLindblad => run_gaussian(config, out_dir),
        ExperimentTag::NalbeGrid => run_nalbe(config, out_dir),
        ExperimentTag::WignerSpectral => run_spectral(config, out_dir),
    }
}

fn run_coefficients(config: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary, RunnerError> {
    let params = &config.params;
    let xs = &config.cross_section;
    let mut summary = RunSummary::new(config.experiment);

    let eta = friction_coefficient(params, xs).map_err(numerical_err)?;
    let d_xx = position_diffusion_coefficient(eta, params).map_err(numerical_err)?;
    let d_smol = smoluchowski_diffusion(eta, params).map_err(numerical_err)?;
    let ratio = quantum_correction_ratio(eta, params).map_err(numerical_err)?;

    // Detailed balance of the structure factor over a wide (q, E) sweep,
    // both forms, including energies deep in the exponential tails.
    let mut residual_max = 0.0_f64;
    let beta = params.inv_temperature;
    for form in [StructureFactorForm::MaxwellBoltzmann, StructureFactorForm::Brownian] {
        for i in 0..40 {
            let q = 0.1 * (100.0_f64).powf(i as f64 / 39.0);
            for be in [0.01, 0.1, 1.0, 10.0, 50.0] {
                let r = detailed_balance_residual(q, be / beta, params, form)
                    .map_err(numerical_err)?;
                residual_max = residual_max.max(r.abs());
            }
        }
    }

    summary.scalar("eta", eta);
    summary.scalar("d_xx", d_xx);
    summary.scalar("smoluchowski_diffusion", d_smol);
    summary.scalar("quantum_correction_ratio", ratio);
    summary.scalar("detailed_balance_residual_max", residual_max);

    summary.check(Check::new(
        "detailed-balance",
        residual_max < 1e-10,
        format!("max relative residual {residual_max:.3e} (tolerance 1e-10)"),
    ));
    if let CrossSectionModel::Constant { sigma0 } = xs {
        let closed = friction_constant_sigma_closed_form(params, *sigma0);
        summary.scalar("eta_closed_form", closed);
        summary.check(check_rel("friction-closed-form", eta, closed, 1e-8));
    }
    // Two independent code paths for the same correction factor.
    let ratio_from_diffusion = d_smol * eta * params.test_mass * beta;
    summary.check(check_rel("ratio-identity", ratio_from_diffusion, ratio, 1e-12));

    let mut csv = String::from("quantity,value\n");
    for (name, value) in &summary.scalars {
        csv.push_str(&format!("{name},{value:.16e}\n"));
    }
    write_text(&out_dir.join("results.csv"), &csv)?;
    Ok(summary)
}

fn run_mc_relax(config: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary, RunnerError> {
    let params = &config.params;
    let xs = &config.cross_section;
    let block = config.require(&config.monte_carlo, "monte_carlo")?;
    let mut summary = RunSummary::new(config.experiment);

    let drift = match block.init {
        crate::collision::InitialCondition::Point { p0 }
        | crate::collision::InitialCondition::ShiftedMaxwell { p0 } => p0,
        crate::collision::InitialCondition::Maxwell => {
            return Err(RunnerError::Config(
                "mc-relax needs a drifted initial condition (point or shifted_maxwell)".into(),
            ))
        }
    };
    if drift.norm() == 0.0 {
        return Err(RunnerError::Config(
            "mc-relax initial drift momentum must be nonzero".into(),
        ));
    }

    let kernel = CollisionKernel::new(*params, xs.clone(), block.form).map_err(config_err)?;
    let ensemble = EnsembleConfig {
        n_trajectories: block.n_trajectories,
        t_end: block.t_end,
        dt_record: block.dt_record,
        seed: block.seed,
        init: block.init,
    };
    ensemble.validate().map_err(config_err)?;
    let stats = evolve_ensemble(&kernel, &ensemble).map_err(numerical_err)?;

    let eta = friction_coefficient(params, xs).map_err(numerical_err)?;
    let (ts, values, weights) = drift_decay_series(&stats, drift, eta, block.fit_window);
    let (rate, amplitude) =
        fit_exponential_rate(&ts, &values, &weights).map_err(numerical_err)?;

    summary.scalar("eta_quadrature", eta);
    summary.scalar("fitted_rate", rate);
    summary.scalar("fit_amplitude", amplitude);
    summary.scalar("relative_error", rel_err(rate, eta));
    if let Some(a) = stats.acceptance_fraction {
        summary.scalar("acceptance_fraction", a);
        if a < 1e-3 {
            eprintln!(
                "warning: rejection-sampling acceptance fraction {a:.2e} is pathologically low"
            );
        }
    }
    summary.check(check_rel("relaxation-rate", rate, eta, block.rate_tolerance));

    let file = File::create(out_dir.join("results.csv"))?;
    stats.write_csv(BufWriter::new(file)).map_err(|e| RunnerError::Config(e.to_string()))?;
    Ok(summary)
}

/// Mean drift-axis momentum per record, with inverse-variance weights, over
/// the fit window eta * t <= window.
fn drift_decay_series(
    stats: &EnsembleStats,
    drift: crate::physics::Vec3,
    eta: f64,
    window: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let axis = drift.scale(1.0 / drift.norm());
    let mut ts = Vec::new();
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for r in &stats.records {
        if eta * r.t > window {
            break;
        }
        let along = r.mean_p.dot(axis);
        let var_along = axis.x * axis.x * r.var_p.x
            + axis.y * axis.y * r.var_p.y
            + axis.z * axis.z * r.var_p.z;
        // A deterministic record (the t = 0 point source) carries no rate
        // information and would get infinite weight; drop it.
        if !(var_along > 0.0) {
            continue;
        }
        ts.push(r.t);
        values.push(along);
        weights.push(r.n as f64 / var_along);
    }
    (ts, values, weights)
}

fn run_kramers(
    config: &ScenarioConfig,
    out_dir: &Path,
    quantum: bool,
) -> Result<RunSummary, RunnerError> {
    let params = &config.params;
    let grid_block = config.require(&config.phase_grid, "phase_grid")?;
    let init = config.require(&config.initial_state, "initial_state")?;
    let evolution = config.require(&config.evolution, "evolution")?;
    let mut summary = RunSummary::new(config.experiment);

    let grid = PhaseSpaceGrid::new(
        grid_block.x_min,
        grid_block.x_max,
        grid_block.n_x,
        grid_block.p_max,
        grid_block.n_p,
    )
    .map_err(config_err)?;
    grid.validate_for(params).map_err(config_err)?;
    let f0 = PhaseSpaceField::separable_gaussian(grid, init.x0, init.var_x, init.p0, init.var_p)
        .map_err(config_err)?;

    let eta = eta_or_quadrature(evolution.eta, params, &config.cross_section)?;
    let d_xx = if quantum {
        position_diffusion_coefficient(eta, params).map_err(config_err)?
    } else {
        0.0
    };
    let dt = evolution
        .dt
        .unwrap_or_else(|| 0.9 * max_stable_dt(&grid, eta, d_xx, params));

    let run = if quantum {
        quantum_kramers_solve(&f0, eta, evolution.t_end, dt, params, evolution.scheme)
    } else {
        kramers_solve(&f0, eta, evolution.t_end, dt, params, evolution.scheme)
    }
    .map_err(numerical_err)?;

    summary.scalar("eta", eta);
    summary.scalar("d_xx", run.d_xx);
    summary.scalar("dt", dt);
    push_phase_checks(&mut summary, &run, &f0, eta, params);

    // Late-time mean-square-displacement slope, from the second half of the
    // records (momentum equilibrated if t_end >> 1/eta).
    let msd_slope = late_slope(
        run.moments.records.iter().map(|m| (m.t, m.var_x)),
        evolution.t_end,
    )?;
    summary.scalar("msd_slope", msd_slope);

    if quantum {
        // Classical twin at the same step: the variance excess isolates the
        // position-diffusion term.
        let twin = kramers_solve(&f0, eta, evolution.t_end, dt, params, evolution.scheme)
            .map_err(numerical_err)?;
        let msd_slope_classical = late_slope(
            twin.moments.records.iter().map(|m| (m.t, m.var_x)),
            evolution.t_end,
        )?;
        summary.scalar("msd_slope_classical", msd_slope_classical);
        summary.scalar("ratio_measured", msd_slope / msd_slope_classical);
        summary.scalar(
            "ratio_computed",
            quantum_correction_ratio(eta, params).map_err(numerical_err)?,
        );

        let ts: Vec<f64> = run.moments.records.iter().map(|m| m.t).collect();
        let excess: Vec<f64> = run
            .moments
            .records
            .iter()
            .zip(&twin.moments.records)
            .map(|(q, c)| q.var_x - c.var_x)
            .collect();
        if run.d_xx == 0.0 {
            let max_excess = excess.iter().fold(0.0_f64, |a, &e| a.max(e.abs()));
            summary.scalar("d_xx_measured", 0.0);
            summary.check(Check::new(
                "position-diffusion-excess",
                max_excess == 0.0,
                format!("hbar = 0: classical and quantum runs differ by {max_excess:.3e}"),
            ));
        } else {
            let (slope, _) = linear_fit(&ts, &excess).map_err(numerical_err)?;
            summary.scalar("d_xx_measured", 0.5 * slope);
            summary.check(check_rel(
                "position-diffusion-excess",
                0.5 * slope,
                run.d_xx,
                0.02,
            ));
        }

        let file = File::create(out_dir.join("results_classical.csv"))?;
        twin.moments
            .write_csv(BufWriter::new(file))
            .map_err(|e| RunnerError::Config(e.to_string()))?;
    }

    let file = File::create(out_dir.join("results.csv"))?;
    run.moments
        .write_csv(BufWriter::new(file))
        .map_err(|e| RunnerError::Config(e.to_string()))?;
    Ok(summary)
}

fn push_phase_checks(
    summary: &mut RunSummary,
    run: &KramersRun,
    f0: &PhaseSpaceField,
    eta: f64,
    params: &PhysicalParams,
) {
    let worst_norm = run
        .moments
        .records
        .iter()
        .fold(0.0_f64, |a, m| a.max((m.norm - 1.0).abs()));
    summary.check(Check::new(
        "mass-conservation",
        worst_norm < 1e-8,
        format!("worst |norm - 1| = {worst_norm:.3e} (tolerance 1e-8)"),
    ));

    // Momentum moments follow the exact Ornstein-Uhlenbeck solution.
    let m0 = f0.moments();
    let var_eq = params.thermal_momentum_sq();
    let last = run.moments.last();
    let mean_exact = m0.mean_p * (-eta * last.t).exp();
    let var_exact = var_eq + (m0.var_p - var_eq) * (-2.0 * eta * last.t).exp();
    summary.check(check_rel("momentum-variance", last.var_p, var_exact, 0.01));
    let mean_scale = m0.mean_p.abs().max(var_eq.sqrt());
    summary.check(Check::new(
        "momentum-mean",
        (last.mean_p - mean_exact).abs() <= 0.01 * mean_scale,
        format!(
            "mean_p {:.6e} vs exact decay {:.6e} (within 1% of {:.3e})",
            last.mean_p, mean_exact, mean_scale
        ),
    ));
}

/// Least-squares slope over records in the second half of the horizon.
fn late_slope(
    series: impl Iterator<Item = (f64, f64)>,
    t_end: f64,
) -> Result<f64, RunnerError> {
    let late: Vec<(f64, f64)> = series.filter(|(t, _)| *t >= 0.5 * t_end).collect();
    let ts: Vec<f64> = late.iter().map(|(t, _)| *t).collect();
    let ys: Vec<f64> = late.iter().map(|(_, y)| *y).collect();
    Ok(linear_fit(&ts, &ys).map_err(numerical_err)?.0)
}

fn run_smoluchowski(config: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary, RunnerError> {
    let params = &config.params;
    let block = config.require(&config.position_grid, "position_grid")?;
    let evolution = config.require(&config.evolution, "evolution")?;
    let mut summary = RunSummary::new(config.experiment);

    let f0 = PositionField::gaussian(block.x_min, block.x_max, block.n_x, block.x0, block.var_x)
        .map_err(config_err)?;
    let eta = eta_or_quadrature(evolution.eta, params, &config.cross_section)?;
    let diffusion = smoluchowski_diffusion(eta, params).map_err(config_err)?;
    let dt = evolution
        .dt
        .unwrap_or_else(|| 0.9 * max_stable_dt_position(&f0, diffusion));

    let run = smoluchowski_solve(&f0, eta, evolution.t_end, dt, params).map_err(numerical_err)?;

    let worst_norm = run
        .records
        .iter()
        .fold(0.0_f64, |a, r| a.max((r.norm - 1.0).abs()));
    summary.check(Check::new(
        "mass-conservation",
        worst_norm < 1e-10,
        format!("worst |norm - 1| = {worst_norm:.3e} (tolerance 1e-10)"),
    ));

    let ts: Vec<f64> = run.records.iter().map(|r| r.t).collect();
    let vars: Vec<f64> = run.records.iter().map(|r| r.var_x).collect();
    let (slope, _) = linear_fit(&ts, &vars).map_err(numerical_err)?;
    summary.scalar("eta", eta);
    summary.scalar("diffusion", diffusion);
    summary.scalar("diffusion_fitted", 0.5 * slope);
    summary.scalar("var_slope", slope);
    summary.scalar("dt", dt);
    summary.check(check_rel("variance-growth", 0.5 * slope, diffusion, 1e-6));

    let file = File::create(out_dir.join("results.csv"))?;
    run.write_csv(BufWriter::new(file)).map_err(|e| RunnerError::Config(e.to_string()))?;
    Ok(summary)
}

fn run_high_friction_sweep(
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<RunSummary, RunnerError> {
    let params = &config.params;
    let block = config.require(&config.position_grid, "position_grid")?;
    let sweep = config.require(&config.sweep, "sweep")?;
    let mut summary = RunSummary::new(config.experiment);

    let sigma0 =
        PositionField::gaussian(block.x_min, block.x_max, block.n_x, block.x0, block.var_x)
            .map_err(config_err)?;
    let comparison = high_friction_compare(
        &sigma0,
        &sweep.etas,
        sweep.t_end,
        sweep.p_max,
        sweep.n_p,
        params,
        sweep.scheme,
    )
    .map_err(numerical_err)?;

    let monotone = comparison
        .points
        .windows(2)
        .all(|w| w[1].l1_deviation < w[0].l1_deviation);
    summary.check(Check::new(
        "deviation-monotone",
        monotone,
        format!(
            "L1 deviations {:?}",
            comparison
                .points
                .iter()
                .map(|p| p.l1_deviation)
                .collect::<Vec<_>>()
        ),
    ));
    summary.scalar("slope", comparison.slope);
    summary.check(Check::new(
        "deviation-slope",
        (sweep.slope_min..=sweep.slope_max).contains(&comparison.slope),
        format!(
            "log-log slope {:.3} expected in [{}, {}]",
            comparison.slope, sweep.slope_min, sweep.slope_max
        ),
    ));

    let mut csv = String::from("eta,l1_deviation\n");
    for p in &comparison.points {
        csv.push_str(&format!("{:.12e},{:.12e}\n", p.eta, p.l1_deviation));
    }
    write_text(&out_dir.join("results.csv"), &csv)?;
    Ok(summary)
}

fn run_gaussian(config: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary, RunnerError> {
    let params = &config.params;
    let block = config.require(&config.gaussian, "gaussian")?;
    let mut summary = RunSummary::new(config.experiment);

    let state0 = GaussianState {
        mean_x: block.mean_x,
        mean_p: block.mean_p,
        sigma_xx: block.sigma_xx,
        sigma_xp: block.sigma_xp,
        sigma_pp: block.sigma_pp,
    };
    let eta = eta_or_quadrature(block.eta, params, &config.cross_section)?;
    let run = gaussian_propagate(
        &state0,
        eta,
        block.t_end,
        params,
        block.include_position_diffusion,
    )
    .map_err(numerical_err)?;

    summary.scalar("eta", eta);
    summary.scalar("d_xx", run.d_xx);

    // First and second momentum moments decay exactly exponentially; the
    // adaptive integrator must hit them to far better than 1e-6.
    let var_eq = params.thermal_momentum_sq();
    let fin = &run.final_state;
    let spp_exact = var_eq + (block.sigma_pp - var_eq) * (-2.0 * eta * block.t_end).exp();
    summary.check(check_rel("momentum-variance", fin.sigma_pp, spp_exact, 1e-6));
    let mean_exact = block.mean_p * (-eta * block.t_end).exp();
    let mean_scale = block.mean_p.abs().max(var_eq.sqrt());
    summary.check(Check::new(
        "momentum-mean",
        (fin.mean_p - mean_exact).abs() <= 1e-6 * mean_scale,
        format!("mean_p {:.9e} vs exact decay {:.9e}", fin.mean_p, mean_exact),
    ));

    let det_min = run
        .records
        .iter()
        .map(|r| r.state.uncertainty_det())
        .fold(f64::INFINITY, f64::min);
    summary.scalar("certificate_min", det_min);
    if params.hbar > 0.0 && block.include_position_diffusion {
        let bound = params.hbar * params.hbar / 4.0;
        summary.check(Check::new(
            "uncertainty-certificate",
            det_min >= bound * (1.0 - 1e-6),
            format!("min det {det_min:.9e} vs bound {bound:.9e}"),
        ));
    }

    let sxx_slope = late_slope(
        run.records.iter().map(|r| (r.t, r.state.sigma_xx)),
        block.t_end,
    )?;
    summary.scalar("sxx_slope_late", sxx_slope);

    let file = File::create(out_dir.join("results.csv"))?;
    run.write_csv(BufWriter::new(file)).map_err(|e| RunnerError::Config(e.to_string()))?;
    Ok(summary)
}

fn build_lattice_init(
    init: &LatticeInit,
    p_max: f64,
    n_p: usize,
    params: &PhysicalParams,
) -> Result<MomentumDensityMatrix, crate::physics::PhysicsError> {
    match init {
        LatticeInit::Maxwell => MomentumDensityMatrix::maxwell_diagonal(p_max, n_p, params),
        LatticeInit::Superposition { a, b } => {
            MomentumDensityMatrix::two_state_superposition(p_max, n_p, *a, *b)
        }
        LatticeInit::Profile { values } => {
            if values.len() != n_p {
                return Err(crate::physics::PhysicsError::InvalidParameter(format!(
                    "profile has {} entries for an n_p = {n_p} lattice",
                    values.len()
                )));
            }
            MomentumDensityMatrix::diagonal_profile(p_max, values)
        }
    }
}

fn run_nalbe(config: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary, RunnerError> {
    let params = &config.params;
    let xs = &config.cross_section;
    let block = config.require(&config.lattice, "lattice")?;
    let mut summary = RunSummary::new(config.experiment);

    params.require_quantum().map_err(config_err)?;
    let rho0 =
        build_lattice_init(&block.init, block.p_max, block.n_p, params).map_err(config_err)?;

    let dt = match block.dt {
        Some(dt) => dt,
        None => {
            let kernel = LatticeKernel::new(block.p_max, block.n_p, params, xs)
                .map_err(config_err)?;
            let max_total = (0..block.n_p)
                .map(|j| kernel.total_rate(rho0.p(j)))
                .fold(0.0_f64, f64::max);
            if max_total > 0.0 {
                0.45 / max_total
            } else {
                block.t_end // free evolution: the phase is exact at any step
            }
        }
    };

    let run =
        nonabelian_grid_evolve(&rho0, block.t_end, dt, params, xs).map_err(numerical_err)?;

    let worst_trace = run
        .diagnostics
        .iter()
        .fold(0.0_f64, |a, d| a.max((d.trace - 1.0).abs()));
    summary.check(Check::new(
        "trace-conservation",
        worst_trace < 1e-6,
        format!("worst |trace - 1| = {worst_trace:.3e} (tolerance 1e-6)"),
    ));
    let hermiticity = run.rho.hermiticity_residual();
    summary.check(Check::new(
        "hermiticity",
        hermiticity < 1e-12,
        format!("residual {hermiticity:.3e} (tolerance 1e-12)"),
    ));
    let min_eig = run
        .diagnostics
        .iter()
        .map(|d| d.min_eig)
        .fold(f64::INFINITY, f64::min);
    summary.check(Check::new(
        "positivity",
        min_eig >= -1e-6,
        format!("smallest eigenvalue along the run {min_eig:.3e} (floor -1e-6)"),
    ));
    let last = run.diagnostics.last().expect("diagnostics never empty");
    if matches!(block.init, LatticeInit::Maxwell) {
        summary.check(Check::new(
            "maxwell-stationarity",
            last.diag_l1_dist_to_maxwell < 1e-6,
            format!("final L1 distance {:.3e} (tolerance 1e-6)", last.diag_l1_dist_to_maxwell),
        ));
    }
    summary.scalar("dt", dt);
    summary.scalar("trace_final", last.trace);
    summary.scalar("min_eig", min_eig);
    summary.scalar("offdiag_l2_final", last.offdiag_l2);
    summary.scalar("diag_l1_final", last.diag_l1_dist_to_maxwell);

    if let Some(n_w) = block.wigner_samples {
        let w = wigner_transform(&run.rho, n_w, params).map_err(numerical_err)?;
        let worst_marginal = (0..w.n_p)
            .map(|c| (w.momentum_marginal(c) - run.rho.data[[c, c]].re).abs())
            .fold(0.0_f64, f64::max);
        summary.scalar("wigner_imag_residual", w.imag_residual);
        summary.check(Check::new(
            "wigner-marginal",
            worst_marginal < 1e-12,
            format!("worst marginal defect {worst_marginal:.3e} (tolerance 1e-12)"),
        ));
        w.write_csv(&out_dir.join("wigner.csv"))?;
    }

    run.write_csv(&out_dir.join("results.csv"))?;
    Ok(summary)
}

fn run_spectral(config: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary, RunnerError> {
    let params = &config.params;
    let xs = &config.cross_section;
    let block = config.require(&config.spectral, "spectral")?;
    let mut summary = RunSummary::new(config.experiment);

    if !(block.dt_fraction > 0.0 && block.dt_fraction <= 1.0) {
        return Err(RunnerError::Config(format!(
            "dt_fraction must lie in (0, 1], got {}",
            block.dt_fraction
        )));
    }

    let f0 = WignerSpectralField::maxwell_all_modes(
        block.p_max,
        block.n_p,
        block.kappa_max,
        block.n_kappa,
        params,
    )
    .map_err(config_err)?;
    let quantum = WignerSpectralSolver::new(
        block.p_max,
        block.n_p,
        block.kappa_max,
        block.n_kappa,
        SpectralMode::Quantum,
        params,
        xs,
    )
    .map_err(config_err)?;
    let classical = WignerSpectralSolver::new(
        block.p_max,
        block.n_p,
        block.kappa_max,
        block.n_kappa,
        SpectralMode::Classical,
        params,
        xs,
    )
    .map_err(config_err)?;

    // The quantum loss table dominates, so its bound is the binding one;
    // sharing one step keeps the two runs comparable term by term.
    let dt = block.dt_fraction * quantum.max_stable_dt();
    let run_q = quantum.evolve(&f0, block.t_end, dt).map_err(numerical_err)?;
    let run_c = classical.evolve(&f0, block.t_end, dt).map_err(numerical_err)?;

    let mass_drift = (run_c.records.last().expect("records never empty").mode_sums[0].re
        - run_c.records[0].mode_sums[0].re)
        .abs();
    summary.check(Check::new(
        "mode-zero-mass",
        mass_drift < 1e-6,
        format!("classical mass drift {mass_drift:.3e} (tolerance 1e-6)"),
    ));

    let last_q = run_q.records.last().expect("records never empty");
    let last_c = run_c.records.last().expect("records never empty");
    let ordered = (1..block.n_kappa).all(|l| {
        last_q.mode_sums[l].norm() <= last_c.mode_sums[l].norm() * (1.0 + 1e-12)
    });
    summary.check(Check::new(
        "decoherence-ordering",
        ordered,
        "every coherence mode decays at least as fast in the quantum theory".to_string(),
    ));

    let top = block.n_kappa - 1;
    let kappa_top = f0.kappa(top);
    summary.scalar("kappa_top", kappa_top);
    summary.scalar("lattice_friction", quantum.lattice_friction());
    summary.scalar("dt", dt);

    if params.hbar > 0.0 {
        let measured = (last_c.mode_sums[top].norm() / last_q.mode_sums[top].norm()).ln()
            / block.t_end;
        let predicted = params.inv_temperature * params.hbar * params.hbar
            / (16.0 * params.test_mass)
            * quantum.lattice_friction()
            * kappa_top
            * kappa_top;
        summary.scalar("decoherence_rate_measured", measured);
        summary.scalar("decoherence_rate_predicted", predicted);
        summary.check(check_rel("decoherence-rate", measured, predicted, 0.1));
    } else {
        let worst = run_q
            .field
            .data
            .iter()
            .zip(run_c.field.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        summary.check(Check::new(
            "classical-limit",
            worst == 0.0,
            format!("hbar = 0: modes differ by {worst:.3e} (must be exactly 0)"),
        ));
    }

    let mut csv = String::from("t,kappa,amp_classical,amp_quantum\n");
    for (rc, rq) in run_c.records.iter().zip(&run_q.records) {
        for l in 0..block.n_kappa {
            csv.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                rc.t,
                f0.kappa(l),
                rc.mode_sums[l].norm(),
                rq.mode_sums[l].norm()
            ));
        }
    }
    write_text(&out_dir.join("results.csv"), &csv)?;
    Ok(summary)
}
