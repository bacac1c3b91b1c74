//! Cross-run comparison: loads summaries of prior runs and checks that
//! independent computations of the same physical numbers agree.
//!
//! Three comparisons are wired up: the Monte Carlo relaxation rate against
//! the quadrature friction coefficient; the long-time position-variance
//! slope computed three ways (full phase-space equation, overdamped
//! equation, exact Gaussian moments); and the classical-to-quantum
//! diffusion ratio against 1 + (eta beta hbar)^2 / 16. A high-friction
//! sweep, when referenced, is echoed with its monotonicity verdicts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiments::RunSummary;
use super::{Manifest, RunnerError};

/// Paths to prior run output directories, each holding `summary.json` and
/// `manifest.json`. Only referenced sections are compared.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    #[serde(default)]
    pub coefficients: Option<PathBuf>,
    #[serde(default)]
    pub mc_relax: Option<PathBuf>,
    #[serde(default)]
    pub quantum_kramers: Option<PathBuf>,
    #[serde(default)]
    pub smoluchowski: Option<PathBuf>,
    #[serde(default)]
    pub gaussian_lindblad: Option<PathBuf>,
    #[serde(default)]
    pub high_friction_sweep: Option<PathBuf>,
}

struct LoadedRun {
    dir: PathBuf,
    summary: RunSummary,
    manifest: Manifest,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RunnerError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| RunnerError::Config(format!("cannot parse {}: {e}", path.display())))
}

fn load_run(dir: &Path, expected: &str) -> Result<LoadedRun, RunnerError> {
    let summary: RunSummary = read_json(&dir.join("summary.json"))?;
    if summary.experiment != expected {
        return Err(RunnerError::Config(format!(
            "run at {} is a `{}` run, expected `{expected}`",
            dir.display(),
            summary.experiment
        )));
    }
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    Ok(LoadedRun { dir: dir.to_path_buf(), summary, manifest })
}

/// One numeric agreement check between two runs (or a run and a formula).
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub section: String,
    pub quantity: String,
    pub value_a: f64,
    pub value_b: f64,
    pub rel_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ComparisonRow {
    fn pair(section: &str, quantity: &str, a: f64, b: f64, tol: f64) -> Self {
        let rel = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        Self {
            section: section.to_string(),
            quantity: quantity.to_string(),
            value_a: a,
            value_b: b,
            rel_diff: rel,
            tolerance: tol,
            passed: rel <= tol,
        }
    }
}

fn params_match(a: &Manifest, b: &Manifest) -> bool {
    a.config.params == b.config.params && a.config.cross_section == b.config.cross_section
}

fn require_consistent_inputs(runs: &[&LoadedRun]) -> Result<(), RunnerError> {
    for pair in runs.windows(2) {
        if !params_match(pair[0].manifest(), pair[1].manifest()) {
            return Err(RunnerError::Config(format!(
                "runs at {} and {} used different physical parameters; \
                 their results are not comparable",
                pair[0].dir.display(),
                pair[1].dir.display()
            )));
        }
        let ea = pair[0].summary.scalar_value("eta")?;
        let eb = pair[1].summary.scalar_value("eta")?;
        if (ea - eb).abs() > 1e-12 * ea.abs().max(eb.abs()) {
            return Err(RunnerError::Config(format!(
                "runs at {} and {} used different friction rates ({ea} vs {eb})",
                pair[0].dir.display(),
                pair[1].dir.display()
            )));
        }
    }
    Ok(())
}

impl LoadedRun {
    fn manifest(&self) -> &Manifest {
        &self.manifest
    }
}

/// Sweep points echoed from a high-friction run's results.csv.
fn read_sweep_points(dir: &Path) -> Result<Vec<(f64, f64)>, RunnerError> {
    let path = dir.join("results.csv");
    let text = fs::read_to_string(&path)
        .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for line in text.lines().skip(1) {
        let mut cols = line.split(',');
        let eta = cols.next().and_then(|v| v.parse::<f64>().ok());
        let dev = cols.next().and_then(|v| v.parse::<f64>().ok());
        match (eta, dev) {
            (Some(e), Some(d)) => points.push((e, d)),
            _ => {
                return Err(RunnerError::Config(format!(
                    "malformed sweep row in {}: {line}",
                    path.display()
                )))
            }
        }
    }
    Ok(points)
}

pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub markdown: String,
    pub all_passed: bool,
}

/// Builds the comparison from a parsed spec; paths inside the spec are
/// resolved relative to the current directory.
pub fn build_report(spec: &ReportSpec) -> Result<ComparisonReport, RunnerError> {
    let coefficients = spec
        .coefficients
        .as_deref()
        .map(|d| load_run(d, "coefficients"))
        .transpose()?;
    let mc = spec
        .mc_relax
        .as_deref()
        .map(|d| load_run(d, "mc-relax"))
        .transpose()?;
    let qk = spec
        .quantum_kramers
        .as_deref()
        .map(|d| load_run(d, "quantum-kramers"))
        .transpose()?;
    let smol = spec
        .smoluchowski
        .as_deref()
        .map(|d| load_run(d, "smoluchowski"))
        .transpose()?;
    let gauss = spec
        .gaussian_lindblad
        .as_deref()
        .map(|d| load_run(d, "gaussian-lindblad"))
        .transpose()?;
    let sweep = spec
        .high_friction_sweep
        .as_deref()
        .map(|d| load_run(d, "high-friction-sweep"))
        .transpose()?;

    if [&coefficients, &mc, &qk, &smol, &gauss, &sweep].iter().all(|r| r.is_none()) {
        return Err(RunnerError::Config(
            "report spec references no runs; nothing to compare".into(),
        ));
    }

    let mut rows: Vec<ComparisonRow> = Vec::new();
    let mut md = String::from("# Cross-method comparison\n");

    // Monte Carlo relaxation rate vs the quadrature friction coefficient
    // evaluated for the same inputs (stored alongside the fit).
    if let Some(mc) = &mc {
        let fitted = mc.summary.scalar_value("fitted_rate")?;
        let eta = mc.summary.scalar_value("eta_quadrature")?;
        rows.push(ComparisonRow::pair(
            "relaxation",
            "mc-rate-vs-quadrature-eta",
            fitted,
            eta,
            0.05,
        ));
        let _ = writeln!(
            md,
            "\n## Momentum relaxation\n\nFitted Monte Carlo decay rate {fitted:.6e} \
             against friction coefficient {eta:.6e}.\n"
        );
    }

    // The same long-time diffusion slope from three independent solvers.
    let diffusion_runs: Vec<(&str, &LoadedRun, f64)> = {
        let mut v = Vec::new();
        if let Some(r) = &qk {
            v.push(("quantum-kramers", r, r.summary.scalar_value("msd_slope")?));
        }
        if let Some(r) = &smol {
            v.push(("smoluchowski", r, r.summary.scalar_value("var_slope")?));
        }
        if let Some(r) = &gauss {
            v.push(("gaussian", r, r.summary.scalar_value("sxx_slope_late")?));
        }
        v
    };
    if diffusion_runs.len() >= 2 {
        let loaded: Vec<&LoadedRun> = diffusion_runs.iter().map(|(_, r, _)| *r).collect();
        require_consistent_inputs(&loaded)?;
        let _ = writeln!(md, "\n## Long-time position-variance slope\n");
        for i in 0..diffusion_runs.len() {
            for j in (i + 1)..diffusion_runs.len() {
                let (name_a, _, slope_a) = diffusion_runs[i];
                let (name_b, _, slope_b) = diffusion_runs[j];
                rows.push(ComparisonRow::pair(
                    "position-diffusion",
                    &format!("{name_a}-vs-{name_b}"),
                    slope_a,
                    slope_b,
                    0.02,
                ));
            }
        }
        for (name, _, slope) in &diffusion_runs {
            let _ = writeln!(md, "- {name}: d<var_x>/dt = {slope:.6e}");
        }
    }

    // Quantum correction ratio: computed identity, plus the ratio measured
    // from grid runs when available.
    if let Some(c) = &coefficients {
        let ratio = c.summary.scalar_value("quantum_correction_ratio")?;
        let eta = c.summary.scalar_value("eta")?;
        let p = &c.manifest.config.params;
        let formula = 1.0
            + (eta * p.inv_temperature * p.hbar) * (eta * p.inv_temperature * p.hbar) / 16.0;
        rows.push(ComparisonRow::pair(
            "quantum-ratio",
            "computed-vs-formula",
            ratio,
            formula,
            1e-12,
        ));
        if p.hbar == 0.0 {
            rows.push(ComparisonRow {
                section: "quantum-ratio".into(),
                quantity: "classical-ratio-is-unity".into(),
                value_a: ratio,
                value_b: 1.0,
                rel_diff: (ratio - 1.0).abs(),
                tolerance: 0.0,
                passed: ratio == 1.0,
            });
        }
        if let Some(qk) = &qk {
            if !params_match(&c.manifest, &qk.manifest) {
                return Err(RunnerError::Config(format!(
                    "runs at {} and {} used different physical parameters",
                    c.dir.display(),
                    qk.dir.display()
                )));
            }
            let measured = qk.summary.scalar_value("ratio_measured")?;
            let tol = if p.hbar > 0.0 { 0.01 } else { 0.0 };
            rows.push(ComparisonRow::pair(
                "quantum-ratio",
                "measured-vs-computed",
                measured,
                ratio,
                tol,
            ));
        }
        let _ = writeln!(
            md,
            "\n## Quantum correction ratio\n\nComputed ratio {ratio:.12} against \
             1 + (eta beta hbar)^2 / 16 = {formula:.12}.\n"
        );
    }

    let mut sweep_passed = true;
    if let Some(s) = &sweep {
        let points = read_sweep_points(&s.dir)?;
        let slope = s.summary.scalar_value("slope")?;
        sweep_passed = s.summary.all_passed;
        let _ = writeln!(md, "\n## High-friction limit\n");
        let _ = writeln!(md, "| eta | L1 deviation from overdamped |");
        let _ = writeln!(md, "|----:|-----------------------------:|");
        for (eta, dev) in &points {
            let _ = writeln!(md, "| {eta:.3} | {dev:.6e} |");
        }
        let _ = writeln!(md, "\nlog-log slope {slope:.3}; built-in verdicts:");
        for check in &s.summary.checks {
            let _ = writeln!(
                md,
                "- {}: {} ({})",
                check.name,
                if check.passed { "pass" } else { "FAIL" },
                check.detail
            );
        }
    }

    let _ = writeln!(md, "\n## Agreement table\n");
    let _ = writeln!(
        md,
        "| section | quantity | value A | value B | rel. diff | tolerance | status |"
    );
    let _ = writeln!(
        md,
        "|---------|----------|--------:|--------:|----------:|----------:|--------|"
    );
    for r in &rows {
        let _ = writeln!(
            md,
            "| {} | {} | {:.9e} | {:.9e} | {:.3e} | {:.0e} | {} |",
            r.section,
            r.quantity,
            r.value_a,
            r.value_b,
            r.rel_diff,
            r.tolerance,
            if r.passed { "pass" } else { "FAIL" }
        );
    }

    let _ = writeln!(md, "\n## Provenance\n");
    for run in [&coefficients, &mc, &qk, &smol, &gauss, &sweep].into_iter().flatten() {
        let _ = writeln!(
            md,
            "- `{}` from {} (code version {})",
            run.summary.experiment,
            run.dir.display(),
            run.manifest.version
        );
    }

    let all_passed = sweep_passed && rows.iter().all(|r| r.passed);
    Ok(ComparisonReport { rows, markdown: md, all_passed })
}

/// Loads a report spec, builds the comparison, and writes `report.md` and
/// `report.csv` into `out_dir`. Returns whether every agreement held.
pub fn compare_from_path(spec_path: &Path, out_dir: &Path) -> Result<bool, RunnerError> {
    let spec: ReportSpec = read_json(spec_path)?;
    let report = build_report(&spec)?;
    std::fs::create_dir_all(out_dir)?;

    let mut csv = String::from("section,quantity,value_a,value_b,rel_diff,tolerance,passed\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{:.16e},{:.16e},{:.16e},{:.3e},{}",
            r.section, r.quantity, r.value_a, r.value_b, r.rel_diff, r.tolerance, r.passed
        );
    }
    fs::write(out_dir.join("report.csv"), csv)?;
    fs::write(out_dir.join("report.md"), &report.markdown)?;

    for r in &report.rows {
        println!(
            "compare {:<40} {}",
            format!("{}/{}", r.section, r.quantity),
            if r.passed { "pass" } else { "FAIL" }
        );
    }
    Ok(report.all_passed)
}
