//! One function per CLI subcommand. Each writes its files under
//! `cfg.out_dir` and returns what it wrote.

use std::path::PathBuf;

use serde::Serialize;

use super::checks;
use super::config::{ExperimentConfig, OutputFormat};
use super::output::{emit_svg_heatmap, fmt_f64, write_csv, write_json};
use super::report::GofReport;
use super::suite::run_validation_suite;
use super::tanaka::{tanaka_coalescence_experiment, CoalescenceConfig, CoalescenceRow, FSpec};
use crate::bangbang::{simulate_y, tanaka_residual};
use crate::classifier::{build_config, enumerate_diagonal_roots, strength, EnumeratedRoot};
use crate::densities::{DensityGrid, LineAxis};
use crate::error::{invalid, Result};
use crate::planar::{self, ranks, SystemKind};
use crate::rng::{normal as std_normal, SeedSpec};
use crate::timereversal::{BackwardDriftSpec, ReversalMode};

#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// False when a validation report failed.
    pub all_pass: bool,
}

fn ok(files: Vec<PathBuf>) -> RunOutcome {
    RunOutcome { files, all_pass: true }
}

fn out_path(cfg: &ExperimentConfig, stem: &str) -> PathBuf {
    let ext = match cfg.format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    cfg.out_dir.join(format!("{stem}.{ext}"))
}

/// Write `rows` as CSV, or `value` as JSON, depending on the format.
fn emit<T: Serialize>(
    cfg: &ExperimentConfig,
    stem: &str,
    comments: &[&str],
    header: &[&str],
    rows: &[Vec<String>],
    value: &T,
) -> Result<PathBuf> {
    let path = out_path(cfg, stem);
    match cfg.format {
        OutputFormat::Csv => write_csv(&path, stem, comments, header, rows)?,
        OutputFormat::Json => write_json(&path, value)?,
    }
    Ok(path)
}

fn f(x: f64) -> String {
    fmt_f64(x)
}

/// Which scheme `simulate` runs.
#[derive(Clone, Debug, PartialEq)]
pub enum SimSystem {
    Euler(SystemKind),
    Skew,
}

pub fn simulate(cfg: &ExperimentConfig, system: &SimSystem) -> Result<RunOutcome> {
    let seed = SeedSpec::new(cfg.seed);
    let (p, s0) = (&cfg.params, cfg.initial);
    let path = match system {
        SimSystem::Euler(kind) => planar::euler_simulate(kind, p, s0, cfg.horizon, cfg.steps, seed)?,
        SimSystem::Skew => {
            let y = simulate_y(p, s0.y(), cfg.horizon, cfg.steps, seed.child(0))?;
            let mut rng = seed.child(1).rng();
            let sd = cfg.dt().sqrt();
            let q: Vec<f64> = (0..cfg.steps).map(|_| sd * std_normal(&mut rng)).collect();
            planar::skew_construct(p, s0, &y, &q)?
        }
    };
    let y = path.y_values();
    let l = tanaka_residual(&y);
    let v = path.v_values();
    let (r1, r2) = ranks(&path);
    let rows: Vec<Vec<String>> = (0..path.times.len())
        .map(|k| {
            vec![
                f(path.times[k]),
                f(path.x1_values[k]),
                f(path.x2_values[k]),
                f(y[k]),
                f(r1[k]),
                f(r2[k]),
                f(l[k]),
                f(v[k]),
            ]
        })
        .collect();
    let file = emit(
        cfg,
        "path",
        &[],
        &["t", "x1", "x2", "y", "r1", "r2", "local_time", "v"],
        &rows,
        &path,
    )?;
    Ok(ok(vec![file]))
}

pub fn sample(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let draws = planar::exact_sample_terminal(&cfg.params, cfg.initial, cfg.horizon, cfg.paths, SeedSpec::new(cfg.seed))?;
    let rows: Vec<Vec<String>> = draws
        .iter()
        .map(|d| vec![f(d.x1), f(d.x2), (d.atom as u8).to_string()])
        .collect();
    let file = emit(cfg, "samples", &[], &["x1", "x2", "atom"], &rows, &draws)?;
    Ok(ok(vec![file]))
}

/// Plotting window: a few standard deviations around the drifted start.
pub fn density_window(cfg: &ExperimentConfig) -> (f64, f64) {
    let (p, s0, t) = (&cfg.params, cfg.initial, cfg.horizon);
    (
        s0.x1.min(s0.x2) - 4.0 * t.sqrt() - p.h() * t,
        s0.x1.max(s0.x2) + 4.0 * t.sqrt() + p.g() * t,
    )
}

pub fn density(cfg: &ExperimentConfig, n_grid: usize) -> Result<RunOutcome> {
    if n_grid < 2 {
        return Err(invalid("density grid needs at least 2 points per axis"));
    }
    let (lo, hi) = density_window(cfg);
    let axis: Vec<f64> = (0..n_grid).map(|i| lo + (hi - lo) * i as f64 / (n_grid - 1) as f64).collect();
    let grid = DensityGrid::build(&cfg.params, cfg.initial, cfg.horizon, axis.clone(), axis)?;
    let mut rows = Vec::with_capacity(n_grid * n_grid);
    for (i, a) in grid.xi1.iter().enumerate() {
        for (j, b) in grid.xi2.iter().enumerate() {
            rows.push(vec![f(*a), f(*b), f(grid.values[i][j])]);
        }
    }
    let atom = grid.atom.filter(|a| a.mass() > 0.0).map(|a| {
        let axis = match a.axis {
            LineAxis::Xi2Fixed => "xi2",
            LineAxis::Xi1Fixed => "xi1",
            LineAxis::Rank2Fixed => "r2",
        };
        format!("singular line {axis} = {} with mass {}", f(a.level), f(a.mass()))
    });
    let comments: Vec<&str> = atom.iter().map(String::as_str).collect();
    let file = emit(cfg, "density", &comments, &["xi1", "xi2", "density"], &rows, &grid)?;
    let svg = cfg.out_dir.join("density.svg");
    emit_svg_heatmap(&grid, &svg)?;
    Ok(ok(vec![file, svg]))
}

/// A single root given by its signs and angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootArgs {
    pub eps: i8,
    pub delta: i8,
    pub phi: f64,
    pub vartheta: f64,
}

pub fn classify(cfg: &ExperimentConfig, root: Option<RootArgs>) -> Result<RunOutcome> {
    let p = &cfg.params;
    let roots = match root {
        Some(r) => {
            let config = build_config(p, r.eps, r.delta, r.phi, r.vartheta)?;
            let verdict = strength(&config)?;
            vec![EnumeratedRoot { label: "custom".into(), config, verdict }]
        }
        None => enumerate_diagonal_roots(p)?.roots,
    };
    let strong = roots.iter().filter(|r| r.verdict.strong).count();
    let rows: Vec<Vec<String>> = roots
        .iter()
        .map(|r| {
            let (c, v) = (&r.config, &r.verdict);
            vec![
                r.label.clone(),
                c.eps.to_string(),
                c.delta.to_string(),
                f(c.phi),
                f(c.vartheta),
                v.strong.to_string(),
                f(v.checks.ip_sum_norm),
                f(v.checks.weak_scalar),
                f(v.checks.geom_residual),
            ]
        })
        .collect();
    let summary = format!("{} roots, {strong} strong (rho {}, sigma {})", roots.len(), f(p.rho()), f(p.sigma()));
    let file = emit(
        cfg,
        "classify",
        &[&summary],
        &["label", "eps", "delta", "phi", "vartheta", "strong", "ip_sum_norm", "weak_scalar", "geom_residual"],
        &rows,
        &roots,
    )?;
    Ok(ok(vec![file]))
}

const PROFILE_TAU: [f64; 6] = [0.01, 0.05, 0.1, 0.25, 0.5, 1.0];

pub fn reverse(cfg: &ExperimentConfig, mode: ReversalMode, y0: f64) -> Result<RunOutcome> {
    let p = &cfg.params;
    let spec = BackwardDriftSpec::new(*p, y0, cfg.horizon, mode)?;
    let mut rows = Vec::new();
    for frac in PROFILE_TAU {
        let tau = frac * cfg.horizon;
        for k in -30..=30 {
            let xi = 0.1 * k as f64;
            let b = spec.drift(tau, xi)?;
            let q = b - p.lambda() * crate::model::sgn(xi);
            rows.push(vec![f(tau), f(xi), f(q), f(b)]);
        }
    }
    #[derive(Serialize)]
    struct Profile<'a> {
        spec: &'a BackwardDriftSpec,
        rows: &'a [Vec<String>],
    }
    let profile = emit(
        cfg,
        "drift_profile",
        &[],
        &["tau", "xi", "q", "b_hat"],
        &rows,
        &Profile { spec: &spec, rows: &rows },
    )?;
    let seed = SeedSpec::new(cfg.seed);
    let reports = match mode {
        ReversalMode::SteadyState => vec![checks::check_steady_reversal(p, cfg.horizon, cfg.steps, cfg.paths, seed)],
        ReversalMode::Transient => {
            checks::check_transient_reversal(p, cfg.horizon, cfg.steps, (cfg.paths / 10).max(100), cfg.paths, seed)
        }
    };
    let report = write_reports(cfg, "reverse_report", &reports)?;
    Ok(RunOutcome { files: vec![profile, report], all_pass: reports.iter().all(|r| r.pass) })
}

pub fn report_rows(reports: &[GofReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.kind.as_str().into(),
                f(r.statistic),
                r.p_value.map(f).unwrap_or_default(),
                r.n.to_string(),
                f(r.tolerance),
                match r.bound {
                    super::report::Bound::Upper => "upper".into(),
                    super::report::Bound::Lower => "lower".into(),
                },
                r.pass.to_string(),
            ]
        })
        .collect()
}

pub const REPORT_HEADER: [&str; 8] = ["name", "kind", "statistic", "p_value", "n", "tolerance", "bound", "pass"];

fn write_reports(cfg: &ExperimentConfig, stem: &str, reports: &[GofReport]) -> Result<PathBuf> {
    emit(cfg, stem, &[], &REPORT_HEADER, &report_rows(reports), &reports)
}

pub fn validate(cfg: &ExperimentConfig) -> Result<(RunOutcome, Vec<GofReport>)> {
    let reports = run_validation_suite(cfg);
    let file = write_reports(cfg, "validation", &reports)?;
    let all_pass = reports.iter().all(|r| r.pass);
    Ok((RunOutcome { files: vec![file], all_pass }, reports))
}

pub fn tanaka(cfg: &ExperimentConfig, f_spec: &FSpec, base: &CoalescenceConfig) -> Result<RunOutcome> {
    let c = CoalescenceConfig {
        horizon: cfg.horizon,
        pairs: cfg.paths,
        seed: cfg.seed,
        ..base.clone()
    };
    let r = tanaka_coalescence_experiment(f_spec, &c)?;
    let to_rows = |case: &str, rs: &[CoalescenceRow]| -> Vec<Vec<String>> {
        rs.iter()
            .map(|x| vec![case.into(), f(x.dt), f(x.median_sup), f(x.mean_sup), f(x.identical)])
            .collect()
    };
    let mut rows = to_rows("main", &r.rows);
    rows.extend(to_rows("contrast", &r.contrast));
    let file = emit(
        cfg,
        "tanaka",
        &["illustrative: dt-consistency of two Euler solutions, not a proof of pathwise uniqueness"],
        &["case", "dt", "median_sup", "mean_sup", "identical_fraction"],
        &rows,
        &r,
    )?;
    Ok(ok(vec![file]))
}
