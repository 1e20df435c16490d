//! Individual cross-checks of the validation battery. Each returns report
//! lines; sample sizes and seeds are explicit so the acceptance tests can run
//! them at full size.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use rand::Rng;
use rayon::prelude::*;

use super::report::{chi2_critical, ks2_tolerance, ks_tolerance, GofKind, GofReport};
use crate::bangbang::{self, density_l, occupation_local_time, simulate_y_driven, skorokhod_local_time, transition_density};
use crate::classifier::{build_config, enumerate_diagonal_roots, strength, SqrtConfig};
use crate::densities::{self, AtomLine, LineAxis};
use crate::error::Result;
use crate::model::{sgn, validate_params, InitialState, ModelParams};
use crate::planar::{self, cumulative, NoiseBundle, PathOrigin, PlanarPath, SystemKind};
use crate::quad::{dblquad, integrate_breaks, TabulatedCdf};
use crate::rng::{normal as std_normal, open01, par_collect, SeedSpec};
use crate::stats::{self, chi2_test, ks_one_sample, ks_two_sample, mean_se};
use crate::timereversal::{
    backward_drift, backward_drift_origin, backward_drift_origin_displayed, laplace_draw, q_function,
    q_origin_closed_form, simulate_backward_snapshots, BackwardDriftSpec, ReversalMode,
};

/// Fault injection for the suite's own tests.
#[derive(Clone, Copy, Debug)]
pub struct SuiteHooks {
    /// Every density is multiplied by this factor inside the normalization check.
    pub density_scale: f64,
}

impl Default for SuiteHooks {
    fn default() -> Self {
        Self { density_scale: 1.0 }
    }
}

/// The `lambda / t / y` grid of the deterministic density checks.
pub const LAMBDA_GRID: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
pub const T_GRID: [f64; 3] = [0.1, 1.0, 5.0];
pub const Y_GRID: [f64; 3] = [-2.0, 0.0, 3.0];

fn grid_params(lambda: f64, rho: f64, sigma: f64) -> ModelParams {
    validate_params(0.6 * lambda, 0.4 * lambda, rho, sigma).expect("grid parameters are valid")
}

fn err_report(name: &str, r: Result<Vec<GofReport>>) -> Vec<GofReport> {
    r.unwrap_or_else(|e| vec![GofReport::errored(name, &e)])
}

// ---------------------------------------------------------------- classifier

/// Strong counts among the 64 diagonal / anti-diagonal roots.
pub const EXPECTED_STRONG: [((f64, f64), usize); 4] = [
    ((FRAC_1_SQRT_2, FRAC_1_SQRT_2), 48),
    ((1.0, 0.0), 48),
    ((0.0, 1.0), 48),
    ((0.8, 0.6), 56),
];

pub fn check_classifier_counts() -> Vec<GofReport> {
    let mut out = Vec::new();
    for ((rho, sigma), expected) in EXPECTED_STRONG {
        let name = format!("classifier enumeration (rho={rho:.4}, sigma={sigma:.4})");
        let r = validate_params(1.0, 1.0, rho, sigma).and_then(|p| enumerate_diagonal_roots(&p));
        match r {
            Ok(e) => {
                out.push(GofReport::upper(
                    format!("{name}: total roots - 64"),
                    GofKind::Deterministic,
                    (e.roots.len() as f64 - 64.0).abs(),
                    0.0,
                    e.roots.len(),
                ));
                out.push(GofReport::upper(
                    format!("{name}: strong count - {expected}"),
                    GofKind::Deterministic,
                    (e.strong_count as f64 - expected as f64).abs(),
                    0.0,
                    e.roots.len(),
                ));
            }
            Err(e) => out.push(GofReport::errored(name, &e)),
        }
    }
    out
}

/// Random square roots: half uniform in the angles, half built on the strong
/// manifold `vartheta = phi + psi + pi`, of which half are then moved off it.
/// Returns `(configs, disagreements, strong verdicts)`.
pub fn criterion_equivalence_sweep(n: usize, seed: SeedSpec) -> (usize, usize, usize) {
    let results = par_collect(n, seed, |rng, i| {
        let a = rng.random::<f64>() * PI / 2.0;
        let (rho, sigma) = (a.cos(), a.sin());
        let eps: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let delta: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let phi = rng.random::<f64>() * TAU;
        let vartheta = if i % 2 == 0 {
            rng.random::<f64>() * TAU
        } else {
            let psi = (sigma * sigma * eps as f64 - rho * rho * delta as f64)
                .atan2(rho * sigma * (1.0 + (eps * delta) as f64));
            let jitter = if rng.random::<bool>() { 0.0 } else { rng.random::<f64>() - 0.5 };
            phi + psi + PI + jitter
        };
        match SqrtConfig::new(rho, sigma, eps, delta, phi, vartheta).and_then(|c| strength(&c)) {
            Ok(v) => (false, v.strong),
            Err(_) => (true, false),
        }
    });
    let bad = results.iter().filter(|r| r.0).count();
    let strong = results.iter().filter(|r| r.1).count();
    (n, bad, strong)
}

pub fn check_criterion_equivalence(n: usize, seed: SeedSpec) -> GofReport {
    let (n, bad, strong) = criterion_equivalence_sweep(n, seed);
    GofReport::upper(
        format!("strength criteria agree on random roots ({strong} strong)"),
        GofKind::Deterministic,
        bad as f64,
        0.0,
        n,
    )
}

// ------------------------------------------------------------- normalization

/// Box containing all but a negligible part of the time-t planar law.
pub fn planar_box(p: &ModelParams, s0: InitialState, t: f64) -> (f64, f64) {
    let spread = 2.0 * p.lambda() * t + 8.0 * t.sqrt() + 12.0 / p.lambda() + s0.y().abs();
    (s0.x1.min(s0.x2) - spread, s0.x1.max(s0.x2) + spread)
}

fn inner_breaks(lo: f64, hi: f64, pts: &[f64]) -> Vec<f64> {
    let mut v = vec![lo, hi];
    v.extend(pts.iter().copied().filter(|x| *x > lo && *x < hi));
    v.sort_by(f64::total_cmp);
    v
}

const MASS_TOL: f64 = 1e-9;

fn transition_mass(lambda: f64, t: f64, y: f64, scale: f64) -> f64 {
    let b = y.abs() + lambda * t + 10.0 * t.sqrt() + 12.0 / lambda;
    integrate_breaks(|xi| scale * density_l(lambda, t, y, xi), &[-b, 0.0, y, b], MASS_TOL).value
}

fn wedge_mass<F: Fn(f64, f64) -> f64>(f: F, lo: f64, hi: f64, front: Option<f64>) -> f64 {
    let extra: Vec<f64> = front.into_iter().collect();
    dblquad(
        f,
        &inner_breaks(lo, hi, &extra),
        |a| {
            let mut pts = vec![a];
            pts.extend(front);
            inner_breaks(lo, hi, &pts)
        },
        MASS_TOL,
    )
    .value
}

/// Largest `|mass - 1|` over the grid for each closed-form law.
pub fn normalization_errors(hooks: &SuiteHooks) -> Vec<(&'static str, f64)> {
    let k = hooks.density_scale;
    let mut cases = Vec::new();
    for l in LAMBDA_GRID {
        for t in T_GRID {
            for y in Y_GRID {
                cases.push((l, t, y));
            }
        }
    }
    let per_case: Vec<[f64; 5]> = cases
        .par_iter()
        .map(|&(l, t, y)| {
            let s0 = InitialState::new(y, 0.0);
            let tr = transition_mass(l, t, y, k);

            let p = grid_params(l, FRAC_1_SQRT_2, FRAC_1_SQRT_2);
            let (lo, hi) = planar_box(&p, s0, t);
            let iso = wedge_mass(
                |a, b| k * densities::joint_density_isotropic(&p, s0, t, a, b).unwrap_or(f64::NAN),
                lo,
                hi,
                None,
            );

            let p = grid_params(l, 1.0, 0.0);
            let (lo, hi) = planar_box(&p, s0, t);
            let front = s0.x1.min(s0.x2) + p.g() * t;
            let line = densities::atom_line(&p, s0, t).expect("degenerate parameters");
            let line_mass = integrate_breaks(|u| k * line.line_density(u), &[line.level, hi], MASS_TOL).value;
            let deg = wedge_mass(
                |a, b| k * densities::joint_density_degenerate(&p, s0, t, a, b).unwrap_or(f64::NAN),
                lo,
                hi,
                Some(front),
            ) + line_mass;

            let rank_line = densities::rank_atom_line(&p, s0, t).expect("degenerate parameters");
            let rank_line_mass =
                integrate_breaks(|u| k * rank_line.line_density(u), &[rank_line.level, hi], MASS_TOL).value;
            let rank = dblquad(
                |r2, r1| k * densities::rank_density_degenerate(&p, s0, t, r1, r2).unwrap_or(f64::NAN),
                &inner_breaks(lo, hi, &[front]),
                |r2| vec![r2, hi],
                MASS_TOL,
            )
            .value
                + rank_line_mass;

            let p = grid_params(l, 0.8, 0.6);
            let b = 2.0 * l * t + 8.0 * t.sqrt() + 12.0 / l + y.abs();
            let psi = dblquad(
                |a, c| k * densities::psi_density(&p, y, t, a, c).unwrap_or(f64::NAN),
                &[-b, b],
                |a| inner_breaks(-b, b, &[a + y]),
                MASS_TOL,
            )
            .value;
            [tr, iso, deg, rank, psi]
        })
        .collect();
    let names = [
        "transition_density",
        "joint_density_isotropic",
        "joint_density_degenerate + atom",
        "rank_density_degenerate + atom",
        "psi_density",
    ];
    names
        .iter()
        .enumerate()
        .map(|(j, n)| (*n, per_case.iter().map(|c| (c[j] - 1.0).abs()).fold(0.0, f64::max)))
        .collect()
}

pub const NORMALIZATION_TOL: f64 = 1e-5;

pub fn check_normalization(hooks: &SuiteHooks) -> Vec<GofReport> {
    let n = LAMBDA_GRID.len() * T_GRID.len() * Y_GRID.len();
    normalization_errors(hooks)
        .into_iter()
        .map(|(name, e)| {
            GofReport::upper(format!("normalization: {name}"), GofKind::Deterministic, e, NORMALIZATION_TOL, n)
        })
        .collect()
}

// -------------------------------------------------------- Chapman-Kolmogorov

pub const CK_XI: [f64; 5] = [-1.5, -0.3, 0.0, 0.3, 1.5];

/// Sup over the grid of `|int p_s(y,u) p_{t-s}(u,xi) du - p_t(y,xi)|`, `s = 0.4 t`.
pub fn chapman_kolmogorov_error() -> f64 {
    let mut cases = Vec::new();
    for l in LAMBDA_GRID {
        for t in T_GRID {
            for y in Y_GRID {
                for xi in CK_XI {
                    cases.push((l, t, y, xi));
                }
            }
        }
    }
    cases
        .par_iter()
        .map(|&(l, t, y, xi)| {
            let s = 0.4 * t;
            let b = y.abs() + xi.abs() + l * t + 12.0 * t.sqrt() + 14.0 / l;
            let conv = integrate_breaks(
                |u| density_l(l, s, y, u) * density_l(l, t - s, u, xi),
                &[-b, 0.0, y, xi, b],
                1e-12,
            )
            .value;
            (conv - density_l(l, t, y, xi)).abs()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

pub const CK_TOL: f64 = 1e-6;

pub fn check_chapman_kolmogorov() -> GofReport {
    let n = LAMBDA_GRID.len() * T_GRID.len() * Y_GRID.len() * CK_XI.len();
    GofReport::upper(
        "Chapman-Kolmogorov for the transition density",
        GofKind::Deterministic,
        chapman_kolmogorov_error(),
        CK_TOL,
        n,
    )
}

// ------------------------------------------------------- sampler vs density

/// Exact marginal CDFs and cell masses of the time-t planar law.
pub struct PlanarLaw {
    pub params: ModelParams,
    pub initial: InitialState,
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
    front: Option<f64>,
    line: Option<AtomLine>,
}

const MARGINAL_CELLS: usize = 4000;

impl PlanarLaw {
    pub fn new(p: &ModelParams, s0: InitialState, t: f64) -> Result<Self> {
        densities::joint_density(p, s0, t, s0.x1, s0.x2)?;
        let line = densities::singular_part(p, s0, t)?.filter(|l| l.mass() > 0.0);
        let front = (p.sigma() == 0.0).then(|| s0.x1.min(s0.x2) + p.g() * t);
        let (lo, hi) = planar_box(p, s0, t);
        Ok(Self { params: *p, initial: s0, t, lo, hi, front, line })
    }

    fn f(&self, a: f64, b: f64) -> f64 {
        densities::joint_density(&self.params, self.initial, self.t, a, b).unwrap_or(f64::NAN)
    }

    pub fn atom_mass(&self) -> f64 {
        self.line.map_or(0.0, |l| l.mass())
    }

    /// CDF of coordinate `which` (0 or 1), with the singular line's atom.
    pub fn marginal_cdf(&self, which: usize) -> (TabulatedCdf, Vec<(f64, f64)>) {
        let (lo, hi) = (self.lo, self.hi);
        let front: Vec<f64> = self.front.into_iter().collect();
        let line_free_axis = self.line.map(|l| if l.axis == LineAxis::Xi2Fixed { 0 } else { 1 });
        let density = |u: f64| {
            let mut pts = vec![u];
            pts.extend(&front);
            let cont = integrate_breaks(
                |v| if which == 0 { self.f(u, v) } else { self.f(v, u) },
                &inner_breaks(lo, hi, &pts),
                1e-11,
            )
            .value;
            let on_line = match (self.line, line_free_axis) {
                (Some(l), Some(a)) if a == which => l.line_density(u),
                _ => 0.0,
            };
            cont + on_line
        };
        let table = TabulatedCdf::new(density, lo, hi, MARGINAL_CELLS, &front);
        let atoms = match (self.line, line_free_axis) {
            (Some(l), Some(a)) if a != which => vec![(l.level, l.mass())],
            _ => Vec::new(),
        };
        (table, atoms)
    }

    /// Mass of the continuous part on `[a0, a1] x [b0, b1]`.
    pub fn cell_mass(&self, a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
        let front: Vec<f64> = self.front.into_iter().collect();
        dblquad(
            |a, b| self.f(a, b),
            &inner_breaks(a0, a1, &front),
            |a| {
                let mut pts = vec![a];
                pts.extend(&front);
                inner_breaks(b0, b1, &pts)
            },
            1e-10,
        )
        .value
    }
}

fn quantile_edges(mut xs: Vec<f64>, bins: usize, lo: f64, hi: f64) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    let mut e = vec![lo];
    for k in 1..bins {
        e.push(xs[(k * xs.len()) / bins].clamp(lo, hi));
    }
    e.push(hi);
    e.dedup();
    e
}

fn bin_of(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e <= v).clamp(1, edges.len() - 1) - 1
}

pub const SAMPLER_KS_TOL: f64 = 0.01;
pub const CHI2_BINS: usize = 20;

/// KS per marginal, chi-square on quantile bins (plus an atom category) and
/// a binomial check of the atom frequency.
pub fn check_sampler_vs_density(
    label: &str,
    p: &ModelParams,
    s0: InitialState,
    t: f64,
    n: usize,
    seed: SeedSpec,
) -> Vec<GofReport> {
    err_report(&format!("sampler vs density [{label}]"), sampler_vs_density(label, p, s0, t, n, seed))
}

fn sampler_vs_density(
    label: &str,
    p: &ModelParams,
    s0: InitialState,
    t: f64,
    n: usize,
    seed: SeedSpec,
) -> Result<Vec<GofReport>> {
    let law = PlanarLaw::new(p, s0, t)?;
    let draws = planar::exact_sample_terminal(p, s0, t, n, seed)?;
    let mut out = Vec::new();
    let tol = ks_tolerance(SAMPLER_KS_TOL, n);
    for which in 0..2 {
        let (table, atoms) = law.marginal_cdf(which);
        let xs: Vec<f64> = draws.iter().map(|d| if which == 0 { d.x1 } else { d.x2 }).collect();
        let cdf = |x: f64| table.cdf(x) + atoms.iter().filter(|a| x >= a.0).map(|a| a.1).sum::<f64>();
        let d = ks_one_sample(&xs, cdf, &atoms);
        out.push(
            GofReport::upper(format!("sampler vs density [{label}]: KS X{}", which + 1), GofKind::Ks, d, tol, n)
                .with_p(stats::ks_pvalue(d, n as f64)),
        );
    }

    // Paths without local time land on a line only in the degenerate case.
    let on_line = |d: &planar::TerminalDraw| d.atom && law.line.is_some();
    let cont: Vec<_> = draws.iter().filter(|d| !on_line(d)).collect();
    let ex = quantile_edges(cont.iter().map(|d| d.x1).collect(), CHI2_BINS, law.lo, law.hi);
    let ey = quantile_edges(cont.iter().map(|d| d.x2).collect(), CHI2_BINS, law.lo, law.hi);
    let (nx, ny) = (ex.len() - 1, ey.len() - 1);
    let mut observed = vec![0u64; nx * ny];
    for d in &cont {
        observed[bin_of(&ex, d.x1) * ny + bin_of(&ey, d.x2)] += 1;
    }
    let mut probs: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c / ny, c % ny);
            law.cell_mass(ex[i], ex[i + 1], ey[j], ey[j + 1])
        })
        .collect();
    let atom_mass = law.atom_mass();
    let n_atom = (draws.len() - cont.len()) as u64;
    if atom_mass > 0.0 {
        observed.push(n_atom);
        probs.push(atom_mass);
    }
    let c = chi2_test(&observed, &probs, 5.0);
    out.push(
        GofReport::upper(
            format!("sampler vs density [{label}]: chi2 on {nx}x{ny} bins (df {})", c.df),
            GofKind::Chi2,
            c.statistic,
            chi2_critical(c.df),
            n,
        )
        .with_p(c.p_value),
    );

    let freq = n_atom as f64 / n as f64;
    let se = (atom_mass * (1.0 - atom_mass) / n as f64).sqrt();
    out.push(GofReport::upper(
        format!("sampler vs density [{label}]: atom frequency (mass {atom_mass:.6})"),
        GofKind::MeanCi,
        (freq - atom_mass).abs(),
        4.0 * se,
        n,
    ));
    Ok(out)
}

// --------------------------------------------------------- Euler vs exact

pub const EULER_KS_TOL: f64 = 0.015;

#[allow(clippy::too_many_arguments)]
pub fn check_euler_vs_exact(
    label: &str,
    p: &ModelParams,
    s0: InitialState,
    t: f64,
    n: usize,
    n_steps: usize,
    kinds: &[SystemKind],
    seed: SeedSpec,
) -> Vec<GofReport> {
    let name = format!("Euler vs exact [{label}]");
    let exact = match planar::exact_sample_terminal(p, s0, t, n, seed.child(0)) {
        Ok(d) => d,
        Err(e) => return vec![GofReport::errored(name, &e)],
    };
    let tol = ks2_tolerance(EULER_KS_TOL, n, n);
    let mut out = Vec::new();
    for (k, kind) in kinds.iter().enumerate() {
        let euler = par_collect(n, seed.child(1 + k as u64), |rng, _| {
            planar::euler_terminal(kind, p, s0, t, n_steps, rng)
        });
        for which in 0..2 {
            let a: Vec<f64> = euler.iter().map(|e| if which == 0 { e.0 } else { e.1 }).collect();
            let b: Vec<f64> = exact.iter().map(|d| if which == 0 { d.x1 } else { d.x2 }).collect();
            let d = ks_two_sample(&a, &b);
            out.push(
                GofReport::upper(
                    format!("{name}: system {} X{} (dt {})", kind_name(kind), which + 1, t / n_steps as f64),
                    GofKind::Ks,
                    d,
                    tol,
                    n,
                )
                .with_p(stats::ks_pvalue(d, n as f64 / 2.0)),
            );
        }
    }
    out
}

pub fn kind_name(kind: &SystemKind) -> &'static str {
    match kind {
        SystemKind::B => "B",
        SystemKind::W => "W",
        SystemKind::V => "V",
        SystemKind::CustomRoot(_) => "custom",
    }
}

// ---------------------------------------------------------- path identities

pub const IDENTITY_TOL: f64 = 1e-10;

/// `(max |X1 - X2 - Y|, sign mismatches, max |X1 + X2 - z - nu t - V|)`
/// against the bang-bang path driven by the reconstructed `W`.
pub fn path_identity_errors(path: &PlanarPath) -> (f64, usize, f64) {
    let p = &path.params;
    let nb = NoiseBundle::reconstruct(path);
    let dt = path.times[1] - path.times[0];
    let y = path.y_values();
    let yp = simulate_y_driven(p.lambda(), y[0], dt, nb.w.clone());
    let mut dmax: f64 = 0.0;
    let mut mism = 0;
    for (a, b) in y.iter().zip(&yp.y_values) {
        dmax = dmax.max((a - b).abs());
        if sgn(*a) != sgn(*b) {
            mism += 1;
        }
    }
    let v = cumulative(&nb.v);
    let z = path.initial.z();
    let smax = (0..path.times.len())
        .map(|k| (path.x1_values[k] + path.x2_values[k] - (z + p.nu() * path.times[k] + v[k])).abs())
        .fold(0.0, f64::max);
    (dmax, mism, smax)
}

/// Path identities for B, W, V, one custom root and the skew construction.
pub fn check_path_identities(p: &ModelParams, s0: InitialState, horizon: f64, n_steps: usize, seed: SeedSpec) -> Vec<GofReport> {
    err_report("path identities", path_identities(p, s0, horizon, n_steps, seed))
}

fn path_identities(p: &ModelParams, s0: InitialState, horizon: f64, n_steps: usize, seed: SeedSpec) -> Result<Vec<GofReport>> {
    let root = build_config(p, 1, -1, 0.7, 2.1)?;
    let mut paths = Vec::new();
    for (k, kind) in [SystemKind::B, SystemKind::W, SystemKind::V, SystemKind::CustomRoot(root)].into_iter().enumerate() {
        paths.push(planar::euler_simulate(&kind, p, s0, horizon, n_steps, seed.child(k as u64))?);
    }
    let dt = horizon / n_steps as f64;
    let mut rng = seed.child(9).rng();
    let w: Vec<f64> = (0..n_steps).map(|_| dt.sqrt() * std_normal(&mut rng)).collect();
    let q: Vec<f64> = (0..n_steps).map(|_| dt.sqrt() * std_normal(&mut rng)).collect();
    let ypath = simulate_y_driven(p.lambda(), s0.y(), dt, w);
    paths.push(planar::skew_construct(p, s0, &ypath, &q)?);

    let mut out = Vec::new();
    for path in &paths {
        let label = match &path.origin {
            PathOrigin::Euler(k) => kind_name(k),
            PathOrigin::Skew => "skew",
        };
        let (dmax, mism, smax) = path_identity_errors(path);
        let stat = if mism > 0 { f64::INFINITY } else { dmax };
        out.push(GofReport::upper(
            format!("path identity [{label}]: X1 - X2 vs bang-bang Euler path"),
            GofKind::Deterministic,
            stat,
            IDENTITY_TOL,
            n_steps,
        ));
        out.push(GofReport::upper(
            format!("path identity [{label}]: X1 + X2 - (z + nu t + V)"),
            GofKind::Deterministic,
            smax,
            IDENTITY_TOL,
            n_steps,
        ));
    }
    Ok(out)
}

// --------------------------------------------------------------- local time

fn brownian_increments<R: Rng + ?Sized>(rng: &mut R, n: usize, dt: f64) -> Vec<f64> {
    let sd = dt.sqrt();
    (0..n).map(|_| sd * std_normal(rng)).collect()
}

/// Per-path `L(t)` from the Tanaka residual and from occupation with
/// `eps = dt^0.4`, for `Y` started at 0.
pub fn tanaka_vs_occupation(lambda: f64, horizon: f64, dt: f64, n: usize, seed: SeedSpec) -> Vec<(f64, f64)> {
    let steps = (horizon / dt).round() as usize;
    let eps = dt.powf(0.4);
    par_collect(n, seed, |rng, _| {
        let path = simulate_y_driven(lambda, 0.0, dt, brownian_increments(rng, steps, dt));
        let occ = occupation_local_time(&path, eps).expect("eps > 0");
        (*path.l_values.last().unwrap(), *occ.last().unwrap())
    })
}

pub const ESTIMATOR_REL_TOL: f64 = 0.1;

pub fn check_tanaka_vs_occupation(lambda: f64, n: usize, seed: SeedSpec) -> GofReport {
    let pairs = tanaka_vs_occupation(lambda, 1.0, 1e-4, n, seed);
    let tan: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let diff: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    let (mt, _) = mean_se(&tan);
    let (md, sd) = mean_se(&diff);
    GofReport::upper(
        "local time: occupation vs Tanaka residual at t=1, dt=1e-4 (relative)",
        GofKind::MeanCi,
        (md / mt).abs(),
        ESTIMATOR_REL_TOL.max(4.0 * sd / mt),
        n,
    )
}

/// Brownian local time at 1 (zero drift) against `E|W(1)| / 2`.
pub fn check_brownian_local_time(n: usize, seed: SeedSpec) -> GofReport {
    let dt = 1e-4;
    let ls = par_collect(n, seed, |rng, _| {
        *simulate_y_driven(0.0, 0.0, dt, brownian_increments(rng, 10_000, dt)).l_values.last().unwrap()
    });
    let (m, se) = mean_se(&ls);
    let oracle = 0.5 * integrate_breaks(|x| x.abs() * crate::normal::pdf(x), &[-12.0, 0.0, 12.0], 1e-13).value;
    GofReport::upper(
        "local time: Brownian Tanaka estimator vs E|W(1)|/2",
        GofKind::MeanCi,
        (m - oracle).abs(),
        4.0 * se,
        n,
    )
}

/// RMS discretization gaps of the local time, one entry per `dt`.
#[derive(Clone, Debug)]
pub struct LocalTimeRates {
    pub dts: Vec<f64>,
    /// Skorokhod reflection formula vs Tanaka residual.
    pub rms_skorokhod: Vec<f64>,
    /// Reversed-path local time vs `L(T) - L(T - t)`.
    pub rms_reversal: Vec<f64>,
}

pub const RATE_DTS: [f64; 4] = [4e-3, 1e-3, 2.5e-4, 6.25e-5];

/// Both gaps as root mean squares over all grid points of `n` paths of `Y`
/// from 0 on `[0, horizon]`.
pub fn local_time_rates(lambda: f64, horizon: f64, dts: &[f64], n: usize, seed: SeedSpec) -> LocalTimeRates {
    let mut rms_skorokhod = Vec::new();
    let mut rms_reversal = Vec::new();
    for (k, &dt) in dts.iter().enumerate() {
        let steps = (horizon / dt).round() as usize;
        let per_path = par_collect(n, seed.child(k as u64), |rng, _| {
            let path = simulate_y_driven(lambda, 0.0, dt, brownian_increments(rng, steps, dt));
            let vflat = cumulative(
                &path.w_increments.iter().zip(&path.y_values).map(|(w, y)| sgn(*y) * w).collect::<Vec<_>>(),
            );
            let sk = skorokhod_local_time(0.0, lambda, &path.times, &vflat);
            let a: f64 = sk.iter().zip(&path.l_values).map(|(s, l)| (s - l).powi(2)).sum();
            let rev = crate::timereversal::reversal_identity_residual(&path);
            let b: f64 = rev.iter().map(|r| r * r).sum();
            (a / sk.len() as f64, b / rev.len() as f64)
        });
        rms_skorokhod.push((per_path.iter().map(|p| p.0).sum::<f64>() / n as f64).sqrt());
        rms_reversal.push((per_path.iter().map(|p| p.1).sum::<f64>() / n as f64).sqrt());
    }
    LocalTimeRates { dts: dts.to_vec(), rms_skorokhod, rms_reversal }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// An `O(sqrt dt)` gap halves when `dt` quarters: fitted order at least this.
pub const HALF_ORDER_MIN: f64 = 0.45;

pub fn rate_report(what: &str, dts: &[f64], rms: &[f64], n: usize) -> GofReport {
    let detail: Vec<String> = dts.iter().zip(rms).map(|(d, r)| format!("{d:e}:{r:.5}")).collect();
    GofReport::lower(
        format!("local time: {what} RMS order in dt [{}]", detail.join(" ")),
        GofKind::Deterministic,
        loglog_slope(dts, rms),
        HALF_ORDER_MIN,
        n,
    )
}

// ------------------------------------------------------------ time reversal

pub const Q_Y0: [f64; 4] = [-2.0, 0.0, 0.5, 3.0];
pub const Q_TAU: [f64; 2] = [0.5, 2.0];
pub const Q_XI: [f64; 4] = [-1.5, -0.3, 0.3, 1.5];

/// Largest relative gap between `q` and a central difference of `ln p`.
pub fn q_finite_difference_error() -> f64 {
    let mut worst: f64 = 0.0;
    for l in LAMBDA_GRID {
        let p = grid_params(l, 1.0, 0.0);
        for y0 in Q_Y0 {
            for tau in Q_TAU {
                for xi in Q_XI {
                    let h = 1e-5;
                    let lp = |x: f64| transition_density(&p, tau, y0, x).unwrap().ln();
                    let fd = (lp(xi + h) - lp(xi - h)) / (2.0 * h);
                    let q = q_function(&p, y0, tau, xi).unwrap_or(f64::NAN);
                    worst = worst.max((q - fd).abs() / fd.abs());
                }
            }
        }
    }
    worst
}

pub const Q_FD_TOL: f64 = 1e-6;
pub const ORIGIN_TOL: f64 = 1e-8;

fn origin_grid() -> Vec<(ModelParams, f64, f64)> {
    let mut v = Vec::new();
    for l in LAMBDA_GRID {
        let p = grid_params(l, 1.0, 0.0);
        for tau in [0.05, 0.5, 2.0, 10.0] {
            for k in -30..=30 {
                v.push((p, tau, 0.1 * k as f64));
            }
        }
    }
    v
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(1e-300)
    }
}

pub fn check_time_reversal_analytic() -> Vec<GofReport> {
    let mut out = vec![GofReport::upper(
        "time reversal: q vs finite difference of log density (relative)",
        GofKind::Deterministic,
        q_finite_difference_error(),
        Q_FD_TOL,
        LAMBDA_GRID.len() * Q_Y0.len() * Q_TAU.len() * Q_XI.len(),
    )];
    let grid = origin_grid();
    let (mut e_q, mut e_b, mut e_disp, mut steady_bad) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for &(p, tau, xi) in &grid {
        let generic = q_function(&p, 0.0, tau, xi).unwrap_or(f64::NAN);
        e_q = e_q.max(rel(q_origin_closed_form(&p, tau, xi).unwrap_or(f64::NAN), generic));
        let b = backward_drift(&p, 0.0, tau, xi).unwrap_or(f64::NAN);
        e_b = e_b.max(rel(backward_drift_origin(&p, tau, xi).unwrap_or(f64::NAN), b));
        if xi > 0.0 {
            e_disp = e_disp.max(rel(backward_drift_origin_displayed(&p, tau, xi).unwrap_or(f64::NAN), b));
        }
        let spec = BackwardDriftSpec::new(p, 0.0, 1.0, ReversalMode::SteadyState).expect("valid spec");
        if spec.drift(tau, xi).ok() != Some(-p.lambda() * sgn(xi)) {
            steady_bad += 1;
        }
    }
    let n = grid.len();
    out.push(GofReport::upper(
        "time reversal: y0=0 closed form of q vs generic derivative",
        GofKind::Deterministic,
        e_q,
        ORIGIN_TOL,
        n,
    ));
    out.push(GofReport::upper(
        "time reversal: y0=0 backward drift closed form (sign-corrected) vs generic",
        GofKind::Deterministic,
        e_b,
        ORIGIN_TOL,
        n,
    ));
    out.push(GofReport::upper(
        "time reversal: y0=0 backward drift as displayed, xi>0 (xi<0 discrepancy logged)",
        GofKind::Deterministic,
        e_disp,
        ORIGIN_TOL,
        n,
    ));
    out.push(GofReport::upper(
        "time reversal: steady-state backward drift = -lambda sign(xi) (mismatches)",
        GofKind::Deterministic,
        steady_bad as f64,
        0.0,
        n,
    ));
    out
}

pub const REVERSAL_KS_TOL: f64 = 0.015;

fn forward_at<R: Rng + ?Sized>(lambda: f64, y0: f64, dt: f64, steps: usize, rng: &mut R) -> f64 {
    bangbang::euler_terminal(lambda, y0, dt * steps as f64, steps, rng)
}

/// Backward paths from the invariant law against forward paths from the
/// invariant law, compared at `T / 2`.
pub fn check_steady_reversal(p: &ModelParams, horizon: f64, n_steps: usize, n: usize, seed: SeedSpec) -> GofReport {
    let name = "time reversal: steady-state Yhat(T/2) vs forward Y(T/2)";
    let r = (|| -> Result<GofReport> {
        let spec = BackwardDriftSpec::new(*p, 0.0, horizon, ReversalMode::SteadyState)?;
        let draws = spec.terminal_draws(n, seed.child(0))?;
        let half = n_steps / 2;
        let back = simulate_backward_snapshots(&spec, &draws, n_steps, &[half], seed.child(1))?;
        let dt = horizon / n_steps as f64;
        let l = p.lambda();
        let fwd = par_collect(n, seed.child(2), |rng, _| {
            let y0 = laplace_draw(l, open01(rng), open01(rng));
            forward_at(l, y0, dt, half, rng)
        });
        let d = ks_two_sample(&back.values[0], &fwd);
        Ok(GofReport::upper(name, GofKind::Ks, d, ks2_tolerance(REVERSAL_KS_TOL, n, n), n)
            .with_p(stats::ks_pvalue(d, n as f64 / 2.0)))
    })();
    r.unwrap_or_else(|e| GofReport::errored(name, &e))
}

pub const BRIDGE_PIN: f64 = 0.05;
pub const BRIDGE_FRACTION: f64 = 0.99;

/// Transient mode from `y0 = 0`: bridge pinning at `dt = 1e-4` and the
/// `T / 2` marginal against forward simulation.
pub fn check_transient_reversal(
    p: &ModelParams,
    horizon: f64,
    n_steps: usize,
    n_bridge: usize,
    n_marginal: usize,
    seed: SeedSpec,
) -> Vec<GofReport> {
    err_report("time reversal: transient", transient_reversal(p, horizon, n_steps, n_bridge, n_marginal, seed))
}

fn transient_reversal(
    p: &ModelParams,
    horizon: f64,
    n_steps: usize,
    n_bridge: usize,
    n_marginal: usize,
    seed: SeedSpec,
) -> Result<Vec<GofReport>> {
    let spec = BackwardDriftSpec::new(*p, 0.0, horizon, ReversalMode::Transient)?;
    let fine = (horizon / 1e-4).round() as usize;
    let draws = spec.terminal_draws(n_bridge, seed.child(0))?;
    let end = simulate_backward_snapshots(&spec, &draws, fine, &[fine], seed.child(1))?;
    let pinned = end.values[0].iter().filter(|v| v.abs() < BRIDGE_PIN).count() as f64 / n_bridge as f64;
    let se = (BRIDGE_FRACTION * (1.0 - BRIDGE_FRACTION) / n_bridge as f64).sqrt();
    let mut out = vec![GofReport::lower(
        format!(
            "time reversal: transient bridge pins |Yhat(T)| < {BRIDGE_PIN} (dt 1e-4, {} clamped steps)",
            end.clamped_steps
        ),
        GofKind::MeanCi,
        pinned,
        BRIDGE_FRACTION - 4.0 * se,
        n_bridge,
    )];

    let draws = spec.terminal_draws(n_marginal, seed.child(2))?;
    let half = n_steps / 2;
    let back = simulate_backward_snapshots(&spec, &draws, n_steps, &[half], seed.child(3))?;
    let dt = horizon / n_steps as f64;
    let l = p.lambda();
    let fwd = par_collect(n_marginal, seed.child(4), |rng, _| forward_at(l, 0.0, dt, n_steps - half, rng));
    let d = ks_two_sample(&back.values[0], &fwd);
    out.push(
        GofReport::upper(
            "time reversal: transient Yhat(T/2) vs forward Y(T/2)",
            GofKind::Ks,
            d,
            ks2_tolerance(REVERSAL_KS_TOL, n_marginal, n_marginal),
            n_marginal,
        )
        .with_p(stats::ks_pvalue(d, n_marginal as f64 / 2.0)),
    );
    Ok(out)
}

// ------------------------------------------------------------ invariant law

/// Occupation histogram of long Euler runs against the invariant density.
#[derive(Clone, Debug)]
pub struct InvariantHistogram {
    pub edges: Vec<f64>,
    /// Occupation density per bin, averaged over paths.
    pub density: Vec<f64>,
    /// Standard error of each bin across paths.
    pub se: Vec<f64>,
    /// Exact bin averages of `lambda exp(-2 lambda |xi|)`.
    pub exact: Vec<f64>,
}

impl InvariantHistogram {
    pub fn sup_distance(&self) -> f64 {
        self.density.iter().zip(&self.exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

pub const INVARIANT_BIN: f64 = 0.2;
pub const INVARIANT_RANGE: f64 = 2.0;
pub const INVARIANT_TOL: f64 = 0.02;

/// Time average of `1{Y in bin}` over `[burn_in, horizon]` for each of `n`
/// paths from `y0 = 0`.
pub fn invariant_histogram(lambda: f64, horizon: f64, burn_in: f64, dt: f64, n: usize, seed: SeedSpec) -> InvariantHistogram {
    let nb = (2.0 * INVARIANT_RANGE / INVARIANT_BIN).round() as usize;
    let edges: Vec<f64> = (0..=nb).map(|k| -INVARIANT_RANGE + k as f64 * INVARIANT_BIN).collect();
    let steps = (horizon / dt).round() as usize;
    let burn = (burn_in / dt).round() as usize;
    let per_path = par_collect(n, seed, |rng, _| {
        let mut counts = vec![0u32; nb];
        let sd = dt.sqrt();
        let mut y = 0.0;
        for k in 1..=steps {
            y = y - lambda * sgn(y) * dt + sd * std_normal(rng);
            if k > burn {
                let b = ((y + INVARIANT_RANGE) / INVARIANT_BIN).floor();
                if b >= 0.0 && (b as usize) < nb {
                    counts[b as usize] += 1;
                }
            }
        }
        let norm = 1.0 / ((steps - burn) as f64 * INVARIANT_BIN);
        counts.into_iter().map(|c| c as f64 * norm).collect::<Vec<f64>>()
    });
    let mut density = Vec::with_capacity(nb);
    let mut se = Vec::with_capacity(nb);
    for b in 0..nb {
        let col: Vec<f64> = per_path.iter().map(|r| r[b]).collect();
        let (m, s) = mean_se(&col);
        density.push(m);
        se.push(s);
    }
    let cum = |x: f64| 0.5 * sgn(x) * (1.0 - (-2.0 * lambda * x.abs()).exp());
    let exact = edges.windows(2).map(|w| (cum(w[1]) - cum(w[0])) / (w[1] - w[0])).collect();
    InvariantHistogram { edges, density, se, exact }
}

pub fn check_invariant_law(lambda: f64, n: usize, seed: SeedSpec) -> GofReport {
    let h = invariant_histogram(lambda, 50.0, 10.0, 1e-3, n, seed);
    let max_se = h.se.iter().copied().fold(0.0, f64::max);
    GofReport::upper(
        format!("invariant law: occupation histogram sup distance (T=50, dt=1e-3, bin {INVARIANT_BIN})"),
        GofKind::MeanCi,
        h.sup_distance(),
        INVARIANT_TOL.max(4.0 * max_se),
        n,
    )
}
