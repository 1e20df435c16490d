//! Time reversal of the bang-bang diffusion: the logarithmic derivative `q`
//! of its transition density, the backward drift `lambda sign(xi) + q`, a
//! backward Euler simulator and the reversed rank dynamics.

use serde::{Deserialize, Serialize};

use crate::bangbang::{check_grid, tanaka_residual, transition_cdf_table, YPath};
use crate::error::{invalid, Result};
use crate::model::{sgn, ModelParams};
use crate::normal::{self, hazard, ln_mills, pdf_t};
use crate::planar::{cumulative, ranks, NoiseBundle, PathOrigin, PlanarPath};
use crate::rng::{normal as std_normal, open01, par_collect, SeedSpec};

/// Backward drifts above this multiple of `1/dt` are clamped.
pub const DRIFT_CLAMP: f64 = 10.0;

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

/// `q(tau, xi) = d/dxi log p_tau(y0, xi)`.
pub fn q_function(p: &ModelParams, y0: f64, tau: f64, xi: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(q_l(p.lambda(), y0, tau, xi))
}

pub(crate) fn q_l(lambda: f64, y0: f64, tau: f64, xi: f64) -> f64 {
    if y0 < 0.0 {
        return -q_nonneg(lambda, -y0, tau, -xi);
    }
    q_nonneg(lambda, y0, tau, xi)
}

// y >= 0. With h the normal hazard:
//   xi <= 0: q = 2 lambda + (d/tau + lambda) h(w) / (h(w) + lambda sqrt(tau)),
//            d = y - xi - lambda tau, w = d / sqrt(tau)
//   xi > 0:  q = -[(e/tau) h + lambda E (h + 2 lambda sqrt(tau))] / (h + lambda sqrt(tau) E),
//            e = xi - y + lambda tau, E = exp(-2 xi y / tau), h = h((y + xi - lambda tau)/sqrt(tau))
fn q_nonneg(lambda: f64, y: f64, tau: f64, xi: f64) -> f64 {
    if y == 0.0 {
        // same code path on both sides, so q is exactly odd
        return -sgn(xi) * origin_f(lambda, tau, xi.abs());
    }
    let st = tau.sqrt();
    if xi <= 0.0 {
        let d = y - xi - lambda * tau;
        let h = hazard(d / st);
        return 2.0 * lambda + (d / tau + lambda) * h / (h + lambda * st);
    }
    let e = xi - y + lambda * tau;
    let v = (y + xi - lambda * tau) / st;
    // r = h / (lambda sqrt(tau) E), formed in logs so neither factor underflows
    let ln_r = -ln_mills(v) - (lambda * st).ln() + 2.0 * xi * y / tau;
    let r = ln_r.exp();
    let h = hazard(v);
    if r.is_infinite() {
        return -e / tau;
    }
    -((e / tau) * r + (h + 2.0 * lambda * st) / st) / (1.0 + r)
}

/// `F(r)` with `q(tau, xi) = -sign(xi) F(|xi|)` when `y0 = 0`.
fn origin_f(lambda: f64, tau: f64, r: f64) -> f64 {
    let st = tau.sqrt();
    let h = hazard((r - lambda * tau) / st);
    2.0 * lambda + (r / tau) * h / (h + lambda * st)
}

/// `phi^(lambda)(tau, xi)`: Gaussian density of variance `tau` at `xi + lambda tau`.
pub fn phi_lambda(lambda: f64, tau: f64, xi: f64) -> f64 {
    pdf_t(xi + lambda * tau, tau)
}

// int_c^inf phi^(lambda)(tau, -u) du
fn phi_lambda_tail(lambda: f64, tau: f64, c: f64) -> f64 {
    normal::sf((c - lambda * tau) / tau.sqrt())
}

/// The `y0 = 0` closed form for `xi <= 0`, extended to `xi > 0` by
/// `q(tau, xi) = -q(tau, -xi)`.
pub fn q_origin_closed_form(p: &ModelParams, tau: f64, xi: f64) -> Result<f64> {
    check_tau(tau)?;
    let l = p.lambda();
    let eval = |x: f64| {
        let phi = phi_lambda(l, tau, -x);
        let tail = (2.0 * l * x).exp() * phi_lambda_tail(l, tau, -x);
        ((2.0 * l - x / tau) * phi + 2.0 * l * l * tail) / (phi + l * tail)
    };
    Ok(if xi <= 0.0 { eval(xi) } else { -eval(-xi) })
}

/// The single displayed `y0 = 0` expression for the backward drift, taken
/// literally: `lambda sign(xi) - F(|xi|)`. It agrees with
/// [`backward_drift`] for `xi > 0` only.
pub fn backward_drift_origin_displayed(p: &ModelParams, tau: f64, xi: f64) -> Result<f64> {
    check_tau(tau)?;
    let l = p.lambda();
    let r = xi.abs();
    let phi = phi_lambda(l, tau, r);
    let tail = (-2.0 * l * r).exp() * phi_lambda_tail(l, tau, r);
    let frac = ((2.0 * l + r / tau) * phi + 2.0 * l * l * tail) / (phi + l * tail);
    Ok(l * sgn(xi) - frac)
}

/// `y0 = 0` backward drift with the sign factor restored:
/// `lambda sign(xi) - sign(xi) F(|xi|)`.
pub fn backward_drift_origin(p: &ModelParams, tau: f64, xi: f64) -> Result<f64> {
    check_tau(tau)?;
    let l = p.lambda();
    Ok(l * sgn(xi) - sgn(xi) * origin_f(l, tau, xi.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReversalMode {
    /// Forward process started at `y0`; drift depends on time to go.
    Transient,
    /// Forward process started from its invariant law.
    SteadyState,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BackwardDriftSpec {
    pub params: ModelParams,
    pub y0: f64,
    pub horizon: f64,
    pub mode: ReversalMode,
}

impl BackwardDriftSpec {
    pub fn new(params: ModelParams, y0: f64, horizon: f64, mode: ReversalMode) -> Result<Self> {
        check_tau(horizon)?;
        if !y0.is_finite() {
            return Err(invalid("y0 must be finite"));
        }
        Ok(Self { params, y0, horizon, mode })
    }

    /// `b-hat(tau, xi)`.
    pub fn drift(&self, tau: f64, xi: f64) -> Result<f64> {
        match self.mode {
            ReversalMode::SteadyState => Ok(-self.params.lambda() * sgn(xi)),
            ReversalMode::Transient => backward_drift(&self.params, self.y0, tau, xi),
        }
    }

    /// Draws of `Y(T)` from the exact time-T law (transient) or the
    /// invariant law.
    pub fn terminal_draws(&self, n: usize, seed: SeedSpec) -> Result<Vec<f64>> {
        let l = self.params.lambda();
        match self.mode {
            ReversalMode::SteadyState => Ok(par_collect(n, seed, |rng, _| laplace_draw(l, open01(rng), open01(rng)))),
            ReversalMode::Transient => {
                let table = transition_cdf_table(&self.params, self.horizon, self.y0)?;
                Ok(par_collect(n, seed, |rng, _| table.quantile(open01(rng))))
            }
        }
    }
}

/// Draw from `lambda exp(-2 lambda |xi|)` from two uniforms.
pub fn laplace_draw(lambda: f64, u_sign: f64, u: f64) -> f64 {
    let m = -u.ln() / (2.0 * lambda);
    if u_sign < 0.5 {
        -m
    } else {
        m
    }
}

/// `b-hat(tau, xi) = lambda sign(xi) + q(tau, xi)`.
pub fn backward_drift(p: &ModelParams, y0: f64, tau: f64, xi: f64) -> Result<f64> {
    Ok(p.lambda() * sgn(xi) + q_function(p, y0, tau, xi)?)
}

/// Backward paths plus the number of Euler steps whose drift was clamped.
#[derive(Clone, Debug)]
pub struct BackwardRun {
    pub paths: Vec<YPath>,
    pub clamped_steps: u64,
}

/// Backward values at selected steps, without storing whole paths.
#[derive(Clone, Debug)]
pub struct BackwardSnapshots {
    pub steps: Vec<usize>,
    /// `values[j][i]`: path `i` at `steps[j]`.
    pub values: Vec<Vec<f64>>,
    pub clamped_steps: u64,
}

struct OnePath {
    y: Vec<f64>,
    w: Vec<f64>,
    clamped: u64,
}

fn backward_one(spec: &BackwardDriftSpec, start: f64, n_steps: usize, rng: &mut impl rand::Rng, keep: &dyn Fn(usize) -> bool) -> OnePath {
    let dt = spec.horizon / n_steps as f64;
    let sd = dt.sqrt();
    let cap = DRIFT_CLAMP / dt;
    let mut out = OnePath { y: Vec::new(), w: Vec::new(), clamped: 0 };
    let mut y = start;
    if keep(0) {
        out.y.push(y);
    }
    for k in 0..n_steps {
        let tau = spec.horizon - k as f64 * dt;
        let mut b = spec.drift(tau, y).unwrap_or(0.0);
        if b.abs() > cap {
            b = cap.copysign(b);
            out.clamped += 1;
        }
        let dw = sd * std_normal(rng);
        y += b * dt + dw;
        if keep(k + 1) {
            out.y.push(y);
            out.w.push(dw);
        }
    }
    out
}

fn check_backward(spec: &BackwardDriftSpec, draws: &[f64], n_steps: usize) -> Result<()> {
    check_grid(spec.horizon, n_steps)?;
    if draws.iter().any(|v| !v.is_finite()) {
        return Err(invalid("terminal draws must be finite"));
    }
    Ok(())
}

/// Euler scheme for `dYhat = b-hat(T - s, Yhat) ds + dW#` from each
/// starting value; path `i` uses sub-stream `i` of `seed`.
pub fn simulate_backward(spec: &BackwardDriftSpec, y_t_draws: &[f64], n_steps: usize, seed: SeedSpec) -> Result<BackwardRun> {
    check_backward(spec, y_t_draws, n_steps)?;
    let dt = spec.horizon / n_steps as f64;
    let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
    let raw = par_collect(y_t_draws.len(), seed, |rng, i| backward_one(spec, y_t_draws[i], n_steps, rng, &|_| true));
    let clamped_steps = raw.iter().map(|r| r.clamped).sum();
    let paths = raw
        .into_iter()
        .map(|r| {
            let l_values = tanaka_residual(&r.y);
            YPath { times: times.clone(), y_values: r.y, w_increments: r.w, l_values }
        })
        .collect();
    Ok(BackwardRun { paths, clamped_steps })
}

/// As [`simulate_backward`] (same random streams) but only keeping the values
/// at `record` steps.
pub fn simulate_backward_snapshots(
    spec: &BackwardDriftSpec,
    y_t_draws: &[f64],
    n_steps: usize,
    record: &[usize],
    seed: SeedSpec,
) -> Result<BackwardSnapshots> {
    check_backward(spec, y_t_draws, n_steps)?;
    let mut steps = record.to_vec();
    steps.sort_unstable();
    steps.dedup();
    if steps.last().is_some_and(|&s| s > n_steps) {
        return Err(invalid("recorded step beyond the horizon"));
    }
    let keep = |k: usize| steps.binary_search(&k).is_ok();
    let raw = par_collect(y_t_draws.len(), seed, |rng, i| backward_one(spec, y_t_draws[i], n_steps, rng, &keep));
    let mut values = vec![Vec::with_capacity(raw.len()); steps.len()];
    let mut clamped_steps = 0;
    for r in raw {
        clamped_steps += r.clamped;
        for (j, v) in r.y.into_iter().enumerate() {
            values[j].push(v);
        }
    }
    Ok(BackwardSnapshots { steps, values, clamped_steps })
}

/// `L^Yhat(t) - [L^Y(T) - L^Y(T - t)]` with both local times from the
/// Tanaka residual.
pub fn reversal_identity_residual(forward: &YPath) -> Vec<f64> {
    let rev = forward.reversed();
    let l = &forward.l_values;
    let n = l.len() - 1;
    (0..=n).map(|k| rev.l_values[k] - (l[n] - l[n - k])).collect()
}

/// Residuals of the reversed rank dynamics in steady state.
#[derive(Clone, Debug, Serialize)]
pub struct RankDriftReport {
    /// `h - 2 (g + h) rho^2`
    pub drift_r1: f64,
    /// `2 (g + h) sigma^2 - g`
    pub drift_r2: f64,
    /// `(4 rho^2 - 1) / 2`, multiplying the local time of `|Yhat|`.
    pub lt_coef_r1: f64,
    /// `(4 sigma^2 - 1) / 2`
    pub lt_coef_r2: f64,
    pub n_paths: usize,
    pub rms_r1: f64,
    pub rms_r2: f64,
    pub max_abs: f64,
}

/// Steady-state constants of the reversed rank equations.
pub fn steady_rank_constants(p: &ModelParams) -> (f64, f64, f64, f64) {
    let (l, r2, s2) = (p.lambda(), p.rho().powi(2), p.sigma().powi(2));
    (p.h() - 2.0 * l * r2, 2.0 * l * s2 - p.g(), (4.0 * r2 - 1.0) / 2.0, (4.0 * s2 - 1.0) / 2.0)
}

/// Reverse each forward path (started from the invariant law) and measure
/// `Rhat_i(t) - Rhat_i(0)` against the steady-state backward rank equations
/// driven by `V#_1 = rho V# + sigma Q~`, `V#_2 = rho Q~ - sigma V#`, where
/// `V#(t) = int sign(Yhat) dW#`, `Q~(t) = Q(T - t) - Q(T)` and the local time
/// of `|Yhat|` is twice the Tanaka local time of the reversed path. Residuals
/// are taken over every grid point of every path.
pub fn backward_rank_drift_report(p: &ModelParams, paths: &[PlanarPath]) -> Result<RankDriftReport> {
    let (d1, d2, c1, c2) = steady_rank_constants(p);
    let (rho, sigma, lambda) = (p.rho(), p.sigma(), p.lambda());
    let mut sq1 = 0.0;
    let mut sq2 = 0.0;
    let mut count = 0usize;
    let mut max_abs: f64 = 0.0;
    for path in paths {
        if path.params != *p {
            return Err(invalid("path parameters differ from the report parameters"));
        }
        if matches!(path.origin, PathOrigin::Euler(crate::planar::SystemKind::CustomRoot(_))) {
            return Err(invalid("rank report needs Q, unavailable for a custom root"));
        }
        let nb = NoiseBundle::reconstruct(path);
        let q = cumulative(nb.q.as_ref().expect("Q present for named systems"));
        let n = path.n_steps();
        let yhat: Vec<f64> = path.y_values().into_iter().rev().collect();
        let lhat = tanaka_residual(&yhat);
        let (r1, r2) = ranks(path);
        let dt = path.times[1] - path.times[0];
        let mut vsharp = 0.0;
        for k in 0..=n {
            if k > 0 {
                let j = k - 1;
                vsharp += sgn(yhat[j]) * (yhat[k] - yhat[j] + lambda * sgn(yhat[j]) * dt);
            }
            let t = k as f64 * dt;
            let qt = q[n - k] - q[n];
            let v1 = rho * vsharp + sigma * qt;
            let v2 = rho * qt - sigma * vsharp;
            let lt = 2.0 * lhat[k];
            let e1 = (r1[n - k] - r1[n]) - (d1 * t + rho * v1 + c1 * lt);
            let e2 = (r2[n - k] - r2[n]) - (d2 * t + sigma * v2 - c2 * lt);
            sq1 += e1 * e1;
            sq2 += e2 * e2;
            max_abs = max_abs.max(e1.abs()).max(e2.abs());
            count += 1;
        }
    }
    if count == 0 {
        return Err(invalid("no paths"));
    }
    Ok(RankDriftReport {
        drift_r1: d1,
        drift_r2: d2,
        lt_coef_r1: c1,
        lt_coef_r2: c2,
        n_paths: paths.len(),
        rms_r1: (sq1 / count as f64).sqrt(),
        rms_r2: (sq2 / count as f64).sqrt(),
        max_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bangbang::{density_l, simulate_y};
    use crate::model::{validate_params, InitialState};
    use crate::planar::{euler_simulate, SystemKind};
    use crate::quad::integrate_breaks;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn params(lambda: f64) -> ModelParams {
        validate_params(0.6 * lambda, 0.4 * lambda, 1.0, 0.0).unwrap()
    }

    fn fd(lambda: f64, y0: f64, tau: f64, xi: f64) -> f64 {
        let h = 1e-5 * xi.abs().max(0.1);
        let lp = |x: f64| density_l(lambda, tau, y0, x).ln();
        (lp(xi + h) - lp(xi - h)) / (2.0 * h)
    }

    #[test]
    fn matches_finite_differences() {
        for lambda in [0.5, 1.0, 2.0] {
            for y0 in [-0.7, 0.0, 0.4, 1.2] {
                for tau in [0.5, 2.0] {
                    for xi in [-1.5, -0.3, 0.3, 1.5] {
                        let q = q_l(lambda, y0, tau, xi);
                        let f = fd(lambda, y0, tau, xi);
                        assert!((q - f).abs() <= 1e-6 * f.abs().max(1.0), "l={lambda} y0={y0} tau={tau} xi={xi}: {q} vs {f}");
                    }
                }
            }
        }
    }

    #[test]
    fn odd_at_origin() {
        let p = params(1.3);
        for tau in [0.01, 0.5, 3.0] {
            for xi in [0.01, 0.4, 2.0, 9.0] {
                assert_eq!(q_function(&p, 0.0, tau, xi).unwrap(), -q_function(&p, 0.0, tau, -xi).unwrap());
            }
        }
    }

    #[test]
    fn origin_forms_agree() {
        let p = params(1.5);
        for tau in [0.1, 0.5, 2.0] {
            for xi in [-2.0, -0.5, -0.01, 0.01, 0.5, 2.0] {
                let q = q_function(&p, 0.0, tau, xi).unwrap();
                let closed = q_origin_closed_form(&p, tau, xi).unwrap();
                assert!((q - closed).abs() < 1e-8 * q.abs().max(1.0));
                let b = backward_drift(&p, 0.0, tau, xi).unwrap();
                assert!((backward_drift_origin(&p, tau, xi).unwrap() - b).abs() < 1e-8 * b.abs().max(1.0));
                let shown = backward_drift_origin_displayed(&p, tau, xi).unwrap();
                if xi > 0.0 {
                    assert!((shown - b).abs() < 1e-8 * b.abs().max(1.0));
                } else {
                    assert!((shown - b).abs() > 1.0, "displayed form should differ for xi < 0");
                }
            }
        }
    }

    #[test]
    fn large_tau_limit() {
        let p = params(1.0);
        for xi in [-1.0, -0.2, 0.2, 1.0] {
            for y0 in [0.0, 0.5] {
                let q = q_function(&p, y0, 400.0, xi).unwrap();
                assert!((q + 2.0 * sgn(xi)).abs() < 1e-3, "xi={xi}: {q}");
            }
        }
    }

    #[test]
    fn bridge_singularity() {
        let p = params(1.0);
        for xi in [-0.8, 0.5] {
            let b1 = backward_drift(&p, 0.0, 1e-3, xi).unwrap();
            let b2 = backward_drift(&p, 0.0, 1e-4, xi).unwrap();
            assert!((b1 * 1e-3 / -xi - 1.0).abs() < 0.1, "{b1}");
            assert!((b2 * 1e-4 / -xi - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn tails_finite() {
        let p = params(3.0);
        for y0 in [0.0, 2.0, -5.0] {
            for tau in [1e-4, 1.0, 100.0] {
                for xi in [-60.0, -1.0, 1e-9, 1.0, 60.0] {
                    let q = q_function(&p, y0, tau, xi).unwrap();
                    assert!(q.is_finite(), "y0={y0} tau={tau} xi={xi}");
                }
            }
        }
        assert!(q_function(&p, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn q_integrates_to_log_ratio() {
        let lambda = 1.2;
        for y0 in [0.0, 0.6, -0.4] {
            let tau = 0.8;
            let grid = [-2.0, -1.1, -0.3, 0.0, 0.5, 1.7];
            for w in grid.windows(2) {
                let mut pts = vec![w[0], w[1]];
                if w[0] < 0.0 && w[1] > 0.0 {
                    pts.insert(1, 0.0);
                }
                let int = integrate_breaks(|x| q_l(lambda, y0, tau, x), &pts, 1e-12).value;
                let ratio = density_l(lambda, tau, y0, w[1]) / density_l(lambda, tau, y0, w[0]);
                assert!((int.exp() - ratio).abs() < 1e-8 * ratio, "y0={y0} {w:?}");
            }
        }
    }

    #[test]
    fn steady_drift_is_negated_forward_drift() {
        let p = params(1.7);
        let spec = BackwardDriftSpec::new(p, 0.0, 1.0, ReversalMode::SteadyState).unwrap();
        for xi in [-3.0, -0.1, 0.0, 0.2, 5.0] {
            assert_eq!(spec.drift(0.3, xi).unwrap(), -p.lambda() * sgn(xi));
        }
    }

    #[test]
    fn steady_rank_coefficients() {
        let iso = validate_params(1.0, 0.5, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap();
        let (_, _, c1, c2) = steady_rank_constants(&iso);
        assert!((c1 - 0.5).abs() < 1e-15 && (c2 - 0.5).abs() < 1e-15);
        let p = validate_params(1.0, 0.5, 0.8, 0.6).unwrap();
        let (d1, d2, _, _) = steady_rank_constants(&p);
        assert!((d1 - (0.5 - 2.0 * 1.5 * 0.64)).abs() < 1e-15);
        assert!((d2 - (2.0 * 1.5 * 0.36 - 1.0)).abs() < 1e-15);
    }

    fn steady_paths(p: &ModelParams, n_paths: usize, n_steps: usize) -> Vec<PlanarPath> {
        (0..n_paths)
            .map(|i| {
                let s = SeedSpec::new(70).child(i as u64);
                let mut rng = s.child(1_000_000).rng();
                let y0 = laplace_draw(p.lambda(), open01(&mut rng), open01(&mut rng));
                euler_simulate(&SystemKind::B, p, InitialState::new(y0, 0.0), 1.0, n_steps, s).unwrap()
            })
            .collect()
    }

    #[test]
    fn rank_report_exact_when_isotropic() {
        let p = validate_params(1.0, 0.5, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap();
        let r = backward_rank_drift_report(&p, &steady_paths(&p, 20, 2000)).unwrap();
        assert!(r.max_abs < 1e-9, "{r:?}");
    }

    #[test]
    fn rank_report_shrinks_with_dt() {
        // residual is gamma times the reversal-identity error of the local time
        let p = validate_params(1.0, 0.5, 0.8, 0.6).unwrap();
        let coarse = backward_rank_drift_report(&p, &steady_paths(&p, 200, 250)).unwrap();
        let fine = backward_rank_drift_report(&p, &steady_paths(&p, 200, 16_000)).unwrap();
        assert!(fine.rms_r1 < 0.5 * coarse.rms_r1, "{} -> {}", coarse.rms_r1, fine.rms_r1);
        assert!((coarse.rms_r1 - coarse.rms_r2).abs() < 1e-9);
    }

    #[test]
    fn reversal_residual_starts_at_zero() {
        let p = params(2.0);
        let path = simulate_y(&p, 0.0, 1.0, 1000, SeedSpec::new(5)).unwrap();
        let r = reversal_identity_residual(&path);
        assert_eq!(r[0], 0.0);
        assert_eq!(r.len(), 1001);
    }

    #[test]
    fn backward_bridge_pins_origin() {
        let p = params(2.0);
        let spec = BackwardDriftSpec::new(p, 0.0, 1.0, ReversalMode::Transient).unwrap();
        let draws = spec.terminal_draws(400, SeedSpec::new(3)).unwrap();
        let snaps = simulate_backward_snapshots(&spec, &draws, 2000, &[2000], SeedSpec::new(4)).unwrap();
        let near = snaps.values[0].iter().filter(|v| v.abs() < 0.05).count();
        assert!(near as f64 >= 0.98 * 400.0, "{near}");
    }

    #[test]
    fn snapshots_match_full_paths() {
        let p = params(1.0);
        let spec = BackwardDriftSpec::new(p, 0.3, 1.0, ReversalMode::Transient).unwrap();
        let draws = spec.terminal_draws(50, SeedSpec::new(9)).unwrap();
        let full = simulate_backward(&spec, &draws, 100, SeedSpec::new(10)).unwrap();
        let snap = simulate_backward_snapshots(&spec, &draws, 100, &[50, 0, 100], SeedSpec::new(10)).unwrap();
        assert_eq!(snap.steps, vec![0, 50, 100]);
        for i in 0..50 {
            assert_eq!(snap.values[1][i], full.paths[i].y_values[50]);
            assert_eq!(snap.values[2][i], full.paths[i].y_values[100]);
        }
        assert_eq!(snap.clamped_steps, full.clamped_steps);
    }

    #[test]
    fn laplace_draws_have_right_moments() {
        let spec = BackwardDriftSpec::new(params(2.0), 0.0, 1.0, ReversalMode::SteadyState).unwrap();
        let d = spec.terminal_draws(100_000, SeedSpec::new(1)).unwrap();
        let (m, se) = crate::stats::mean_se(&d);
        assert!(m.abs() < 4.0 * se);
        let abs_mean = d.iter().map(|v| v.abs()).sum::<f64>() / d.len() as f64;
        assert!((abs_mean - 0.25).abs() < 0.005);
    }
}
