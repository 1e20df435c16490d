//! The bang-bang diffusion `dY = -lambda sign(Y) dt + dW`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{sgn, ModelParams};
use crate::normal::{self, pdf_t};
use crate::quad::CdfTable;
use crate::rng::{normal as std_normal, open01, SeedSpec};

/// Transition density `p_t(y, xi)` of `Y`.
pub fn transition_density(p: &ModelParams, t: f64, y: f64, xi: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid(format!("transition density needs t > 0, got {t}")));
    }
    Ok(density_l(p.lambda(), t, y, xi))
}

/// Transition density for drift magnitude `lambda`; `y < 0` by the mirror
/// `p(y, xi) = p(-y, -xi)`.
pub(crate) fn density_l(lambda: f64, t: f64, y: f64, xi: f64) -> f64 {
    if y >= 0.0 {
        density_nonneg(lambda, t, y, xi)
    } else {
        density_nonneg(lambda, t, -y, -xi)
    }
}

fn density_nonneg(lambda: f64, t: f64, y: f64, xi: f64) -> f64 {
    let st = t.sqrt();
    if xi > 0.0 {
        pdf_t(xi - y + lambda * t, t)
            + lambda * (-2.0 * lambda * xi).exp() * normal::sf((y + xi - lambda * t) / st)
    } else {
        let d = y - xi - lambda * t;
        (2.0 * lambda * xi).exp() * (pdf_t(d, t) + lambda * normal::sf(d / st))
    }
}

/// Invariant density `lambda exp(-2 lambda |xi|)`.
pub fn invariant_density(p: &ModelParams, xi: f64) -> f64 {
    let l = p.lambda();
    l * (-2.0 * l * xi.abs()).exp()
}

/// Euler path of `Y` with its driving increments and running local time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct YPath {
    pub times: Vec<f64>,
    pub y_values: Vec<f64>,
    pub w_increments: Vec<f64>,
    pub l_values: Vec<f64>,
}

impl YPath {
    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Path read backwards in time, `Yhat(t) = Y(T - t)`; increments are
    /// those of the reversed path and local time is recomputed.
    pub fn reversed(&self) -> YPath {
        let y_values: Vec<f64> = self.y_values.iter().rev().copied().collect();
        let w_increments = y_values.windows(2).map(|w| w[1] - w[0]).collect();
        let l_values = tanaka_residual(&y_values);
        YPath {
            times: self.times.clone(),
            y_values,
            w_increments,
            l_values,
        }
    }
}

/// Test hooks for [`simulate_y_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct YSimHooks {
    /// Replace the Brownian increments by zero.
    pub zero_noise: bool,
    /// Replace the drift by zero (plain Brownian motion).
    pub zero_drift: bool,
}

pub fn simulate_y(p: &ModelParams, y0: f64, horizon: f64, n_steps: usize, seed: SeedSpec) -> Result<YPath> {
    simulate_y_with(p, y0, horizon, n_steps, seed, YSimHooks::default())
}

pub fn simulate_y_with(
    p: &ModelParams,
    y0: f64,
    horizon: f64,
    n_steps: usize,
    seed: SeedSpec,
    hooks: YSimHooks,
) -> Result<YPath> {
    check_grid(horizon, n_steps)?;
    if !y0.is_finite() {
        return Err(invalid("initial value must be finite"));
    }
    let dt = horizon / n_steps as f64;
    let sd = dt.sqrt();
    let mut rng = seed.rng();
    let incs: Vec<f64> = (0..n_steps)
        .map(|_| if hooks.zero_noise { 0.0 } else { sd * std_normal(&mut rng) })
        .collect();
    let lambda = if hooks.zero_drift { 0.0 } else { p.lambda() };
    Ok(simulate_y_driven(lambda, y0, dt, incs))
}

pub(crate) fn check_grid(horizon: f64, n_steps: usize) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    if n_steps == 0 {
        return Err(invalid("n_steps must be at least 1"));
    }
    Ok(())
}

/// Euler scheme driven by the given Brownian increments.
pub fn simulate_y_driven(lambda: f64, y0: f64, dt: f64, w_increments: Vec<f64>) -> YPath {
    let n = w_increments.len();
    let mut y_values = Vec::with_capacity(n + 1);
    y_values.push(y0);
    let mut y = y0;
    for dw in &w_increments {
        y = y - lambda * sgn(y) * dt + dw;
        y_values.push(y);
    }
    let times = (0..=n).map(|k| k as f64 * dt).collect();
    let l_values = tanaka_residual(&y_values);
    YPath {
        times,
        y_values,
        w_increments,
        l_values,
    }
}

/// Terminal value of an Euler path, without storing it.
#[inline]
pub fn euler_terminal<R: Rng + ?Sized>(lambda: f64, y0: f64, horizon: f64, n_steps: usize, rng: &mut R) -> f64 {
    let dt = horizon / n_steps as f64;
    let sd = dt.sqrt();
    let mut y = y0;
    for _ in 0..n_steps {
        y = y - lambda * sgn(y) * dt + sd * std_normal(rng);
    }
    y
}

/// Local time `L = (|Y| - |y| - sum sign(Y_i) dY_i) / 2`, made non-decreasing.
pub fn tanaka_residual_local_time(path: &YPath) -> Vec<f64> {
    tanaka_residual(&path.y_values)
}

pub fn tanaka_residual(y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut stoch = 0.0;
    let mut run_max: f64 = 0.0;
    out.push(0.0);
    for w in y.windows(2) {
        stoch += sgn(w[0]) * (w[1] - w[0]);
        let l = 0.5 * (w[1].abs() - y[0].abs() - stoch);
        run_max = run_max.max(l);
        out.push(run_max);
    }
    out
}

/// Occupation estimator `(1/4 eps) sum 1{|Y_i| < eps} dt_i`.
pub fn occupation_local_time(path: &YPath, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let mut out = Vec::with_capacity(path.y_values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..path.y_values.len() - 1 {
        if path.y_values[k].abs() < eps {
            acc += path.times[k + 1] - path.times[k];
        }
        out.push(acc / (4.0 * eps));
    }
    Ok(out)
}

/// Local time from the reflection formula `2L(t) = max_{s<=t} (-(|y| + Vflat(s) - lambda s))^+`,
/// where `vflat[k]` is the cumulative `Vflat` at `times[k]`.
pub fn skorokhod_local_time(y0: f64, lambda: f64, times: &[f64], vflat: &[f64]) -> Vec<f64> {
    let mut m: f64 = 0.0;
    times
        .iter()
        .zip(vflat)
        .map(|(&t, &v)| {
            m = m.max(-(y0.abs() + v - lambda * t));
            0.5 * m
        })
        .collect()
}

/// Which of `Y^+`, `Y^-` is nonzero at time t.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// One draw of `(side, |Y(t)|, 2 L(t))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleDraw {
    pub side: Side,
    pub a: f64,
    pub b: f64,
    pub atom: bool,
}

impl TripleDraw {
    /// `Y(t)`
    pub fn y(&self) -> f64 {
        self.side.sign() * self.a
    }
}

fn check_triple_domain(y: f64, t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    if !(y >= 0.0) {
        return Err(invalid(format!("triple law needs y >= 0, got {y}")));
    }
    Ok(())
}

/// Joint density of `(Y^{+/-}(t), 2L(t))` at `(a, b)`, the same on either side.
pub fn triple_density(p: &ModelParams, y: f64, t: f64, a: f64, b: f64) -> Result<f64> {
    check_triple_domain(y, t)?;
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid("triple density needs a > 0 and b > 0"));
    }
    Ok(triple_density_l(p.lambda(), y, t, a, b))
}

pub(crate) fn triple_density_l(lambda: f64, y: f64, t: f64, a: f64, b: f64) -> f64 {
    let s = a + b + y;
    (-2.0 * lambda * a - (s - lambda * t).powi(2) / (2.0 * t)).exp() * s / (normal::SQRT_2PI * t.powf(1.5))
}

/// Density of `Y(t) = a > 0` on the event of no accumulated local time.
pub fn atom_density(p: &ModelParams, y: f64, t: f64, a: f64) -> Result<f64> {
    check_triple_domain(y, t)?;
    if !(a > 0.0) {
        return Err(invalid("atom density needs a > 0"));
    }
    Ok(atom_density_l(p.lambda(), y, t, a))
}

pub(crate) fn atom_density_l(lambda: f64, y: f64, t: f64, a: f64) -> f64 {
    if y == 0.0 || a <= 0.0 {
        return 0.0;
    }
    pdf_t(a - y + lambda * t, t) * -(-2.0 * a * y / t).exp_m1()
}

/// Probability of no sign change by time t, started at `y >= 0`.
pub fn atom_mass(p: &ModelParams, y: f64, t: f64) -> Result<f64> {
    check_triple_domain(y, t)?;
    Ok(atom_mass_l(p.lambda(), y, t))
}

pub(crate) fn atom_mass_l(lambda: f64, y: f64, t: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let st = t.sqrt();
    let w = (y - lambda * t) / st;
    let u = (y + lambda * t) / st;
    let second = if u > 5.0 {
        normal::pdf(w) * normal::mills(u)
    } else {
        (2.0 * lambda * y).exp() * normal::sf(u)
    };
    (normal::cdf(w) - second).max(0.0)
}

/// `int_0^inf triple_density(a, b) db`.
pub fn triple_a_marginal(p: &ModelParams, y: f64, t: f64, a: f64) -> Result<f64> {
    check_triple_domain(y, t)?;
    Ok(triple_a_marginal_l(p.lambda(), y, t, a))
}

pub(crate) fn triple_a_marginal_l(lambda: f64, y: f64, t: f64, a: f64) -> f64 {
    let c = a + y - lambda * t;
    (-2.0 * lambda * a).exp() * (pdf_t(c, t) + lambda * normal::sf(c / t.sqrt()))
}

/// Exact draw from the law of `(side, |Y(t)|, 2L(t))` for `y >= 0`.
pub fn sample_triple(p: &ModelParams, y: f64, t: f64, seed: SeedSpec) -> Result<TripleDraw> {
    let s = TripleSampler::new(p.lambda(), y, t)?;
    Ok(s.draw(&mut seed.rng()))
}

/// Precomputed constants for repeated exact triple draws.
///
/// Atom part: `a ~ N(y - lambda t, t)` truncated to `a > 0`, accepted with
/// probability `1 - exp(-2 a y / t)`.
/// Continuous part: `s = a + b + y` has density proportional to
/// `s exp(-(s - lambda t)^2 / 2t) (1 - exp(-2 lambda (s - y)))` on `s > y`;
/// `s` is drawn from the first two factors by inverting their closed-form
/// tail and accepted with the last factor; then `a | s` is exponential with
/// rate `2 lambda` truncated to `(0, s - y)`.
#[derive(Clone, Copy, Debug)]
pub struct TripleSampler {
    lambda: f64,
    y: f64,
    t: f64,
    st: f64,
    atom_mass: f64,
    k: f64,
    w: f64,
    ln_tail_w: f64,
}

impl TripleSampler {
    pub fn new(lambda: f64, y: f64, t: f64) -> Result<Self> {
        check_triple_domain(y, t)?;
        if !(lambda > 0.0) {
            return Err(invalid("triple sampler needs lambda > 0"));
        }
        let st = t.sqrt();
        let k = lambda * st;
        let w = (y - lambda * t) / st;
        Ok(Self {
            lambda,
            y,
            t,
            st,
            atom_mass: atom_mass_l(lambda, y, t),
            k,
            w,
            ln_tail_w: ln1p_k_mills(k, w),
        })
    }

    pub fn atom_mass(&self) -> f64 {
        self.atom_mass
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> TripleDraw {
        if open01(rng) < self.atom_mass {
            return TripleDraw {
                side: Side::Plus,
                a: self.draw_atom(rng),
                b: 0.0,
                atom: true,
            };
        }
        loop {
            let s = self.draw_s(rng);
            let gap = s - self.y;
            if open01(rng) >= -(-2.0 * self.lambda * gap).exp_m1() {
                continue;
            }
            let u = open01(rng);
            let a = (-(u * (-2.0 * self.lambda * gap).exp_m1()).ln_1p() / (2.0 * self.lambda)).min(gap);
            let b = (gap - a).max(f64::MIN_POSITIVE);
            let side = if rng.random::<bool>() { Side::Plus } else { Side::Minus };
            return TripleDraw { side, a: a.max(f64::MIN_POSITIVE), b, atom: false };
        }
    }

    fn draw_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.y - self.lambda * self.t;
        loop {
            let z = truncated_normal_above(-m / self.st, rng);
            let a = m + self.st * z;
            if a > 0.0 && open01(rng) < -(-2.0 * a * self.y / self.t).exp_m1() {
                return a;
            }
        }
    }

    // Tail of the s-proposal in standardized units v = (s - lambda t)/sqrt(t):
    // ln S(v) = -(v^2 - w^2)/2 + ln(1 + k R(v)) - ln(1 + k R(w)).
    fn draw_s<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let target = open01(rng).ln();
        let ln_s = |v: f64| -0.5 * (v * v - self.w * self.w) + ln1p_k_mills(self.k, v) - self.ln_tail_w;
        let slope = |v: f64| -(v + self.k) / (1.0 + self.k * normal::mills(v)).min(f64::MAX);
        let mut lo = self.w;
        let mut hi = self.w.max(0.0) + 1.0;
        while ln_s(hi) > target {
            hi = self.w.max(0.0) + 2.0 * (hi - self.w.max(0.0));
        }
        let mut v = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = ln_s(v) - target;
            if f > 0.0 {
                lo = v;
            } else {
                hi = v;
            }
            let d = slope(v);
            let mut nv = if d.is_finite() && d < 0.0 { v - f / d } else { f64::NAN };
            if !(nv > lo && nv < hi) {
                nv = 0.5 * (lo + hi);
            }
            if (nv - v).abs() <= 1e-13 * (1.0 + v.abs()) || hi - lo <= 1e-13 * (1.0 + v.abs()) {
                v = nv;
                break;
            }
            v = nv;
        }
        self.lambda * self.t + self.st * v
    }
}

/// `ln(1 + k R(v))` for `k > 0`, safe for very negative `v`.
fn ln1p_k_mills(k: f64, v: f64) -> f64 {
    normal::ln_add_exp(0.0, k.ln() + normal::ln_mills(v))
}

/// Standard normal conditioned on `Z > c`.
pub(crate) fn truncated_normal_above<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    if c < 5.0 {
        let tail = normal::sf(c);
        normal::sf_inv(open01(rng) * tail).max(c)
    } else {
        // Marsaglia's tail method
        loop {
            let x = (c * c - 2.0 * open01(rng).ln()).sqrt();
            if open01(rng) * x < c {
                return x;
            }
        }
    }
}

/// Tabulated law of `Y(t)` started from `y`, for inverse-CDF sampling and
/// as a KS reference.
pub fn transition_cdf_table(p: &ModelParams, t: f64, y: f64) -> Result<CdfTable<impl Fn(f64) -> f64>> {
    if !(t > 0.0) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    let l = p.lambda();
    let half = y.abs() + 12.0 * t.sqrt() + 20.0 / l + 1.0;
    Ok(CdfTable::new(move |xi| density_l(l, t, y, xi), -half, half, 8000, &[0.0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_params;
    use crate::quad::{integrate, integrate_breaks};
    use proptest::prelude::*;

    fn params(lambda: f64) -> ModelParams {
        validate_params(0.5 * lambda, 0.5 * lambda, 1.0, 0.0).unwrap()
    }

    #[test]
    fn rejects_bad_time() {
        assert!(transition_density(&params(1.0), 0.0, 0.0, 0.0).is_err());
        assert!(transition_density(&params(1.0), -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn symmetric_from_origin() {
        let p = params(2.0);
        let a = transition_density(&p, 1.0, 0.0, 0.7).unwrap();
        let b = transition_density(&p, 1.0, 0.0, -0.7).unwrap();
        assert!((a - b).abs() < 1e-15 * a);
    }

    #[test]
    fn normalized_on_grid() {
        for &l in &[0.5, 1.0, 2.0, 5.0] {
            for &t in &[0.1, 1.0, 5.0] {
                for &y in &[-2.0, 0.0, 3.0] {
                    let half = 3.0 + 15.0 * f64::sqrt(t) + 20.0 / l;
                    let r = integrate_breaks(|x| density_l(l, t, y, x), &[-half, 0.0, y, half], 1e-12);
                    assert!((r.value - 1.0).abs() < 1e-8, "l={l} t={t} y={y}: {}", r.value);
                }
            }
        }
    }

    #[test]
    fn chapman_kolmogorov_example() {
        let (l, y) = (1.0, 0.5);
        for &xi in &[-0.8, 0.0, 0.4, 1.7] {
            let r = integrate_breaks(
                |u| density_l(l, 0.4, y, u) * density_l(l, 0.6, u, xi),
                &[-25.0, 0.0, y, xi, 25.0],
                1e-13,
            );
            let direct = density_l(l, 1.0, y, xi);
            assert!((r.value - direct).abs() < 1e-10, "xi={xi}");
        }
    }

    #[test]
    fn large_time_tends_to_invariant() {
        let p = params(2.0);
        for &xi in &[-0.7, 0.0, 0.3, 1.1] {
            let a = transition_density(&p, 40.0, 0.5, xi).unwrap();
            assert!((a - invariant_density(&p, xi)).abs() < 1e-9);
        }
        assert_eq!(invariant_density(&p, 0.0), 2.0);
        assert!((invariant_density(&p, 0.5) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_skeleton() {
        let p = params(1.5);
        let path = simulate_y_with(&p, 1.0, 1.0, 1000, SeedSpec::new(1), YSimHooks { zero_noise: true, zero_drift: false }).unwrap();
        let hit = 1.0 / 1.5;
        for (t, y) in path.times.iter().zip(&path.y_values) {
            if *t < hit - 1e-3 {
                assert!((y - (1.0 - 1.5 * t)).abs() < 1e-12);
            } else {
                assert!(y.abs() <= 1.5 * 1e-3 + 1e-12);
            }
        }
    }

    #[test]
    fn path_invariants() {
        let p = params(2.0);
        let path = simulate_y(&p, 0.4, 1.0, 500, SeedSpec::new(9)).unwrap();
        assert_eq!(path.y_values[0], 0.4);
        assert_eq!(path.l_values[0], 0.0);
        assert!(path.l_values.windows(2).all(|w| w[1] >= w[0]));
        assert!(path.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(path.w_increments.len(), 500);
    }

    #[test]
    fn tanaka_no_crossing_is_zero() {
        let y: Vec<f64> = (0..100).map(|k| 1.0 + (k as f64 * 0.37).sin() * 0.5).collect();
        assert!(tanaka_residual(&y).iter().all(|l| l.abs() < 1e-14));
    }

    #[test]
    fn tanaka_sawtooth_hand_sum() {
        // 1 -> -1 -> 1 -> -1 : each crossing step contributes |Y_{k+1}| = 1
        let y = [1.0, -1.0, 1.0, -1.0];
        let l = tanaka_residual(&y);
        assert_eq!(l, vec![0.0, 1.0, 2.0, 3.0]);
        // 0.5 -> -0.25 -> 0.0 -> 0.75: sign(0) = -1 so the last step crosses
        let y = [0.5, -0.25, 0.0, 0.75];
        let l = tanaka_residual(&y);
        assert_eq!(l, vec![0.0, 0.25, 0.25, 1.0]);
    }

    #[test]
    fn occupation_outside_band_is_zero() {
        let p = params(1.0);
        let mut path = simulate_y(&p, 2.0, 0.1, 100, SeedSpec::new(1)).unwrap();
        path.y_values.iter_mut().for_each(|v| *v = v.abs().max(0.2));
        let l = occupation_local_time(&path, 0.1).unwrap();
        assert!(l.iter().all(|v| *v == 0.0));
        assert!(occupation_local_time(&path, 0.0).is_err());
    }

    #[test]
    fn brownian_occupation_mean() {
        // lambda = 0: E L(1) = E|W(1)|/2 = 1/sqrt(2 pi)
        let p = params(1.0);
        let eps = 0.02;
        let vals: Vec<f64> = (0..10_000)
            .map(|i| {
                let path = simulate_y_with(&p, 0.0, 1.0, 1000, SeedSpec::new(3).child(i), YSimHooks { zero_noise: false, zero_drift: true }).unwrap();
                *occupation_local_time(&path, eps).unwrap().last().unwrap()
            })
            .collect();
        let (m, se) = crate::stats::mean_se(&vals);
        let oracle = integrate(|x| 0.5 * x.abs() * normal::pdf(x), -12.0, 12.0, 1e-14).value;
        assert!((oracle - 1.0 / normal::SQRT_2PI).abs() < 1e-12);
        assert!((m - oracle).abs() < 3.0 * se + 0.01, "mean {m} se {se}");
    }

    #[test]
    fn skorokhod_matches_tanaka_when_no_folds() {
        // path that stays positive: both zero
        let times = [0.0, 0.1, 0.2];
        let v = [0.0, 0.05, 0.1];
        assert_eq!(skorokhod_local_time(1.0, 1.0, &times, &v), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn triple_plus_atom_mass_one() {
        for &(l, y, t) in &[(2.0, 0.0, 1.0), (2.0, 0.7, 1.0), (0.5, 1.5, 0.3), (5.0, 0.2, 2.0)] {
            let cont = 2.0 * integrate(|a| triple_a_marginal_l(l, y, t, a), 0.0, 40.0, 1e-13).value;
            let atom = integrate(|a| atom_density_l(l, y, t, a), 0.0, y + 40.0, 1e-13).value;
            assert!((cont + atom - 1.0).abs() < 1e-9, "{l} {y} {t}: {}", cont + atom);
            assert!((atom - atom_mass_l(l, y, t)).abs() < 1e-10);
        }
    }

    #[test]
    fn a_marginal_matches_b_quadrature() {
        let (l, y, t) = (1.3, 0.4, 0.8);
        for &a in &[0.05, 0.5, 1.7] {
            let q = integrate(|b| triple_density_l(l, y, t, a, b), 0.0, 30.0, 1e-14).value;
            assert!((q - triple_a_marginal_l(l, y, t, a)).abs() < 1e-12);
        }
    }

    #[test]
    fn triple_law_reproduces_transition_density() {
        let (l, y, t) = (2.0, 0.6, 0.9);
        for &xi in &[-1.2, -0.1, 0.2, 0.9, 2.0] {
            let a = f64::abs(xi);
            let v = triple_a_marginal_l(l, y, t, a) + if xi > 0.0 { atom_density_l(l, y, t, a) } else { 0.0 };
            assert!((v - density_l(l, t, y, xi)).abs() < 1e-13);
        }
    }

    #[test]
    fn small_lambda_reference_measure() {
        // lambda -> 0: triple law tends to the Brownian (a, b) law
        let (y, t, a, b): (f64, f64, f64, f64) = (0.4, 1.0, 0.3, 0.5);
        let s: f64 = a + b + y;
        let bm = s / (normal::SQRT_2PI * t.powf(1.5)) * (-s * s / (2.0 * t)).exp();
        assert!((triple_density_l(1e-9, y, t, a, b) - bm).abs() < 1e-8);
        // atom at lambda = 0 is the reflection-principle density
        let refl = pdf_t(a - y, t) - pdf_t(a + y, t);
        assert!((atom_density_l(0.0, y, t, a) - refl).abs() < 1e-15);
    }

    #[test]
    fn atom_vanishes_at_origin() {
        let p = params(2.0);
        assert_eq!(atom_density(&p, 0.0, 1.0, 0.5).unwrap(), 0.0);
        assert_eq!(atom_mass(&p, 0.0, 1.0).unwrap(), 0.0);
        assert!(sample_triple(&p, -0.1, 1.0, SeedSpec::new(1)).is_err());
        assert!(triple_density(&p, 0.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn atom_mass_matches_euler_crossing_frequency() {
        // Until the first sign change the drift is constant, so an Euler path
        // with Brownian-bridge crossing probabilities between grid points gives
        // an unbiased estimate of the no-crossing probability.
        let (l, y, t) = (1.0, 0.5, 1.0);
        let n = 200;
        let dt = t / n as f64;
        let weights: Vec<f64> = (0..20_000u64)
            .map(|i| {
                let mut rng = SeedSpec::new(17).child(i).rng();
                let mut v: f64 = y;
                let mut w = 1.0;
                for _ in 0..n {
                    let nv = v - l * dt + dt.sqrt() * std_normal(&mut rng);
                    if nv <= 0.0 {
                        return 0.0;
                    }
                    w *= -(-2.0 * v * nv / dt).exp_m1();
                    v = nv;
                }
                w
            })
            .collect();
        let (f, se) = crate::stats::mean_se(&weights);
        let m = atom_mass_l(l, y, t);
        assert!((f - m).abs() < 3.0 * se, "freq {f} mass {m} se {se}");
    }

    #[test]
    fn y_zero_never_atom() {
        let s = TripleSampler::new(2.0, 0.0, 1.0).unwrap();
        let mut rng = SeedSpec::new(5).rng();
        assert!((0..20_000).all(|_| !s.draw(&mut rng).atom));
    }

    #[test]
    fn sampler_marginal_ks() {
        let (l, y, t) = (2.0, 0.3, 1.0);
        let s = TripleSampler::new(l, y, t).unwrap();
        let mut rng = SeedSpec::new(11).rng();
        let draws: Vec<TripleDraw> = (0..100_000).map(|_| s.draw(&mut rng)).collect();
        assert!(draws.iter().all(|d| d.a >= 0.0 && d.b >= 0.0 && (d.atom == (d.b == 0.0))));
        let ys: Vec<f64> = draws.iter().map(|d| d.y()).collect();
        let table = CdfTable::new(|x| density_l(l, t, y, x), -12.0, 12.0, 4000, &[0.0]);
        let d = crate::stats::ks_one_sample(&ys, |x| table.cdf(x), &[]);
        assert!(d < 0.01, "KS {d}");
        let bs: Vec<f64> = draws.iter().map(|d| d.b).collect();
        // law of 2L: atom at zero plus continuous part
        let m0 = atom_mass_l(l, y, t);
        let b_marg = |b: f64| 2.0 * integrate(|a| triple_density_l(l, y, t, a, b), 0.0, 30.0, 1e-12).value;
        let bt = CdfTable::new(b_marg, 0.0, 15.0, 600, &[]);
        let d = crate::stats::ks_one_sample(&bs, |x| if x < 0.0 { 0.0 } else { m0 + bt.cdf(x) }, &[(0.0, m0)]);
        assert!(d < 0.01, "KS b {d}");
    }

    #[test]
    fn s_sampler_extreme_parameters() {
        // large lambda sqrt(t) pushes w far negative
        let s = TripleSampler::new(20.0, 0.0, 5.0).unwrap();
        let mut rng = SeedSpec::new(2).rng();
        for _ in 0..1000 {
            let d = s.draw(&mut rng);
            assert!(d.a.is_finite() && d.b.is_finite() && d.b > 0.0);
        }
        // y far above lambda t
        let s = TripleSampler::new(0.5, 8.0, 0.1).unwrap();
        for _ in 0..1000 {
            let d = s.draw(&mut rng);
            assert!(d.a.is_finite() && d.b.is_finite());
        }
    }

    #[test]
    fn truncated_normal_tail() {
        let mut rng = SeedSpec::new(4).rng();
        for &c in &[-3.0, 0.0, 2.0, 7.0, 40.0] {
            let xs: Vec<f64> = (0..20_000).map(|_| truncated_normal_above(c, &mut rng)).collect();
            assert!(xs.iter().all(|&x| x >= c));
            if c < 10.0 {
                let tail = normal::sf(c);
                let d = crate::stats::ks_one_sample(&xs, |x| 1.0 - normal::sf(x.max(c)) / tail, &[]);
                assert!(d < 0.015, "c={c} d={d}");
            }
        }
    }

    #[test]
    fn tabulated_quantile_inverts_cdf() {
        let p = params(2.0);
        let tab = transition_cdf_table(&p, 1.0, 0.5).unwrap();
        assert!((tab.total() - 1.0).abs() < 1e-10);
        for &u in &[1e-4, 0.1, 0.5, 0.93] {
            let x = tab.quantile(u);
            assert!((tab.cdf(x) - u).abs() < 1e-9, "u={u}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn mirror_and_positivity(l in 0.1f64..6.0, t in 0.05f64..6.0, y in -4.0f64..4.0, xi in -6.0f64..6.0) {
            let v = density_l(l, t, y, xi);
            prop_assert!(v >= 0.0 && v.is_finite());
            let m = density_l(l, t, -y, -xi);
            prop_assert!((v - m).abs() <= 1e-14 * v.max(1e-300) || v == m);
        }

        #[test]
        fn tanaka_increments_nonnegative(ys in proptest::collection::vec(-3.0f64..3.0, 2..200)) {
            let mut stoch = 0.0;
            let mut prev = 0.0;
            for k in 1..ys.len() {
                stoch += sgn(ys[k - 1]) * (ys[k] - ys[k - 1]);
                let l = 0.5 * (ys[k].abs() - ys[0].abs() - stoch);
                prop_assert!(l >= prev - 1e-12);
                prev = l;
            }
        }
    }
}
