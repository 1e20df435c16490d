//! The two-particle system: Euler schemes, skew representation, exact
//! terminal sampling and ranks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bangbang::{check_grid, tanaka_residual, TripleSampler, YPath};
use crate::classifier::{self, SqrtConfig};
use crate::error::{invalid, Result};
use crate::model::{sgn, InitialState, ModelParams};
use crate::rng::{normal as std_normal, par_collect, SeedSpec};

/// Which SDE system drives the particles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SystemKind {
    /// Driven by `(B1, B2)`: each particle has its own Brownian motion.
    B,
    /// Driven by `(W1, W2)`.
    W,
    /// Driven by `(V1, V2)`.
    V,
    /// `dX = Sigma(X) dU + G(X) dt` for a chosen square root.
    CustomRoot(SqrtConfig),
}

pub type Mat2 = [[f64; 2]; 2];

impl SystemKind {
    /// Diffusion matrices on `{X1 > X2}` and `{X1 <= X2}`.
    pub fn matrices(&self, p: &ModelParams) -> (Mat2, Mat2) {
        let (r, s) = (p.rho(), p.sigma());
        match self {
            SystemKind::B => ([[r, 0.0], [0.0, s]], [[s, 0.0], [0.0, r]]),
            SystemKind::W => ([[r, 0.0], [0.0, -s]], [[0.0, s], [-r, 0.0]]),
            SystemKind::V => ([[r, 0.0], [0.0, s]], [[0.0, s], [r, 0.0]]),
            SystemKind::CustomRoot(c) => (c.sigma_plus, c.sigma_minus),
        }
    }
}

/// How a planar path was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PathOrigin {
    /// Euler scheme; `noise1`, `noise2` are the raw increments of the system.
    Euler(SystemKind),
    /// Skew representation; `noise1` holds the `W` increments of `Y` and
    /// `noise2` the independent `Q` increments.
    Skew,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanarPath {
    pub origin: PathOrigin,
    pub params: ModelParams,
    pub initial: InitialState,
    pub times: Vec<f64>,
    pub x1_values: Vec<f64>,
    pub x2_values: Vec<f64>,
    pub noise1: Vec<f64>,
    pub noise2: Vec<f64>,
}

impl PlanarPath {
    pub fn y_values(&self) -> Vec<f64> {
        self.x1_values.iter().zip(&self.x2_values).map(|(a, b)| a - b).collect()
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Cumulative `V = rho V1 + sigma V2` on the grid.
    pub fn v_values(&self) -> Vec<f64> {
        cumulative(&NoiseBundle::reconstruct(self).v)
    }
}

/// Running sum starting at 0.
pub fn cumulative(incs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(incs.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for d in incs {
        acc += d;
        out.push(acc);
    }
    out
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn step(p: &ModelParams, plus: &Mat2, minus: &Mat2, x1: f64, x2: f64, dt: f64, n1: f64, n2: f64) -> (f64, f64) {
    if x1 - x2 > 0.0 {
        (
            x1 - p.h() * dt + (plus[0][0] * n1 + plus[0][1] * n2),
            x2 + p.g() * dt + (plus[1][0] * n1 + plus[1][1] * n2),
        )
    } else {
        (
            x1 + p.g() * dt + (minus[0][0] * n1 + minus[0][1] * n2),
            x2 - p.h() * dt + (minus[1][0] * n1 + minus[1][1] * n2),
        )
    }
}

/// Test hooks for [`euler_simulate_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct EulerHooks {
    pub zero_noise: bool,
}

pub fn euler_simulate(
    kind: &SystemKind,
    p: &ModelParams,
    s0: InitialState,
    horizon: f64,
    n_steps: usize,
    seed: SeedSpec,
) -> Result<PlanarPath> {
    euler_simulate_with(kind, p, s0, horizon, n_steps, seed, EulerHooks::default())
}

pub fn euler_simulate_with(
    kind: &SystemKind,
    p: &ModelParams,
    s0: InitialState,
    horizon: f64,
    n_steps: usize,
    seed: SeedSpec,
    hooks: EulerHooks,
) -> Result<PlanarPath> {
    check_grid(horizon, n_steps)?;
    if let SystemKind::CustomRoot(c) = kind {
        classifier::check_root(p, c)?;
    }
    let dt = horizon / n_steps as f64;
    let sd = dt.sqrt();
    let mut rng = seed.rng();
    let mut noise1 = Vec::with_capacity(n_steps);
    let mut noise2 = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let (a, b) = (std_normal(&mut rng), std_normal(&mut rng));
        if hooks.zero_noise {
            noise1.push(0.0);
            noise2.push(0.0);
        } else {
            noise1.push(sd * a);
            noise2.push(sd * b);
        }
    }
    Ok(euler_driven(kind, p, s0, dt, noise1, noise2))
}

/// Euler scheme driven by given raw increments.
pub fn euler_driven(
    kind: &SystemKind,
    p: &ModelParams,
    s0: InitialState,
    dt: f64,
    noise1: Vec<f64>,
    noise2: Vec<f64>,
) -> PlanarPath {
    let (plus, minus) = kind.matrices(p);
    let n = noise1.len();
    let mut x1v = Vec::with_capacity(n + 1);
    let mut x2v = Vec::with_capacity(n + 1);
    let (mut x1, mut x2) = (s0.x1, s0.x2);
    x1v.push(x1);
    x2v.push(x2);
    for k in 0..n {
        (x1, x2) = step(p, &plus, &minus, x1, x2, dt, noise1[k], noise2[k]);
        x1v.push(x1);
        x2v.push(x2);
    }
    PlanarPath {
        origin: PathOrigin::Euler(kind.clone()),
        params: *p,
        initial: s0,
        times: (0..=n).map(|k| k as f64 * dt).collect(),
        x1_values: x1v,
        x2_values: x2v,
        noise1,
        noise2,
    }
}

/// Terminal value of an Euler path without storing it.
pub fn euler_terminal<R: Rng + ?Sized>(
    kind: &SystemKind,
    p: &ModelParams,
    s0: InitialState,
    horizon: f64,
    n_steps: usize,
    rng: &mut R,
) -> (f64, f64) {
    let (plus, minus) = kind.matrices(p);
    let dt = horizon / n_steps as f64;
    let sd = dt.sqrt();
    let (mut x1, mut x2) = (s0.x1, s0.x2);
    for _ in 0..n_steps {
        let (a, b) = (std_normal(rng), std_normal(rng));
        (x1, x2) = step(p, &plus, &minus, x1, x2, dt, sd * a, sd * b);
    }
    (x1, x2)
}

/// Increments of every Brownian motion attached to a path.
///
/// The independent pairs `(B1, B2)`, `(W1, W2)`, `(V1, V2)` are available for
/// the named systems and skew paths; a custom root only yields `W` and `V`.
#[derive(Clone, Debug, Default)]
pub struct NoiseBundle {
    pub b1: Option<Vec<f64>>,
    pub b2: Option<Vec<f64>>,
    pub w1: Option<Vec<f64>>,
    pub w2: Option<Vec<f64>>,
    pub v1: Option<Vec<f64>>,
    pub v2: Option<Vec<f64>>,
    /// Driving noise of `Y = X1 - X2`.
    pub w: Vec<f64>,
    /// Noise of `X1 + X2`.
    pub v: Vec<f64>,
    /// `sign(Y) dW`
    pub v_flat: Vec<f64>,
    pub w_flat: Option<Vec<f64>>,
    pub u_flat: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub q_flat: Option<Vec<f64>>,
}

impl NoiseBundle {
    pub fn reconstruct(path: &PlanarPath) -> NoiseBundle {
        let p = &path.params;
        let (r, s) = (p.rho(), p.sigma());
        let y = path.y_values();
        let n = path.n_steps();
        let (n1, n2) = (&path.noise1, &path.noise2);
        let mut pairs: Option<[Vec<f64>; 6]> = None;
        let mut w = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        match &path.origin {
            PathOrigin::Euler(SystemKind::CustomRoot(c)) => {
                for k in 0..n {
                    let m = if y[k] > 0.0 { &c.sigma_plus } else { &c.sigma_minus };
                    let d1 = m[0][0] * n1[k] + m[0][1] * n2[k];
                    let d2 = m[1][0] * n1[k] + m[1][1] * n2[k];
                    w.push(d1 - d2);
                    v.push(d1 + d2);
                }
            }
            origin => {
                let mut cols: [Vec<f64>; 6] = Default::default();
                for k in 0..n {
                    let plus = y[k] > 0.0;
                    let sg = sgn(y[k]);
                    let (a, b) = (n1[k], n2[k]);
                    // (b1, b2, w1, w2, v1, v2)
                    let row = match origin {
                        PathOrigin::Euler(SystemKind::B) => {
                            if plus {
                                [a, b, a, -b, a, b]
                            } else {
                                [a, b, -b, a, b, a]
                            }
                        }
                        PathOrigin::Euler(SystemKind::W) => {
                            let (v1, v2) = (sg * a, -sg * b);
                            let (b1, b2) = if plus { (a, -b) } else { (b, -a) };
                            [b1, b2, a, b, v1, v2]
                        }
                        PathOrigin::Euler(SystemKind::V) => {
                            let (w1, w2) = (sg * a, -sg * b);
                            let (b1, b2) = if plus { (a, b) } else { (b, a) };
                            [b1, b2, w1, w2, a, b]
                        }
                        PathOrigin::Skew => {
                            let vf = sg * a;
                            let (v1, v2) = (r * vf + s * b, r * b - s * vf);
                            let (w1, w2) = (sg * v1, -sg * v2);
                            let (b1, b2) = if plus { (v1, v2) } else { (v2, v1) };
                            [b1, b2, w1, w2, v1, v2]
                        }
                        PathOrigin::Euler(SystemKind::CustomRoot(_)) => unreachable!(),
                    };
                    for (c, x) in cols.iter_mut().zip(row) {
                        c.push(x);
                    }
                    w.push(r * row[2] + s * row[3]);
                    v.push(r * row[4] + s * row[5]);
                }
                pairs = Some(cols);
            }
        }
        let v_flat: Vec<f64> = w.iter().zip(&y).map(|(d, yk)| sgn(*yk) * d).collect();
        let mut nb = NoiseBundle { w, v, v_flat, ..Default::default() };
        if let Some([b1, b2, w1, w2, v1, v2]) = pairs {
            let comb = |x: &[f64], cx: f64, z: &[f64], cz: f64| -> Vec<f64> {
                x.iter().zip(z).map(|(a, b)| cx * a + cz * b).collect()
            };
            nb.w_flat = Some(comb(&w1, r, &w2, -s));
            nb.u_flat = Some(comb(&w1, s, &w2, -r));
            nb.u = Some(comb(&w1, s, &w2, r));
            nb.q = Some(comb(&v1, s, &v2, r));
            nb.q_flat = Some(comb(&v1, s, &v2, -r));
            nb.b1 = Some(b1);
            nb.b2 = Some(b2);
            nb.w1 = Some(w1);
            nb.w2 = Some(w2);
            nb.v1 = Some(v1);
            nb.v2 = Some(v2);
        }
        nb
    }
}

/// Build `(X1, X2)` from a path of `Y` (with local time) and independent `Q`
/// increments through the skew representation.
pub fn skew_construct(p: &ModelParams, s0: InitialState, ypath: &YPath, q_increments: &[f64]) -> Result<PlanarPath> {
    let n = ypath.y_values.len() - 1;
    if q_increments.len() != n || ypath.l_values.len() != n + 1 || ypath.w_increments.len() != n {
        return Err(invalid(format!(
            "length mismatch: {} Y steps, {} Q increments",
            n,
            q_increments.len()
        )));
    }
    if (ypath.y_values[0] - s0.y()).abs() > 1e-12 {
        return Err(invalid("Y path does not start at x1 - x2"));
    }
    let y = s0.y();
    let (yp0, ym0) = (y.max(0.0), (-y).max(0.0));
    let (r2, s2, rs, gamma, mu) = (p.rho().powi(2), p.sigma().powi(2), p.rho() * p.sigma(), p.gamma(), p.mu());
    let q = cumulative(q_increments);
    let mut x1v = Vec::with_capacity(n + 1);
    let mut x2v = Vec::with_capacity(n + 1);
    #[allow(clippy::needless_range_loop)]
    for k in 0..=n {
        let t = ypath.times[k];
        let yk = ypath.y_values[k];
        let (dp, dm) = (yk.max(0.0) - yp0, (-yk).max(0.0) - ym0);
        let common = mu * t - gamma * ypath.l_values[k] + rs * q[k];
        x1v.push(s0.x1 + common + r2 * dp - s2 * dm);
        x2v.push(s0.x2 + common - s2 * dp + r2 * dm);
    }
    Ok(PlanarPath {
        origin: PathOrigin::Skew,
        params: *p,
        initial: s0,
        times: ypath.times.clone(),
        x1_values: x1v,
        x2_values: x2v,
        noise1: ypath.w_increments.clone(),
        noise2: q_increments.to_vec(),
    })
}

/// One exact draw of `(X1(t), X2(t))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalDraw {
    pub x1: f64,
    pub x2: f64,
    /// No local time accumulated by time t.
    pub atom: bool,
}

/// Exact sampler for the time-t law built on the skew representation.
#[derive(Clone, Copy, Debug)]
pub struct TerminalSampler {
    p: ModelParams,
    s0: InitialState,
    t: f64,
    swapped: bool,
    triple: TripleSampler,
}

impl TerminalSampler {
    pub fn new(p: &ModelParams, s0: InitialState, t: f64) -> Result<Self> {
        let swapped = s0.y() < 0.0;
        let s = if swapped { s0.swapped() } else { s0 };
        Ok(Self {
            p: *p,
            s0: s,
            t,
            swapped,
            triple: TripleSampler::new(p.lambda(), s.y(), t)?,
        })
    }

    pub fn atom_mass(&self) -> f64 {
        self.triple.atom_mass()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> TerminalDraw {
        let p = &self.p;
        let d = self.triple.draw(rng);
        let q = self.t.sqrt() * std_normal(rng);
        let y = self.s0.y();
        let (yp, ym) = match d.side {
            crate::bangbang::Side::Plus => (d.a, 0.0),
            crate::bangbang::Side::Minus => (0.0, d.a),
        };
        let l = 0.5 * d.b;
        let (r2, s2) = (p.rho().powi(2), p.sigma().powi(2));
        let x1 = self.s0.x1 + p.mu() * self.t + r2 * (yp - y) - s2 * ym - p.gamma() * l + p.rho() * p.sigma() * q;
        let x2 = self.s0.x2 + p.mu() * self.t - s2 * (yp - y) + r2 * ym - p.gamma() * l + p.rho() * p.sigma() * q;
        if self.swapped {
            TerminalDraw { x1: x2, x2: x1, atom: d.atom }
        } else {
            TerminalDraw { x1, x2, atom: d.atom }
        }
    }
}

/// `n_draws` exact draws of `(X1(t), X2(t))`; particles are relabelled when
/// `x1 < x2` so the triple law is always used with `y >= 0`.
pub fn exact_sample_terminal(
    p: &ModelParams,
    s0: InitialState,
    t: f64,
    n_draws: usize,
    seed: SeedSpec,
) -> Result<Vec<TerminalDraw>> {
    let s = TerminalSampler::new(p, s0, t)?;
    Ok(par_collect(n_draws, seed, |rng, _| s.draw(rng)))
}

/// Pointwise max and min of the two coordinates.
pub fn ranks(path: &PlanarPath) -> (Vec<f64>, Vec<f64>) {
    path.x1_values
        .iter()
        .zip(&path.x2_values)
        .map(|(a, b)| (a.max(*b), a.min(*b)))
        .unzip()
}

/// Residuals of the rank dynamics
/// `R1 = r1 - h t + rho V1 + L`, `R2 = r2 + g t + sigma V2 - L`.
#[derive(Clone, Debug)]
pub struct RankResiduals {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

pub fn rank_residuals(path: &PlanarPath) -> Result<RankResiduals> {
    let nb = NoiseBundle::reconstruct(path);
    let (v1, v2) = match (&nb.v1, &nb.v2) {
        (Some(a), Some(b)) => (cumulative(a), cumulative(b)),
        _ => return Err(invalid("rank residuals need the (V1, V2) pair, unavailable for a custom root")),
    };
    let p = &path.params;
    let l = tanaka_residual(&path.y_values());
    let (r1, r2) = ranks(path);
    let (r10, r20) = (path.initial.r1(), path.initial.r2());
    let mut out = RankResiduals { r1: Vec::new(), r2: Vec::new() };
    for k in 0..r1.len() {
        let t = path.times[k];
        out.r1.push(r1[k] - (r10 - p.h() * t + p.rho() * v1[k] + l[k]));
        out.r2.push(r2[k] - (r20 + p.g() * t + p.sigma() * v2[k] - l[k]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bangbang::simulate_y_driven;
    use crate::model::validate_params;

    fn all_kinds(p: &ModelParams) -> Vec<SystemKind> {
        let c = classifier::build_config(p, 1, 1, 0.3, 1.1).unwrap();
        vec![SystemKind::B, SystemKind::W, SystemKind::V, SystemKind::CustomRoot(c)]
    }

    fn param_set() -> Vec<ModelParams> {
        vec![
            validate_params(1.0, 1.0, 1.0, 0.0).unwrap(),
            validate_params(1.0, 0.5, 0.8, 0.6).unwrap(),
            validate_params(0.3, 1.2, std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2).unwrap(),
        ]
    }

    #[test]
    fn named_kinds_match_classifier_roots() {
        let p = validate_params(1.0, 0.5, 0.8, 0.6).unwrap();
        let h = std::f64::consts::FRAC_PI_2;
        for (kind, cfg) in [
            (SystemKind::B, classifier::build_config(&p, 1, 1, 0.0, 0.0).unwrap()),
            (SystemKind::W, classifier::build_config(&p, -1, 1, 0.0, -h).unwrap()),
            (SystemKind::V, classifier::build_config(&p, 1, -1, 0.0, -h).unwrap()),
        ] {
            let (a, b) = kind.matrices(&p);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - cfg.sigma_plus[i][j]).abs() < 1e-15);
                    assert!((b[i][j] - cfg.sigma_minus[i][j]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn drift_only_skeleton() {
        let p = validate_params(1.0, 0.5, 0.8, 0.6).unwrap();
        let path = euler_simulate_with(&SystemKind::B, &p, InitialState::new(1.0, 0.0), 1.0, 1000, SeedSpec::new(1), EulerHooks { zero_noise: true }).unwrap();
        // gap closes at rate g + h = 1.5: flips after t = 2/3
        for k in 0..=600 {
            let t = path.times[k];
            assert!((path.x1_values[k] - (1.0 - 0.5 * t)).abs() < 1e-12);
            assert!((path.x2_values[k] - t).abs() < 1e-12);
        }
        let y = path.y_values();
        assert!(y.iter().skip(700).all(|v| v.abs() < 1.5e-3 + 1e-12));
    }

    #[test]
    fn difference_is_bang_bang_and_sum_identity() {
        for p in param_set() {
            for kind in all_kinds(&p) {
                let s0 = InitialState::new(0.2, -0.1);
                let path = euler_simulate(&kind, &p, s0, 1.0, 2000, SeedSpec::new(8)).unwrap();
                let nb = NoiseBundle::reconstruct(&path);
                let yb = simulate_y_driven(p.lambda(), s0.y(), path.times[1], nb.w.clone());
                let y = path.y_values();
                for (k, (a, b)) in y.iter().zip(&yb.y_values).enumerate() {
                    assert!((a - b).abs() < 1e-10, "{kind:?} step {k}");
                    assert_eq!(*a > 0.0, *b > 0.0);
                }
                let v = cumulative(&nb.v);
                for (k, vk) in v.iter().enumerate() {
                    let lhs = path.x1_values[k] + path.x2_values[k] - (s0.z() + p.nu() * path.times[k] + vk);
                    assert!(lhs.abs() <= 1e-10, "{kind:?}");
                }
            }
        }
    }

    #[test]
    fn reconstructions_consistent_across_kinds() {
        let p = validate_params(1.0, 0.5, 0.8, 0.6).unwrap();
        let path = euler_simulate(&SystemKind::B, &p, InitialState::new(0.1, 0.0), 1.0, 500, SeedSpec::new(3)).unwrap();
        let nb = NoiseBundle::reconstruct(&path);
        // the same trajectory written as a W-driven and a V-driven system
        for (kind, n1, n2) in [
            (SystemKind::W, nb.w1.clone().unwrap(), nb.w2.clone().unwrap()),
            (SystemKind::V, nb.v1.clone().unwrap(), nb.v2.clone().unwrap()),
        ] {
            let other = euler_driven(&kind, &p, path.initial, path.times[1], n1, n2);
            for k in 0..path.times.len() {
                assert!((other.x1_values[k] - path.x1_values[k]).abs() < 1e-10);
                assert!((other.x2_values[k] - path.x2_values[k]).abs() < 1e-10);
            }
            let nb2 = NoiseBundle::reconstruct(&other);
            for (a, b) in nb2.b1.unwrap().iter().zip(nb.b1.as_ref().unwrap()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn skew_equals_euler_b() {
        for p in param_set() {
            let s0 = InitialState::new(0.3, 0.0);
            let path = euler_simulate(&SystemKind::B, &p, s0, 1.0, 1000, SeedSpec::new(12)).unwrap();
            let nb = NoiseBundle::reconstruct(&path);
            let yp = simulate_y_driven(p.lambda(), s0.y(), path.times[1], nb.w.clone());
            let skew = skew_construct(&p, s0, &yp, nb.q.as_ref().unwrap()).unwrap();
            for k in 0..path.times.len() {
                assert!((skew.x1_values[k] - path.x1_values[k]).abs() < 1e-9, "k={k}");
                assert!((skew.x2_values[k] - path.x2_values[k]).abs() < 1e-9);
                assert!((skew.x1_values[k] - skew.x2_values[k] - yp.y_values[k]).abs() < 1e-12);
            }
            let nbs = NoiseBundle::reconstruct(&skew);
            for (a, b) in nbs.b1.unwrap().iter().zip(nb.b1.as_ref().unwrap()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn skew_special_cases() {
        let y = simulate_y_driven(1.0, 0.2, 0.01, vec![0.05; 50]);
        let q = vec![0.0; 50];
        let iso = validate_params(1.0, 0.0, std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert!(iso.gamma().abs() < 1e-15);
        let deg = validate_params(0.7, 0.3, 1.0, 0.0).unwrap();
        let s0 = InitialState::new(0.2, 0.0);
        let path = skew_construct(&deg, s0, &y, &q).unwrap();
        for k in 0..=50 {
            let t = y.times[k];
            let ym = (-y.y_values[k]).max(0.0);
            let expect = s0.x2 - 0.0 + 0.7 * t + ym - y.l_values[k];
            assert!((path.x2_values[k] - expect).abs() < 1e-14);
        }
        assert!(skew_construct(&deg, s0, &y, &q[..10]).is_err());
    }

    #[test]
    fn ranks_and_residuals() {
        for p in param_set() {
            for kind in [SystemKind::B, SystemKind::W, SystemKind::V] {
                let path = euler_simulate(&kind, &p, InitialState::new(-0.2, 0.1), 1.0, 1000, SeedSpec::new(21)).unwrap();
                let (r1, r2) = ranks(&path);
                for k in 0..r1.len() {
                    assert!(r1[k] >= r2[k]);
                    assert_eq!(r1[k] + r2[k], path.x1_values[k] + path.x2_values[k]);
                }
                let res = rank_residuals(&path).unwrap();
                assert!(res.r1.iter().chain(&res.r2).all(|v| v.abs() < 1e-10), "{kind:?}");
            }
        }
    }

    #[test]
    fn b_system_v1_v2_uncorrelated() {
        let p = validate_params(1.0, 0.5, 0.8, 0.6).unwrap();
        let n = 100_000;
        let path = euler_simulate(&SystemKind::B, &p, InitialState::new(0.0, 0.0), 10.0, n, SeedSpec::new(31)).unwrap();
        let nb = NoiseBundle::reconstruct(&path);
        let r = crate::stats::correlation(nb.v1.as_ref().unwrap(), nb.v2.as_ref().unwrap());
        assert!(r.abs() <= 3.0 / (n as f64).sqrt(), "r = {r}");
        let r = crate::stats::correlation(&nb.w, nb.u_flat.as_ref().unwrap());
        assert!(r.abs() <= 3.0 / (n as f64).sqrt(), "r = {r}");
    }

    #[test]
    fn derived_noise_quadratic_variation() {
        let p = validate_params(1.0, 0.5, 0.8, 0.6).unwrap();
        let path = euler_simulate(&SystemKind::V, &p, InitialState::new(0.0, 0.0), 2.0, 50_000, SeedSpec::new(2)).unwrap();
        let nb = NoiseBundle::reconstruct(&path);
        let qv = |x: &[f64]| x.iter().map(|d| d * d).sum::<f64>();
        for (name, inc) in [
            ("w", &nb.w),
            ("v", &nb.v),
            ("v_flat", &nb.v_flat),
            ("q", nb.q.as_ref().unwrap()),
            ("u", nb.u.as_ref().unwrap()),
            ("q_flat", nb.q_flat.as_ref().unwrap()),
            ("w_flat", nb.w_flat.as_ref().unwrap()),
        ] {
            // sd of the realized variance is t sqrt(2/n)
            assert!((qv(inc) - 2.0).abs() < 4.0 * 2.0 * (2.0 / 50_000f64).sqrt(), "{name}");
        }
    }

    #[test]
    fn swapped_sampler_relabels() {
        let p = validate_params(1.0, 0.5, 0.8, 0.6).unwrap();
        let a = exact_sample_terminal(&p, InitialState::new(0.0, 0.4), 1.0, 2000, SeedSpec::new(1)).unwrap();
        let b = exact_sample_terminal(&p, InitialState::new(0.4, 0.0), 1.0, 2000, SeedSpec::new(1)).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert_eq!((u.x1, u.x2), (v.x2, v.x1));
        }
    }

    #[test]
    fn degenerate_atom_on_front_line() {
        let p = validate_params(1.0, 1.0, 1.0, 0.0).unwrap();
        let s0 = InitialState::new(0.5, 0.0);
        let d = exact_sample_terminal(&p, s0, 1.0, 5000, SeedSpec::new(4)).unwrap();
        let front = s0.x2 + p.g() * 1.0;
        assert!(d.iter().filter(|d| d.atom).all(|d| d.x2 == front && d.x1 > front));
        assert!(d.iter().filter(|d| !d.atom).all(|d| d.x1.min(d.x2) < front));
    }
}
