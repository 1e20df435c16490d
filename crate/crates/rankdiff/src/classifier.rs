//! Square roots of the rank-based diffusion matrix and the algebraic
//! strong/weak solvability criterion.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, NORM_TOL};
use crate::planar::Mat2;

/// Threshold below which `|(e1-e2)'(S+ + S-)|` counts as zero.
pub const STRENGTH_TOL: f64 = 1e-9;

/// Bound on `S S' - A` accepted when building a root.
const ROOT_TOL: f64 = 1e-10;

/// A real square root of `diag(rho^2, sigma^2)` on `{x1 > x2}` and
/// `diag(sigma^2, rho^2)` on `{x1 <= x2}`, up to the rotations `phi`, `vartheta`
/// and the row signs `eps`, `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SqrtSpec", into = "SqrtSpec")]
pub struct SqrtConfig {
    pub rho: f64,
    pub sigma: f64,
    pub eps: i8,
    pub delta: i8,
    /// Reduced to `[0, 2pi)`.
    pub phi: f64,
    /// Reduced to `[0, 2pi)`.
    pub vartheta: f64,
    pub sigma_plus: Mat2,
    pub sigma_minus: Mat2,
    /// In `(-pi, pi]`.
    pub psi: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SqrtSpec {
    rho: f64,
    sigma: f64,
    eps: i8,
    delta: i8,
    phi: f64,
    vartheta: f64,
}

impl TryFrom<SqrtSpec> for SqrtConfig {
    type Error = Error;
    fn try_from(s: SqrtSpec) -> Result<Self> {
        SqrtConfig::new(s.rho, s.sigma, s.eps, s.delta, s.phi, s.vartheta)
    }
}

impl From<SqrtConfig> for SqrtSpec {
    fn from(c: SqrtConfig) -> Self {
        SqrtSpec { rho: c.rho, sigma: c.sigma, eps: c.eps, delta: c.delta, phi: c.phi, vartheta: c.vartheta }
    }
}

fn check_sign(name: &str, v: i8) -> Result<()> {
    if v == 1 || v == -1 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be +1 or -1, got {v}")))
    }
}

fn mul_t(a: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * a[j][0] + a[i][1] * a[j][1];
        }
    }
    out
}

fn max_dev(a: &Mat2, b: &Mat2) -> f64 {
    let mut m = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// `(e1 - e2)' S`
pub fn diff_row(s: &Mat2) -> [f64; 2] {
    [s[0][0] - s[1][0], s[0][1] - s[1][1]]
}

impl SqrtConfig {
    pub fn new(rho: f64, sigma: f64, eps: i8, delta: i8, phi: f64, vartheta: f64) -> Result<Self> {
        check_sign("eps", eps)?;
        check_sign("delta", delta)?;
        if !(phi.is_finite() && vartheta.is_finite()) {
            return Err(invalid("angles must be finite"));
        }
        if !(rho >= 0.0 && sigma >= 0.0) || (rho * rho + sigma * sigma - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!("rho^2+sigma^2=1 violated (rho={rho}, sigma={sigma})")));
        }
        let phi = phi.rem_euclid(TAU);
        let vartheta = vartheta.rem_euclid(TAU);
        let (e, d) = (eps as f64, delta as f64);
        let (sp, cp) = phi.sin_cos();
        let (sv, cv) = vartheta.sin_cos();
        let sigma_plus = [[rho * cp, -rho * sp], [e * sigma * sp, e * sigma * cp]];
        let sigma_minus = [[sigma * cv, -sigma * sv], [d * rho * sv, d * rho * cv]];
        let psi = (sigma * sigma * e - rho * rho * d).atan2(rho * sigma * (1.0 + e * d));
        let cfg = SqrtConfig { rho, sigma, eps, delta, phi, vartheta, sigma_plus, sigma_minus, psi };
        let res = cfg.root_residual();
        if res > ROOT_TOL {
            return Err(Error::Internal(format!("square-root residual {res:e}")));
        }
        Ok(cfg)
    }

    /// Largest entry of `S+ S+' - diag(rho^2, sigma^2)` and
    /// `S- S-' - diag(sigma^2, rho^2)`.
    pub fn root_residual(&self) -> f64 {
        let (r2, s2) = (self.rho * self.rho, self.sigma * self.sigma);
        max_dev(&mul_t(&self.sigma_plus), &[[r2, 0.0], [0.0, s2]])
            .max(max_dev(&mul_t(&self.sigma_minus), &[[s2, 0.0], [0.0, r2]]))
    }
}

pub fn build_config(p: &ModelParams, eps: i8, delta: i8, phi: f64, vartheta: f64) -> Result<SqrtConfig> {
    SqrtConfig::new(p.rho(), p.sigma(), eps, delta, phi, vartheta)
}

/// The root must belong to the same `(rho, sigma)` as the model.
pub(crate) fn check_root(p: &ModelParams, c: &SqrtConfig) -> Result<()> {
    if (c.rho - p.rho()).abs() > NORM_TOL || (c.sigma - p.sigma()).abs() > NORM_TOL {
        return Err(invalid(format!(
            "square root built for (rho, sigma) = ({}, {}) but the model has ({}, {})",
            c.rho,
            c.sigma,
            p.rho(),
            p.sigma()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthChecks {
    /// `|(e1-e2)'(S+ + S-)|`
    pub ip_sum_norm: f64,
    /// Inner product of `(e1-e2)'S+` and `(e1-e2)'S-` in closed form.
    pub weak_scalar: f64,
    /// `vartheta - phi - psi - pi` reduced to `(-pi, pi]`.
    pub geom_residual: f64,
    pub geom_holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthVerdict {
    pub strong: bool,
    pub checks: StrengthChecks,
}

fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Evaluate the three equivalent criteria and require them to agree.
pub fn strength(cfg: &SqrtConfig) -> Result<StrengthVerdict> {
    let a = diff_row(&cfg.sigma_plus);
    let b = diff_row(&cfg.sigma_minus);
    let ip_sum_norm = (a[0] + b[0]).hypot(a[1] + b[1]);

    let (r, s) = (cfg.rho, cfg.sigma);
    let (e, d) = (cfg.eps as f64, cfg.delta as f64);
    let (sd, cd) = (cfg.vartheta - cfg.phi).sin_cos();
    let weak_scalar = r * s * (1.0 + e * d) * cd + (e * s * s - d * r * r) * sd;

    let geom_residual = wrap_angle(cfg.vartheta - cfg.phi - cfg.psi - PI);
    let geom_holds = geom_residual.abs() <= STRENGTH_TOL;

    let by_norm = ip_sum_norm > STRENGTH_TOL;
    let by_scalar = (weak_scalar + 1.0).abs() > STRENGTH_TOL;
    if by_norm != by_scalar || by_norm == geom_holds {
        return Err(Error::Internal(format!(
            "strength criteria disagree: norm {ip_sum_norm:e}, 1+scalar {:e}, geom residual {geom_residual:e}",
            weak_scalar + 1.0
        )));
    }
    Ok(StrengthVerdict {
        strong: by_norm,
        checks: StrengthChecks { ip_sum_norm, weak_scalar, geom_residual, geom_holds },
    })
}

/// One entry of the diagonal / anti-diagonal enumeration.
#[derive(Clone, Debug, Serialize)]
pub struct EnumeratedRoot {
    /// `"diag"` or `"anti"` for the two blocks, followed by the entry signs.
    pub label: String,
    pub config: SqrtConfig,
    pub verdict: StrengthVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct Enumeration {
    pub roots: Vec<EnumeratedRoot>,
    pub strong_count: usize,
}

/// `(angle, row sign)` reproducing `diag(s1 a, s2 b)` or `[[0, s1 a], [s2 b, 0]]`.
fn block_angle(anti: bool, s1: i8, s2: i8) -> (f64, i8) {
    if anti {
        (-(s1 as f64) * PI / 2.0, -s1 * s2)
    } else if s1 > 0 {
        (0.0, s1 * s2)
    } else {
        (PI, s1 * s2)
    }
}

/// All 64 combinations of signed diagonal and anti-diagonal blocks.
pub fn enumerate_diagonal_roots(p: &ModelParams) -> Result<Enumeration> {
    let mut roots = Vec::with_capacity(64);
    let signs = [1i8, -1];
    for ap in [false, true] {
        for s1 in signs {
            for s2 in signs {
                for am in [false, true] {
                    for t1 in signs {
                        for t2 in signs {
                            let (phi, eps) = block_angle(ap, s1, s2);
                            let (vartheta, delta) = block_angle(am, t1, t2);
                            let config = build_config(p, eps, delta, phi, vartheta)?;
                            let verdict = strength(&config)?;
                            let tag = |anti: bool, a: i8, b: i8| {
                                format!("{}({:+},{:+})", if anti { "anti" } else { "diag" }, a, b)
                            };
                            roots.push(EnumeratedRoot {
                                label: format!("{}/{}", tag(ap, s1, s2), tag(am, t1, t2)),
                                config,
                                verdict,
                            });
                        }
                    }
                }
            }
        }
    }
    let strong_count = roots.iter().filter(|r| r.verdict.strong).count();
    Ok(Enumeration { roots, strong_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_params;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn params(r: f64, s: f64) -> ModelParams {
        validate_params(1.0, 0.5, r, s).unwrap()
    }

    #[test]
    fn named_roots() {
        let p = params(0.8, 0.6);
        let b = build_config(&p, 1, 1, 0.0, 0.0).unwrap();
        assert_eq!(b.sigma_plus, [[0.8, 0.0], [0.0, 0.6]]);
        assert_eq!(b.sigma_minus, [[0.6, 0.0], [0.0, 0.8]]);
        let w = build_config(&p, -1, 1, 0.0, -PI / 2.0).unwrap();
        let expect_w: Mat2 = [[0.0, 0.6], [-0.8, 0.0]];
        assert!(max_dev(&w.sigma_minus, &expect_w) < 1e-15);
        assert!(max_dev(&w.sigma_plus, &[[0.8, 0.0], [0.0, -0.6]]) < 1e-15);
        let v = build_config(&p, 1, -1, 0.0, -PI / 2.0).unwrap();
        assert!(max_dev(&v.sigma_minus, &[[0.0, 0.6], [0.8, 0.0]]) < 1e-15);
    }

    #[test]
    fn named_verdicts_for_several_correlations() {
        for (r, s) in [(1.0, 0.0), (0.0, 1.0), (0.8, 0.6), (FRAC_1_SQRT_2, FRAC_1_SQRT_2), (0.3, (1.0f64 - 0.09).sqrt())] {
            let p = params(r, s);
            assert!(strength(&build_config(&p, 1, 1, 0.0, 0.0).unwrap()).unwrap().strong);
            assert!(strength(&build_config(&p, -1, 1, 0.0, -PI / 2.0).unwrap()).unwrap().strong);
            assert!(!strength(&build_config(&p, 1, -1, 0.0, -PI / 2.0).unwrap()).unwrap().strong);
        }
    }

    #[test]
    fn enumeration_counts() {
        for (r, s, n) in [(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 48), (1.0, 0.0, 48), (0.0, 1.0, 48), (0.8, 0.6, 56)] {
            let e = enumerate_diagonal_roots(&params(r, s)).unwrap();
            assert_eq!(e.roots.len(), 64);
            assert_eq!(e.strong_count, n, "rho={r}");
        }
    }

    #[test]
    fn enumeration_reproduces_blocks() {
        let p = params(0.8, 0.6);
        let e = enumerate_diagonal_roots(&p).unwrap();
        let first = &e.roots[0].config;
        assert_eq!(e.roots[0].label, "diag(+1,+1)/diag(+1,+1)");
        assert_eq!(first.sigma_plus, [[0.8, 0.0], [0.0, 0.6]]);
        // anti(-1,+1) on the plus block: [[0, -rho], [sigma, 0]]
        let r = e.roots.iter().find(|r| r.label.starts_with("anti(-1,+1)")).unwrap();
        assert!(max_dev(&r.config.sigma_plus, &[[0.0, -0.8], [0.6, 0.0]]) < 1e-15);
    }

    #[test]
    fn rejects_bad_signs() {
        let p = params(0.8, 0.6);
        assert!(matches!(build_config(&p, 0, 1, 0.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(build_config(&p, 1, 2, 0.0, 0.0).is_err());
        assert!(build_config(&p, 1, 1, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn angles_reduced() {
        let p = params(0.8, 0.6);
        let c = build_config(&p, 1, 1, -PI / 2.0, 7.0).unwrap();
        assert!((c.phi - 1.5 * PI).abs() < 1e-15);
        assert!((c.vartheta - (7.0 - TAU)).abs() < 1e-15);
    }

    #[test]
    fn serde_round_trip_rebuilds() {
        let c = build_config(&params(0.8, 0.6), -1, 1, 0.4, 2.0).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(!s.contains("sigma_plus"));
        let back: SqrtConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<SqrtConfig>(r#"{"rho":1,"sigma":1,"eps":1,"delta":1,"phi":0,"vartheta":0}"#).is_err());
    }

    proptest! {
        #[test]
        fn root_property_and_unit_rows(a in 0.0..std::f64::consts::FRAC_PI_2, e in prop::bool::ANY, d in prop::bool::ANY,
                                       phi in -10.0..10.0f64, th in -10.0..10.0f64) {
            let (r, s) = (a.cos(), a.sin());
            let c = SqrtConfig::new(r, s, if e { 1 } else { -1 }, if d { 1 } else { -1 }, phi, th).unwrap();
            prop_assert!(c.root_residual() <= 1e-12);
            for m in [&c.sigma_plus, &c.sigma_minus] {
                let v = diff_row(m);
                prop_assert!((v[0].hypot(v[1]) - 1.0).abs() <= 1e-12);
            }
            // closed-form scalar equals the direct inner product
            let (u, w) = (diff_row(&c.sigma_plus), diff_row(&c.sigma_minus));
            let v = strength(&c).unwrap();
            prop_assert!((v.checks.weak_scalar - (u[0] * w[0] + u[1] * w[1])).abs() <= 1e-12);
        }

        #[test]
        fn on_manifold_is_weak(a in 0.0..std::f64::consts::FRAC_PI_2, e in prop::bool::ANY, d in prop::bool::ANY, phi in 0.0..TAU) {
            let (r, s) = (a.cos(), a.sin());
            let (e, d) = (if e { 1 } else { -1 }, if d { 1 } else { -1 });
            let psi = SqrtConfig::new(r, s, e, d, 0.0, 0.0).unwrap().psi;
            let c = SqrtConfig::new(r, s, e, d, phi, phi + psi + PI).unwrap();
            let v = strength(&c).unwrap();
            prop_assert!(!v.strong);
        }
    }
}
