//! Two Euler solutions of `dZ = f(Z) dM + dA + dN` sharing the noise, with
//! independent perturbations when a step crosses a jump of `f`.
//!
//! This is an illustration of dt-consistency only: pathwise uniqueness is a
//! statement about exact solutions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{normal as std_normal, par_collect, SeedSpec};

/// A bounded-variation coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FSpec {
    /// `sign` with `sign(0) = -1`.
    Sign,
    Constant { value: f64 },
    /// `values[k]` on `(breaks[k-1], breaks[k]]`, left-continuous.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Linear interpolation through `(knots, values)`, extended with the end
    /// slopes; bounded variation requires both slopes to be 0.
    PiecewiseLinear {
        knots: Vec<f64>,
        values: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
    },
}

fn check_increasing(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(format!("{name} must be finite and strictly increasing")));
    }
    Ok(())
}

fn check_finite(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(invalid(format!("{name} must be finite")));
    }
    Ok(())
}

impl FSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FSpec::Sign => Ok(()),
            FSpec::Constant { value } => check_finite("value", &[*value]),
            FSpec::PiecewiseConstant { breaks, values } => {
                check_increasing("breaks", breaks)?;
                check_finite("values", values)?;
                if values.len() != breaks.len() + 1 {
                    return Err(invalid("piecewise constant f needs one more value than breaks"));
                }
                Ok(())
            }
            FSpec::PiecewiseLinear { knots, values, left_slope, right_slope } => {
                check_increasing("knots", knots)?;
                check_finite("values", values)?;
                if knots.is_empty() || knots.len() != values.len() {
                    return Err(invalid("piecewise linear f needs matching, non-empty knots and values"));
                }
                if *left_slope != 0.0 || *right_slope != 0.0 {
                    return Err(invalid("f is not of bounded variation: end slopes must be 0"));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            FSpec::Sign => crate::model::sgn(z),
            FSpec::Constant { value } => *value,
            FSpec::PiecewiseConstant { breaks, values } => values[breaks.partition_point(|&b| b < z)],
            FSpec::PiecewiseLinear { knots, values, .. } => {
                let i = knots.partition_point(|&k| k <= z);
                if i == 0 {
                    values[0]
                } else if i == knots.len() {
                    values[i - 1]
                } else {
                    let w = (z - knots[i - 1]) / (knots[i] - knots[i - 1]);
                    values[i - 1] + w * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// Points where `f` jumps.
    pub fn jumps(&self) -> Vec<f64> {
        match self {
            FSpec::Sign => vec![0.0],
            FSpec::PiecewiseConstant { breaks, values } => breaks
                .iter()
                .zip(values.windows(2))
                .filter(|(_, v)| v[0] != v[1])
                .map(|(b, _)| *b)
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceConfig {
    pub z0: f64,
    pub horizon: f64,
    /// `M = m_scale * B_M`, so `<M> = m_scale^2 <N> / n_scale^2`.
    pub m_scale: f64,
    /// `N = n_scale * B_N`, orthogonal to `M`.
    pub n_scale: f64,
    /// `A(t) = drift * t`.
    pub drift: f64,
    pub dts: Vec<f64>,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for CoalescenceConfig {
    fn default() -> Self {
        Self {
            z0: 0.0,
            horizon: 1.0,
            m_scale: 0.5,
            n_scale: 1.0,
            drift: 0.0,
            dts: vec![1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4],
            pairs: 200,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceRow {
    pub dt: f64,
    pub median_sup: f64,
    pub mean_sup: f64,
    /// Fraction of pairs that never separated.
    pub identical: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceReport {
    pub label: String,
    pub f: FSpec,
    pub config: CoalescenceConfig,
    pub rows: Vec<CoalescenceRow>,
    /// Same `f` with `N = 0`, `A = 0` and `M` a standard Brownian motion.
    pub contrast: Vec<CoalescenceRow>,
}

fn step(f: &FSpec, jumps: &[f64], z: f64, dm: f64, da: f64, dn: f64, kick: f64) -> f64 {
    let nz = z + f.eval(z) * dm + da + dn;
    if jumps.iter().any(|&j| (z > j) != (nz > j)) {
        nz + kick
    } else {
        nz
    }
}

fn sup_gap<R: Rng + ?Sized>(f: &FSpec, jumps: &[f64], c: &CoalescenceConfig, dt: f64, rng: &mut R) -> f64 {
    let steps = (c.horizon / dt).round() as usize;
    let sd = dt.sqrt();
    let (mut z1, mut z2) = (c.z0, c.z0);
    let mut sup: f64 = 0.0;
    for _ in 0..steps {
        let dm = c.m_scale * sd * std_normal(rng);
        let dn = c.n_scale * sd * std_normal(rng);
        let k1 = if rng.random::<bool>() { dt } else { -dt };
        let k2 = if rng.random::<bool>() { dt } else { -dt };
        z1 = step(f, jumps, z1, dm, c.drift * dt, dn, k1);
        z2 = step(f, jumps, z2, dm, c.drift * dt, dn, k2);
        sup = sup.max((z1 - z2).abs());
    }
    sup
}

fn rows(f: &FSpec, c: &CoalescenceConfig, seed: SeedSpec) -> Vec<CoalescenceRow> {
    let jumps = f.jumps();
    c.dts
        .iter()
        .enumerate()
        .map(|(k, &dt)| {
            let mut gaps = par_collect(c.pairs, seed.child(k as u64), |rng, _| sup_gap(f, &jumps, c, dt, rng));
            gaps.sort_by(f64::total_cmp);
            let n = gaps.len();
            let median = if n % 2 == 1 { gaps[n / 2] } else { 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]) };
            CoalescenceRow {
                dt,
                median_sup: median,
                mean_sup: gaps.iter().sum::<f64>() / n as f64,
                identical: gaps.iter().filter(|g| **g == 0.0).count() as f64 / n as f64,
            }
        })
        .collect()
}

pub fn tanaka_coalescence_experiment(f: &FSpec, cfg: &CoalescenceConfig) -> Result<CoalescenceReport> {
    f.validate()?;
    if cfg.pairs == 0 || cfg.dts.is_empty() || cfg.dts.iter().any(|d| !(*d > 0.0 && *d <= cfg.horizon)) {
        return Err(invalid("need pairs > 0 and time steps in (0, horizon]"));
    }
    for (name, v) in [("z0", cfg.z0), ("m_scale", cfg.m_scale), ("n_scale", cfg.n_scale), ("drift", cfg.drift)] {
        if !v.is_finite() {
            return Err(invalid(format!("{name} must be finite")));
        }
    }
    let seed = SeedSpec::new(cfg.seed);
    let contrast_cfg = CoalescenceConfig { m_scale: 1.0, n_scale: 0.0, drift: 0.0, ..cfg.clone() };
    Ok(CoalescenceReport {
        label: "illustrative".into(),
        f: f.clone(),
        config: cfg.clone(),
        rows: rows(f, cfg, seed.child(0)),
        contrast: rows(f, &contrast_cfg, seed.child(1)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors() {
        let pc = FSpec::PiecewiseConstant { breaks: vec![0.0, 1.0], values: vec![-1.0, 2.0, 2.0] };
        assert_eq!(pc.eval(0.0), -1.0);
        assert_eq!(pc.eval(0.5), 2.0);
        assert_eq!(pc.jumps(), vec![0.0]);
        let pl = FSpec::PiecewiseLinear { knots: vec![0.0, 2.0], values: vec![0.0, 1.0], left_slope: 0.0, right_slope: 0.0 };
        assert_eq!(pl.eval(1.0), 0.5);
        assert_eq!(pl.eval(-3.0), 0.0);
        assert_eq!(pl.eval(5.0), 1.0);
        assert_eq!(FSpec::Sign.eval(0.0), -1.0);
    }

    #[test]
    fn rejects_unbounded_variation() {
        let pl = FSpec::PiecewiseLinear { knots: vec![0.0], values: vec![0.0], left_slope: 0.0, right_slope: 1.0 };
        assert!(matches!(pl.validate(), Err(crate::Error::InvalidArgument(_))));
        let bad = FSpec::PiecewiseConstant { breaks: vec![1.0, 0.0], values: vec![0.0; 3] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn constant_coefficient_gives_identical_solutions() {
        let cfg = CoalescenceConfig { pairs: 20, dts: vec![1e-2, 1e-3], ..Default::default() };
        let r = tanaka_coalescence_experiment(&FSpec::Constant { value: 0.7 }, &cfg).unwrap();
        assert!(r.rows.iter().chain(&r.contrast).all(|row| row.median_sup == 0.0 && row.identical == 1.0));
        assert_eq!(r.label, "illustrative");
    }

    #[test]
    fn perturbed_gap_stays_small_while_plain_tanaka_splits() {
        let cfg = CoalescenceConfig { pairs: 400, dts: vec![1.6e-2, 4e-3, 1e-3, 2.5e-4], ..Default::default() };
        let r = tanaka_coalescence_experiment(&FSpec::Sign, &cfg).unwrap();
        let m: Vec<f64> = r.rows.iter().map(|x| x.median_sup).collect();
        let c: Vec<f64> = r.contrast.iter().map(|x| x.median_sup).collect();
        assert!(m.iter().all(|v| *v < 0.1), "{m:?}");
        assert!(c[3] > c[0] && c[3] > 0.5, "{c:?}");
        assert!(c[3] > 10.0 * m[3]);
    }
}
