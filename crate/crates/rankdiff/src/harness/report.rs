use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Kind of statistic behind a report line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GofKind {
    Ks,
    Chi2,
    MeanCi,
    /// Numerical check without sampling noise (quadrature, exact identities).
    Deterministic,
}

impl GofKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GofKind::Ks => "ks",
            GofKind::Chi2 => "chi2",
            GofKind::MeanCi => "mean_ci",
            GofKind::Deterministic => "deterministic",
        }
    }
}

/// Whether the statistic must stay below or above the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub name: String,
    pub kind: GofKind,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub n: usize,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl GofReport {
    /// Passes iff `statistic <= tolerance`.
    pub fn upper(name: impl Into<String>, kind: GofKind, statistic: f64, tolerance: f64, n: usize) -> Self {
        Self {
            name: name.into(),
            kind,
            statistic,
            p_value: None,
            n,
            tolerance,
            bound: Bound::Upper,
            pass: statistic <= tolerance,
        }
    }

    /// Passes iff `statistic >= tolerance`.
    pub fn lower(name: impl Into<String>, kind: GofKind, statistic: f64, tolerance: f64, n: usize) -> Self {
        Self {
            name: name.into(),
            kind,
            statistic,
            p_value: None,
            n,
            tolerance,
            bound: Bound::Lower,
            pass: statistic >= tolerance,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p_value = Some(p);
        self
    }

    /// A report for a check that could not be run.
    pub fn errored(name: impl Into<String>, err: &crate::Error) -> Self {
        Self {
            name: format!("{} [error: {err}]", name.into()),
            kind: GofKind::Deterministic,
            statistic: f64::NAN,
            p_value: None,
            n: 0,
            tolerance: 0.0,
            bound: Bound::Upper,
            pass: false,
        }
    }
}

/// Significance level of every Monte Carlo test in the suite.
pub const ALPHA: f64 = 1e-3;

/// Asymptotic Kolmogorov quantile at level [`ALPHA`].
pub const KS_CRIT: f64 = 1.949_6;

/// One-sample KS tolerance: the stated distance or the size-scaled critical
/// value, whichever is larger.
pub fn ks_tolerance(stated: f64, n: usize) -> f64 {
    stated.max(KS_CRIT / (n as f64).sqrt())
}

pub fn ks2_tolerance(stated: f64, n1: usize, n2: usize) -> f64 {
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    stated.max(KS_CRIT / ne.sqrt())
}

/// Upper [`ALPHA`] quantile of the chi-square law.
pub fn chi2_critical(df: f64) -> f64 {
    if df <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(df).expect("df > 0").inverse_cdf(1.0 - ALPHA)
}
