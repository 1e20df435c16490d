//! Model constants, initial states and the global sign convention.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on `rho^2 + sigma^2 = 1`.
pub const NORM_TOL: f64 = 1e-12;

/// Signum with the convention `sign(0) = -1`.
pub fn sign(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(invalid(format!("sign of non-finite value {x}")));
    }
    Ok(sgn(x))
}

/// Unchecked variant of [`sign`] for inner loops.
#[inline(always)]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Rates `g, h`, volatilities `rho, sigma` and the derived constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    g: f64,
    h: f64,
    rho: f64,
    sigma: f64,
    lambda: f64,
    nu: f64,
    gamma: f64,
    mixing_delta: f64,
    mu: f64,
}

impl ModelParams {
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    /// `g + h`
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    /// `g - h`
    pub fn nu(&self) -> f64 {
        self.nu
    }
    /// `rho^2 - sigma^2`
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    /// `2 rho sigma`
    pub fn mixing_delta(&self) -> f64 {
        self.mixing_delta
    }
    /// `g rho^2 - h sigma^2`
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_isotropic(&self) -> bool {
        self.gamma.abs() <= NORM_TOL
    }

    /// `sigma = 0, rho = 1`.
    pub fn is_degenerate(&self) -> bool {
        self.sigma == 0.0
    }
}

/// Validate raw inputs and populate the derived constants.
pub fn validate_params(g: f64, h: f64, rho: f64, sigma: f64) -> Result<ModelParams> {
    build(g, h, rho, sigma, false)
}

/// As [`validate_params`], but rescales `(rho, sigma)` onto the unit circle
/// instead of rejecting a normalization violation.
pub fn validate_params_renormalized(g: f64, h: f64, rho: f64, sigma: f64) -> Result<ModelParams> {
    build(g, h, rho, sigma, true)
}

fn build(g: f64, h: f64, rho: f64, sigma: f64, renormalize: bool) -> Result<ModelParams> {
    for (name, v) in [("g", g), ("h", h), ("rho", rho), ("sigma", sigma)] {
        if !v.is_finite() {
            return Err(Error::Validation(format!("{name} must be finite, got {v}")));
        }
    }
    if g < 0.0 || h < 0.0 {
        return Err(Error::Validation(format!("g>=0 and h>=0 violated (g={g}, h={h})")));
    }
    if g + h <= 0.0 {
        return Err(Error::Validation("g+h>0 violated".into()));
    }
    if rho < 0.0 || sigma < 0.0 {
        return Err(Error::Validation(format!(
            "rho>=0 and sigma>=0 violated (rho={rho}, sigma={sigma})"
        )));
    }
    let (rho, sigma) = if renormalize {
        let n = rho.hypot(sigma);
        if n == 0.0 {
            return Err(Error::Validation("rho and sigma are both zero".into()));
        }
        (rho / n, sigma / n)
    } else {
        (rho, sigma)
    };
    let norm = rho * rho + sigma * sigma;
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Validation(format!(
            "rho^2+sigma^2=1 violated (got {norm:.15})"
        )));
    }
    let gamma = rho * rho - sigma * sigma;
    let mixing_delta = 2.0 * rho * sigma;
    Ok(ModelParams {
        g,
        h,
        rho,
        sigma,
        lambda: g + h,
        nu: g - h,
        gamma,
        mixing_delta,
        mu: g * rho * rho - h * sigma * sigma,
    })
}

#[derive(Deserialize)]
struct RawParams {
    g: f64,
    h: f64,
    rho: f64,
    sigma: f64,
}

impl<'de> Deserialize<'de> for ModelParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawParams::deserialize(d)?;
        validate_params(raw.g, raw.h, raw.rho, raw.sigma).map_err(serde::de::Error::custom)
    }
}

/// Initial positions of the two particles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub x1: f64,
    pub x2: f64,
}

impl InitialState {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }
    pub fn y(&self) -> f64 {
        self.x1 - self.x2
    }
    pub fn z(&self) -> f64 {
        self.x1 + self.x2
    }
    pub fn r1(&self) -> f64 {
        self.x1.max(self.x2)
    }
    pub fn r2(&self) -> f64 {
        self.x1.min(self.x2)
    }
    /// Labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x1: self.x2,
            x2: self.x1,
        }
    }
}
