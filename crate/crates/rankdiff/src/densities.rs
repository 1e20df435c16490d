//! Closed-form laws of the planar system at a fixed time: joint densities of
//! `(X1(t), X2(t))` with their singular parts, rank densities and the joint
//! law of `(Y+, Y-, 2L, Q)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bangbang::{atom_density_l, atom_mass_l, density_l, triple_density_l, Side};
use crate::error::{invalid, Result};
use crate::model::{InitialState, ModelParams};
use crate::normal::{self, pdf_t, SQRT_2PI};

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// Density of `(X1(t), X2(t))` when `rho = sigma`.
pub fn joint_density_isotropic(p: &ModelParams, s0: InitialState, t: f64, xi1: f64, xi2: f64) -> Result<f64> {
    if !p.is_isotropic() {
        return Err(invalid("joint_density_isotropic needs rho = sigma"));
    }
    check_t(t)?;
    Ok(2.0 * density_l(p.lambda(), t, s0.y(), xi1 - xi2) * pdf_t(xi1 + xi2 - s0.z() - p.nu() * t, t))
}

fn check_degenerate(p: &ModelParams) -> Result<()> {
    if p.sigma() != 0.0 {
        return Err(invalid(format!("degenerate laws need sigma = 0, got {}", p.sigma())));
    }
    Ok(())
}

// Wedge {xi1 > xi2, xi2 < c} for y >= 0, c = x2 + g t, extended continuously
// to the diagonal.
fn wedge_upper(p: &ModelParams, s0: InitialState, t: f64, xi1: f64, xi2: f64) -> f64 {
    let c = s0.x2 + p.g() * t;
    if !(xi1 >= xi2 && xi2 < c) {
        return 0.0;
    }
    2.0 * triple_density_l(p.lambda(), s0.y(), t, xi1 - xi2, 2.0 * (c - xi2))
}

/// Absolutely continuous part of the law of `(X1(t), X2(t))` when `sigma = 0`.
///
/// For `x1 >= x2` the support is the pair of wedges
/// `{xi1 > xi2, xi2 < x2 + g t}` and `{xi1 < xi2, xi1 < x2 + g t}`; the two
/// formulas agree up to exchanging `xi1` and `xi2`. On the front itself the
/// value is 0 (the density is reported as the limit from outside the wedge).
/// For `x1 < x2` the particles are relabelled.
pub fn joint_density_degenerate(p: &ModelParams, s0: InitialState, t: f64, xi1: f64, xi2: f64) -> Result<f64> {
    check_degenerate(p)?;
    check_t(t)?;
    if s0.y() < 0.0 {
        return joint_density_degenerate(p, s0.swapped(), t, xi2, xi1);
    }
    Ok(if xi1 > xi2 {
        wedge_upper(p, s0, t, xi1, xi2)
    } else {
        wedge_upper(p, s0, t, xi2, xi1)
    })
}

/// Which coordinate is pinned on a singular line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineAxis {
    /// `xi2 = level`, free coordinate `xi1`.
    Xi2Fixed,
    /// `xi1 = level`, free coordinate `xi2`.
    Xi1Fixed,
    /// Lower rank `= level`, free coordinate the upper rank.
    Rank2Fixed,
}

/// Singular component supported on a half line: the free coordinate ranges
/// over `(level, inf)` with density `line_density(u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomLine {
    pub axis: LineAxis,
    pub level: f64,
    lambda: f64,
    y_abs: f64,
    t: f64,
}

impl AtomLine {
    /// Density along the line at free coordinate `u`; 0 for `u <= level`.
    pub fn line_density(&self, u: f64) -> f64 {
        atom_density_l(self.lambda, self.y_abs, self.t, u - self.level)
    }

    pub fn mass(&self) -> f64 {
        atom_mass_l(self.lambda, self.y_abs, self.t)
    }
}

/// The singular line of the degenerate planar law: paths whose gap never
/// closed keep the laggard on `x_lag + g t`.
pub fn atom_line(p: &ModelParams, s0: InitialState, t: f64) -> Result<AtomLine> {
    check_degenerate(p)?;
    check_t(t)?;
    let (axis, level) = if s0.y() >= 0.0 {
        (LineAxis::Xi2Fixed, s0.x2 + p.g() * t)
    } else {
        (LineAxis::Xi1Fixed, s0.x1 + p.g() * t)
    };
    Ok(AtomLine { axis, level, lambda: p.lambda(), y_abs: s0.y().abs(), t })
}

/// Density along `xi2 = x2 + g t` at `xi1` (requires `x1 >= x2`).
pub fn atom_line_density(p: &ModelParams, s0: InitialState, t: f64, xi1: f64) -> Result<f64> {
    if s0.y() < 0.0 {
        return Err(invalid("atom_line_density needs x1 >= x2; use atom_line for the relabelled case"));
    }
    let line = atom_line(p, s0, t)?;
    if !(xi1 > line.level) {
        return Err(invalid(format!("xi1 must exceed the front {}, got {xi1}", line.level)));
    }
    Ok(line.line_density(xi1))
}

/// Continuous part of the law of `(R1(t), R2(t))` when `sigma = 0`.
pub fn rank_density_degenerate(p: &ModelParams, s0: InitialState, t: f64, rho1: f64, rho2: f64) -> Result<f64> {
    check_degenerate(p)?;
    check_t(t)?;
    if !(rho1 >= rho2) {
        return Err(invalid(format!("ranks need rho1 >= rho2, got ({rho1}, {rho2})")));
    }
    let s = InitialState::new(s0.r1(), s0.r2());
    Ok(2.0 * wedge_upper(p, s, t, rho1, rho2))
}

/// Singular part of the rank law, on `R2 = min(x1, x2) + g t`.
pub fn rank_atom_line(p: &ModelParams, s0: InitialState, t: f64) -> Result<AtomLine> {
    let mut line = atom_line(p, InitialState::new(s0.r1(), s0.r2()), t)?;
    line.axis = LineAxis::Rank2Fixed;
    Ok(line)
}

pub fn rank_atom_line_density(p: &ModelParams, s0: InitialState, t: f64, rho1: f64) -> Result<f64> {
    Ok(rank_atom_line(p, s0, t)?.line_density(rho1))
}

fn check_quad(y: f64, t: f64, a: f64) -> Result<()> {
    check_t(t)?;
    if !(y >= 0.0) {
        return Err(invalid(format!("needs y >= 0, got {y}")));
    }
    if !(a > 0.0) {
        return Err(invalid(format!("needs a > 0, got {a}")));
    }
    Ok(())
}

/// Density of `(Y^side(t) = a, 2L(t) = b, Q(t) = theta)` for `b > 0`.
pub fn quadrivariate_density(p: &ModelParams, y: f64, t: f64, a: f64, b: f64, theta: f64) -> Result<f64> {
    check_quad(y, t, a)?;
    if !(b > 0.0) {
        return Err(invalid(format!("needs b > 0, got {b}")));
    }
    Ok(triple_density_l(p.lambda(), y, t, a, b) * pdf_t(theta, t))
}

/// Density of `(Y^side(t) = a, L(t) = 0, Q(t) = theta)`; nonzero only on the
/// starting side.
pub fn quadrivariate_atom_density(p: &ModelParams, y: f64, t: f64, side: Side, a: f64, theta: f64) -> Result<f64> {
    check_quad(y, t, a)?;
    if side == Side::Minus {
        return Ok(0.0);
    }
    Ok(atom_density_l(p.lambda(), y, t, a) * pdf_t(theta, t))
}

/// Density of the centred displacement `(Psi1, Psi2)` with
/// `X_i(t) = x_i + mu t + Psi_i`, for `rho sigma > 0`.
///
/// With `Y = y + psi1 - psi2` and `Q = theta0 + (gamma/delta) 2L` the density
/// is `(2/delta) [int_0^inf f1(|Y|, b, theta(b)) db + 1{Y > 0} f2(|Y|, theta0)]`;
/// the `b`-integral is Gaussian and done in closed form.
pub fn psi_density(p: &ModelParams, y: f64, t: f64, psi1: f64, psi2: f64) -> Result<f64> {
    check_t(t)?;
    if !(p.rho() > 0.0 && p.sigma() > 0.0) {
        return Err(invalid("psi_density needs rho > 0 and sigma > 0"));
    }
    if y < 0.0 {
        return Ok(psi_core(p, -y, t, psi2, psi1));
    }
    Ok(psi_core(p, y, t, psi1, psi2))
}

fn psi_core(p: &ModelParams, y: f64, t: f64, psi1: f64, psi2: f64) -> f64 {
    let (lambda, gamma, delta) = (p.lambda(), p.gamma(), p.mixing_delta());
    let big_y = y + psi1 - psi2;
    let a = big_y.abs();
    let theta0 = (psi1 + psi2 - gamma * (a - y)) / delta;
    let kappa = gamma / delta;
    let c = a + y;
    let m = c - lambda * t;
    let k = kappa * theta0 + m;
    let b0 = -delta * delta * k;
    let s = delta * t.sqrt();
    let u = b0 / s;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * t * t);
    let cont = if u > 0.0 {
        let r = theta0 * theta0 + m * m - delta * delta * k * k;
        (-2.0 * lambda * a - r / (2.0 * t)).exp()
            * norm
            * s
            * ((c + b0) * SQRT_2PI * normal::cdf(u) + s * (-0.5 * u * u).exp())
    } else {
        (-2.0 * lambda * a - (theta0 * theta0 + m * m) / (2.0 * t)).exp() * norm * s * ((c + b0) * normal::mills(-u) + s)
    };
    let atom = if big_y > 0.0 {
        atom_density_l(lambda, y, t, a) * pdf_t(theta0, t)
    } else {
        0.0
    };
    2.0 / delta * (cont + atom)
}

/// Density of `(X1(t), X2(t))` for `rho sigma > 0`.
pub fn joint_density_general(p: &ModelParams, s0: InitialState, t: f64, xi1: f64, xi2: f64) -> Result<f64> {
    let shift = p.mu() * t;
    psi_density(p, s0.y(), t, xi1 - s0.x1 - shift, xi2 - s0.x2 - shift)
}

/// Continuous part of the law of `(X1(t), X2(t))` for any admissible model:
/// the isotropic, degenerate or general formula as appropriate.
pub fn joint_density(p: &ModelParams, s0: InitialState, t: f64, xi1: f64, xi2: f64) -> Result<f64> {
    if p.is_isotropic() {
        joint_density_isotropic(p, s0, t, xi1, xi2)
    } else if p.sigma() == 0.0 {
        joint_density_degenerate(p, s0, t, xi1, xi2)
    } else if p.rho() == 0.0 {
        Err(invalid("closed-form law not available for rho = 0"))
    } else {
        joint_density_general(p, s0, t, xi1, xi2)
    }
}

/// Singular part of the planar law, if any.
pub fn singular_part(p: &ModelParams, s0: InitialState, t: f64) -> Result<Option<AtomLine>> {
    if p.sigma() == 0.0 {
        Ok(Some(atom_line(p, s0, t)?))
    } else {
        Ok(None)
    }
}

/// Values of the continuous density on a rectangular grid, with the singular
/// line attached when present.
#[derive(Clone, Debug, Serialize)]
pub struct DensityGrid {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    /// `values[i][j]` at `(xi1[i], xi2[j])`.
    pub values: Vec<Vec<f64>>,
    pub atom: Option<AtomLine>,
}

impl DensityGrid {
    pub fn build(p: &ModelParams, s0: InitialState, t: f64, xi1: Vec<f64>, xi2: Vec<f64>) -> Result<Self> {
        for g in [&xi1, &xi2] {
            if g.is_empty() || g.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid("grid must be non-empty and strictly increasing"));
            }
        }
        let values = xi1
            .par_iter()
            .map(|&a| xi2.iter().map(|&b| joint_density(p, s0, t, a, b)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(DensityGrid { xi1, xi2, values, atom: singular_part(p, s0, t)? })
    }

    /// Trapezoid-rule mass of the continuous part over the grid.
    pub fn continuous_mass(&self) -> f64 {
        let w = |g: &[f64], i: usize| {
            let l = if i > 0 { g[i] - g[i - 1] } else { 0.0 };
            let r = if i + 1 < g.len() { g[i + 1] - g[i] } else { 0.0 };
            0.5 * (l + r)
        };
        let mut m = 0.0;
        for i in 0..self.xi1.len() {
            for j in 0..self.xi2.len() {
                m += w(&self.xi1, i) * w(&self.xi2, j) * self.values[i][j];
            }
        }
        m
    }

    pub fn atom_mass(&self) -> f64 {
        self.atom.map_or(0.0, |a| a.mass())
    }
}
