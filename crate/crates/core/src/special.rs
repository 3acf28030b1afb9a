//! Scalar building blocks: the Gaussian tail `Q`, the hockey-stick kernel
//! `θ_γ(r)`, the principal branch of Lambert W, and the contraction
//! constant `M` of a loss profile.
//!
//! `θ_γ(r)` is the `E_γ` divergence between `N(0, 1)` and `N(r, 1)`:
//!
//! ```text
//! θ_γ(r) = Q(log γ / r − r/2) − γ·Q(log γ / r + r/2)
//! ```
//!
//! Everything here is pure; [`divergence_oracle`] integrates the densities
//! directly and exists so tests can check `θ` against an independent route.

use std::f64::consts::{E, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{PrivacyError, Result};
use crate::quadrature::{self, Tolerance};

/// ln √(2π)
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Above this point `Q` is evaluated through the Mills-ratio continued
/// fraction instead of `erfc`, whose result heads into subnormals.
const TAIL_SWITCH: f64 = 30.0;

/// Roundoff beyond `[0, 1]` larger than this is reported as a diagnostic.
pub const CLAMP_REPORT_THRESHOLD: f64 = 1e-12;

/// Upper tail of the standard normal, `Q(t) = 1 − Φ(t)`.
///
/// Keeps full relative accuracy in the upper tail until the result
/// underflows (near `t ≈ 38.5`).
pub fn q_function(t: f64) -> f64 {
    if t < TAIL_SWITCH {
        0.5 * libm::erfc(t / SQRT_2)
    } else {
        log_q(t).exp()
    }
}

/// `ln Q(t)`, finite for every finite `t`.
pub fn log_q(t: f64) -> f64 {
    if t < 0.0 {
        (-q_function(-t)).ln_1p()
    } else if t < TAIL_SWITCH {
        (0.5 * libm::erfc(t / SQRT_2)).ln()
    } else {
        -0.5 * t * t - LN_SQRT_2PI + mills_ratio(t).ln()
    }
}

/// `Q(t)/φ(t)` by backward evaluation of the Laplace continued fraction
/// `1/(t + 1/(t + 2/(t + 3/(t + …))))`; only used for large `t`.
fn mills_ratio(t: f64) -> f64 {
    let mut acc = t;
    for k in (1..=60).rev() {
        acc = t + k as f64 / acc;
    }
    1.0 / acc
}

/// Validated arguments of `θ_γ(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaArgs {
    pub gamma: f64,
    pub r: f64,
}

impl ThetaArgs {
    pub fn new(gamma: f64, r: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 1.0 {
            return Err(PrivacyError::domain("theta", format!("gamma must be finite and >= 1, got {gamma}")));
        }
        if !r.is_finite() || r <= 0.0 {
            return Err(PrivacyError::domain("theta", format!("r must be finite and > 0, got {r}")));
        }
        Ok(ThetaArgs { gamma, r })
    }

    fn split(self) -> (f64, f64, f64) {
        let lg = self.gamma.ln();
        let mid = lg / self.r;
        (lg, mid - 0.5 * self.r, mid + 0.5 * self.r)
    }

    /// `γ·Q(z)` formed in log space so that huge `γ` never overflows.
    fn scaled_tail(lg: f64, z: f64) -> f64 {
        (lg + log_q(z)).exp()
    }
}

/// `θ_γ(r)` before clamping to `[0, 1]`.
pub fn theta_unclamped(gamma: f64, r: f64) -> Result<f64> {
    let args = ThetaArgs::new(gamma, r)?;
    let (lg, z1, z2) = args.split();
    let tail = ThetaArgs::scaled_tail(lg, z2);
    let value = if z1 >= 0.0 {
        q_function(z1) - tail
    } else if z2 <= 1.0 {
        // Both arguments near zero: Q(z1) − Q(z2) through erf keeps the
        // relative accuracy of small θ.
        0.5 * (libm::erf(z2 / SQRT_2) - libm::erf(z1 / SQRT_2)) - lg.exp_m1() * q_function(z2)
    } else {
        1.0 - (q_function(-z1) + tail)
    };
    Ok(value)
}

/// `θ_γ(r)`, clamped to `[0, 1]` to absorb last-ulp noise.
pub fn theta(gamma: f64, r: f64) -> Result<f64> {
    Ok(theta_unclamped(gamma, r)?.clamp(0.0, 1.0))
}

/// `1 − θ_γ(r)` without cancellation when `θ` is close to one.
pub fn theta_deficit(gamma: f64, r: f64) -> Result<f64> {
    let args = ThetaArgs::new(gamma, r)?;
    let (lg, z1, z2) = args.split();
    let tail = ThetaArgs::scaled_tail(lg, z2);
    let deficit = if z1 < 0.0 {
        q_function(-z1) + tail
    } else {
        1.0 - q_function(z1) + tail
    };
    Ok(deficit.clamp(0.0, 1.0))
}

/// `ln θ_γ(r)`; `-inf` when `θ` is zero.
pub fn ln_theta(gamma: f64, r: f64) -> Result<f64> {
    let deficit = theta_deficit(gamma, r)?;
    if deficit < 0.5 {
        Ok((-deficit).ln_1p())
    } else {
        Ok(theta(gamma, r)?.ln())
    }
}

/// Leading-order small-σ expansion of `θ_{e^ε}(c/σ)`:
/// `1 − e^{ε/2}·e^{−c²/(8σ²)}·(4σ/c)/√(2π)`.
///
/// Only meant as a comparator for the exact kernel.
pub fn theta_asymptotic(epsilon: f64, c: f64, sigma: f64) -> Result<f64> {
    if !epsilon.is_finite() {
        return Err(PrivacyError::domain("theta_asymptotic", "epsilon must be finite"));
    }
    if !(c > 0.0 && c.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(PrivacyError::domain("theta_asymptotic", "c and sigma must be finite and > 0"));
    }
    let log_deficit = 0.5 * epsilon - c * c / (8.0 * sigma * sigma) + (4.0 * sigma / c).ln() - LN_SQRT_2PI;
    Ok(1.0 - log_deficit.exp())
}

/// Hockey-stick divergence `∫ (p − γ·q)₊` between `N(0, σ²)` and
/// `N(shift, σ²)`, by adaptive quadrature of the densities.
///
/// The positive part is supported on one side of the crossing point
/// `x* = shift/2 − σ² log γ / shift`, so the integral is taken only up to
/// (or from) `x*`, never across the kink.
pub fn divergence_oracle(gamma: f64, shift: f64, sigma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma < 1.0 {
        return Err(PrivacyError::domain("divergence_oracle", "gamma must be finite and >= 1"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) || !shift.is_finite() {
        return Err(PrivacyError::domain("divergence_oracle", "sigma must be > 0 and shift finite"));
    }
    if shift == 0.0 {
        return Ok(0.0);
    }
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let two_var = 2.0 * sigma * sigma;
    let integrand = |x: f64| {
        let p = norm * (-x * x / two_var).exp();
        let q = norm * (-(x - shift) * (x - shift) / two_var).exp();
        p - gamma * q
    };

    let lo = shift.min(0.0) - 12.0 * sigma;
    let hi = shift.max(0.0) + 12.0 * sigma;
    let crossing = 0.5 * shift - sigma * sigma * gamma.ln() / shift;
    let (a, b) = if shift > 0.0 {
        (lo, crossing.min(hi))
    } else {
        (crossing.max(lo), hi)
    };
    if a >= b {
        return Ok(0.0);
    }
    let tol = Tolerance {
        absolute: 1e-10,
        relative: 0.0,
        max_subdivisions: 4000,
    };
    let result = quadrature::integrate(integrand, a, b, tol)?;
    Ok(result.value.clamp(0.0, 1.0))
}

const LAMBERT_MAX_ITER: usize = 50;

/// Principal branch `W₀(x)` for `x ≥ 0`, by Halley iteration.
///
/// The residual `|W·e^W − x|` is held to `1e-12·max(1, x)`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(PrivacyError::domain("lambert_w0", format!("argument must be finite and >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < E {
        x.ln_1p()
    } else {
        let l = x.ln();
        l - l.ln()
    };
    for _ in 0..LAMBERT_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let residual = (w * w.exp() - x).abs();
    if residual <= 1e-12 * x.max(1.0) {
        Ok(w)
    } else {
        Err(PrivacyError::NonConvergence {
            what: "lambert_w0",
            iterations: LAMBERT_MAX_ITER,
        })
    }
}

/// `W₀(e^{ln_x})`, usable when `e^{ln_x}` overflows.
pub fn lambert_w0_of_exp(ln_x: f64) -> Result<f64> {
    if ln_x.is_nan() {
        return Err(PrivacyError::domain("lambert_w0_of_exp", "NaN argument"));
    }
    if ln_x < 700.0 {
        return lambert_w0(ln_x.exp());
    }
    if ln_x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    // Newton on w + ln w = ln_x.
    let mut w = ln_x - ln_x.ln();
    for _ in 0..LAMBERT_MAX_ITER {
        let step = (w + w.ln() - ln_x) / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            return Ok(w);
        }
    }
    Err(PrivacyError::NonConvergence {
        what: "lambert_w0_of_exp",
        iterations: LAMBERT_MAX_ITER,
    })
}

/// Loss-function constants and learning rate of a PNSGD run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossProfile {
    /// Lipschitz constant `L` of the loss.
    #[serde(rename = "L")]
    pub lipschitz: f64,
    /// Lipschitz constant `β` of the gradient.
    #[serde(rename = "beta")]
    pub smoothness: f64,
    /// Strong-convexity modulus `ρ`.
    #[serde(rename = "rho")]
    pub strong_convexity: f64,
    /// Learning rate `η`.
    #[serde(rename = "eta")]
    pub learning_rate: f64,
}

impl LossProfile {
    pub fn new(lipschitz: f64, smoothness: f64, strong_convexity: f64, learning_rate: f64) -> Result<Self> {
        let profile = LossProfile {
            lipschitz,
            smoothness,
            strong_convexity,
            learning_rate,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.lipschitz) {
            return Err(PrivacyError::domain("LossProfile", "L must be finite and > 0"));
        }
        if !positive(self.smoothness) {
            return Err(PrivacyError::domain("LossProfile", "beta must be finite and > 0"));
        }
        if !(self.strong_convexity.is_finite() && self.strong_convexity >= 0.0) {
            return Err(PrivacyError::domain("LossProfile", "rho must be finite and >= 0"));
        }
        if !positive(self.learning_rate) {
            return Err(PrivacyError::domain("LossProfile", "eta must be finite and > 0"));
        }
        contraction_m(self).map(|_| ())
    }
}

/// `M = sqrt(1 − 2ηβρ/(β + ρ))`.
pub fn contraction_m(profile: &LossProfile) -> Result<f64> {
    let LossProfile {
        smoothness: beta,
        strong_convexity: rho,
        learning_rate: eta,
        ..
    } = *profile;
    let correction = if rho == 0.0 { 0.0 } else { 2.0 * eta * beta * rho / (beta + rho) };
    let radicand = 1.0 - correction;
    if radicand.is_nan() || radicand < 0.0 {
        return Err(PrivacyError::domain(
            "contraction_m",
            format!("2·eta·beta·rho/(beta+rho) = {correction} exceeds 1"),
        ));
    }
    Ok(radicand.sqrt())
}
