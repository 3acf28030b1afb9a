//! Noise-decay schedules and their asymptotic `δ` limits.
//!
//! Fixed schedules pick one noise level per dataset size `n`:
//!
//! ```text
//! v(n) = M(b−a) / (2η·log(n/C1 + C2))
//! σ(n) = M·D_K  / (2η·sqrt(W(n²/(2πC1²) + C2)))
//! ```
//!
//! With these, the shuffled bound tends to `δ*` at rate `O(1/n)` (Laplace)
//! or `O(1/log n)` (Gaussian). Online schedules replace `n` by `j^α` for
//! the `j`-th update.

use super::{ab_constants, check_epsilon, shuffled_delta, Geometry, NoiseKind, NoiseModel, Schedule};
use crate::error::{PrivacyError, Result};
use crate::special::{contraction_m, lambert_w0, LossProfile};

fn laplace_scale_at(log_argument: f64, profile: &LossProfile, geom: &Geometry) -> Result<f64> {
    geom.expect(NoiseKind::Laplace)?;
    if log_argument.is_nan() || log_argument <= 1.0 {
        return Err(PrivacyError::domain(
            "laplace schedule",
            format!("log argument must exceed 1, got {log_argument}"),
        ));
    }
    let m = contraction_m(profile)?;
    let v = m * geom.extent() / (2.0 * profile.learning_rate * log_argument.ln());
    positive_scale("laplace schedule", v)
}

fn gaussian_scale_at(w_argument: f64, profile: &LossProfile, geom: &Geometry) -> Result<f64> {
    geom.expect(NoiseKind::Gaussian)?;
    if w_argument.is_nan() || w_argument <= 0.0 {
        return Err(PrivacyError::domain(
            "gaussian schedule",
            format!("Lambert W argument must be > 0, got {w_argument}"),
        ));
    }
    let m = contraction_m(profile)?;
    let w = lambert_w0(w_argument)?;
    let sigma = m * geom.extent() / (2.0 * profile.learning_rate * w.sqrt());
    positive_scale("gaussian schedule", sigma)
}

fn positive_scale(what: &'static str, scale: f64) -> Result<f64> {
    if scale.is_finite() && scale > 0.0 {
        Ok(scale)
    } else {
        Err(PrivacyError::domain(what, format!("calibrated scale {scale} is not positive and finite")))
    }
}

/// Laplace scale `v(n)` of the fixed schedule.
pub fn fixed_laplace_scale(n: u64, sched: &Schedule, profile: &LossProfile, geom: &Geometry) -> Result<f64> {
    sched.validate()?;
    sched.expect_fixed()?;
    laplace_scale_at(n as f64 / sched.c1 + sched.c2, profile, geom)
}

/// Gaussian standard deviation `σ(n)` of the fixed schedule.
pub fn fixed_gaussian_scale(n: u64, sched: &Schedule, profile: &LossProfile, geom: &Geometry) -> Result<f64> {
    sched.validate()?;
    sched.expect_fixed()?;
    let n = n as f64;
    gaussian_scale_at(n * n / (2.0 * sched.c1 * sched.c1 * std::f64::consts::PI) + sched.c2, profile, geom)
}

/// Fixed-schedule scale for either noise kind.
pub fn fixed_scale(n: u64, sched: &Schedule, profile: &LossProfile, geom: &Geometry, kind: NoiseKind) -> Result<f64> {
    match kind {
        NoiseKind::Laplace => fixed_laplace_scale(n, sched, profile, geom),
        NoiseKind::Gaussian => fixed_gaussian_scale(n, sched, profile, geom),
    }
}

fn check_c1(c1: f64) -> Result<()> {
    if c1.is_finite() && c1 > 0.0 {
        Ok(())
    } else {
        Err(PrivacyError::domain("delta_star", format!("C1 must be finite and > 0, got {c1}")))
    }
}

/// `δ* = (1 − e^{−C1·e^{ε/2}})/(C1·e^{ε/2})`, the large-`n` limit under `v(n)`.
pub fn delta_star_fixed_laplace(epsilon: f64, c1: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_c1(c1)?;
    let x = c1 * (0.5 * epsilon).exp();
    Ok((-(-x).exp_m1() / x).clamp(0.0, 1.0))
}

/// `δ* = (1 − e^{−2C1·e^{ε/2}})/(2C1·e^{ε/2})`, the limit under `σ(n)`.
pub fn delta_star_fixed_gaussian(epsilon: f64, c1: f64) -> Result<f64> {
    check_c1(c1)?;
    delta_star_fixed_laplace(epsilon, 2.0 * c1)
}

/// Shuffled `δ` at size `n` with the noise calibrated by the fixed schedule.
pub fn shuffled_delta_fixed_noise(
    n: u64,
    epsilon: f64,
    sched: &Schedule,
    profile: &LossProfile,
    geom: &Geometry,
    kind: NoiseKind,
) -> Result<f64> {
    let scale = fixed_scale(n, sched, profile, geom, kind)?;
    let consts = ab_constants(&NoiseModel::new(kind, scale)?, profile, geom, epsilon)?;
    shuffled_delta(&consts, n)
}

/// Scale `v_j` or `σ_j` used for update `j` of an online schedule.
pub fn online_scale(j: u64, sched: &Schedule, profile: &LossProfile, geom: &Geometry, kind: NoiseKind) -> Result<f64> {
    sched.validate()?;
    let alpha = sched.alpha()?;
    if j == 0 {
        return Err(PrivacyError::IndexOutOfRange { index: 0, n: u64::MAX });
    }
    let ln_j = (j as f64).ln();
    match kind {
        NoiseKind::Laplace => laplace_scale_at((alpha * ln_j).exp() / sched.c1 + sched.c2, profile, geom),
        NoiseKind::Gaussian => gaussian_scale_at(
            (2.0 * alpha * ln_j).exp() / (2.0 * std::f64::consts::PI * sched.c1 * sched.c1) + sched.c2,
            profile,
            geom,
        ),
    }
}
