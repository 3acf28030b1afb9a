use super::{check_epsilon, check_index, BoundConstants, Geometry, NoiseKind, NoiseModel};
use crate::error::Result;
use crate::special::{self, contraction_m, LossProfile, CLAMP_REPORT_THRESHOLD};

/// Below this gap `1 − B` the closed form `(1 − B^k)/(1 − B)` is replaced.
const NEAR_ONE: f64 = 1e-9;
const EXPLICIT_SUM_LIMIT: u64 = 4096;

/// `θ_γ(r)` extended to the limits `r = 0` and `r = ∞`.
fn kernel(gamma: f64, r: f64) -> Result<(f64, bool)> {
    if r == 0.0 {
        return Ok((0.0, false));
    }
    if r == f64::INFINITY {
        return Ok((1.0, false));
    }
    let raw = special::theta_unclamped(gamma, r)?;
    let clamped = !(-CLAMP_REPORT_THRESHOLD..=1.0 + CLAMP_REPORT_THRESHOLD).contains(&raw);
    Ok((raw.clamp(0.0, 1.0), clamped))
}

/// `(1 − e^x)₊`
fn one_minus_exp_pos(x: f64) -> f64 {
    (-x.exp_m1()).max(0.0)
}

/// `ln (1 − e^x)` for `x < 0`; `-inf` otherwise.
fn ln_one_minus_exp(x: f64) -> f64 {
    if x >= 0.0 {
        f64::NEG_INFINITY
    } else if x < -std::f64::consts::LN_2 {
        (-x.exp()).ln_1p()
    } else {
        (-x.exp_m1()).ln()
    }
}

/// Normalized distances fed to `θ` (Gaussian) or exponents of the Laplace
/// terms, for `A` and `B` respectively.
fn arguments(noise: &NoiseModel, profile: &LossProfile, geom: &Geometry, epsilon: f64) -> Result<(f64, f64)> {
    check_epsilon(epsilon)?;
    profile.validate()?;
    geom.expect(noise.kind)?;
    let noise = NoiseModel::new(noise.kind, noise.scale)?;
    let m = contraction_m(profile)?;
    let eta = profile.learning_rate;
    let l = profile.lipschitz;
    Ok(match noise.kind {
        NoiseKind::Gaussian => (2.0 * l / noise.scale, m * geom.extent() / (eta * noise.scale)),
        NoiseKind::Laplace => (
            0.5 * epsilon - l / noise.scale,
            0.5 * epsilon - m * geom.extent() / (2.0 * eta * noise.scale),
        ),
    })
}

/// `A` and `B` for a single noise level.
///
/// Gaussian: `A = θ_{e^ε}(2L/σ)`, `B = θ_{e^ε}(M·D_K/(ησ))`.
/// Laplace: `A = (1 − e^{ε/2 − L/v})₊`, `B = (1 − e^{ε/2 − M(b−a)/(2ηv)})₊`.
pub fn ab_constants(noise: &NoiseModel, profile: &LossProfile, geom: &Geometry, epsilon: f64) -> Result<BoundConstants> {
    let (x_a, x_b) = arguments(noise, profile, geom, epsilon)?;
    match noise.kind {
        NoiseKind::Gaussian => {
            let gamma = epsilon.exp();
            let (a, ca) = kernel(gamma, x_a)?;
            let (b, cb) = kernel(gamma, x_b)?;
            Ok(BoundConstants { a, b, clamped: ca || cb })
        }
        NoiseKind::Laplace => Ok(BoundConstants {
            a: one_minus_exp_pos(x_a),
            b: one_minus_exp_pos(x_b),
            clamped: false,
        }),
    }
}

/// `ln B` evaluated without forming `B` first, so factors within `1e-16`
/// of one keep their relative accuracy in long products.
pub(crate) fn ln_contraction_factor(noise: &NoiseModel, profile: &LossProfile, geom: &Geometry, epsilon: f64) -> Result<f64> {
    let (_, x_b) = arguments(noise, profile, geom, epsilon)?;
    match noise.kind {
        NoiseKind::Gaussian => {
            if x_b == 0.0 {
                Ok(f64::NEG_INFINITY)
            } else if x_b == f64::INFINITY {
                Ok(0.0)
            } else {
                special::ln_theta(epsilon.exp(), x_b)
            }
        }
        NoiseKind::Laplace => Ok(ln_one_minus_exp(x_b)),
    }
}

/// `Σ_{j=0}^{k−1} B^j`, i.e. `(1 − B^k)/(1 − B)` with the `B → 1` limit
/// handled explicitly.
pub fn geometric_sum(b: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if b == 0.0 {
        return 1.0;
    }
    let gap = 1.0 - b;
    if gap == 0.0 {
        return k as f64;
    }
    if gap < NEAR_ONE && k <= EXPLICIT_SUM_LIMIT {
        let mut term = 1.0;
        let mut total = 0.0;
        for _ in 0..k {
            total += term;
            term *= b;
        }
        return total;
    }
    let ln_b = if gap < 0.5 { (-gap).ln_1p() } else { b.ln() };
    -(k as f64 * ln_b).exp_m1() / gap
}

/// Per-index bound `A·B^{n−i}`.
pub fn per_index_delta(consts: &BoundConstants, n: u64, i: u64) -> Result<f64> {
    check_index(n, i)?;
    let BoundConstants { a, b, .. } = *consts;
    let k = n - i;
    if a == 0.0 || (b == 0.0 && k > 0) {
        return Ok(0.0);
    }
    if k == 0 {
        return Ok(a.clamp(0.0, 1.0));
    }
    Ok((a.ln() + k as f64 * b.ln()).exp().clamp(0.0, 1.0))
}

/// Randomly-stopped bound `A·(1 − B^{n−i+1})/(n(1 − B))`.
pub fn randomly_stopped_delta(consts: &BoundConstants, n: u64, i: u64) -> Result<f64> {
    check_index(n, i)?;
    Ok((consts.a * geometric_sum(consts.b, n - i + 1) / n as f64).clamp(0.0, 1.0))
}

/// Shuffled bound `A·(1 − B^n)/(n(1 − B))`, independent of the differing index.
pub fn shuffled_delta(consts: &BoundConstants, n: u64) -> Result<f64> {
    check_index(n, 1)?;
    Ok((consts.a * geometric_sum(consts.b, n) / n as f64).clamp(0.0, 1.0))
}
