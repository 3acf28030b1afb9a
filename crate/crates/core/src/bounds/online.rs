//! Online PNSGD with per-update noise decay.
//!
//! For a differing index `i` the finite bound is `A_i·Π_{t=i+1}^{n} B_t`.
//! Its `n → ∞` limit is bracketed by replacing `Σ log B_t` with integrals
//! of the (increasing, negative) log-factor over `[i+1, ∞)` (upper bound)
//! and `[i, ∞)` (lower bound).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ab_constants, check_epsilon, check_index, ln_contraction_factor, online_scale, Geometry, NoiseKind, NoiseModel, Schedule};
use crate::error::{PrivacyError, Result};
use crate::quadrature::{self, Tolerance};
use crate::special::{lambert_w0_of_exp, ln_theta, LossProfile};

/// Relative size of the neglected tail beyond the truncation point.
const TAIL_FRACTION: f64 = 1e-12;
/// Upper limit of the log-domain integration variable `u = ln x`.
const MAX_LOG_X: f64 = 700.0;
/// Width (in `ln x`) of the first integration stage.
const FIRST_STAGE: f64 = 12.0;

fn a_i(i: u64, epsilon: f64, sched: &Schedule, profile: &LossProfile, geom: &Geometry, kind: NoiseKind) -> Result<f64> {
    let scale = online_scale(i, sched, profile, geom, kind)?;
    Ok(ab_constants(&NoiseModel::new(kind, scale)?, profile, geom, epsilon)?.a)
}

/// Finite-`n` bounds at each checkpoint `n` (ascending, all `≥ i`), from a
/// single pass over the product.
pub fn online_delta_path(
    checkpoints: &[u64],
    i: u64,
    epsilon: f64,
    sched: &Schedule,
    profile: &LossProfile,
    geom: &Geometry,
    kind: NoiseKind,
) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    sched.alpha()?;
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(PrivacyError::domain("online_delta_path", "checkpoints must be ascending"));
    }
    for &n in checkpoints {
        check_index(n, i)?;
    }
    let a = a_i(i, epsilon, sched, profile, geom, kind)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    if a == 0.0 {
        out.resize(checkpoints.len(), 0.0);
        return Ok(out);
    }
    let ln_factor = |t: u64| -> Result<f64> {
        let scale = online_scale(t, sched, profile, geom, kind)?;
        ln_contraction_factor(&NoiseModel::new(kind, scale)?, profile, geom, epsilon)
    };
    let mut total = Compensated::default();
    let mut t = i;
    for &n in checkpoints {
        if t < n && total.value() != f64::NEG_INFINITY {
            // Fixed chunk boundaries keep the result independent of thread count.
            let starts: Vec<u64> = (t + 1..=n).step_by(CHUNK as usize).collect();
            let parts: Vec<Compensated> = starts
                .into_par_iter()
                .map(|lo| {
                    let mut part = Compensated::default();
                    for s in lo..=(lo + CHUNK - 1).min(n) {
                        part.add(ln_factor(s)?);
                        if part.value() == f64::NEG_INFINITY {
                            break;
                        }
                    }
                    Ok(part)
                })
                .collect::<Result<_>>()?;
            for part in parts {
                total.add(part.sum);
                total.add(part.comp);
            }
            t = n;
        }
        out.push((a * total.value().exp()).clamp(0.0, 1.0));
    }
    Ok(out)
}

/// Terms per parallel chunk of the log-product.
const CHUNK: u64 = 1 << 16;

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, term: f64) {
        if term == f64::NEG_INFINITY || self.sum == f64::NEG_INFINITY {
            *self = Compensated {
                sum: f64::NEG_INFINITY,
                comp: 0.0,
            };
            return;
        }
        let next = self.sum + term;
        self.comp += if self.sum.abs() >= term.abs() {
            (self.sum - next) + term
        } else {
            (term - next) + self.sum
        };
        self.sum = next;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `A_i·Π_{t=i+1}^{n} B_t`.
pub fn online_delta_finite(
    n: u64,
    i: u64,
    epsilon: f64,
    sched: &Schedule,
    profile: &LossProfile,
    geom: &Geometry,
    kind: NoiseKind,
) -> Result<f64> {
    Ok(online_delta_path(&[n], i, epsilon, sched, profile, geom, kind)?[0])
}

/// Log of the limiting product factor at continuous position `x`.
struct LogFactor {
    kind: NoiseKind,
    gamma: f64,
    alpha: f64,
    /// `C1·e^{ε/2}` (Laplace), `ln(2πC1²)` (Gaussian).
    coeff: f64,
    c1c2: f64,
    c2: f64,
    w_cache: HashMap<u64, f64>,
}

impl LogFactor {
    fn new(epsilon: f64, sched: &Schedule, alpha: f64, kind: NoiseKind) -> Self {
        let coeff = match kind {
            NoiseKind::Laplace => sched.c1 * (0.5 * epsilon).exp(),
            NoiseKind::Gaussian => (2.0 * std::f64::consts::PI * sched.c1 * sched.c1).ln(),
        };
        LogFactor {
            kind,
            gamma: epsilon.exp(),
            alpha,
            coeff,
            c1c2: sched.c1 * sched.c2,
            c2: sched.c2,
            w_cache: HashMap::new(),
        }
    }

    /// `ln(1 − C1e^{ε/2}/(x^α + C1C2))` or `ln θ_{e^ε}(2·sqrt(W(x^{2α}/(2πC1²) + C2)))`.
    fn eval(&mut self, ln_x: f64) -> Result<f64> {
        match self.kind {
            NoiseKind::Laplace => {
                let ratio = self.coeff / ((self.alpha * ln_x).exp() + self.c1c2);
                if ratio >= 1.0 {
                    Ok(f64::NEG_INFINITY)
                } else {
                    Ok((-ratio).ln_1p())
                }
            }
            NoiseKind::Gaussian => {
                let la = 2.0 * self.alpha * ln_x - self.coeff;
                let key = la.to_bits();
                let w = match self.w_cache.get(&key) {
                    Some(&w) => w,
                    None => {
                        let ln_arg = if la > MAX_LOG_X {
                            la + (self.c2 * (-la).exp()).ln_1p()
                        } else {
                            (la.exp() + self.c2).ln()
                        };
                        let w = lambert_w0_of_exp(ln_arg)?;
                        self.w_cache.insert(key, w);
                        w
                    }
                };
                if w == f64::INFINITY {
                    return Ok(0.0);
                }
                ln_theta(self.gamma, 2.0 * w.sqrt())
            }
        }
    }

    /// Envelope constant `K` with `|g(x)| ≤ K·x^{−α}` for large `x`.
    fn envelope(&self, epsilon: f64, sched: &Schedule) -> f64 {
        let base = sched.c1 * (0.5 * epsilon).exp();
        match self.kind {
            NoiseKind::Laplace => 2.0 * base,
            // The Gaussian deficit is asymptotically 2·C1·e^{ε/2}·x^{−α}.
            NoiseKind::Gaussian => 4.0 * base,
        }
    }

    /// Leading-order coefficient of `−g(x)·x^α`.
    fn leading(&self, epsilon: f64, sched: &Schedule) -> f64 {
        self.envelope(epsilon, sched) / 2.0
    }
}

/// `∫_from^∞ g(x) dx` in the variable `u = ln x`, truncated where the
/// envelope bound makes the remainder negligible.
fn log_product_integral(from: f64, epsilon: f64, sched: &Schedule, kind: NoiseKind) -> Result<f64> {
    let alpha = sched.alpha()?;
    let mut g = LogFactor::new(epsilon, sched, alpha, kind);
    let u0 = from.ln();
    if g.eval(u0)? == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }

    let mut failure = None;
    let mut integrand = |u: f64| match g.eval(u) {
        Ok(v) => v * u.exp(),
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let tol = Tolerance {
        absolute: 1e-300,
        relative: 1e-12,
        max_subdivisions: 4000,
    };
    let u1 = (u0 + FIRST_STAGE).min(MAX_LOG_X);
    let first = quadrature::integrate(&mut integrand, u0, u1, tol);
    let mut total = match first {
        Ok(r) => r.value,
        Err(e) => return Err(failure.take().unwrap_or(e)),
    };

    let g_env = LogFactor::new(epsilon, sched, alpha, kind);
    let k = g_env.envelope(epsilon, sched);
    // K·T^{1−α}/(α−1) < TAIL_FRACTION·|I|, and the envelope needs ratio ≤ 1/2.
    let target = TAIL_FRACTION * total.abs().max(f64::MIN_POSITIVE) * (alpha - 1.0);
    let ln_t = ((k.ln() - target.ln()) / (alpha - 1.0)).max((2.0 * k).ln() / alpha);
    let u_end = ln_t.min(MAX_LOG_X);
    if u_end > u1 {
        let tail_tol = Tolerance {
            absolute: TAIL_FRACTION * total.abs() * 1e-2,
            relative: 1e-12,
            max_subdivisions: 4000,
        };
        match quadrature::integrate(&mut integrand, u1, u_end, tail_tol) {
            Ok(r) => total += r.value,
            Err(e) => return Err(failure.take().unwrap_or(e)),
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    if ln_t > MAX_LOG_X {
        // Truncation capped: add the leading-order remainder beyond e^MAX_LOG_X.
        total -= g_env.leading(epsilon, sched) * ((1.0 - alpha) * MAX_LOG_X).exp() / (alpha - 1.0);
    }
    Ok(total)
}

fn online_limit(
    from: f64,
    i: u64,
    epsilon: f64,
    sched: &Schedule,
    profile: &LossProfile,
    geom: &Geometry,
    kind: NoiseKind,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    sched.alpha()?;
    check_index(i, i)?;
    let a = a_i(i, epsilon, sched, profile, geom, kind)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    let integral = log_product_integral(from, epsilon, sched, kind)?;
    Ok((a * integral.exp()).clamp(0.0, 1.0))
}

/// Conservative `n → ∞` limit: `A_i·exp(∫_{i+1}^∞ g)`.
pub fn online_delta_limit_upper(
    i: u64,
    epsilon: f64,
    sched: &Schedule,
    profile: &LossProfile,
    geom: &Geometry,
    kind: NoiseKind,
) -> Result<f64> {
    online_limit(i as f64 + 1.0, i, epsilon, sched, profile, geom, kind)
}

/// Lower bound on the `n → ∞` limit: `A_i·exp(∫_i^∞ g)`.
pub fn online_delta_limit_lower(
    i: u64,
    epsilon: f64,
    sched: &Schedule,
    profile: &LossProfile,
    geom: &Geometry,
    kind: NoiseKind,
) -> Result<f64> {
    online_limit(i as f64, i, epsilon, sched, profile, geom, kind)
}

/// Both integral bounds on the limit of the online bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnlineBracket {
    pub lower: f64,
    pub upper: f64,
}

impl OnlineBracket {
    /// `(upper − lower)/upper`, zero when both vanish.
    pub fn relative_gap(&self) -> f64 {
        if self.upper == 0.0 {
            0.0
        } else {
            (self.upper - self.lower) / self.upper
        }
    }
}

pub fn online_delta_bracket(
    i: u64,
    epsilon: f64,
    sched: &Schedule,
    profile: &LossProfile,
    geom: &Geometry,
    kind: NoiseKind,
) -> Result<OnlineBracket> {
    Ok(OnlineBracket {
        lower: online_delta_limit_lower(i, epsilon, sched, profile, geom, kind)?,
        upper: online_delta_limit_upper(i, epsilon, sched, profile, geom, kind)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn online_setup() -> (Schedule, LossProfile, Geometry) {
        (
            Schedule::online(100.0, 100.0, 1.5).unwrap(),
            LossProfile::new(10.0, 0.5, 0.0, 0.01).unwrap(),
            Geometry::interval(0.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn empty_product_is_a_i() {
        let (s, p, g) = online_setup();
        let d = online_delta_finite(100, 100, 1.0, &s, &p, &g, NoiseKind::Laplace).unwrap();
        let a = a_i(100, 1.0, &s, &p, &g, NoiseKind::Laplace).unwrap();
        assert_eq!(d, a);
        assert!((a - 0.356_025_450_557_860_8).abs() < 1e-14);
    }

    #[test]
    fn clamped_factor_zeroes_everything() {
        // C1·e^{ε/2} exceeds t^α + C1C2 for small t, so B_t clamps to zero.
        let s = Schedule::online(100.0, 1.5, 1.5).unwrap();
        let (_, p, g) = online_setup();
        assert_eq!(online_delta_finite(20, 2, 1.0, &s, &p, &g, NoiseKind::Laplace).unwrap(), 0.0);
        assert_eq!(online_delta_limit_upper(2, 1.0, &s, &p, &g, NoiseKind::Laplace).unwrap(), 0.0);
    }

    #[test]
    fn vanishing_c1_leaves_a_i() {
        let s = Schedule::online(1e-12, 2.0, 1.5).unwrap();
        let (_, p, g) = online_setup();
        let a = a_i(10, 1.0, &s, &p, &g, NoiseKind::Laplace).unwrap();
        let up = online_delta_limit_upper(10, 1.0, &s, &p, &g, NoiseKind::Laplace).unwrap();
        let lo = online_delta_limit_lower(10, 1.0, &s, &p, &g, NoiseKind::Laplace).unwrap();
        assert!((up - a).abs() < 1e-9 * a);
        assert!((lo - a).abs() < 1e-9 * a);
    }

    #[test]
    fn path_matches_individual_evaluations() {
        let (s, p, g) = online_setup();
        let ns = [100u64, 150, 1000, 5000];
        let path = online_delta_path(&ns, 100, 1.0, &s, &p, &g, NoiseKind::Laplace).unwrap();
        for (n, v) in ns.iter().zip(path) {
            assert_eq!(v, online_delta_finite(*n, 100, 1.0, &s, &p, &g, NoiseKind::Laplace).unwrap());
        }
        assert!(online_delta_path(&[500, 200], 100, 1.0, &s, &p, &g, NoiseKind::Laplace).is_err());
        assert!(online_delta_path(&[50], 100, 1.0, &s, &p, &g, NoiseKind::Laplace).is_err());
    }

    #[test]
    fn requires_online_schedule() {
        let (_, p, g) = online_setup();
        let fixed = Schedule::fixed(100.0, 100.0).unwrap();
        assert!(online_delta_finite(200, 100, 1.0, &fixed, &p, &g, NoiseKind::Laplace).is_err());
        assert!(online_delta_limit_upper(100, 1.0, &fixed, &p, &g, NoiseKind::Laplace).is_err());
    }
}
