//! Multi-epoch accounting through Rényi DP or Gaussian DP.
//!
//! A per-epoch `(ε, δ)` guarantee is moved into one of the two currencies,
//! composed over `E` epochs, and mapped back.

use serde::{Deserialize, Serialize};

use crate::bounds::PrivacyBudget;
use crate::error::{PrivacyError, Result};
use crate::special::theta;

/// Default RDP orders searched by [`best_rdp_order`].
pub const ALPHA_GRID: [f64; 11] = [1.5, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];

const GDP_RELATIVE_TOL: f64 = 1e-12;
const GDP_MAX_ITER: usize = 400;

/// An RDP guarantee `(α, ε_α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdpPoint {
    pub order: f64,
    /// May be negative when obtained from a tight `(ε, δ)` pair.
    pub epsilon: f64,
}

impl RdpPoint {
    pub fn new(order: f64, epsilon: f64) -> Result<Self> {
        check_order(order)?;
        if !epsilon.is_finite() {
            return Err(PrivacyError::domain("RdpPoint", format!("epsilon must be finite, got {epsilon}")));
        }
        Ok(RdpPoint { order, epsilon })
    }

    pub fn is_negative(&self) -> bool {
        self.epsilon < 0.0
    }
}

/// A `μ`-GDP guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdpParam {
    pub mu: f64,
}

impl GdpParam {
    pub fn new(mu: f64) -> Result<Self> {
        if mu.is_finite() && mu > 0.0 {
            Ok(GdpParam { mu })
        } else {
            Err(PrivacyError::domain("GdpParam", format!("mu must be finite and > 0, got {mu}")))
        }
    }
}

fn check_order(order: f64) -> Result<()> {
    if order.is_finite() && order > 1.0 {
        Ok(())
    } else {
        Err(PrivacyError::domain("rdp order", format!("must be finite and > 1, got {order}")))
    }
}

fn check_open_delta(what: &'static str, delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(PrivacyError::domain(what, format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn check_budget(b: &PrivacyBudget) -> Result<()> {
    PrivacyBudget::new(b.epsilon, b.delta).map(|_| ())
}

/// `(ε, δ) ↦ (α, ε + ln δ/(α − 1))`.
pub fn dp_to_rdp(budget: &PrivacyBudget, order: f64) -> Result<RdpPoint> {
    check_budget(budget)?;
    check_open_delta("dp_to_rdp", budget.delta)?;
    check_order(order)?;
    RdpPoint::new(order, budget.epsilon + budget.delta.ln() / (order - 1.0))
}

/// Additive composition at a fixed order.
pub fn rdp_compose(point: &RdpPoint, epochs: u64) -> Result<RdpPoint> {
    check_epochs(epochs)?;
    RdpPoint::new(point.order, epochs as f64 * point.epsilon)
}

/// `(α, ε_α) ↦ (ε_α − ln δ/(α − 1), δ)`.
pub fn rdp_to_dp(point: &RdpPoint, delta: f64) -> Result<PrivacyBudget> {
    check_order(point.order)?;
    check_open_delta("rdp_to_dp", delta)?;
    let correction = -delta.ln() / (point.order - 1.0);
    let mut epsilon = point.epsilon + correction;
    // Rounding of the subtraction may leave a few ulps below zero.
    if epsilon < 0.0 && -epsilon <= 4.0 * f64::EPSILON * (point.epsilon.abs() + correction) {
        epsilon = 0.0;
    }
    if epsilon < 0.0 {
        return Err(PrivacyError::domain(
            "rdp_to_dp",
            format!("converted epsilon {epsilon} is negative at order {}", point.order),
        ));
    }
    PrivacyBudget::new(epsilon, delta)
}

/// The `μ > 0` with `θ_{e^ε}(μ) = δ`.
pub fn dp_to_gdp(budget: &PrivacyBudget) -> Result<GdpParam> {
    check_budget(budget)?;
    if !(budget.delta > 0.0 && budget.delta < 1.0) {
        return Err(PrivacyError::NoRoot(format!(
            "theta(e^eps, mu) = {} has no solution mu > 0",
            budget.delta
        )));
    }
    let gamma = budget.epsilon.exp();
    let target = budget.delta;
    let f = |mu: f64| theta(gamma, mu).map(|v| v - target);

    let (mut lo, mut hi) = (1e-8f64, 100.0f64);
    let mut expansions = 0;
    while f(lo)? > 0.0 {
        lo *= 1e-2;
        expansions += 1;
        if lo < 1e-300 || expansions > 200 {
            return Err(PrivacyError::NoRoot(format!("delta {target} below the bracket")));
        }
    }
    while f(hi)? < 0.0 {
        hi *= 2.0;
        expansions += 1;
        if !hi.is_finite() || expansions > 200 {
            return Err(PrivacyError::NoRoot(format!("delta {target} above the bracket")));
        }
    }
    // Bisection in ln μ.
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..GDP_MAX_ITER {
        let mid = 0.5 * (a + b);
        if f(mid.exp())? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= GDP_RELATIVE_TOL {
            return GdpParam::new((0.5 * (a + b)).exp());
        }
    }
    Err(PrivacyError::NonConvergence {
        what: "dp_to_gdp bisection",
        iterations: GDP_MAX_ITER,
    })
}

/// `μ ↦ μ·sqrt(E)`.
pub fn gdp_compose(param: &GdpParam, epochs: u64) -> Result<GdpParam> {
    check_epochs(epochs)?;
    GdpParam::new(param.mu * (epochs as f64).sqrt())
}

/// `(ε, θ_{e^ε}(μ))`.
pub fn gdp_to_dp(param: &GdpParam, epsilon: f64) -> Result<PrivacyBudget> {
    GdpParam::new(param.mu)?;
    PrivacyBudget::new(epsilon, theta(epsilon.exp(), param.mu)?)
}

fn check_epochs(epochs: u64) -> Result<()> {
    if epochs == 0 {
        Err(PrivacyError::domain("epochs", "must be >= 1"))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Rdp { alpha: f64, delta_target: f64 },
    Gdp { epsilon_target: f64 },
}

/// Intermediate currency values of a composition pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "currency", rename_all = "snake_case")]
pub enum Trace {
    Rdp {
        per_epoch: RdpPoint,
        composed: RdpPoint,
        /// Set when the per-epoch Rényi epsilon came out negative.
        negative_per_epoch: bool,
    },
    Gdp { per_epoch: GdpParam, composed: GdpParam },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Composed {
    pub budget: PrivacyBudget,
    pub trace: Trace,
}

/// Per-epoch budget → currency → `E`-fold composition → `(ε, δ)`.
pub fn compose_epochs(per_epoch: &PrivacyBudget, epochs: u64, method: Method) -> Result<Composed> {
    check_epochs(epochs)?;
    match method {
        Method::Rdp { alpha, delta_target } => {
            let point = dp_to_rdp(per_epoch, alpha)?;
            let composed = rdp_compose(&point, epochs)?;
            let budget = rdp_to_dp(&composed, delta_target)?;
            Ok(Composed {
                budget,
                trace: Trace::Rdp {
                    per_epoch: point,
                    composed,
                    negative_per_epoch: point.is_negative(),
                },
            })
        }
        Method::Gdp { epsilon_target } => {
            let mu = dp_to_gdp(per_epoch)?;
            let composed = gdp_compose(&mu, epochs)?;
            let budget = gdp_to_dp(&composed, epsilon_target)?;
            Ok(Composed {
                budget,
                trace: Trace::Gdp { per_epoch: mu, composed },
            })
        }
    }
}

/// RDP pipeline over a grid of orders, keeping the smallest final `ε`.
///
/// Orders whose per-epoch Rényi epsilon is negative are skipped.
pub fn best_rdp_order(per_epoch: &PrivacyBudget, epochs: u64, delta_target: f64, orders: &[f64]) -> Result<Composed> {
    let mut best: Option<Composed> = None;
    let mut last_err = None;
    for &alpha in orders {
        match dp_to_rdp(per_epoch, alpha) {
            Ok(p) if p.is_negative() => continue,
            Ok(_) => {}
            Err(e) => return Err(e),
        }
        match compose_epochs(per_epoch, epochs, Method::Rdp { alpha, delta_target }) {
            Ok(c) => {
                if best.as_ref().map_or(true, |b| c.budget.epsilon < b.budget.epsilon) {
                    best = Some(c);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| PrivacyError::NoRoot("no order in the grid gives a nonnegative Renyi epsilon".into()))
    })
}
