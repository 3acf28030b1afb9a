//! `(ε, δ)` guarantees for PNSGD.
//!
//! Every bound is written as `δ = A·B^{n−i}` or an average of such terms,
//! where `A` and `B` depend on the noise, the loss profile and the geometry
//! of the projection set (see [`ab_constants`]).

mod constants;
mod online;
mod schedule;

use serde::{Deserialize, Serialize};

use crate::error::{PrivacyError, Result};

pub use constants::{
    ab_constants, geometric_sum, per_index_delta, randomly_stopped_delta, shuffled_delta,
};
pub use online::{
    online_delta_bracket, online_delta_finite, online_delta_limit_lower, online_delta_limit_upper,
    online_delta_path, OnlineBracket,
};
pub use schedule::{
    delta_star_fixed_gaussian, delta_star_fixed_laplace, fixed_gaussian_scale, fixed_laplace_scale,
    fixed_scale, online_scale, shuffled_delta_fixed_noise,
};

pub(crate) use constants::ln_contraction_factor;

/// An `(ε, δ)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(PrivacyError::domain("PrivacyBudget", format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(PrivacyError::domain("PrivacyBudget", format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }
}

/// Shape of the projection set `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// A compact convex set of diameter `D_K`; pairs with Gaussian noise.
    Ball { diameter: f64 },
    /// The interval `[a, b]`; pairs with Laplace noise.
    Interval { lower: f64, upper: f64 },
}

impl Geometry {
    pub fn ball(diameter: f64) -> Result<Self> {
        let g = Geometry::Ball { diameter };
        g.validate()?;
        Ok(g)
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        let g = Geometry::Interval { lower, upper };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Geometry::Ball { diameter } if diameter.is_finite() && diameter > 0.0 => Ok(()),
            Geometry::Ball { diameter } => Err(PrivacyError::domain("Geometry", format!("diameter must be finite and > 0, got {diameter}"))),
            Geometry::Interval { lower, upper } if lower.is_finite() && upper.is_finite() && lower < upper => Ok(()),
            Geometry::Interval { lower, upper } => Err(PrivacyError::domain("Geometry", format!("interval needs a < b, got [{lower}, {upper}]"))),
        }
    }

    /// `D_K` for a ball, `b − a` for an interval.
    pub fn extent(&self) -> f64 {
        match *self {
            Geometry::Ball { diameter } => diameter,
            Geometry::Interval { lower, upper } => upper - lower,
        }
    }

    /// The geometry that goes with `kind`, or a mismatch error.
    pub(crate) fn expect(&self, kind: NoiseKind) -> Result<()> {
        self.validate()?;
        match (kind, self) {
            (NoiseKind::Gaussian, Geometry::Ball { .. }) | (NoiseKind::Laplace, Geometry::Interval { .. }) => Ok(()),
            (NoiseKind::Gaussian, _) => Err(PrivacyError::GeometryMismatch {
                noise: "gaussian",
                expected: "ball",
            }),
            (NoiseKind::Laplace, _) => Err(PrivacyError::GeometryMismatch {
                noise: "laplace",
                expected: "interval",
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Laplace,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Laplace => "laplace",
        }
    }
}

/// Noise injected at each update: `N(0, σ²)` or `Lap(0, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// `σ` for Gaussian noise, `v` for Laplace noise.
    pub scale: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(PrivacyError::domain("NoiseModel", format!("scale must be finite and > 0, got {scale}")));
        }
        Ok(NoiseModel { kind, scale })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(NoiseKind::Gaussian, sigma)
    }

    pub fn laplace(v: f64) -> Result<Self> {
        Self::new(NoiseKind::Laplace, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// One noise level per dataset size `n`.
    Fixed,
    /// Noise decays with the update index `j` at exponent `alpha > 1`.
    Online { alpha: f64 },
}

/// Constants `(C1, C2, α)` of a noise-decay schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub c1: f64,
    pub c2: f64,
    pub mode: ScheduleMode,
}

impl Schedule {
    pub fn fixed(c1: f64, c2: f64) -> Result<Self> {
        let s = Schedule {
            c1,
            c2,
            mode: ScheduleMode::Fixed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn online(c1: f64, c2: f64, alpha: f64) -> Result<Self> {
        let s = Schedule {
            c1,
            c2,
            mode: ScheduleMode::Online { alpha },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1.is_finite() && self.c1 > 0.0) {
            return Err(PrivacyError::domain("Schedule", format!("C1 must be finite and > 0, got {}", self.c1)));
        }
        if !(self.c2.is_finite() && self.c2 >= 0.0) {
            return Err(PrivacyError::domain("Schedule", format!("C2 must be finite and >= 0, got {}", self.c2)));
        }
        if let ScheduleMode::Online { alpha } = self.mode {
            if !(alpha.is_finite() && alpha > 1.0) {
                return Err(PrivacyError::domain("Schedule", format!("online schedules need alpha > 1, got {alpha}")));
            }
        }
        Ok(())
    }

    pub(crate) fn alpha(&self) -> Result<f64> {
        match self.mode {
            ScheduleMode::Online { alpha } => Ok(alpha),
            ScheduleMode::Fixed => Err(PrivacyError::domain("Schedule", "operation requires an online schedule")),
        }
    }

    pub(crate) fn expect_fixed(&self) -> Result<()> {
        match self.mode {
            ScheduleMode::Fixed => Ok(()),
            ScheduleMode::Online { .. } => Err(PrivacyError::domain("Schedule", "operation requires a fixed schedule")),
        }
    }
}

/// The pair `(A, B)` with `δ = A·B^{n−i}` for one differing index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub a: f64,
    pub b: f64,
    /// Set when `θ` roundoff outside `[0, 1]` exceeded `1e-12` and was clamped.
    #[serde(default)]
    pub clamped: bool,
}

impl BoundConstants {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return Err(PrivacyError::domain("BoundConstants", format!("A and B must lie in [0, 1], got ({a}, {b})")));
        }
        Ok(BoundConstants { a, b, clamped: false })
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon >= 0.0 {
        Ok(())
    } else {
        Err(PrivacyError::domain("epsilon", format!("must be finite and >= 0, got {epsilon}")))
    }
}

pub(crate) fn check_index(n: u64, i: u64) -> Result<()> {
    if n == 0 || i == 0 || i > n {
        Err(PrivacyError::IndexOutOfRange { index: i, n })
    } else {
        Ok(())
    }
}
