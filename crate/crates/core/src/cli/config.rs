//! TOML run configuration.
//!
//! ```toml
//! epsilon = 1.0
//! n = 100000
//!
//! [profile]
//! L = 10.0
//! beta = 0.5
//! rho = 0.0
//! eta = 0.1
//!
//! [geometry]      # a/b for Laplace, D_K for Gaussian
//! a = 0.0
//! b = 1.0
//!
//! [noise]
//! kind = "laplace"
//!
//! [schedule]
//! C1 = 1e5
//! C2 = 2.0
//! ```

use std::path::Path;

use serde::Deserialize;

use super::CliError;
use crate::bounds::{Geometry, NoiseKind, NoiseModel, PrivacyBudget, Schedule};
use crate::simulator::LossKind;
use crate::special::LossProfile;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub epsilon: Option<f64>,
    pub n: Option<u64>,
    /// Differing index `i` (1-based).
    pub index: Option<u64>,
    pub seed: Option<u64>,
    /// Sweep figure id.
    pub figure: Option<String>,
    /// Learning rates to sweep; overrides `profile.eta` per output.
    pub eta_values: Option<Vec<f64>>,
    pub profile: Option<ProfileSection>,
    pub geometry: Option<GeometrySection>,
    pub noise: Option<NoiseSection>,
    pub schedule: Option<ScheduleSection>,
    pub grid: Option<GridSection>,
    pub budget: Option<BudgetSection>,
    pub compose: Option<ComposeSection>,
    pub simulate: Option<SimulateSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub beta: f64,
    #[serde(default)]
    pub rho: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(rename = "D_K")]
    pub diameter: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    /// `σ` or `v`; when absent the schedule calibrates it.
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    /// Present for online schedules.
    pub alpha: Option<f64>,
}

/// Either explicit `values` or a geometric grid `start·10^{k/per_decade} ≤ stop`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Whole numbers; `1e4` style literals are accepted.
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub per_decade: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeSection {
    pub epochs: u64,
    pub method: ComposeMethod,
    /// RDP order; the standard grid is searched when absent.
    pub alpha: Option<f64>,
    pub delta_target: Option<f64>,
    pub epsilon_target: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComposeMethod {
    Rdp,
    Gdp,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub n: Option<usize>,
    pub radius: f64,
    pub loss: LossKind,
    pub replicas: usize,
    /// Ground-truth parameter for synthetic data; projected onto the ball.
    pub target: Option<Vec<f64>>,
    /// CSV with feature columns then one response column.
    pub dataset: Option<String>,
}

fn invalid(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::config(field, message)
}

fn required<'a, T>(value: &'a Option<T>, field: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| invalid(field, "missing"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("--config", format!("{}: {e}", path.display())))?;
        let parsed = toml::from_str(&text).map_err(|e| invalid("config", e))?;
        Ok((parsed, text))
    }

    pub fn epsilon(&self) -> Result<f64, CliError> {
        let e = *required(&self.epsilon, "epsilon")?;
        if e.is_finite() && e >= 0.0 {
            Ok(e)
        } else {
            Err(invalid("epsilon", format!("must be finite and >= 0, got {e}")))
        }
    }

    pub fn n(&self) -> Result<u64, CliError> {
        match *required(&self.n, "n")? {
            0 => Err(invalid("n", "must be >= 1")),
            n => Ok(n),
        }
    }

    pub fn index(&self) -> Result<u64, CliError> {
        match self.index.unwrap_or(1) {
            0 => Err(invalid("index", "must be >= 1")),
            i => Ok(i),
        }
    }

    pub fn profile(&self) -> Result<LossProfile, CliError> {
        let p = required(&self.profile, "profile")?;
        LossProfile::new(p.lipschitz, p.beta, p.rho, p.eta).map_err(|e| invalid("profile", e))
    }

    pub fn kind(&self) -> Result<NoiseKind, CliError> {
        Ok(required(&self.noise, "noise")?.kind)
    }

    /// Explicit noise scale, if given.
    pub fn noise_scale(&self) -> Result<Option<NoiseModel>, CliError> {
        let noise = required(&self.noise, "noise")?;
        noise
            .scale
            .map(|s| NoiseModel::new(noise.kind, s).map_err(|e| invalid("noise.scale", e)))
            .transpose()
    }

    /// The geometry required by the configured noise kind.
    pub fn geometry(&self) -> Result<Geometry, CliError> {
        self.geometry_for(self.kind()?)
    }

    pub fn geometry_for(&self, kind: NoiseKind) -> Result<Geometry, CliError> {
        let g = required(&self.geometry, "geometry")?;
        match kind {
            NoiseKind::Laplace => {
                let a = *required(&g.a, "geometry.a")?;
                let b = *required(&g.b, "geometry.b")?;
                Geometry::interval(a, b).map_err(|e| invalid("geometry", e))
            }
            NoiseKind::Gaussian => {
                let d = *required(&g.diameter, "geometry.D_K")?;
                Geometry::ball(d).map_err(|e| invalid("geometry.D_K", e))
            }
        }
    }

    pub fn schedule(&self) -> Result<Schedule, CliError> {
        let s = required(&self.schedule, "schedule")?;
        match s.alpha {
            Some(alpha) => Schedule::online(s.c1, s.c2, alpha),
            None => Schedule::fixed(s.c1, s.c2),
        }
        .map_err(|e| invalid("schedule", e))
    }

    pub fn budget(&self) -> Result<Option<PrivacyBudget>, CliError> {
        self.budget
            .as_ref()
            .map(|b| PrivacyBudget::new(b.epsilon, b.delta).map_err(|e| invalid("budget", e)))
            .transpose()
    }

    /// Learning rates to evaluate: `eta_values` if present, else `profile.eta`.
    pub fn etas(&self) -> Result<Vec<f64>, CliError> {
        let base = self.profile()?;
        match &self.eta_values {
            None => Ok(vec![base.learning_rate]),
            Some(v) if v.is_empty() => Err(invalid("eta_values", "must not be empty")),
            Some(v) => {
                for &eta in v {
                    LossProfile::new(base.lipschitz, base.smoothness, base.strong_convexity, eta)
                        .map_err(|e| invalid("eta_values", e))?;
                }
                Ok(v.clone())
            }
        }
    }

    /// Points of the `n` grid, ascending.
    pub fn grid(&self) -> Result<Vec<u64>, CliError> {
        let g = required(&self.grid, "grid")?;
        let mut points = match (&g.values, g.start, g.stop) {
            (Some(values), None, None) => values.iter().map(|&v| whole_number(v)).collect::<Result<_, _>>()?,
            (None, Some(start), Some(stop)) => geometric_grid(start, stop, g.per_decade.unwrap_or(1))?,
            _ => return Err(invalid("grid", "give either `values` or both `start` and `stop`")),
        };
        if points.is_empty() {
            return Err(invalid("grid", "grid is empty"));
        }
        if points.contains(&0) {
            return Err(invalid("grid", "points must be >= 1"));
        }
        points.sort_unstable();
        points.dedup();
        Ok(points)
    }

    pub fn compose(&self) -> Result<&ComposeSection, CliError> {
        let c = required(&self.compose, "compose")?;
        if c.epochs == 0 {
            return Err(invalid("compose.epochs", "must be >= 1"));
        }
        Ok(c)
    }

    pub fn simulate(&self) -> Result<&SimulateSection, CliError> {
        let s = required(&self.simulate, "simulate")?;
        if s.replicas == 0 {
            return Err(invalid("simulate.replicas", "must be >= 1"));
        }
        if !(s.radius.is_finite() && s.radius > 0.0) {
            return Err(invalid("simulate.radius", "must be finite and > 0"));
        }
        Ok(s)
    }
}

fn whole_number(v: f64) -> Result<u64, CliError> {
    // 2^53: beyond this not every integer is representable.
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= 9_007_199_254_740_992.0 {
        Ok(v as u64)
    } else {
        Err(invalid("grid.values", format!("{v} is not a whole number")))
    }
}

fn geometric_grid(start: f64, stop: f64, per_decade: u32) -> Result<Vec<u64>, CliError> {
    if !(start.is_finite() && stop.is_finite() && start >= 1.0) {
        return Err(invalid("grid.start", "start and stop must be finite with start >= 1"));
    }
    if per_decade == 0 {
        return Err(invalid("grid.per_decade", "must be >= 1"));
    }
    let mut out = Vec::new();
    let mut k = 0i32;
    loop {
        let x = start * 10f64.powf(f64::from(k) / f64::from(per_decade));
        if x > stop * (1.0 + 1e-12) {
            break;
        }
        out.push(x.round() as u64);
        k += 1;
    }
    Ok(out)
}
