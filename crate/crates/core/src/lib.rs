//! Differential-privacy accounting for projected noisy SGD (PNSGD).
//!
//! The crate computes `(ε, δ)` guarantees for PNSGD run on a shuffled
//! dataset, for the randomly-stopped and per-index variants, and for the
//! online setting where the injected noise decays with the update index.
//! It calibrates Laplace and Gaussian noise schedules whose `δ` converges
//! to a nonzero limit as the dataset grows, composes per-epoch guarantees
//! through RDP or Gaussian DP, and ships a seeded PNSGD simulator used to
//! compare the shuffled and randomly-stopped variants empirically.
//!
//! Module map:
//!
//! * [`special`]: Gaussian tail, the hockey-stick kernel `θ_γ(r)`,
//!   Lambert W, the contraction constant `M`, and a quadrature oracle.
//! * [`bounds`]: per-index, randomly-stopped, shuffled, fixed-schedule and
//!   online bounds.
//! * [`composition`]: multi-epoch accounting.
//! * [`simulator`]: the PNSGD execution engine.
//! * [`cli`]: the `pnsgd` command-line front end.

pub mod bounds;
pub mod cli;
pub mod composition;
mod error;
pub mod quadrature;
pub mod simulator;
pub mod special;

pub use bounds::{
    BoundConstants, Geometry, NoiseKind, NoiseModel, PrivacyBudget, Schedule, ScheduleMode,
};
pub use error::{PrivacyError, Result};
pub use special::LossProfile;
