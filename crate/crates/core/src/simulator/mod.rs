//! Seeded PNSGD engine.
//!
//! One run is a single pass: the shuffled variant visits a uniform
//! permutation of the data, the randomly-stopped variant visits the data in
//! order and halts after a uniform number of steps `T ∈ {1, …, n}`. Noise
//! for step `t` comes from a stream keyed by `(seed, replica, t)`, so both
//! variants see identical noise at identical step counts.

mod data;
mod rng;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use data::{generate_synthetic, Dataset, SyntheticProblem};
pub use rng::{stream, Purpose};

use crate::bounds::{NoiseKind, NoiseModel};
use crate::error::{PrivacyError, Result};
use crate::special::LossProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(wᵀx − y)²/2`
    Linear,
    /// `log(1 + e^{wᵀx}) − y·wᵀx`
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Shuffled,
    RandomlyStopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnsgdConfig {
    pub n: usize,
    pub d: usize,
    pub noise: NoiseModel,
    /// Only the learning rate enters the update.
    pub profile: LossProfile,
    /// Radius of the projection ball centred at the origin.
    pub radius: f64,
    pub loss: LossKind,
    pub seed: u64,
    pub variant: Variant,
    pub replicas: usize,
    /// Keep the full-data loss after every step.
    #[serde(default)]
    pub record_steps: bool,
}

impl PnsgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.replicas == 0 {
            return Err(PrivacyError::domain("PnsgdConfig", "n, d and replicas must be >= 1"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(PrivacyError::domain("PnsgdConfig", format!("radius must be finite and > 0, got {}", self.radius)));
        }
        NoiseModel::new(self.noise.kind, self.noise.scale)?;
        self.profile.validate()
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        self.validate()?;
        if data.len() != self.n {
            return Err(PrivacyError::DimensionMismatch {
                expected: self.n,
                got: data.len(),
            });
        }
        if data.dim() != self.d {
            return Err(PrivacyError::DimensionMismatch {
                expected: self.d,
                got: data.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub final_parameter: Vec<f64>,
    /// Full-data loss at the initial point (`w = 0`).
    pub initial_loss: f64,
    /// Full-data loss at the end of each epoch (one entry per run).
    pub per_epoch_loss: Vec<f64>,
    /// Full-data loss after each step, if requested.
    pub step_loss: Option<Vec<f64>>,
    pub steps_executed: usize,
}

impl TrajectoryResult {
    pub fn final_loss(&self) -> f64 {
        *self.per_epoch_loss.last().unwrap_or(&self.initial_loss)
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn point_loss(loss: LossKind, w: &[f64], x: &[f64], y: f64) -> f64 {
    let z = dot(w, x);
    match loss {
        LossKind::Linear => 0.5 * (z - y) * (z - y),
        LossKind::Logistic => softplus(z) - y * z,
    }
}

/// Mean per-example loss over the whole dataset.
pub fn mean_loss(loss: LossKind, w: &[f64], data: &Dataset) -> f64 {
    let total: f64 = (0..data.len())
        .map(|k| {
            let (x, y) = data.point(k);
            point_loss(loss, w, x, y)
        })
        .sum();
    total / data.len() as f64
}

/// Scale of `∇_w ℓ = residual · x`.
fn residual(loss: LossKind, w: &[f64], x: &[f64], y: f64) -> f64 {
    let z = dot(w, x);
    match loss {
        LossKind::Linear => z - y,
        LossKind::Logistic => sigmoid(z) - y,
    }
}

/// Euclidean projection onto `{‖u‖ ≤ radius}`.
pub fn project_ball(u: &mut [f64], radius: f64) {
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > radius {
        let s = radius / norm;
        u.iter_mut().for_each(|v| *v *= s);
    }
}

/// `Π_K(w − η(∇ℓ(w; x, y) + Z))`.
pub fn pnsgd_step(
    w: &[f64],
    x: &[f64],
    y: f64,
    noise: &[f64],
    loss: LossKind,
    profile: &LossProfile,
    radius: f64,
) -> Result<Vec<f64>> {
    for got in [x.len(), noise.len()] {
        if got != w.len() {
            return Err(PrivacyError::DimensionMismatch { expected: w.len(), got });
        }
    }
    let r = residual(loss, w, x, y);
    let eta = profile.learning_rate;
    let mut next: Vec<f64> = w.iter().zip(x).zip(noise).map(|((wi, xi), zi)| wi - eta * (r * xi + zi)).collect();
    project_ball(&mut next, radius);
    Ok(next)
}

/// `d` independent draws of `N(0, σ²)` or `Lap(0, v)`.
pub fn sample_noise<R: Rng + ?Sized>(noise: &NoiseModel, d: usize, rng: &mut R) -> Vec<f64> {
    let s = noise.scale;
    match noise.kind {
        NoiseKind::Gaussian => (0..d).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect(),
        NoiseKind::Laplace => (0..d)
            .map(|_| {
                let u: f64 = Open01.sample(rng);
                let c = u - 0.5;
                -s * c.signum() * (-2.0 * c.abs()).ln_1p()
            })
            .collect(),
    }
}

/// One trajectory of `config.variant` for replica `replica`.
pub fn run(config: &PnsgdConfig, data: &Dataset, replica: u64) -> Result<TrajectoryResult> {
    config.check_data(data)?;
    let n = config.n;
    let (order, steps): (Vec<usize>, usize) = match config.variant {
        Variant::Shuffled => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut stream(config.seed, replica, Purpose::Permutation, 0));
            (order, n)
        }
        Variant::RandomlyStopped => {
            let t = stream(config.seed, replica, Purpose::StoppingTime, 0).random_range(1..=n);
            ((0..n).collect(), t)
        }
    };

    let mut w = vec![0.0; config.d];
    let initial_loss = mean_loss(config.loss, &w, data);
    let mut step_loss = config.record_steps.then(|| Vec::with_capacity(steps));
    for (t, &k) in order.iter().take(steps).enumerate() {
        let mut rng = stream(config.seed, replica, Purpose::Noise, t as u64 + 1);
        let z = sample_noise(&config.noise, config.d, &mut rng);
        let (x, y) = data.point(k);
        w = pnsgd_step(&w, x, y, &z, config.loss, &config.profile, config.radius)?;
        if let Some(trace) = step_loss.as_mut() {
            trace.push(mean_loss(config.loss, &w, data));
        }
    }
    Ok(TrajectoryResult {
        per_epoch_loss: vec![mean_loss(config.loss, &w, data)],
        final_parameter: w,
        initial_loss,
        step_loss,
        steps_executed: steps,
    })
}

/// `config.replicas` independent trajectories, returned in replica order.
pub fn run_replicas(config: &PnsgdConfig, data: &Dataset) -> Result<Vec<TrajectoryResult>> {
    config.check_data(data)?;
    (0..config.replicas as u64).into_par_iter().map(|r| run(config, data, r)).collect()
}

/// Final losses of both variants for one replica.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedOutcome {
    pub replica: u64,
    pub shuffled_loss: f64,
    pub stopped_loss: f64,
    pub stopping_time: usize,
}

/// Mean and sample standard deviation; the latter is absent for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std_dev: Option<f64>,
}

impl Moments {
    pub fn of(values: &[f64]) -> Moments {
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let std_dev = (values.len() > 1).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (m - 1.0)).sqrt()
        });
        Moments { mean, std_dev }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub outcomes: Vec<PairedOutcome>,
    pub shuffled: Moments,
    pub stopped: Moments,
    /// Moments of `stopped − shuffled` per replica.
    pub difference: Moments,
}

/// Runs both variants on every replica with shared seeds.
pub fn compare_variants(config: &PnsgdConfig, data: &Dataset) -> Result<PairedComparison> {
    config.check_data(data)?;
    let outcomes: Vec<PairedOutcome> = (0..config.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let shuffled = run(&PnsgdConfig { variant: Variant::Shuffled, ..config.clone() }, data, r)?;
            let stopped = run(&PnsgdConfig { variant: Variant::RandomlyStopped, ..config.clone() }, data, r)?;
            Ok(PairedOutcome {
                replica: r,
                shuffled_loss: shuffled.final_loss(),
                stopped_loss: stopped.final_loss(),
                stopping_time: stopped.steps_executed,
            })
        })
        .collect::<Result<_>>()?;
    let column = |f: fn(&PairedOutcome) -> f64| outcomes.iter().map(f).collect::<Vec<_>>();
    Ok(PairedComparison {
        shuffled: Moments::of(&column(|o| o.shuffled_loss)),
        stopped: Moments::of(&column(|o| o.stopped_loss)),
        difference: Moments::of(&column(|o| o.stopped_loss - o.shuffled_loss)),
        outcomes,
    })
}
