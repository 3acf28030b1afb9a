use std::path::Path;

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::{stream, Purpose};
use super::LossKind;
use crate::error::{PrivacyError, Result};

/// `n` labelled points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    responses: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, features: Vec<f64>, responses: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(PrivacyError::domain("Dataset", "dimension must be >= 1"));
        }
        if features.len() != dim * responses.len() {
            return Err(PrivacyError::DimensionMismatch {
                expected: dim * responses.len(),
                got: features.len(),
            });
        }
        if features.iter().chain(&responses).any(|v| !v.is_finite()) {
            return Err(PrivacyError::domain("Dataset", "values must be finite"));
        }
        Ok(Dataset { dim, features, responses })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, k: usize) -> (&[f64], f64) {
        (&self.features[k * self.dim..(k + 1) * self.dim], self.responses[k])
    }

    /// Reads a header-less or headed CSV of `d` feature columns followed by
    /// one response column.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| PrivacyError::domain("dataset", e.to_string()))?;
        let mut dim = None;
        let (mut features, mut responses) = (Vec::new(), Vec::new());
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| PrivacyError::domain("dataset", e.to_string()))?;
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            let values = match parsed {
                Ok(v) => v,
                // A non-numeric first row is a header.
                Err(_) if line == 0 => continue,
                Err(e) => return Err(PrivacyError::domain("dataset", format!("row {}: {e}", line + 1))),
            };
            if values.len() < 2 {
                return Err(PrivacyError::domain("dataset", format!("row {} needs at least 2 columns", line + 1)));
            }
            let d = *dim.get_or_insert(values.len() - 1);
            if values.len() - 1 != d {
                return Err(PrivacyError::DimensionMismatch {
                    expected: d + 1,
                    got: values.len(),
                });
            }
            features.extend_from_slice(&values[..d]);
            responses.push(values[d]);
        }
        let dim = dim.ok_or_else(|| PrivacyError::domain("dataset", "no rows"))?;
        Dataset::new(dim, features, responses)
    }
}

/// Parameters of a synthetic regression problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProblem {
    pub loss: LossKind,
    pub n: usize,
    pub target: Vec<f64>,
    pub seed: u64,
}

/// Standard normal covariates; responses `xᵀθ* + N(0,1)` (linear) or
/// `Bernoulli(sigmoid(xᵀθ*))` labels (logistic).
pub fn generate_synthetic(problem: &SyntheticProblem) -> Result<Dataset> {
    let d = problem.target.len();
    if d == 0 || problem.n == 0 {
        return Err(PrivacyError::domain("generate_synthetic", "n and d must be >= 1"));
    }
    let mut rng = stream(problem.seed, 0, Purpose::Data, 0);
    let mut features = Vec::with_capacity(problem.n * d);
    let mut responses = Vec::with_capacity(problem.n);
    for _ in 0..problem.n {
        let start = features.len();
        features.extend((0..d).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        let z: f64 = features[start..].iter().zip(&problem.target).map(|(x, t)| x * t).sum();
        let y = match problem.loss {
            LossKind::Linear => z + rng.sample::<f64, _>(StandardNormal),
            LossKind::Logistic => {
                let p = super::sigmoid(z);
                let coin = Bernoulli::new(p).map_err(|e| PrivacyError::domain("generate_synthetic", e.to_string()))?;
                f64::from(u8::from(coin.sample(&mut rng)))
            }
        };
        responses.push(y);
    }
    Dataset::new(d, features, responses)
}
