use serde::{Deserialize, Serialize};

use crate::error::{NifError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    /// Mixed continuous/discrete k-nearest-neighbor estimator.
    Ksg,
    /// Equal-width binned plug-in estimator.
    Histogram,
}

/// How the relevance term of the NIF measure is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceMode {
    /// `I(X; Q) - beta * sum_{j<i} I(X_i; X_j)` with `X` the whole source layer.
    Literal,
    /// `I(X_i; Q) - beta * sum_{j!=i} I(X_i; X_j)`.
    PerFeature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub k: usize,
    pub bins: usize,
    pub beta: f64,
    pub relevance_mode: RelevanceMode,
    pub rng_seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kind: EstimatorKind::Ksg,
            k: 5,
            bins: 16,
            beta: 5e-4,
            relevance_mode: RelevanceMode::PerFeature,
            rng_seed: 0,
        }
    }
}

impl EstimatorConfig {
    /// Checks parameter ranges that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(NifError::InvalidConfig("k must be at least 1".into()));
        }
        if self.bins < 2 {
            return Err(NifError::InvalidConfig("bins must be at least 2".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(NifError::InvalidConfig(format!(
                "beta must be finite and nonnegative, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Smallest sample count the configured estimator accepts.
    pub fn min_samples(&self) -> usize {
        match self.kind {
            EstimatorKind::Ksg => self.k + 1,
            EstimatorKind::Histogram => 2,
        }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        EstimatorConfig {
            beta,
            ..self.clone()
        }
    }
}
