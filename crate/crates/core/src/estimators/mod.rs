//! Mutual-information estimators and the NIF relevance/redundancy measure.
//!
//! Everything is in nats. Both estimators return per-sample pointwise terms
//! whose mean is the reported estimate.
//!
//! Sign convention: the per-sample term is `log p(x,y) / (p(x) p(y))`, so the
//! estimate is nonnegative in expectation. Some presentations write the
//! mutual information as the expectation of the *negative* log of that ratio;
//! we do not follow that sign.

mod config;
mod histogram;
mod ksg;
mod nif;
mod selfcheck;

pub use config::{EstimatorConfig, EstimatorKind, RelevanceMode};
pub use histogram::histogram_mi;
pub use ksg::{ksg_mi, pmi_per_sample};
pub use nif::{nif_feature, nif_terms, NifTerms};
pub use selfcheck::{self_checks, SelfCheck};

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{NifError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    /// Estimate in nats. Estimator noise can make it slightly negative.
    pub value: f64,
    /// Pointwise terms, one per sample; their mean is `value`.
    pub per_sample: Option<Vec<f64>>,
    /// Neighbor count (KSG only).
    pub k_used: Option<usize>,
    pub n: usize,
}

impl MiEstimate {
    pub(crate) fn from_terms(terms: Vec<f64>, k_used: Option<usize>) -> Self {
        let n = terms.len();
        let value = terms.iter().sum::<f64>() / n as f64;
        MiEstimate {
            value,
            per_sample: Some(terms),
            k_used,
            n,
        }
    }
}

/// Dispatches on `config.kind`.
pub fn mutual_information(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    config: &EstimatorConfig,
) -> Result<MiEstimate> {
    match config.kind {
        EstimatorKind::Ksg => ksg_mi(x, y, config),
        EstimatorKind::Histogram => histogram_mi(x, y, config),
    }
}

/// Pointwise term at one sample, for either estimator.
pub(crate) fn pointwise(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    sample: usize,
    config: &EstimatorConfig,
) -> Result<f64> {
    match config.kind {
        EstimatorKind::Ksg => pmi_per_sample(x, y, sample, config),
        EstimatorKind::Histogram => {
            let est = histogram_mi(x, y, config)?;
            let terms = est.per_sample.expect("histogram fills per-sample terms");
            terms.get(sample).copied().ok_or_else(|| {
                NifError::IndexOutOfRange(format!("sample {sample} of {}", terms.len()))
            })
        }
    }
}

pub(crate) fn check_inputs(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    min_samples: usize,
) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(NifError::DimensionMismatch(format!(
            "x has {} samples, y has {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() == 0 {
        return Err(NifError::DimensionMismatch("x has no columns".into()));
    }
    if y.len() < min_samples {
        return Err(NifError::InsufficientSamples {
            required: min_samples,
            actual: y.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NifError::NonFinite("x"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(NifError::NonFinite("y"));
    }
    Ok(())
}

pub(crate) fn is_constant<'a>(mut values: impl Iterator<Item = &'a f64>) -> bool {
    match values.next() {
        Some(first) => values.all(|v| v == first),
        None => true,
    }
}

/// True when `y`, or every column of `x`, takes a single value. Mutual
/// information with a constant is exactly zero.
pub(crate) fn degenerate(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> bool {
    is_constant(y.iter()) || x.columns().into_iter().all(|c| is_constant(c.iter()))
}
