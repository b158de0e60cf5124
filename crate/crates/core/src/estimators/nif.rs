use ndarray::{ArrayView1, ArrayView2, Axis};

use super::{mutual_information, EstimatorConfig, RelevanceMode};
use crate::error::{NifError, Result};
use crate::model_io::ActivationRecord;
use crate::nif_graph::UnitRef;

/// The two parts of the NIF measure for one (source unit, target unit) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NifTerms {
    /// Information the source carries about the target, in nats.
    pub relevance: f64,
    /// Sum of pairwise information between the source unit and its layer
    /// mates (all others for per-feature mode, earlier ones for literal).
    pub redundancy: f64,
}

impl NifTerms {
    pub fn value(&self, beta: f64) -> f64 {
        self.relevance - beta * self.redundancy
    }
}

/// Relevance and redundancy of unit `unit` of `source` (N x units) with
/// respect to `target`.
pub fn nif_terms(
    source: ArrayView2<'_, f64>,
    unit: usize,
    target: ArrayView1<'_, f64>,
    config: &EstimatorConfig,
) -> Result<NifTerms> {
    if unit >= source.ncols() {
        return Err(NifError::IndexOutOfRange(format!(
            "unit {unit} of {}",
            source.ncols()
        )));
    }
    // a constant target receives no flow, whatever the redundancy estimates
    if super::is_constant(target.iter()) {
        return Ok(NifTerms {
            relevance: 0.0,
            redundancy: 0.0,
        });
    }
    let column = |j: usize| source.column(j).insert_axis(Axis(1));
    let relevance = match config.relevance_mode {
        RelevanceMode::PerFeature => mutual_information(column(unit), target, config)?.value,
        RelevanceMode::Literal => mutual_information(source, target, config)?.value,
    };
    let partners: Vec<usize> = match config.relevance_mode {
        RelevanceMode::PerFeature => (0..source.ncols()).filter(|&j| j != unit).collect(),
        RelevanceMode::Literal => (0..unit).collect(),
    };
    let mut redundancy = 0.0;
    for j in partners {
        redundancy += mutual_information(column(unit), source.column(j), config)?.value;
    }
    Ok(NifTerms {
        relevance,
        redundancy,
    })
}

/// NIF of input feature `feature` toward any later unit.
pub fn nif_feature(
    activations: &ActivationRecord,
    feature: usize,
    target: UnitRef,
    config: &EstimatorConfig,
) -> Result<f64> {
    let layers = activations.unit_layers();
    if target.layer == 0 || target.layer >= layers.len() {
        return Err(NifError::IndexOutOfRange(format!(
            "target layer {} (graph has layers 1..{})",
            target.layer,
            layers.len()
        )));
    }
    let target_layer = layers[target.layer];
    if target.unit >= target_layer.ncols() {
        return Err(NifError::IndexOutOfRange(format!(
            "target unit {} of {}",
            target.unit,
            target_layer.ncols()
        )));
    }
    let terms = nif_terms(layers[0], feature, target_layer.column(target.unit), config)?;
    Ok(terms.value(config.beta))
}
