use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;

use super::AttributionMatrix;
use crate::error::{NifError, Result};
use crate::estimators::{mutual_information, EstimatorConfig};
use crate::model_io::ActivationRecord;

/// Direct estimate of the information between each input feature and each
/// class, with the class taken as a one-vs-rest indicator.
///
/// Unlike the path-sum attribution this ignores the network entirely.
/// Entries are raw estimates (not clamped).
pub fn raw_mi_attribution(
    activations: &ActivationRecord,
    labels: &[usize],
    config: &EstimatorConfig,
) -> Result<AttributionMatrix> {
    let n = activations.sample_count();
    if labels.len() != n {
        return Err(NifError::DimensionMismatch(format!(
            "{} labels for {n} samples",
            labels.len()
        )));
    }
    let classes = activations.outputs().ncols();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(NifError::InvalidDataset(format!(
            "label {bad} outside [0, {classes})"
        )));
    }
    let features = activations.input.ncols();
    let indicators: Vec<Array1<f64>> = (0..classes)
        .map(|c| {
            labels
                .iter()
                .map(|&l| if l == c { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let cells: Vec<(usize, usize)> = (0..features)
        .flat_map(|i| (0..classes).map(move |j| (i, j)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(i, j)| {
            let x = activations.input.column(i).insert_axis(Axis(1));
            mutual_information(x, indicators[j].view(), config).map(|m| m.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let values = Array2::from_shape_vec((features, classes), values)
        .map_err(|e| NifError::DimensionMismatch(e.to_string()))?;
    Ok(AttributionMatrix {
        values,
        feature_names: activations.feature_names.clone(),
        class_labels: (0..classes).map(|c| format!("class{c}")).collect(),
    })
}
