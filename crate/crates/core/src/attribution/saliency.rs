use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::signed_path_sums;
use crate::error::{NifError, Result};
use crate::estimators::EstimatorConfig;
use crate::model_io::{forward, Dataset, ModelGraph, Shape};
use crate::nif_graph::{build_nif_graph, FlowMode};

/// Per-pixel signed attribution of one sample toward one class. Positive
/// values are supporting evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyMap {
    /// Row-major (height, width, channels), matching the dataset layout.
    pub values: Vec<f64>,
    pub shape: (usize, usize, usize),
    pub sample: usize,
    pub class: usize,
}

impl SaliencyMap {
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        let (_, w, c) = self.shape;
        self.values[(row * w + col) * c + channel]
    }

    /// CSV with one line per pixel: `pixel,row,col,channel,class,value`.
    pub fn to_csv(&self) -> String {
        let (h, w, c) = self.shape;
        let mut out = String::from("pixel,row,col,channel,class,value\n");
        for r in 0..h {
            for col in 0..w {
                for ch in 0..c {
                    let p = (r * w + col) * c + ch;
                    let _ = writeln!(out, "{p},{r},{col},{ch},{},{}", self.class, self.values[p]);
                }
            }
        }
        out
    }
}

/// Saliency of sample `sample` toward class `class` for a convolutional model.
///
/// The dataset is used both to estimate the pointwise terms and to select
/// the explained sample. Pixel-to-channel links use the pointwise term
/// between the pixel and the channel's spatial mean; deeper links use
/// channel means (or neurons after flattening). The map is the signed path
/// sum from every pixel to the class output.
pub fn saliency_map(
    model: &ModelGraph,
    dataset: &Dataset,
    sample: usize,
    class: usize,
    config: &EstimatorConfig,
) -> Result<SaliencyMap> {
    let Shape::Image {
        channels,
        height,
        width,
    } = model.input_shape()
    else {
        return Err(NifError::Unsupported(
            "saliency maps need a convolutional model with image input".into(),
        ));
    };
    if !model.has_conv() {
        return Err(NifError::Unsupported("model has no conv layer".into()));
    }
    if sample >= dataset.len() {
        return Err(NifError::IndexOutOfRange(format!(
            "sample {sample} of {}",
            dataset.len()
        )));
    }
    if class >= model.class_count() {
        return Err(NifError::IndexOutOfRange(format!(
            "class {class} of {}",
            model.class_count()
        )));
    }
    let activations = forward(model, dataset)?;
    let graph = build_nif_graph(model, &activations, config, FlowMode::Pmi { sample })?;
    let sums = signed_path_sums(&graph)?;
    Ok(SaliencyMap {
        values: sums.values.column(class).to_vec(),
        shape: (height, width, channels),
        sample,
        class,
    })
}
