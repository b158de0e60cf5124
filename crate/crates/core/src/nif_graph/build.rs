use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;

use super::{default_nodes, FlowMode, NifEdge, NifGraph, NodeKind};
use crate::error::{NifError, Result};
use crate::estimators::{
    is_constant, mutual_information, pointwise, EstimatorConfig, RelevanceMode,
};
use crate::model_io::{ActivationRecord, Layer, ModelGraph};

/// Builds the NIF graph for `model` from its recorded activations.
///
/// Each consecutive pair of unit layers (input, then every dense or conv
/// layer) is fully connected. In `MeanMi` mode the source layer plays the
/// role of the feature set: an edge `a -> b` weighs
/// `relevance(a, b) - beta * redundancy(a)`. In `Pmi` mode it is the
/// pointwise term at the chosen sample. Conv layers contribute their
/// channel means, so the first conv stage links individual input pixels to
/// channels.
pub fn build_nif_graph(
    model: &ModelGraph,
    activations: &ActivationRecord,
    config: &EstimatorConfig,
    mode: FlowMode,
) -> Result<NifGraph> {
    config.validate()?;
    let layers = activations.unit_layers();
    let mut kinds = vec![NodeKind::InputFeature];
    let unit_layers: Vec<&Layer> = model
        .layers()
        .iter()
        .filter(|l| !matches!(l, Layer::Flatten))
        .collect();
    for (i, layer) in unit_layers.iter().enumerate() {
        kinds.push(match layer {
            Layer::Conv2d { .. } => NodeKind::Channel,
            _ if i + 1 == unit_layers.len() => NodeKind::ClassOutput,
            _ => NodeKind::HiddenNeuron,
        });
    }
    if layers.len() != kinds.len() {
        return Err(NifError::DimensionMismatch(format!(
            "activation record has {} unit layers, model has {}",
            layers.len(),
            kinds.len()
        )));
    }
    let n = activations.sample_count();
    if n < config.min_samples() {
        return Err(NifError::InsufficientSamples {
            required: config.min_samples(),
            actual: n,
        });
    }
    if let FlowMode::Pmi { sample } = mode {
        if sample >= n {
            return Err(NifError::IndexOutOfRange(format!("sample {sample} of {n}")));
        }
    }

    let layer_sizes: Vec<usize> = layers.iter().map(|m| m.ncols()).collect();
    let mut nodes = default_nodes(&layer_sizes, Some(&kinds));
    for node in nodes.iter_mut().filter(|n| n.layer == 0) {
        if let Some(name) = activations.feature_names.get(node.unit) {
            node.label = name.clone();
        }
    }

    let offsets = {
        let mut acc = 0;
        layer_sizes
            .iter()
            .map(|s| {
                let o = acc;
                acc += s;
                o
            })
            .collect::<Vec<_>>()
    };
    let mut edges = Vec::new();
    for l in 0..layers.len() - 1 {
        let weights = layer_weights(l, layers[l], layers[l + 1], config, mode)?;
        for (i, row) in weights.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                edges.push(NifEdge {
                    src: offsets[l] + i,
                    dst: offsets[l + 1] + j,
                    weight_raw: w,
                    weight_clamped: 0.0,
                    weight_norm: 0.0,
                });
            }
        }
        log::debug!(
            "layer {l}: {} x {} edges",
            layer_sizes[l],
            layer_sizes[l + 1]
        );
    }

    let mut graph = NifGraph {
        layer_sizes,
        nodes,
        edges,
        mode,
        config: config.clone(),
        model_fingerprint: model.fingerprint(),
        analysis: None,
        run_config: None,
    };
    graph.normalize();
    Ok(graph)
}

fn edge_error(layer: usize, src: usize, dst: usize) -> impl Fn(NifError) -> NifError {
    move |e| NifError::Edge {
        layer,
        src,
        dst,
        source: Box::new(e),
    }
}

/// Raw weights of every (source unit, target unit) pair, source-major.
fn layer_weights(
    layer: usize,
    source: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    config: &EstimatorConfig,
    mode: FlowMode,
) -> Result<Vec<Vec<f64>>> {
    let (a, b) = (source.ncols(), target.ncols());
    let column = |m: ArrayView2<'_, f64>, j: usize| m.column(j).insert_axis(Axis(1)).to_owned();

    if let FlowMode::Pmi { sample } = mode {
        let pairs: Vec<(usize, usize)> = (0..a).flat_map(|i| (0..b).map(move |j| (i, j))).collect();
        let flat = pairs
            .par_iter()
            .map(|&(i, j)| {
                pointwise(column(source, i).view(), target.column(j), sample, config)
                    .map_err(edge_error(layer, i, j))
            })
            .collect::<Result<Vec<f64>>>()?;
        return Ok(flat.chunks(b.max(1)).map(|c| c.to_vec()).collect());
    }

    // Pairwise information among source units, computed once per pair.
    let redundancy: Vec<f64> = if config.beta > 0.0 {
        let pairs: Vec<(usize, usize)> = (0..a)
            .flat_map(|i| (i + 1..a).map(move |j| (i, j)))
            .collect();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| {
                mutual_information(column(source, i).view(), source.column(j), config)
                    .map(|m| m.value)
                    .map_err(edge_error(layer, i, j))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut pair = vec![vec![0.0; a]; a];
        for (&(i, j), v) in pairs.iter().zip(values) {
            pair[i][j] = v;
            pair[j][i] = v;
        }
        (0..a)
            .map(|i| {
                let partners: Box<dyn Iterator<Item = usize>> = match config.relevance_mode {
                    RelevanceMode::PerFeature => Box::new((0..a).filter(move |&j| j != i)),
                    RelevanceMode::Literal => Box::new(0..i),
                };
                partners.fold(0.0, |acc, j| acc + pair[i][j])
            })
            .collect()
    } else {
        vec![0.0; a]
    };

    let relevance: Vec<f64> = match config.relevance_mode {
        RelevanceMode::PerFeature => {
            let pairs: Vec<(usize, usize)> =
                (0..a).flat_map(|i| (0..b).map(move |j| (i, j))).collect();
            pairs
                .par_iter()
                .map(|&(i, j)| {
                    mutual_information(column(source, i).view(), target.column(j), config)
                        .map(|m| m.value)
                        .map_err(edge_error(layer, i, j))
                })
                .collect::<Result<Vec<f64>>>()?
        }
        RelevanceMode::Literal => {
            // whole-layer relevance does not depend on the source unit
            let per_target = (0..b)
                .into_par_iter()
                .map(|j| {
                    mutual_information(source, target.column(j), config)
                        .map(|m| m.value)
                        .map_err(edge_error(layer, 0, j))
                })
                .collect::<Result<Vec<f64>>>()?;
            (0..a).flat_map(|_| per_target.iter().copied()).collect()
        }
    };

    let silent: Vec<bool> = (0..b)
        .map(|j| is_constant(target.column(j).iter()))
        .collect();
    Ok((0..a)
        .map(|i| {
            (0..b)
                .map(|j| {
                    if silent[j] {
                        0.0
                    } else {
                        relevance[i * b + j] - config.beta * redundancy[i]
                    }
                })
                .collect()
        })
        .collect())
}
