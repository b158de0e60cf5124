//! Information-ranked weight pruning sweeps.
//!
//! Edges are ranked once, ascending by clamped NIF weight (ties broken by
//! layer, source, destination), and zeroed cumulatively. NIF edge
//! `(l, i) -> (l + 1, j)` maps to entry `[j, i]` of dense layer `l`'s weight
//! matrix. A neuron's bias is zeroed once every incoming weight has been
//! pruned, so fully disconnected neurons stop contributing.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{NifError, Result};
use crate::model_io::{predict_accuracy, Dataset, Layer, ModelGraph};
use crate::nif_graph::{FlowMode, NifGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneStep {
    pub zeroed_weights: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    /// Strictly increasing counts, starting with the unpruned baseline.
    pub steps: Vec<PruneStep>,
    pub model_fingerprint: String,
    pub mode: FlowMode,
}

impl PruneReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("zeroed_weights,accuracy\n");
        for s in &self.steps {
            let _ = writeln!(out, "{},{}", s.zeroed_weights, s.accuracy);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PruneSchedule {
    /// Absolute numbers of zeroed weights.
    Counts(Vec<usize>),
    /// Fractions of all prunable weights, rounded to the nearest count.
    Fractions(Vec<f64>),
    /// Every count from 0 to the total.
    Full,
}

impl PruneSchedule {
    fn resolve(&self, total: usize) -> Result<Vec<usize>> {
        let mut counts: Vec<usize> = match self {
            PruneSchedule::Counts(c) => c.clone(),
            PruneSchedule::Fractions(f) => f
                .iter()
                .map(|&x| {
                    if (0.0..=1.0).contains(&x) {
                        Ok((x * total as f64).round() as usize)
                    } else {
                        Err(NifError::InvalidConfig(format!(
                            "prune fraction {x} outside [0, 1]"
                        )))
                    }
                })
                .collect::<Result<_>>()?,
            PruneSchedule::Full => (0..=total).collect(),
        };
        if let Some(&bad) = counts.iter().find(|&&c| c > total) {
            return Err(NifError::InvalidConfig(format!(
                "cannot zero {bad} weights, model has {total} prunable weights"
            )));
        }
        counts.push(0);
        counts.sort_unstable();
        counts.dedup();
        Ok(counts)
    }
}

/// Edge indices ordered by ascending clamped weight; ties keep graph order.
pub fn edge_ranking(graph: &NifGraph) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..graph.edges.len()).collect();
    idx.sort_by(|&a, &b| {
        graph.edges[a]
            .weight_clamped
            .total_cmp(&graph.edges[b].weight_clamped)
    });
    idx
}

fn check_prunable(model: &ModelGraph, graph: &NifGraph) -> Result<()> {
    if model.has_conv() {
        return Err(NifError::Unsupported(
            "pruning is defined for dense models only".into(),
        ));
    }
    if graph.model_fingerprint != model.fingerprint() {
        return Err(NifError::InvalidConfig(
            "graph was not built from this model".into(),
        ));
    }
    graph.validate()?;
    let expected: Vec<usize> = std::iter::once(model.input_dim())
        .chain(model.layer_shapes().iter().map(|s| s.len()))
        .collect();
    if graph.layer_sizes != expected {
        return Err(NifError::DimensionMismatch(format!(
            "graph layers {:?}, model layers {:?}",
            graph.layer_sizes, expected
        )));
    }
    Ok(())
}

/// Copy of `model` with the weights behind `edges` zeroed, plus the biases
/// of neurons whose incoming weights are all pruned.
pub fn apply_prune_mask(
    model: &ModelGraph,
    graph: &NifGraph,
    edges: &[usize],
) -> Result<ModelGraph> {
    check_prunable(model, graph)?;
    let mut pruned = model.clone();
    let mut cut_inputs: Vec<Vec<usize>> =
        graph.layer_sizes[1..].iter().map(|&s| vec![0; s]).collect();
    for &e in edges {
        let edge = graph
            .edges
            .get(e)
            .ok_or_else(|| NifError::IndexOutOfRange(format!("edge {e}")))?;
        let src = &graph.nodes[edge.src];
        let dst = &graph.nodes[edge.dst];
        if let Layer::Dense { weights, .. } = &mut pruned.layers_mut()[src.layer] {
            weights[[dst.unit, src.unit]] = 0.0;
            cut_inputs[src.layer][dst.unit] += 1;
        }
    }
    for (l, layer) in pruned.layers_mut().iter_mut().enumerate() {
        if let Layer::Dense { weights, bias, .. } = layer {
            for (j, &cut) in cut_inputs[l].iter().enumerate() {
                if cut >= weights.ncols() {
                    bias[j] = 0.0;
                }
            }
        }
    }
    Ok(pruned)
}

/// Zeroes weights in ascending NIF order and records accuracy on `eval`
/// after each scheduled count. `model` itself is never modified.
pub fn prune_sweep(
    model: &ModelGraph,
    eval: &Dataset,
    graph: &NifGraph,
    schedule: &PruneSchedule,
) -> Result<PruneReport> {
    check_prunable(model, graph)?;
    let ranking = edge_ranking(graph);
    let counts = schedule.resolve(ranking.len())?;
    let mut steps = Vec::with_capacity(counts.len());
    for count in counts {
        let accuracy = if count == 0 {
            predict_accuracy(model, eval)?
        } else {
            let pruned = apply_prune_mask(model, graph, &ranking[..count])?;
            predict_accuracy(&pruned, eval)?
        };
        log::debug!("zeroed {count}: accuracy {accuracy:.4}");
        steps.push(PruneStep {
            zeroed_weights: count,
            accuracy,
        });
    }
    Ok(PruneReport {
        steps,
        model_fingerprint: model.fingerprint(),
        mode: graph.mode,
    })
}
