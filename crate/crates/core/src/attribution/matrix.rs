use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{NifError, Result};
use crate::nif_graph::NifGraph;

/// Features x classes matrix of aggregated flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionMatrix {
    pub values: Array2<f64>,
    pub feature_names: Vec<String>,
    pub class_labels: Vec<String>,
}

impl AttributionMatrix {
    /// Long-format CSV: `feature,class,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,class,value\n");
        for ((i, j), v) in self.values.indexed_iter() {
            let _ = writeln!(
                out,
                "{},{},{v}",
                self.feature_names[i], self.class_labels[j]
            );
        }
        out
    }
}

/// Per-layer weight matrices (units_l x units_{l+1}), clamped or signed.
pub fn layer_weight_matrices(graph: &NifGraph, signed: bool) -> Result<Vec<Array2<f64>>> {
    graph.validate()?;
    if graph.layer_count() < 2 {
        return Err(NifError::NotLayered(
            "graph needs at least two layers".into(),
        ));
    }
    let mut mats: Vec<Array2<f64>> = graph
        .layer_sizes
        .windows(2)
        .map(|w| Array2::zeros((w[0], w[1])))
        .collect();
    for e in &graph.edges {
        let s = &graph.nodes[e.src];
        let d = &graph.nodes[e.dst];
        let w = if signed {
            e.weight_raw
        } else {
            e.weight_clamped
        };
        mats[s.layer][[s.unit, d.unit]] += w;
    }
    Ok(mats)
}

fn chain_product(mats: &[Array2<f64>]) -> Array2<f64> {
    let mut acc = mats[0].clone();
    for m in &mats[1..] {
        acc = acc.dot(m);
    }
    acc
}

fn labels(graph: &NifGraph) -> (Vec<String>, Vec<String>) {
    let last = graph.layer_count() - 1;
    let features = graph
        .nodes
        .iter()
        .filter(|n| n.layer == 0)
        .map(|n| n.label.clone())
        .collect();
    let classes = graph
        .nodes
        .iter()
        .filter(|n| n.layer == last)
        .map(|n| n.label.clone())
        .collect();
    (features, classes)
}

/// Sum over all input-to-output paths of the product of clamped edge
/// weights along each path.
///
/// On a layered graph the path sum factorizes into the chain product of the
/// per-layer weight matrices, which is what is evaluated here.
pub fn attribution_matrix(graph: &NifGraph) -> Result<AttributionMatrix> {
    let mats = layer_weight_matrices(graph, false)?;
    let (feature_names, class_labels) = labels(graph);
    Ok(AttributionMatrix {
        values: chain_product(&mats),
        feature_names,
        class_labels,
    })
}

/// As [`attribution_matrix`] but over signed raw weights.
pub fn signed_path_sums(graph: &NifGraph) -> Result<AttributionMatrix> {
    let mats = layer_weight_matrices(graph, true)?;
    let (feature_names, class_labels) = labels(graph);
    Ok(AttributionMatrix {
        values: chain_product(&mats),
        feature_names,
        class_labels,
    })
}
