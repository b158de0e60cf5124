//! The Neural Information Flow graph: units as nodes, information-weighted
//! edges between consecutive layers.

mod build;
mod export;

pub use build::build_nif_graph;
pub use export::{export_graph, ExportFormat};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{NifError, Result};
use crate::estimators::EstimatorConfig;
use crate::network_science::{betweenness, detect_communities, EdgeLengthMode, WeightedGraph};

/// How edge weights were computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FlowMode {
    /// Mean mutual information with the relevance/redundancy correction.
    MeanMi,
    /// Pointwise mutual information at one sample.
    Pmi { sample: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    InputFeature,
    HiddenNeuron,
    Channel,
    ClassOutput,
}

/// A unit addressed by graph layer (0 = input) and index within the layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnitRef {
    pub layer: usize,
    pub unit: usize,
}

impl UnitRef {
    pub fn new(layer: usize, unit: usize) -> Self {
        UnitRef { layer, unit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NifNode {
    pub id: usize,
    pub layer: usize,
    pub unit: usize,
    pub kind: NodeKind,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NifEdge {
    pub src: usize,
    pub dst: usize,
    /// Estimator output in nats, possibly negative.
    pub weight_raw: f64,
    /// `max(weight_raw, 0)`; used for attribution and pruning.
    pub weight_clamped: f64,
    /// Clamped weight over the layer's largest clamped weight, in [0, 1].
    pub weight_norm: f64,
}

/// Centrality and community results attached to a graph for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphAnalysis {
    pub centrality: Vec<f64>,
    pub edge_length: EdgeLengthMode,
    pub communities: Vec<usize>,
    pub modularity: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NifGraph {
    /// Units per graph layer, input first.
    pub layer_sizes: Vec<usize>,
    pub nodes: Vec<NifNode>,
    /// Sorted by (layer, src, dst).
    pub edges: Vec<NifEdge>,
    pub mode: FlowMode,
    pub config: EstimatorConfig,
    pub model_fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<GraphAnalysis>,
    /// Caller-supplied invocation record, carried verbatim into exports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
}

impl NifGraph {
    /// Assembles a fully connected layered graph from per-layer raw weight
    /// matrices (`weights[l]` is units_l x units_{l+1}) and normalizes it.
    pub fn from_layer_weights(
        weights: &[Array2<f64>],
        mode: FlowMode,
        config: EstimatorConfig,
        model_fingerprint: impl Into<String>,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(NifError::NotLayered("no layers".into()));
        }
        let mut layer_sizes = vec![weights[0].nrows()];
        for (l, w) in weights.iter().enumerate() {
            if w.nrows() != *layer_sizes.last().expect("nonempty") {
                return Err(NifError::DimensionMismatch(format!(
                    "weight matrix {l} has {} rows, previous layer has {} units",
                    w.nrows(),
                    layer_sizes[l]
                )));
            }
            layer_sizes.push(w.ncols());
        }
        let nodes = default_nodes(&layer_sizes, None);
        let offsets = offsets(&layer_sizes);
        let mut edges = Vec::new();
        for (l, w) in weights.iter().enumerate() {
            for ((i, j), &raw) in w.indexed_iter() {
                edges.push(NifEdge {
                    src: offsets[l] + i,
                    dst: offsets[l + 1] + j,
                    weight_raw: raw,
                    weight_clamped: 0.0,
                    weight_norm: 0.0,
                });
            }
        }
        let mut graph = NifGraph {
            layer_sizes,
            nodes,
            edges,
            mode,
            config,
            model_fingerprint: model_fingerprint.into(),
            analysis: None,
            run_config: None,
        };
        graph.sort_edges();
        graph.normalize();
        Ok(graph)
    }

    pub fn layer_count(&self) -> usize {
        self.layer_sizes.len()
    }

    /// First node id of every layer.
    pub fn layer_offsets(&self) -> Vec<usize> {
        offsets(&self.layer_sizes)
    }

    pub fn node_id(&self, unit: UnitRef) -> Option<usize> {
        let size = *self.layer_sizes.get(unit.layer)?;
        (unit.unit < size).then(|| self.layer_offsets()[unit.layer] + unit.unit)
    }

    /// Graph layer of the edge's source node.
    pub fn edge_layer(&self, edge: &NifEdge) -> usize {
        self.nodes[edge.src].layer
    }

    fn sort_edges(&mut self) {
        let layer_of: Vec<usize> = self.nodes.iter().map(|n| n.layer).collect();
        self.edges.sort_by_key(|e| (layer_of[e.src], e.src, e.dst));
    }

    /// Recomputes clamped and per-layer normalized weights from raw weights.
    pub fn normalize(&mut self) {
        let mut layer_max = vec![0.0f64; self.layer_sizes.len()];
        for e in &mut self.edges {
            e.weight_clamped = e.weight_raw.max(0.0);
            let l = self.nodes[e.src].layer;
            layer_max[l] = layer_max[l].max(e.weight_clamped);
        }
        for e in &mut self.edges {
            let max = layer_max[self.nodes[e.src].layer];
            e.weight_norm = if max > 0.0 {
                e.weight_clamped / max
            } else {
                0.0
            };
        }
    }

    /// Checks node numbering and that every edge joins consecutive layers.
    pub fn validate(&self) -> Result<()> {
        let expected: usize = self.layer_sizes.iter().sum();
        if self.nodes.len() != expected {
            return Err(NifError::NotLayered(format!(
                "{} nodes for layer sizes {:?}",
                self.nodes.len(),
                self.layer_sizes
            )));
        }
        let offsets = self.layer_offsets();
        for (id, node) in self.nodes.iter().enumerate() {
            let ok = node.id == id
                && node.layer < self.layer_sizes.len()
                && offsets[node.layer] + node.unit == id
                && node.unit < self.layer_sizes[node.layer];
            if !ok {
                return Err(NifError::NotLayered(format!("node {id} is misnumbered")));
            }
        }
        for e in &self.edges {
            let (Some(s), Some(d)) = (self.nodes.get(e.src), self.nodes.get(e.dst)) else {
                return Err(NifError::NotLayered(format!(
                    "edge {} -> {} references a missing node",
                    e.src, e.dst
                )));
            };
            if d.layer != s.layer + 1 {
                return Err(NifError::NotLayered(format!(
                    "edge {} -> {} joins layers {} and {}",
                    e.src, e.dst, s.layer, d.layer
                )));
            }
        }
        Ok(())
    }

    /// Directed weighted view using normalized weights.
    pub fn to_weighted_graph(&self) -> WeightedGraph {
        let mut g = WeightedGraph::directed(self.nodes.len());
        for e in &self.edges {
            g.add_edge(e.src, e.dst, e.weight_norm);
        }
        g
    }

    /// Computes betweenness (directed, on normalized weights) and
    /// communities (on the symmetrized graph) and attaches them.
    pub fn analyze(&mut self, gamma: f64, edge_length: EdgeLengthMode, seed: u64) -> Result<()> {
        let g = self.to_weighted_graph();
        let centrality = betweenness(&g, edge_length);
        let communities = detect_communities(&g, gamma, seed)?;
        self.analysis = Some(GraphAnalysis {
            centrality: centrality.scores,
            edge_length,
            communities: communities.communities,
            modularity: communities.modularity,
            gamma,
        });
        Ok(())
    }
}

fn offsets(layer_sizes: &[usize]) -> Vec<usize> {
    layer_sizes
        .iter()
        .scan(0, |acc, &s| {
            let start = *acc;
            *acc += s;
            Some(start)
        })
        .collect()
}

/// Nodes for a plain layered graph; `kinds` overrides the per-layer kind.
pub(crate) fn default_nodes(layer_sizes: &[usize], kinds: Option<&[NodeKind]>) -> Vec<NifNode> {
    let last = layer_sizes.len() - 1;
    let mut nodes = Vec::new();
    for (layer, &size) in layer_sizes.iter().enumerate() {
        let kind = match kinds {
            Some(k) => k[layer],
            None if layer == 0 => NodeKind::InputFeature,
            None if layer == last => NodeKind::ClassOutput,
            None => NodeKind::HiddenNeuron,
        };
        for unit in 0..size {
            let label = match kind {
                NodeKind::InputFeature => format!("x{unit}"),
                NodeKind::HiddenNeuron => format!("h{layer}.{unit}"),
                NodeKind::Channel => format!("c{layer}.{unit}"),
                NodeKind::ClassOutput => format!("class{unit}"),
            };
            nodes.push(NifNode {
                id: nodes.len(),
                layer,
                unit,
                kind,
                label,
            });
        }
    }
    nodes
}
