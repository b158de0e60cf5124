//! Neural Information Flow (NIF) analysis for small feedforward and
//! convolutional classifiers.
//!
//! A trained model plus a dataset is turned into a layered graph whose edges
//! carry mutual-information weights between consecutive units (neurons, or
//! spatially averaged channels). The graph then feeds:
//!
//! - betweenness centrality and modularity-based communities ([`network_science`]),
//! - path-sum feature attribution and per-sample saliency ([`attribution`]),
//! - information-ranked pruning sweeps ([`pruning`]).
//!
//! All arithmetic is `f64`. Information quantities are in nats.
//!
//! ```no_run
//! use nifflow_core::{build_nif_graph, forward, load_dataset, load_model, EstimatorConfig, FlowMode};
//!
//! # fn main() -> nifflow_core::Result<()> {
//! let model = load_model("iris.model.json")?;
//! let data = load_dataset("iris_train.csv")?;
//! let acts = forward(&model, &data)?;
//! let graph = build_nif_graph(&model, &acts, &EstimatorConfig::default(), FlowMode::MeanMi)?;
//! println!("{} edges", graph.edges.len());
//! # Ok(())
//! # }
//! ```

pub mod attribution;
pub mod error;
pub mod estimators;
pub mod model_io;
pub mod network_science;
pub mod nif_graph;
pub mod pruning;

pub use attribution::{
    attribution_matrix, ks_two_sample, raw_mi_attribution, saliency_map, AttributionMatrix,
    KsResult, SaliencyMap,
};
pub use error::{NifError, Result};
pub use estimators::{
    histogram_mi, ksg_mi, mutual_information, nif_feature, nif_terms, pmi_per_sample, self_checks,
    EstimatorConfig, EstimatorKind, MiEstimate, NifTerms, RelevanceMode, SelfCheck,
};
pub use model_io::{
    forward, load_dataset, load_model, predict_accuracy, Activation, ActivationRecord, Dataset,
    Layer, LayerActivations, ModelGraph, Shape,
};
pub use network_science::{
    betweenness, detect_communities, modularity, CentralityScores, CommunityAssignment,
    EdgeLengthMode, WeightedGraph,
};
pub use nif_graph::{
    build_nif_graph, export_graph, ExportFormat, FlowMode, GraphAnalysis, NifEdge, NifGraph,
    NifNode, NodeKind, UnitRef,
};
pub use pruning::{
    apply_prune_mask, edge_ranking, prune_sweep, PruneReport, PruneSchedule, PruneStep,
};
