//! Path-sum attribution, per-sample saliency, raw-MI baselines and the
//! two-sample Kolmogorov-Smirnov comparison.

mod ks;
mod matrix;
mod raw_mi;
mod saliency;

pub use ks::{ks_two_sample, KsResult};
pub use matrix::{attribution_matrix, layer_weight_matrices, signed_path_sums, AttributionMatrix};
pub use raw_mi::raw_mi_attribution;
pub use saliency::{saliency_map, SaliencyMap};
