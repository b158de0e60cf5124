//! Model and dataset loading, deterministic forward passes, activation capture.

mod dataset;
mod forward;
mod model;

pub use dataset::{load_dataset, Dataset, ImageMeta};
pub use forward::{forward, predict_accuracy, ActivationRecord, LayerActivations};
pub use model::{load_model, Activation, Layer, ModelGraph, Shape};
