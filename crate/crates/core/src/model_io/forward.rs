use ndarray::{Array1, Array2, Array3, Array4, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use super::dataset::Dataset;
use super::model::{Activation, Layer, ModelGraph, Shape};
use crate::error::{NifError, Result};

/// Activations captured after one model layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations {
    pub kind: &'static str,
    /// N x units. For conv layers these are the channel (spatial) means.
    pub units: Array2<f64>,
    /// Raw N x ch x h x w tensor for conv layers.
    pub raw: Option<Array4<f64>>,
}

/// Per-layer activations for every sample, ordered by sample index.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRecord {
    /// The input features, N x n.
    pub input: Array2<f64>,
    pub feature_names: Vec<String>,
    pub layers: Vec<LayerActivations>,
    /// Pre-activation outputs of the final layer.
    pub logits: Array2<f64>,
}

impl ActivationRecord {
    pub fn sample_count(&self) -> usize {
        self.input.nrows()
    }

    /// The unit matrices that become NIF graph layers: the input, then every
    /// dense or conv layer (flatten layers carry no units of their own).
    pub fn unit_layers(&self) -> Vec<ArrayView2<'_, f64>> {
        std::iter::once(self.input.view())
            .chain(
                self.layers
                    .iter()
                    .filter(|l| l.kind != "flatten")
                    .map(|l| l.units.view()),
            )
            .collect()
    }

    /// Final-layer outputs (post-activation).
    pub fn outputs(&self) -> ArrayView2<'_, f64> {
        self.layers.last().expect("model has layers").units.view()
    }
}

enum Tensor {
    Vector(Array1<f64>),
    Image(Array3<f64>),
}

struct SampleTrace {
    outputs: Vec<Tensor>,
    logits: Array1<f64>,
}

fn apply_activation(values: &mut [f64], activation: Activation) {
    match activation {
        Activation::Identity => {}
        Activation::Relu => values.iter_mut().for_each(|v| *v = v.max(0.0)),
        Activation::Softmax => {
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in values.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            values.iter_mut().for_each(|v| *v /= sum);
        }
    }
}

fn conv2d(
    input: &Array3<f64>,
    weights: &Array4<f64>,
    bias: &Array1<f64>,
    stride: usize,
) -> Array3<f64> {
    let (out_ch, in_ch, kh, kw) = weights.dim();
    let (_, h, w) = input.dim();
    let oh = (h - kh) / stride + 1;
    let ow = (w - kw) / stride + 1;
    Array3::from_shape_fn((out_ch, oh, ow), |(o, y, x)| {
        let mut acc = bias[o];
        for c in 0..in_ch {
            for i in 0..kh {
                for j in 0..kw {
                    acc += weights[[o, c, i, j]] * input[[c, y * stride + i, x * stride + j]];
                }
            }
        }
        acc
    })
}

fn run_sample(model: &ModelGraph, row: ArrayView1<'_, f64>) -> SampleTrace {
    let mut current = match model.input_shape() {
        Shape::Vector(_) => Tensor::Vector(row.to_owned()),
        Shape::Image {
            channels,
            height,
            width,
        } => {
            // dataset rows are (h, w, ch) row-major; tensors are channel-major
            Tensor::Image(Array3::from_shape_fn(
                (channels, height, width),
                |(c, y, x)| row[(y * width + x) * channels + c],
            ))
        }
    };
    let mut outputs = Vec::with_capacity(model.layers().len());
    let mut logits = Array1::zeros(0);
    let last = model.layers().len() - 1;
    for (index, layer) in model.layers().iter().enumerate() {
        let next = match (layer, &current) {
            (
                Layer::Dense {
                    weights,
                    bias,
                    activation,
                },
                Tensor::Vector(x),
            ) => {
                let mut z = weights.dot(x) + bias;
                if index == last {
                    logits = z.clone();
                }
                apply_activation(z.as_slice_mut().expect("contiguous"), *activation);
                Tensor::Vector(z)
            }
            (
                Layer::Conv2d {
                    weights,
                    bias,
                    stride,
                    activation,
                },
                Tensor::Image(x),
            ) => {
                let mut z = conv2d(x, weights, bias, *stride);
                apply_activation(z.as_slice_mut().expect("contiguous"), *activation);
                Tensor::Image(z)
            }
            (Layer::Flatten, Tensor::Image(x)) => {
                Tensor::Vector(Array1::from_iter(x.iter().copied()))
            }
            _ => unreachable!("shapes validated at construction"),
        };
        outputs.push(match &next {
            Tensor::Vector(v) => Tensor::Vector(v.clone()),
            Tensor::Image(t) => Tensor::Image(t.clone()),
        });
        current = next;
    }
    SampleTrace { outputs, logits }
}

/// Runs the model over every sample and records all layer activations.
///
/// Samples are evaluated in parallel; the record is assembled in sample order
/// so the result does not depend on scheduling.
pub fn forward(model: &ModelGraph, dataset: &Dataset) -> Result<ActivationRecord> {
    if dataset.feature_dim() != model.input_dim() {
        return Err(NifError::DimensionMismatch(format!(
            "dataset has {} features, model expects {}",
            dataset.feature_dim(),
            model.input_dim()
        )));
    }
    if let (
        Shape::Image {
            channels,
            height,
            width,
        },
        Some(shape),
    ) = (model.input_shape(), dataset.image_shape)
    {
        if shape != (height, width, channels) {
            return Err(NifError::DimensionMismatch(format!(
                "dataset image shape {shape:?}, model expects {:?}",
                (height, width, channels)
            )));
        }
    }
    let n = dataset.len();
    let traces: Vec<SampleTrace> = (0..n)
        .into_par_iter()
        .map(|i| run_sample(model, dataset.features.row(i)))
        .collect();

    let mut layers = Vec::with_capacity(model.layers().len());
    for (l, (layer, shape)) in model.layers().iter().zip(model.layer_shapes()).enumerate() {
        let record = match *shape {
            Shape::Vector(units) => {
                let mut m = Array2::zeros((n, units));
                for (i, trace) in traces.iter().enumerate() {
                    if let Tensor::Vector(v) = &trace.outputs[l] {
                        m.row_mut(i).assign(v);
                    }
                }
                LayerActivations {
                    kind: layer.kind_name(),
                    units: m,
                    raw: None,
                }
            }
            Shape::Image {
                channels,
                height,
                width,
            } => {
                let mut raw = Array4::zeros((n, channels, height, width));
                for (i, trace) in traces.iter().enumerate() {
                    if let Tensor::Image(t) = &trace.outputs[l] {
                        raw.index_axis_mut(Axis(0), i).assign(t);
                    }
                }
                LayerActivations {
                    kind: layer.kind_name(),
                    units: channel_means(&raw),
                    raw: Some(raw),
                }
            }
        };
        layers.push(record);
    }
    let classes = model.class_count();
    let mut logits = Array2::zeros((n, classes));
    for (i, trace) in traces.iter().enumerate() {
        logits.row_mut(i).assign(&trace.logits);
    }
    Ok(ActivationRecord {
        input: dataset.features.clone(),
        feature_names: dataset.feature_names.clone(),
        layers,
        logits,
    })
}

/// N x ch x h x w -> N x ch spatial means.
pub(crate) fn channel_means(raw: &Array4<f64>) -> Array2<f64> {
    let (n, ch, h, w) = raw.dim();
    let area = (h * w) as f64;
    Array2::from_shape_fn((n, ch), |(i, c)| {
        raw.index_axis(Axis(0), i).index_axis(Axis(0), c).sum() / area
    })
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Fraction of samples whose argmax logit equals the label.
pub fn predict_accuracy(model: &ModelGraph, dataset: &Dataset) -> Result<f64> {
    dataset.check_labels(model.class_count())?;
    let record = forward(model, dataset)?;
    let correct = record
        .logits
        .outer_iter()
        .zip(&dataset.labels)
        .filter(|(row, &label)| argmax(row.view()) == label)
        .count();
    Ok(correct as f64 / dataset.len() as f64)
}
