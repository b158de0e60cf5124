use std::fmt;
use std::path::Path;

use ndarray::{Array1, Array2, Array4};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{NifError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softmax,
    Identity,
}

impl Activation {
    fn parse(layer: usize, name: &str) -> Result<Self> {
        match name {
            "relu" => Ok(Activation::Relu),
            "softmax" => Ok(Activation::Softmax),
            "identity" | "linear" | "none" => Ok(Activation::Identity),
            other => Err(NifError::UnknownActivation {
                layer,
                name: other.to_string(),
            }),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Softmax => "softmax",
            Activation::Identity => "identity",
        }
    }
}

/// Shape of the tensor flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Vector(usize),
    /// Channel-major image tensor.
    Image {
        channels: usize,
        height: usize,
        width: usize,
    },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Image {
                channels,
                height,
                width,
            } => channels * height * width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Vector(n) => write!(f, "[{n}]"),
            Shape::Image {
                channels,
                height,
                width,
            } => write!(f, "[{channels}ch x {height} x {width}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// `weights` is out x in.
    Dense {
        weights: Array2<f64>,
        bias: Array1<f64>,
        activation: Activation,
    },
    /// `weights` is out-ch x in-ch x kh x kw; valid padding only.
    Conv2d {
        weights: Array4<f64>,
        bias: Array1<f64>,
        stride: usize,
        activation: Activation,
    },
    /// Channel-major flattening of an image tensor.
    Flatten,
}

impl Layer {
    pub fn activation(&self) -> Activation {
        match self {
            Layer::Dense { activation, .. } | Layer::Conv2d { activation, .. } => *activation,
            Layer::Flatten => Activation::Identity,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense { .. } => "dense",
            Layer::Conv2d { .. } => "conv2d",
            Layer::Flatten => "flatten",
        }
    }

    fn output_shape(&self, index: usize, input: Shape) -> Result<Shape> {
        match (self, input) {
            (Layer::Dense { weights, .. }, Shape::Vector(n)) => {
                if weights.ncols() != n {
                    return Err(NifError::ShapeMismatch {
                        layer: index,
                        expected: format!("input dim {n}"),
                        actual: format!("input dim {}", weights.ncols()),
                    });
                }
                Ok(Shape::Vector(weights.nrows()))
            }
            (Layer::Dense { .. }, shape @ Shape::Image { .. }) => Err(NifError::ShapeMismatch {
                layer: index,
                expected: "vector input (insert a flatten layer)".into(),
                actual: shape.to_string(),
            }),
            (
                Layer::Conv2d {
                    weights, stride, ..
                },
                Shape::Image {
                    channels,
                    height,
                    width,
                },
            ) => {
                let (out_ch, in_ch, kh, kw) = weights.dim();
                if in_ch != channels {
                    return Err(NifError::ShapeMismatch {
                        layer: index,
                        expected: format!("{channels} input channels"),
                        actual: format!("{in_ch} input channels"),
                    });
                }
                if kh > height || kw > width || kh == 0 || kw == 0 {
                    return Err(NifError::ShapeMismatch {
                        layer: index,
                        expected: format!("kernel within {height}x{width}"),
                        actual: format!("kernel {kh}x{kw}"),
                    });
                }
                Ok(Shape::Image {
                    channels: out_ch,
                    height: (height - kh) / stride + 1,
                    width: (width - kw) / stride + 1,
                })
            }
            (Layer::Conv2d { .. }, shape @ Shape::Vector(_)) => Err(NifError::ShapeMismatch {
                layer: index,
                expected: "image input".into(),
                actual: shape.to_string(),
            }),
            (Layer::Flatten, shape @ Shape::Image { .. }) => Ok(Shape::Vector(shape.len())),
            (Layer::Flatten, shape @ Shape::Vector(_)) => Err(NifError::ShapeMismatch {
                layer: index,
                expected: "image input".into(),
                actual: shape.to_string(),
            }),
        }
    }
}

/// A validated layered feedforward classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    layers: Vec<Layer>,
    input_shape: Shape,
    class_count: usize,
    // shapes[l] is the output shape of layer l
    shapes: Vec<Shape>,
}

impl ModelGraph {
    /// Validates layer compatibility and builds the model.
    pub fn new(input_shape: Shape, class_count: usize, layers: Vec<Layer>) -> Result<Self> {
        if class_count == 0 {
            return Err(NifError::InvalidModel(
                "class_count must be positive".into(),
            ));
        }
        if layers.is_empty() {
            return Err(NifError::InvalidModel("model has no layers".into()));
        }
        if input_shape.is_empty() {
            return Err(NifError::InvalidModel("empty input shape".into()));
        }
        let finite = layers.iter().all(|l| match l {
            Layer::Dense { weights, bias, .. } => {
                weights.iter().chain(bias.iter()).all(|v| v.is_finite())
            }
            Layer::Conv2d { weights, bias, .. } => {
                weights.iter().chain(bias.iter()).all(|v| v.is_finite())
            }
            Layer::Flatten => true,
        });
        if !finite {
            return Err(NifError::NonFinite("model parameters"));
        }
        let last = layers.len() - 1;
        let mut shapes = Vec::with_capacity(layers.len());
        let mut current = input_shape;
        for (index, layer) in layers.iter().enumerate() {
            match layer {
                Layer::Dense { weights, bias, .. } if bias.len() != weights.nrows() => {
                    return Err(NifError::ShapeMismatch {
                        layer: index,
                        expected: format!("bias of length {}", weights.nrows()),
                        actual: format!("bias of length {}", bias.len()),
                    });
                }
                Layer::Conv2d {
                    weights,
                    bias,
                    stride,
                    ..
                } => {
                    if bias.len() != weights.dim().0 {
                        return Err(NifError::ShapeMismatch {
                            layer: index,
                            expected: format!("bias of length {}", weights.dim().0),
                            actual: format!("bias of length {}", bias.len()),
                        });
                    }
                    if *stride == 0 {
                        return Err(NifError::InvalidModel(format!("layer {index}: stride 0")));
                    }
                }
                _ => {}
            }
            if layer.activation() == Activation::Softmax && index != last {
                return Err(NifError::InvalidModel(format!(
                    "layer {index}: softmax is only permitted on the final layer"
                )));
            }
            current = layer.output_shape(index, current)?;
            shapes.push(current);
        }
        match current {
            Shape::Vector(n) if n == class_count => {}
            other => {
                return Err(NifError::ShapeMismatch {
                    layer: last,
                    expected: format!("output dim {class_count} (class_count)"),
                    actual: other.to_string(),
                })
            }
        }
        Ok(ModelGraph {
            layers,
            input_shape,
            class_count,
            shapes,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Output shape of every layer, in order.
    pub fn layer_shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn input_dim(&self) -> usize {
        self.input_shape.len()
    }

    pub fn has_conv(&self) -> bool {
        self.layers
            .iter()
            .any(|l| matches!(l, Layer::Conv2d { .. }))
    }

    /// Mutable access for pruning; callers must keep shapes intact.
    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Serializes to the JSON model document.
    pub fn to_json(&self) -> String {
        let input_shape = match self.input_shape {
            Shape::Vector(n) => vec![n],
            Shape::Image {
                channels,
                height,
                width,
            } => vec![height, width, channels],
        };
        let layers = self
            .layers
            .iter()
            .map(|layer| match layer {
                Layer::Dense {
                    weights,
                    bias,
                    activation,
                } => LayerDoc {
                    kind: "dense".into(),
                    activation: Some(activation.name().into()),
                    stride: None,
                    weights: Some(Value::from(
                        weights
                            .outer_iter()
                            .map(|row| row.to_vec())
                            .collect::<Vec<_>>(),
                    )),
                    bias: Some(bias.to_vec()),
                },
                Layer::Conv2d {
                    weights,
                    bias,
                    stride,
                    activation,
                } => {
                    let nested: Vec<Vec<Vec<Vec<f64>>>> = weights
                        .outer_iter()
                        .map(|o| {
                            o.outer_iter()
                                .map(|c| c.outer_iter().map(|r| r.to_vec()).collect())
                                .collect()
                        })
                        .collect();
                    LayerDoc {
                        kind: "conv2d".into(),
                        activation: Some(activation.name().into()),
                        stride: Some(*stride),
                        weights: Some(serde_json::to_value(nested).expect("finite weights")),
                        bias: Some(bias.to_vec()),
                    }
                }
                Layer::Flatten => LayerDoc {
                    kind: "flatten".into(),
                    activation: None,
                    stride: None,
                    weights: None,
                    bias: None,
                },
            })
            .collect();
        let doc = ModelDoc {
            input_shape,
            class_count: self.class_count,
            layers,
        };
        serde_json::to_string(&doc).expect("model serializes")
    }

    /// Parses and validates a JSON model document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc =
            serde_json::from_str(text).map_err(|e| NifError::Parse(format!("model: {e}")))?;
        let input_shape = match doc.input_shape.as_slice() {
            [n] => Shape::Vector(*n),
            [h, w, c] => Shape::Image {
                channels: *c,
                height: *h,
                width: *w,
            },
            other => {
                return Err(NifError::InvalidModel(format!(
                    "input_shape must be [n] or [h, w, ch], got {other:?}"
                )))
            }
        };
        let layers = doc
            .layers
            .into_iter()
            .enumerate()
            .map(|(index, l)| l.into_layer(index))
            .collect::<Result<Vec<_>>>()?;
        ModelGraph::new(input_shape, doc.class_count, layers)
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| NifError::io(path, e))?;
    ModelGraph::from_json(&text)
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    input_shape: Vec<usize>,
    class_count: usize,
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    activation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<f64>>,
}

impl LayerDoc {
    fn into_layer(self, index: usize) -> Result<Layer> {
        let activation =
            Activation::parse(index, self.activation.as_deref().unwrap_or("identity"))?;
        let missing = |what: &str| NifError::InvalidModel(format!("layer {index}: missing {what}"));
        match self.kind.as_str() {
            "dense" => {
                let weights = self.weights.ok_or_else(|| missing("weights"))?;
                let (dims, flat) = flatten_nested(&weights, index)?;
                let [rows, cols] = dims[..] else {
                    return Err(NifError::ShapeMismatch {
                        layer: index,
                        expected: "2-d weight array".into(),
                        actual: format!("{}-d", dims.len()),
                    });
                };
                let weights = Array2::from_shape_vec((rows, cols), flat)
                    .map_err(|e| NifError::Parse(e.to_string()))?;
                Ok(Layer::Dense {
                    weights,
                    bias: Array1::from(self.bias.ok_or_else(|| missing("bias"))?),
                    activation,
                })
            }
            "conv2d" => {
                let weights = self.weights.ok_or_else(|| missing("weights"))?;
                let (dims, flat) = flatten_nested(&weights, index)?;
                let [o, i, kh, kw] = dims[..] else {
                    return Err(NifError::ShapeMismatch {
                        layer: index,
                        expected: "4-d weight array".into(),
                        actual: format!("{}-d", dims.len()),
                    });
                };
                let weights = Array4::from_shape_vec((o, i, kh, kw), flat)
                    .map_err(|e| NifError::Parse(e.to_string()))?;
                Ok(Layer::Conv2d {
                    weights,
                    bias: Array1::from(self.bias.ok_or_else(|| missing("bias"))?),
                    stride: self.stride.unwrap_or(1),
                    activation,
                })
            }
            "flatten" => Ok(Layer::Flatten),
            other => Err(NifError::InvalidModel(format!(
                "layer {index}: unknown kind `{other}`"
            ))),
        }
    }
}

/// Flattens a rectangular nested JSON array in row-major order.
fn flatten_nested(value: &Value, layer: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut dims = Vec::new();
    let mut probe = value;
    while let Value::Array(items) = probe {
        dims.push(items.len());
        match items.first() {
            Some(first) => probe = first,
            None => break,
        }
    }
    let mut flat = Vec::with_capacity(dims.iter().product());
    fn walk(
        v: &Value,
        depth: usize,
        dims: &[usize],
        out: &mut Vec<f64>,
        layer: usize,
    ) -> Result<()> {
        if depth == dims.len() {
            let x = v.as_f64().ok_or_else(|| {
                NifError::Parse(format!("layer {layer}: non-numeric weight entry"))
            })?;
            out.push(x);
            return Ok(());
        }
        let items = v
            .as_array()
            .filter(|a| a.len() == dims[depth])
            .ok_or_else(|| NifError::ShapeMismatch {
                layer,
                expected: format!("rectangular weights with dims {dims:?}"),
                actual: "ragged nested array".into(),
            })?;
        for item in items {
            walk(item, depth + 1, dims, out, layer)?;
        }
        Ok(())
    }
    walk(value, 0, &dims, &mut flat, layer)?;
    Ok((dims, flat))
}
