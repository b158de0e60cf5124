//! Fixture files and binary invocation helpers for the cli test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::{Array1, Array2, Array4};
use nifflow_core::{Activation, Dataset, Layer, ModelGraph, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn nifflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nifflow"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NIFFLOW_THREADS")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

pub fn nifflow_ok(args: &[&str], cwd: &Path) -> Output {
    let out = nifflow(args, cwd);
    assert!(
        out.status.success(),
        "nifflow {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Copies the Iris model and splits into `dir`.
pub fn stage_iris(dir: &Path) {
    for name in ["iris_mlp.json", "iris_train.csv", "iris_eval.csv"] {
        std::fs::copy(fixture(name), dir.join(name)).unwrap();
    }
}

/// A 4x4 single-channel CNN (two 2x2 stride-2 channels, then a dense
/// softmax) and 60 labelled images whose class is the brighter half.
pub fn stage_cnn(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kernel = Array4::from_shape_fn((2, 1, 2, 2), |_| rng.random_range(-1.0..1.0));
    let dense = Array2::from_shape_fn((2, 8), |_| rng.random_range(-1.0..1.0));
    let model = ModelGraph::new(
        Shape::Image {
            channels: 1,
            height: 4,
            width: 4,
        },
        2,
        vec![
            Layer::Conv2d {
                weights: kernel,
                bias: Array1::zeros(2),
                stride: 2,
                activation: Activation::Relu,
            },
            Layer::Flatten,
            Layer::Dense {
                weights: dense,
                bias: Array1::zeros(2),
                activation: Activation::Softmax,
            },
        ],
    )
    .unwrap();
    let mut x = Array2::zeros((60, 16));
    let mut labels = Vec::new();
    for i in 0..60 {
        let label = i % 2;
        for p in 0..16 {
            let left = p % 4 < 2;
            let base = if left == (label == 0) { 0.7 } else { 0.2 };
            x[[i, p]] = base + rng.random_range(0.0..0.3);
        }
        labels.push(label);
    }
    let data = Dataset::new(x, labels)
        .unwrap()
        .with_image_shape((4, 4, 1))
        .unwrap();
    std::fs::write(dir.join("cnn.json"), model.to_json()).unwrap();
    std::fs::write(dir.join("digits.csv"), data.to_csv()).unwrap();
    std::fs::write(
        dir.join("digits.csv.meta.json"),
        r#"{"image_shape":[4,4,1]}"#,
    )
    .unwrap();
}
