//! Shared fixtures and brute-force oracles for the integration tests.
//! Nothing here calls into the algorithms it is used to check.
#![allow(dead_code)]

use std::path::PathBuf;

use ndarray::{Array1, Array2, Axis};
use nifflow_core::{load_dataset, Activation, Dataset, Layer, ModelGraph, Shape};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Shared by the core and cli test targets, so resolved from the crates
/// directory rather than the current manifest.
pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .expect("crate inside crates/")
        .join("core/tests/data")
        .join(name)
}

pub fn iris() -> Dataset {
    load_dataset(data_path("iris.csv")).expect("iris fixture")
}

/// Per class, `eval_per_class` rows go to the eval set, the rest to train.
pub fn stratified_split(data: &Dataset, eval_per_class: usize, seed: u64) -> (Dataset, Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = data.labels.iter().max().map_or(0, |&c| c + 1);
    let (mut train, mut eval) = (Vec::new(), Vec::new());
    for c in 0..classes {
        let mut rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == c).collect();
        rows.shuffle(&mut rng);
        eval.extend_from_slice(&rows[..eval_per_class]);
        train.extend_from_slice(&rows[eval_per_class..]);
    }
    train.sort_unstable();
    eval.sort_unstable();
    (data.select(&train).unwrap(), data.select(&eval).unwrap())
}

/// Full-batch Adam on softmax cross-entropy for a ReLU MLP with the given
/// layer widths (input first, classes last).
pub fn train_mlp(data: &Dataset, widths: &[usize], epochs: usize, seed: u64) -> ModelGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = widths.len() - 1;
    let mut ws: Vec<Array2<f64>> = (0..depth)
        .map(|l| {
            let scale = (2.0 / widths[l] as f64).sqrt();
            Array2::from_shape_fn((widths[l + 1], widths[l]), |_| {
                scale * rng.sample::<f64, _>(StandardNormal)
            })
        })
        .collect();
    let mut bs: Vec<Array1<f64>> = (0..depth)
        .map(|l| Array1::from_elem(widths[l + 1], 0.01))
        .collect();
    let mut mw: Vec<Array2<f64>> = ws.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
    let mut vw = mw.clone();
    let mut mb: Vec<Array1<f64>> = bs.iter().map(|b| Array1::zeros(b.len())).collect();
    let mut vb = mb.clone();
    let (lr, b1, b2, eps) = (0.01, 0.9, 0.999, 1e-8);
    let n = data.len() as f64;
    let classes = widths[depth];
    let mut onehot = Array2::<f64>::zeros((data.len(), classes));
    for (i, &c) in data.labels.iter().enumerate() {
        onehot[[i, c]] = 1.0;
    }
    for t in 1..=epochs {
        // forward, rows are samples
        let mut acts = vec![data.features.clone()];
        for l in 0..depth {
            let mut z = acts[l].dot(&ws[l].t()) + &bs[l];
            if l + 1 < depth {
                z.mapv_inplace(|v| v.max(0.0));
            } else {
                for mut row in z.rows_mut() {
                    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    row.mapv_inplace(|v| (v - m).exp());
                    let s = row.sum();
                    row /= s;
                }
            }
            acts.push(z);
        }
        let mut delta = (&acts[depth] - &onehot) / n;
        for l in (0..depth).rev() {
            let gw = delta.t().dot(&acts[l]);
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut next = delta.dot(&ws[l]);
                next.zip_mut_with(&acts[l], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = next;
            }
            let c1 = 1.0 - f64::powi(b1, t as i32);
            let c2 = 1.0 - f64::powi(b2, t as i32);
            mw[l] = &mw[l] * b1 + &gw * (1.0 - b1);
            vw[l] = &vw[l] * b2 + &gw.mapv(|g| g * g) * (1.0 - b2);
            mb[l] = &mb[l] * b1 + &gb * (1.0 - b1);
            vb[l] = &vb[l] * b2 + &gb.mapv(|g| g * g) * (1.0 - b2);
            ws[l] = &ws[l] - &((&mw[l] / c1) / ((&vw[l] / c2).mapv(f64::sqrt) + eps) * lr);
            bs[l] = &bs[l] - &((&mb[l] / c1) / ((&vb[l] / c2).mapv(f64::sqrt) + eps) * lr);
        }
    }
    let layers = ws
        .into_iter()
        .zip(bs)
        .enumerate()
        .map(|(l, (weights, bias))| Layer::Dense {
            weights,
            bias,
            activation: if l + 1 < depth {
                Activation::Relu
            } else {
                Activation::Softmax
            },
        })
        .collect();
    ModelGraph::new(Shape::Vector(widths[0]), classes, layers).unwrap()
}

/// The Iris model used by the pruning checks: 4-8-5-3, trained on a
/// stratified 120/30 split.
pub fn iris_mlp() -> (ModelGraph, Dataset, Dataset) {
    let (train, eval) = stratified_split(&iris(), 10, 7);
    let model = train_mlp(&train, &[4, 8, 5, 3], 3000, 11);
    (model, train, eval)
}

pub fn gaussian_pair(rho: f64, n: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, 1));
    let mut y = Array1::zeros(n);
    let s = (1.0 - rho * rho).sqrt();
    for i in 0..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        x[[i, 0]] = a;
        y[i] = rho * a + s * b;
    }
    (x, y)
}

/// Random layered weight matrices, `weights[l]` is sizes[l] x sizes[l+1],
/// with some exact zeros and negatives mixed in.
pub fn random_layer_weights(rng: &mut ChaCha8Rng, sizes: &[usize]) -> Vec<Array2<f64>> {
    sizes
        .windows(2)
        .map(|w| {
            Array2::from_shape_fn((w[0], w[1]), |_| match rng.random_range(0..10) {
                0 => 0.0,
                1 => -rng.random_range(0.0..1.0),
                _ => rng.random_range(0.0..1.0),
            })
        })
        .collect()
}

/// Sum over every input-to-output path of the product of clamped weights,
/// by explicit depth-first enumeration.
pub fn path_enumeration(weights: &[Array2<f64>], signed: bool) -> Array2<f64> {
    let inputs = weights[0].nrows();
    let outputs = weights.last().unwrap().ncols();
    let mut out = Array2::zeros((inputs, outputs));
    fn walk(
        weights: &[Array2<f64>],
        layer: usize,
        unit: usize,
        product: f64,
        signed: bool,
        acc: &mut Array1<f64>,
    ) {
        if layer == weights.len() {
            acc[unit] += product;
            return;
        }
        for next in 0..weights[layer].ncols() {
            let w = weights[layer][[unit, next]];
            let w = if signed { w } else { w.max(0.0) };
            walk(weights, layer + 1, next, product * w, signed, acc);
        }
    }
    for i in 0..inputs {
        let mut acc = Array1::zeros(outputs);
        walk(weights, 0, i, 1.0, signed, &mut acc);
        out.row_mut(i).assign(&acc);
    }
    out
}

/// Betweenness by enumerating every simple path between every pair.
/// `edges` are (u, v, length); zero-weight edges must be filtered by the
/// caller. Undirected graphs count each unordered pair once.
pub fn brute_betweenness(
    n: usize,
    edges: &[(usize, usize, f64)],
    directed: bool,
    tol: f64,
) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, len) in edges {
        adj[u].push((v, len));
        if !directed {
            adj[v].push((u, len));
        }
    }
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || (!directed && t < s) {
                continue;
            }
            let mut paths: Vec<(f64, Vec<usize>)> = Vec::new();
            let mut stack = vec![s];
            let mut seen = vec![false; n];
            seen[s] = true;
            fn dfs(
                adj: &[Vec<(usize, f64)>],
                t: usize,
                len: f64,
                stack: &mut Vec<usize>,
                seen: &mut [bool],
                paths: &mut Vec<(f64, Vec<usize>)>,
            ) {
                let u = *stack.last().unwrap();
                if u == t {
                    paths.push((len, stack.clone()));
                    return;
                }
                for &(v, l) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                        dfs(adj, t, len + l, stack, seen, paths);
                        stack.pop();
                        seen[v] = false;
                    }
                }
            }
            dfs(&adj, t, 0.0, &mut stack, &mut seen, &mut paths);
            if paths.is_empty() {
                continue;
            }
            let best = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let shortest: Vec<&Vec<usize>> = paths
                .iter()
                .filter(|p| p.0 - best <= tol * best.max(1.0))
                .map(|p| &p.1)
                .collect();
            let total = shortest.len() as f64;
            for (v, score) in b.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = shortest.iter().filter(|p| p.contains(&v)).count() as f64;
                *score += through / total;
            }
        }
    }
    b
}

/// Modularity straight from the dense double sum, resolution dividing the
/// null-model term.
pub fn dense_modularity(
    n: usize,
    edges: &[(usize, usize, f64)],
    groups: &[usize],
    gamma: f64,
) -> f64 {
    let mut a = Array2::<f64>::zeros((n, n));
    for &(u, v, w) in edges {
        a[[u, v]] += w;
        a[[v, u]] += w;
    }
    let k = a.sum_axis(Axis(1));
    let two_m = a.sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if groups[i] == groups[j] {
                q += a[[i, j]] - k[i] * k[j] / (two_m * gamma);
            }
        }
    }
    q / two_m
}

/// Every set partition of `n` nodes as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; n];
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max + 1 {
            cur[i] = c;
            rec(i + 1, max.max(c), cur, out);
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    rec(1, 0, &mut cur, &mut out);
    out
}

pub fn two_triangles() -> Vec<(usize, usize, f64)> {
    vec![
        (0, 1, 1.0),
        (1, 2, 1.0),
        (0, 2, 1.0),
        (3, 4, 1.0),
        (4, 5, 1.0),
        (3, 5, 1.0),
        (2, 3, 1.0),
    ]
}

/// Straight-line dense forward pass for vector models: returns logits.
pub fn reference_logits(model: &ModelGraph, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    let mut logits = Vec::new();
    for layer in model.layers() {
        let Layer::Dense {
            weights,
            bias,
            activation,
        } = layer
        else {
            panic!("dense models only");
        };
        let mut z = vec![0.0; weights.nrows()];
        for j in 0..weights.nrows() {
            let mut s = bias[j];
            for i in 0..weights.ncols() {
                s += weights[[j, i]] * h[i];
            }
            z[j] = s;
        }
        logits = z.clone();
        h = match activation {
            Activation::Relu => z.iter().map(|v| v.max(0.0)).collect(),
            _ => z,
        };
    }
    logits
}
