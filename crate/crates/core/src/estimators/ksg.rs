//! Mixed continuous/discrete KSG estimator.
//!
//! For sample `i`, let `rho` be the max-norm distance to its k-th nearest
//! neighbor in the joint space. The pointwise term is
//!
//! ```text
//! psi(k_i) + ln N - ln(n_x + 1) - ln(n_y + 1)
//! ```
//!
//! where `n_x`, `n_y` count the other samples strictly closer than `rho` in
//! each marginal. When `rho == 0` the sample sits on a discrete atom: `k_i`
//! becomes the number of other samples at joint distance zero and the
//! marginal counts include ties at distance zero.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use statrs::function::gamma::digamma;

use super::{check_inputs, degenerate, EstimatorConfig, MiEstimate};
use crate::error::{NifError, Result};

const JITTER_SCALE: f64 = 1e-10;

/// KSG mutual information between `x` (N x d) and `y` (N).
pub fn ksg_mi(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    config: &EstimatorConfig,
) -> Result<MiEstimate> {
    let prepared = Prepared::new(x, y, config)?;
    let terms: Vec<f64> = (0..prepared.n)
        .into_par_iter()
        .map(|i| prepared.term(i))
        .collect();
    Ok(MiEstimate::from_terms(terms, Some(config.k)))
}

/// The pointwise KSG term at one sample, identical to
/// `ksg_mi(x, y, config).per_sample[sample]`.
pub fn pmi_per_sample(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    sample: usize,
    config: &EstimatorConfig,
) -> Result<f64> {
    if sample >= y.len() {
        return Err(NifError::IndexOutOfRange(format!(
            "sample {sample} of {}",
            y.len()
        )));
    }
    Ok(Prepared::new(x, y, config)?.term(sample))
}

struct Prepared {
    n: usize,
    k: usize,
    degenerate: bool,
    x: Array2<f64>,
    y: Vec<f64>,
    /// Sample indices sorted by y.
    order: Vec<usize>,
    /// Position of each sample within `order`.
    pos: Vec<usize>,
    y_sorted: Vec<f64>,
    /// Sorted x values when x is one-dimensional.
    x_sorted: Option<Vec<f64>>,
    psi_k: f64,
    ln_n: f64,
}

impl Prepared {
    fn new(
        x: ArrayView2<'_, f64>,
        y: ArrayView1<'_, f64>,
        config: &EstimatorConfig,
    ) -> Result<Self> {
        config.validate()?;
        check_inputs(x, y, config.k + 1)?;
        let n = y.len();
        let k = config.k;
        let mut prepared = Prepared {
            n,
            k,
            degenerate: degenerate(x, y),
            x: x.to_owned(),
            y: y.to_vec(),
            order: Vec::new(),
            pos: Vec::new(),
            y_sorted: Vec::new(),
            x_sorted: None,
            psi_k: digamma(k as f64),
            ln_n: (n as f64).ln(),
        };
        if prepared.degenerate {
            return Ok(prepared);
        }
        prepared.jitter_small_ties(config.rng_seed);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| prepared.y[a].total_cmp(&prepared.y[b]).then(a.cmp(&b)));
        let mut pos = vec![0; n];
        for (p, &i) in order.iter().enumerate() {
            pos[i] = p;
        }
        prepared.y_sorted = order.iter().map(|&i| prepared.y[i]).collect();
        prepared.order = order;
        prepared.pos = pos;
        if prepared.x.ncols() == 1 {
            let mut xs = prepared.x.column(0).to_vec();
            xs.sort_by(f64::total_cmp);
            prepared.x_sorted = Some(xs);
        }
        Ok(prepared)
    }

    /// Breaks accidental ties in continuous coordinates.
    ///
    /// A tie group of at most `k` equal values can never form a zero-radius
    /// neighborhood on its own, so it is treated as a continuous coincidence
    /// and perturbed by a tiny seeded offset. Larger groups are genuine
    /// discrete atoms and are left for the zero-distance counting path.
    /// Offsets are keyed to the sample's values rather than its position, so
    /// reordering samples does not change the estimate.
    fn jitter_small_ties(&mut self, seed: u64) {
        let k = self.k;
        let mut marks: Vec<(usize, Vec<usize>)> = Vec::new();
        for c in 0..self.x.ncols() {
            let rows = small_tie_members(self.x.column(c).iter().copied(), k);
            if !rows.is_empty() {
                marks.push((c, rows));
            }
        }
        let y_rows = small_tie_members(self.y.iter().copied(), k);
        if marks.is_empty() && y_rows.is_empty() {
            return;
        }

        let keys = self.sample_keys(seed);
        for (c, rows) in marks {
            for i in rows {
                let v = self.x[[i, c]];
                self.x[[i, c]] = v + offset(keys[i], v, c as u64);
            }
        }
        for i in y_rows {
            let v = self.y[i];
            self.y[i] = v + offset(keys[i], v, 0);
        }
    }

    /// Per-sample hash keys. A key depends only on the sample's own values,
    /// and is symmetric under swapping one-dimensional x and y, so exact
    /// duplicate samples stay duplicates.
    fn sample_keys(&self, seed: u64) -> Vec<u64> {
        (0..self.n)
            .map(|i| {
                let hx = self
                    .x
                    .row(i)
                    .iter()
                    .fold(0u64, |h, &v| combine(h, canonical_bits(v)));
                let hy = combine(0, canonical_bits(self.y[i]));
                combine(combine(mix(seed), hx.min(hy)), hx.max(hy))
            })
            .collect()
    }

    fn x_dist(&self, i: usize, j: usize) -> f64 {
        self.x
            .row(i)
            .iter()
            .zip(self.x.row(j))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Max-norm distance from `i` to its k-th nearest neighbor.
    fn knn_radius(&self, i: usize) -> f64 {
        let k = self.k;
        let yi = self.y[i];
        let p = self.pos[i];
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        let visit = |q: usize, best: &mut Vec<f64>| -> bool {
            let dy = (self.y_sorted[q] - yi).abs();
            if best.len() == k && dy >= best[k - 1] {
                return false;
            }
            let d = dy.max(self.x_dist(i, self.order[q]));
            if best.len() < k || d < best[k - 1] {
                let at = best.partition_point(|&b| b <= d);
                best.insert(at, d);
                best.truncate(k);
            }
            true
        };
        for q in (0..p).rev() {
            if !visit(q, &mut best) {
                break;
            }
        }
        for q in p + 1..self.n {
            if !visit(q, &mut best) {
                break;
            }
        }
        best[k - 1]
    }

    fn count_x(&self, i: usize, rho: f64) -> usize {
        match &self.x_sorted {
            Some(sorted) => count_sorted(sorted, self.x[[i, 0]], rho),
            None => (0..self.n)
                .filter(|&j| {
                    j != i && {
                        let d = self.x_dist(i, j);
                        if rho == 0.0 {
                            d == 0.0
                        } else {
                            d < rho
                        }
                    }
                })
                .count(),
        }
    }

    fn term(&self, i: usize) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let rho = self.knn_radius(i);
        let yi = self.y[i];
        let (psi, n_x, n_y) = if rho == 0.0 {
            let lo = self.y_sorted.partition_point(|&v| v < yi);
            let hi = self.y_sorted.partition_point(|&v| v <= yi);
            let k_tilde = (lo..hi)
                .map(|q| self.order[q])
                .filter(|&j| j != i && self.x_dist(i, j) == 0.0)
                .count();
            (digamma(k_tilde as f64), self.count_x(i, 0.0), hi - lo - 1)
        } else {
            (
                self.psi_k,
                self.count_x(i, rho),
                count_sorted(&self.y_sorted, yi, rho),
            )
        };
        psi + self.ln_n - (((n_x + 1) as f64).ln() + ((n_y + 1) as f64).ln())
    }
}

/// Counts other entries of `sorted` within `rho` of `v`: strictly closer
/// when `rho > 0`, exactly equal when `rho == 0`. `v` must be in `sorted`.
fn count_sorted(sorted: &[f64], v: f64, rho: f64) -> usize {
    if rho == 0.0 {
        let lo = sorted.partition_point(|&s| s < v);
        let hi = sorted.partition_point(|&s| s <= v);
        hi - lo - 1
    } else {
        // fl(v - s) is monotone in s, so both predicates split the array
        let lo = sorted.partition_point(|&s| v - s >= rho);
        let hi = sorted.partition_point(|&s| s - v < rho);
        hi - lo - 1
    }
}

/// Indices belonging to tie groups of size 2..=k.
fn small_tie_members(values: impl Iterator<Item = f64>, k: usize) -> Vec<usize> {
    let mut indexed: Vec<(f64, usize)> = values.enumerate().map(|(i, v)| (v, i)).collect();
    indexed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = Vec::new();
    let mut start = 0;
    while start < indexed.len() {
        let mut end = start + 1;
        while end < indexed.len() && indexed[end].0 == indexed[start].0 {
            end += 1;
        }
        let size = end - start;
        if size >= 2 && size <= k {
            out.extend(indexed[start..end].iter().map(|&(_, i)| i));
        }
        start = end;
    }
    out.sort_unstable();
    out
}

fn canonical_bits(v: f64) -> u64 {
    (v + 0.0).to_bits()
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn combine(a: u64, b: u64) -> u64 {
    mix(a ^ mix(b))
}

fn offset(key: u64, v: f64, column: u64) -> f64 {
    let h = combine(combine(key, canonical_bits(v)), column);
    let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
    (2.0 * unit - 1.0) * JITTER_SCALE * v.abs().max(1.0)
}
