use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::WeightedGraph;

/// How edge weights become path lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeLengthMode {
    /// Length `1 / weight`: strong edges are short.
    InverseWeight,
    /// Every edge has length 1.
    Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores {
    pub scores: Vec<f64>,
}

/// Relative tolerance for treating two path lengths as equal.
const TIE_EPS: f64 = 1e-12;

pub(crate) fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_EPS * a.abs().max(b.abs()).max(1.0)
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Betweenness centrality `B(v) = sum over s != v != t of sigma_st(v) / sigma_st`.
///
/// Directed graphs sum over ordered pairs; undirected graphs over unordered
/// pairs. Edges of weight zero are not traversable in either mode.
/// Brandes accumulation, parallel over sources, reduced in source order.
pub fn betweenness(graph: &WeightedGraph, mode: EdgeLengthMode) -> CentralityScores {
    let n = graph.node_count();
    let adj: Vec<Vec<(usize, f64)>> = graph
        .adjacency()
        .into_iter()
        .map(|nbrs| {
            nbrs.into_iter()
                .filter(|&(_, w)| w > 0.0)
                .map(|(v, w)| {
                    let len = match mode {
                        EdgeLengthMode::InverseWeight => 1.0 / w,
                        EdgeLengthMode::Unit => 1.0,
                    };
                    (v, len)
                })
                .collect()
        })
        .collect();

    let partials: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| single_source_dependencies(&adj, s))
        .collect();
    let mut scores = vec![0.0; n];
    for delta in partials {
        for (acc, d) in scores.iter_mut().zip(delta) {
            *acc += d;
        }
    }
    if !graph.is_directed() {
        scores.iter_mut().for_each(|b| *b /= 2.0);
    }
    CentralityScores { scores }
}

fn single_source_dependencies(adj: &[Vec<(usize, f64)>], s: usize) -> Vec<f64> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();

    dist[s] = 0.0;
    sigma[s] = 1.0;
    heap.push(Entry(0.0, s));
    while let Some(Entry(d, v)) = heap.pop() {
        if settled[v] || d > dist[v] {
            continue;
        }
        settled[v] = true;
        order.push(v);
        for &(w, len) in &adj[v] {
            if settled[w] {
                continue;
            }
            let alt = d + len;
            if dist[w].is_infinite() || (alt < dist[w] && !same_length(alt, dist[w])) {
                dist[w] = alt;
                sigma[w] = sigma[v];
                preds[w].clear();
                preds[w].push(v);
                heap.push(Entry(alt, w));
            } else if same_length(alt, dist[w]) {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }

    let mut delta = vec![0.0; n];
    for &w in order.iter().rev() {
        for &v in &preds[w] {
            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
        }
    }
    delta[s] = 0.0;
    delta
}
