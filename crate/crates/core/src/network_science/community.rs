//! Greedy modularity maximization (local moving plus aggregation).
//!
//! The quality function places the resolution as a divisor of the null
//! model term:
//!
//! ```text
//! Q = 1/(2m) * sum_ij [ A_ij - (1/gamma) * k_i k_j / (2m) ] * delta(g_i, g_j)
//! ```
//!
//! so *smaller* gamma weighs the null model more heavily and yields more,
//! smaller communities. This is the reverse of the common convention where
//! gamma multiplies the null model term.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::WeightedGraph;
use crate::error::{NifError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityAssignment {
    /// Community id per node, contiguous from 0 in order of first appearance.
    pub communities: Vec<usize>,
    pub modularity: f64,
    pub gamma: f64,
}

impl CommunityAssignment {
    pub fn community_count(&self) -> usize {
        self.communities.iter().max().map_or(0, |&c| c + 1)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(NifError::InvalidConfig(format!(
            "resolution gamma must be positive, got {gamma}"
        )))
    }
}

/// Modularity of `assignment` on the undirected view of `graph`. Each edge
/// (directed or not) contributes its weight once to `m`; a self-loop adds
/// twice its weight to the node's degree.
pub fn modularity(graph: &WeightedGraph, assignment: &[usize], gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let n = graph.node_count();
    if assignment.len() < n {
        return Err(NifError::IndexOutOfRange(format!(
            "node {} missing from assignment",
            assignment.len()
        )));
    }
    let mut degree = vec![0.0; n];
    let mut internal = 0.0;
    let mut two_m = 0.0;
    for &(u, v, w) in graph.edges() {
        degree[u] += w;
        degree[v] += w;
        two_m += 2.0 * w;
        if assignment[u] == assignment[v] {
            internal += 2.0 * w;
        }
    }
    if two_m == 0.0 {
        return Ok(0.0);
    }
    let groups = assignment[..n].iter().max().map_or(0, |&c| c + 1);
    let mut total = vec![0.0; groups];
    for (i, &c) in assignment[..n].iter().enumerate() {
        total[c] += degree[i];
    }
    let null: f64 = total.iter().map(|t| t * t).sum::<f64>() / two_m;
    Ok((internal - null / gamma) / two_m)
}

/// One aggregation level: symmetric adjacency without the diagonal, the
/// diagonal entries, and weighted degrees.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
}

impl Level {
    fn from_graph(graph: &WeightedGraph) -> Self {
        let n = graph.node_count();
        let mut adj = vec![Vec::new(); n];
        let mut self_loops = vec![0.0; n];
        let mut degree = vec![0.0; n];
        for &(u, v, w) in graph.edges() {
            if w == 0.0 {
                continue;
            }
            if u == v {
                self_loops[u] += 2.0 * w;
            } else {
                adj[u].push((v, w));
                adj[v].push((u, w));
            }
            degree[u] += w;
            degree[v] += w;
        }
        Level {
            adj,
            self_loops,
            degree,
        }
    }

    fn len(&self) -> usize {
        self.degree.len()
    }

    /// Local moving phase. Returns the community of each node and whether
    /// any node moved.
    fn local_moving(
        &self,
        resolution: f64,
        two_m: f64,
        rng: &mut ChaCha8Rng,
    ) -> (Vec<usize>, bool) {
        let n = self.len();
        let eps = 1e-12 * two_m;
        let mut community: Vec<usize> = (0..n).collect();
        let mut total = self.degree.clone();
        let mut link = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut any_move = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let current = community[i];
                let k_i = self.degree[i];
                for &(j, w) in &self.adj[i] {
                    let c = community[j];
                    if link[c] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                total[current] -= k_i;
                let gain = |c: usize, link: &[f64]| link[c] - resolution * total[c] * k_i / two_m;
                let stay = gain(current, &link);
                let best = touched
                    .iter()
                    .map(|&c| gain(c, &link))
                    .fold(f64::NEG_INFINITY, f64::max);
                let target = if best > stay + eps {
                    touched
                        .iter()
                        .copied()
                        .filter(|&c| gain(c, &link) >= best - eps)
                        .min()
                        .expect("a candidate attains the maximum")
                } else {
                    current
                };
                total[target] += k_i;
                if target != current {
                    community[i] = target;
                    moved = true;
                }
                for &c in &touched {
                    link[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            any_move = true;
        }
        (community, any_move)
    }

    fn aggregate(&self, community: &[usize], groups: usize) -> Level {
        let mut self_loops = vec![0.0; groups];
        let mut degree = vec![0.0; groups];
        let mut weights: Vec<std::collections::BTreeMap<usize, f64>> =
            vec![Default::default(); groups];
        for i in 0..self.len() {
            let ci = community[i];
            degree[ci] += self.degree[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                let cj = community[j];
                if ci == cj {
                    self_loops[ci] += w;
                } else {
                    *weights[ci].entry(cj).or_default() += w;
                }
            }
        }
        let adj = weights
            .into_iter()
            .map(|m| m.into_iter().collect())
            .collect();
        Level {
            adj,
            self_loops,
            degree,
        }
    }
}

/// Renumbers labels contiguously in order of first appearance.
fn relabel(labels: &mut [usize]) -> usize {
    let mut map = std::collections::HashMap::new();
    for l in labels.iter_mut() {
        let next = map.len();
        *l = *map.entry(*l).or_insert(next);
    }
    map.len()
}

/// Communities maximizing modularity at resolution `gamma`, on the
/// symmetrized view of `graph`. Node visiting order is shuffled with `seed`;
/// among equal gains the lowest community id wins.
pub fn detect_communities(
    graph: &WeightedGraph,
    gamma: f64,
    seed: u64,
) -> Result<CommunityAssignment> {
    check_gamma(gamma)?;
    let n = graph.node_count();
    if n == 0 {
        return Err(NifError::Empty("graph has no nodes"));
    }
    let mut level = Level::from_graph(graph);
    let two_m: f64 = level.degree.iter().sum();
    let mut membership: Vec<usize> = (0..n).collect();
    if two_m > 0.0 {
        let resolution = 1.0 / gamma;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let (mut community, moved) = level.local_moving(resolution, two_m, &mut rng);
            if !moved {
                break;
            }
            let groups = relabel(&mut community);
            for m in membership.iter_mut() {
                *m = community[*m];
            }
            level = level.aggregate(&community, groups);
        }
    }
    relabel(&mut membership);
    let q = modularity(graph, &membership, gamma)?;
    Ok(CommunityAssignment {
        communities: membership,
        modularity: q,
        gamma,
    })
}
