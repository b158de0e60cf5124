/// Edge-list graph with nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_count: usize,
    directed: bool,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn directed(node_count: usize) -> Self {
        WeightedGraph {
            node_count,
            directed: true,
            edges: Vec::new(),
        }
    }

    pub fn undirected(node_count: usize) -> Self {
        WeightedGraph {
            node_count,
            directed: false,
            edges: Vec::new(),
        }
    }

    /// # Panics
    /// If an endpoint is out of range or the weight is negative or NaN.
    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) {
        assert!(
            u < self.node_count && v < self.node_count,
            "edge endpoint out of range"
        );
        assert!(weight >= 0.0, "edge weights must be nonnegative");
        self.edges.push((u, v, weight));
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Outgoing neighbor lists; undirected edges appear in both directions.
    pub(crate) fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            if !self.directed && u != v {
                adj[v].push((u, w));
            }
        }
        adj
    }
}
