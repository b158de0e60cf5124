//! Betweenness centrality and resolution-controlled modularity communities.

mod betweenness;
mod community;
mod graph;

pub use betweenness::{betweenness, CentralityScores, EdgeLengthMode};
pub use community::{detect_communities, modularity, CommunityAssignment};
pub use graph::WeightedGraph;
