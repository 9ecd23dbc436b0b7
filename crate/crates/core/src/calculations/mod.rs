//! Calculations over miner outputs: coordination needs, mirroring
//! congruence and commit PageRank.

mod congruence;
mod coordination;
mod pagerank;

pub use congruence::{
    compute_mirroring_congruence, proxy_communication_graph, CommitActivity, CommunicationGraph,
    CongruenceMode, CongruenceScore,
};
pub use coordination::{compute_coordination_needs, CoordinationNeedsMatrix};
pub use pagerank::{compute_pagerank, PageRankParams, PageRankVector};
