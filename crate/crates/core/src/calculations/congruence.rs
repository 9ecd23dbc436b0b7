use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CoordinationNeedsMatrix;
use crate::error::{Error, Result};
use crate::mappers::{EntityId, Registries};
use crate::miners::MinerResult;

/// Where the communication edges came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CongruenceMode {
    /// Supplied from outside (mailing lists, issue trackers, ...).
    #[default]
    External,
    /// Approximated from developers committing to the same file close in time.
    Proxy,
}

/// Undirected developer communication edges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommunicationGraph {
    edges: BTreeMap<(EntityId, EntityId), Option<f64>>,
    mode: CongruenceMode,
}

#[derive(Debug, Deserialize)]
struct EdgeRecord {
    from: String,
    to: String,
    #[serde(default)]
    weight: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct GraphFile {
    edges: Vec<EdgeRecord>,
}

impl CommunicationGraph {
    pub fn new(mode: CongruenceMode) -> Self {
        CommunicationGraph {
            edges: BTreeMap::new(),
            mode,
        }
    }

    pub fn mode(&self) -> CongruenceMode {
        self.mode
    }

    /// Adds an undirected edge; self-loops are dropped.
    pub fn add_edge(&mut self, a: EntityId, b: EntityId, weight: Option<f64>) {
        if a != b {
            self.edges.insert((a.min(b), a.max(b)), weight);
        }
    }

    pub fn contains(&self, a: EntityId, b: EntityId) -> bool {
        self.edges.contains_key(&(a.min(b), a.max(b)))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (EntityId, EntityId)> + '_ {
        self.edges.keys().copied()
    }

    /// Reads `{"edges": [{"from": .., "to": .., "weight": ..}, ..]}`.
    ///
    /// Endpoints are developer identities (canonicalized like commit
    /// authors) or decimal user ids. Edges with an unknown endpoint are
    /// skipped; their number is returned alongside the graph.
    pub fn load(path: &Path, registries: &Registries) -> Result<(Self, usize)> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let file: GraphFile =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        let resolve = |who: &str| {
            registries
                .users
                .id(&registries.aliases.canonicalize(who.trim()))
                .or_else(|| {
                    who.parse::<EntityId>()
                        .ok()
                        .filter(|&id| (id as usize) < registries.users.len())
                })
        };
        let mut graph = CommunicationGraph::new(CongruenceMode::External);
        let mut unresolved = 0;
        for edge in file.edges {
            match (resolve(&edge.from), resolve(&edge.to)) {
                (Some(a), Some(b)) => graph.add_edge(a, b, edge.weight),
                _ => unresolved += 1,
            }
        }
        Ok((graph, unresolved))
    }
}

/// One commit as seen by the proxy communication heuristic.
#[derive(Debug, Clone)]
pub struct CommitActivity {
    pub user: EntityId,
    pub time: i64,
    pub files: Vec<EntityId>,
}

/// Links two developers when both committed to the same file within
/// `window_secs` of each other.
pub fn proxy_communication_graph(activity: &[CommitActivity], window_secs: i64) -> CommunicationGraph {
    let mut by_file: BTreeMap<EntityId, Vec<(i64, EntityId)>> = BTreeMap::new();
    for commit in activity {
        for &f in &commit.files {
            by_file.entry(f).or_default().push((commit.time, commit.user));
        }
    }
    let mut graph = CommunicationGraph::new(CongruenceMode::Proxy);
    for touches in by_file.values_mut() {
        touches.sort_unstable();
        for (i, &(t, u)) in touches.iter().enumerate() {
            for &(t2, v) in &touches[i + 1..] {
                if t2 - t > window_secs {
                    break;
                }
                graph.add_edge(u, v, None);
            }
        }
    }
    graph
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CongruenceScore {
    pub value: f64,
    pub need_pairs: usize,
    pub matched: usize,
    pub mode: CongruenceMode,
}

impl MinerResult for CongruenceScore {
    const FILE_NAME: &'static str = "Congruence.json";
}

/// Fraction of coordination needs above `threshold` that are matched by a
/// communication edge. With no needs at all the value is 1.
pub fn compute_mirroring_congruence(
    required: &CoordinationNeedsMatrix,
    actual: &CommunicationGraph,
    threshold: f64,
) -> Result<CongruenceScore> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!(
            "need threshold must be in [0, 1), got {threshold}"
        )));
    }
    let needs: BTreeSet<(EntityId, EntityId)> = required
        .iter()
        .filter(|&(a, b, v)| a < b && v > threshold)
        .map(|(a, b, _)| (a, b))
        .collect();
    let matched = needs.iter().filter(|&&(a, b)| actual.contains(a, b)).count();
    let value = if needs.is_empty() {
        1.0
    } else {
        matched as f64 / needs.len() as f64
    };
    Ok(CongruenceScore {
        value,
        need_pairs: needs.len(),
        matched,
        mode: actual.mode(),
    })
}
