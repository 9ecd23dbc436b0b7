use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::{is_line_bearing, BlameSource, FixMatcher, MinedCommit, MinerResult};
use crate::error::Result;
use crate::mappers::{EntityId, Registries};

/// Edges from bug-fixing commits to the commits that introduced the lines
/// they changed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CommitInfluenceGraph(pub BTreeMap<EntityId, Vec<EntityId>>);

impl CommitInfluenceGraph {
    pub fn edge_count(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }
}

impl MinerResult for CommitInfluenceGraph {
    const FILE_NAME: &'static str = "CommitInfluenceGraph.json";
}

fn introducers(
    commit: &MinedCommit,
    registries: &Registries,
    blame: &dyn BlameSource,
) -> Result<BTreeSet<EntityId>> {
    let mut found = BTreeSet::new();
    let Some(parent) = commit.pair.parent.sha() else {
        return Ok(found);
    };
    for change in commit.changes.iter().filter(|c| is_line_bearing(c)) {
        let Some(old_path) = change.old_path.as_deref() else {
            continue;
        };
        let old_lines: Vec<u32> = change.hunks.iter().flat_map(|h| h.old_lines()).collect();
        if old_lines.is_empty() {
            continue;
        }
        let attribution = blame.blame(parent, old_path)?;
        for line in old_lines {
            let Some(attr) = attribution.get(line as usize - 1) else {
                continue;
            };
            match registries.commits.id(&attr.introducing_sha) {
                Some(id) if id != commit.commit_id => {
                    found.insert(id);
                }
                Some(_) => {}
                None => log::debug!("introducing commit {} was not mined", attr.introducing_sha),
            }
        }
    }
    Ok(found)
}

/// For each fix commit, blames the lines its modifications and deletions
/// removed at the parent and records the commits that introduced them.
pub fn mine_commit_influence_graph(
    commits: &[MinedCommit],
    registries: &Registries,
    blame: &dyn BlameSource,
    fix: &FixMatcher,
) -> Result<CommitInfluenceGraph> {
    let per_fix: Vec<(EntityId, BTreeSet<EntityId>)> = commits
        .par_iter()
        .filter(|c| fix.is_fix(&c.pair.current.message))
        .map(|c| Ok((c.commit_id, introducers(c, registries, blame)?)))
        .collect::<Result<_>>()?;

    let mut graph: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
    for (fix_id, targets) in per_fix {
        graph.entry(fix_id).or_default().extend(targets);
    }
    Ok(CommitInfluenceGraph(
        graph
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().collect()))
            .collect(),
    ))
}
