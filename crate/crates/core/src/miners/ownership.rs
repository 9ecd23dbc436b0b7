//! Degree-of-authorship scores and line-level authorship at head.
//!
//! For developer `u` and file `f`:
//!
//! ```text
//! DOA(u, f) = 3.293 + 1.098 * FA + 0.164 * DL - 0.321 * ln(1 + AC)
//! ```
//!
//! where `FA` is 1 if `u` created `f` (following renames back to the
//! original path), `DL` counts `u`'s commits changing `f` and `AC` counts the
//! commits of everyone else changing `f`. Scores are normalized per file by
//! the largest raw score among the file's contributors.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fold_commits, AssignmentMiner, BlameSource, MinedCommit, MinerResult};
use crate::error::Result;
use crate::mappers::{EntityId, Registries};
use crate::repo::ChangeKind;

/// Weights of the degree-of-authorship model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaWeights {
    pub intercept: f64,
    pub first_authorship: f64,
    pub deliveries: f64,
    pub acceptances: f64,
}

impl Default for DoaWeights {
    fn default() -> Self {
        DoaWeights {
            intercept: 3.293,
            first_authorship: 1.098,
            deliveries: 0.164,
            acceptances: 0.321,
        }
    }
}

impl DoaWeights {
    pub fn raw(&self, first_author: bool, deliveries: u64, acceptances: u64) -> f64 {
        let fa = if first_author { 1.0 } else { 0.0 };
        self.intercept + self.first_authorship * fa + self.deliveries * deliveries as f64
            - self.acceptances * (1.0 + acceptances as f64).ln()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OwnershipResult {
    /// user -> file -> normalized DOA in [0, 1].
    pub doa: BTreeMap<EntityId, BTreeMap<EntityId, f64>>,
    /// file -> user -> surviving lines at head.
    pub lines: BTreeMap<EntityId, BTreeMap<EntityId, u64>>,
}

impl MinerResult for OwnershipResult {
    const FILE_NAME: &'static str = "FilesOwnership.json";
}

/// Users credited with creating each file. A rename passes the creators of
/// the source path on to the target path.
fn creators(commits: &[MinedCommit]) -> BTreeMap<EntityId, BTreeSet<EntityId>> {
    let mut created: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
    let mut renames = BTreeSet::new();
    for commit in commits {
        for (change, ids) in commit.changes_with_ids() {
            match (change.kind, ids.old, ids.new) {
                (ChangeKind::Add, _, Some(new)) => {
                    created.entry(new).or_default().insert(commit.author_id);
                }
                (ChangeKind::Rename, Some(old), Some(new)) => {
                    renames.insert((old, new));
                }
                _ => {}
            }
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for &(old, new) in &renames {
            let Some(from) = created.get(&old).cloned() else {
                continue;
            };
            let to = created.entry(new).or_default();
            let before = to.len();
            to.extend(from);
            changed |= to.len() != before;
        }
    }
    created
}

fn doa_scores(
    commits: &[MinedCommit],
    weights: &DoaWeights,
) -> Result<BTreeMap<EntityId, BTreeMap<EntityId, f64>>> {
    let assignment = fold_commits(&AssignmentMiner, commits)?;
    let by_file = assignment.0.transpose();
    let created = creators(commits);

    let files: BTreeSet<EntityId> = by_file
        .row_iter()
        .map(|(f, _)| f)
        .chain(created.keys().copied())
        .collect();

    let mut doa: BTreeMap<EntityId, BTreeMap<EntityId, f64>> = BTreeMap::new();
    for file in files {
        let deliveries = by_file.row(file);
        let total: u64 = deliveries.map_or(0, |d| d.values().sum());
        let first_authors = created.get(&file);
        let contributors: BTreeSet<EntityId> = deliveries
            .into_iter()
            .flat_map(|d| d.keys().copied())
            .chain(first_authors.into_iter().flatten().copied())
            .collect();

        let raw: Vec<(EntityId, f64)> = contributors
            .into_iter()
            .map(|user| {
                let dl = deliveries.and_then(|d| d.get(&user)).copied().unwrap_or(0);
                let fa = first_authors.is_some_and(|s| s.contains(&user));
                (user, weights.raw(fa, dl, total - dl))
            })
            .collect();
        let max = raw.iter().map(|(_, r)| *r).fold(f64::NEG_INFINITY, f64::max);
        for (user, r) in raw {
            let score = if max > 0.0 { (r / max).clamp(0.0, 1.0) } else { 0.0 };
            doa.entry(user).or_default().insert(file, score);
        }
    }
    Ok(doa)
}

fn line_ownership(
    commits: &[MinedCommit],
    registries: &Registries,
    blame: &dyn BlameSource,
    head: &str,
) -> Result<BTreeMap<EntityId, BTreeMap<EntityId, u64>>> {
    let author_of: HashMap<&str, EntityId> = commits
        .iter()
        .map(|c| (c.pair.current.sha.as_str(), c.author_id))
        .collect();
    let paths = blame.text_files(head)?;
    let per_file: Vec<Option<(EntityId, BTreeMap<EntityId, u64>)>> = paths
        .par_iter()
        .map(|path| {
            let Some(file) = registries.files.id(path) else {
                log::warn!("{path} at head was never registered; skipping");
                return Ok(None);
            };
            let mut counts = BTreeMap::new();
            for line in blame.blame(head, path)? {
                match author_of.get(line.introducing_sha.as_str()) {
                    Some(&user) => *counts.entry(user).or_insert(0) += 1,
                    None => log::warn!("line of {path} blamed on unmined commit {}", line.introducing_sha),
                }
            }
            Ok((!counts.is_empty()).then_some((file, counts)))
        })
        .collect::<Result<_>>()?;
    Ok(per_file.into_iter().flatten().collect())
}

/// Computes normalized DOA for every developer/file pair and, when `head` is
/// given, per-author surviving line counts for every text file at `head`.
pub fn mine_files_ownership(
    commits: &[MinedCommit],
    registries: &Registries,
    blame: &dyn BlameSource,
    head: Option<&str>,
    weights: &DoaWeights,
) -> Result<OwnershipResult> {
    let doa = doa_scores(commits, weights)?;
    let lines = match head {
        Some(head) => line_ownership(commits, registries, blame, head)?,
        None => BTreeMap::new(),
    };
    Ok(OwnershipResult { doa, lines })
}
