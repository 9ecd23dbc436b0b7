//! The Git miners.
//!
//! Every miner consumes the same stream of [`MinedCommit`]s: a commit pair,
//! its diff, and the ids the registration pass assigned to its commit,
//! author and files. Commit-local miners implement [`CommitMiner`]: each
//! worker folds a slice of commits into a private accumulator and the
//! accumulators are merged with a commutative operation, so the result does
//! not depend on how the stream was split across threads.

mod assignment;
mod changed_files;
mod dependency;
mod influence;
mod ownership;
mod work_time;

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use regex::Regex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mappers::EntityId;
use crate::repo::{ChangeKind, CommitPair, FileChange, LineAttribution, RepositoryHandle};

pub use assignment::{mine_assignment_matrix, AssignmentMatrix, AssignmentMiner};
pub use changed_files::{mine_changed_files, ChangedFiles, ChangedFilesMiner};
pub use dependency::{
    mine_file_dependency_matrix, FileDependencyMatrix, FileDependencyMiner,
    DEFAULT_MAX_FILES_PER_COMMIT,
};
pub use influence::{mine_commit_influence_graph, CommitInfluenceGraph};
pub use ownership::{mine_files_ownership, DoaWeights, OwnershipResult};
pub use work_time::{mine_work_time, WorkTimeHistogram, WorkTimeMiner};

/// File ids of one change; `None` where the change has no such side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChangeIds {
    pub old: Option<EntityId>,
    pub new: Option<EntityId>,
}

/// A commit pair together with its diff and registered ids.
#[derive(Debug, Clone)]
pub struct MinedCommit {
    pub pair: CommitPair,
    pub commit_id: EntityId,
    pub author_id: EntityId,
    pub changes: Vec<FileChange>,
    /// Parallel to `changes`.
    pub change_ids: Vec<ChangeIds>,
}

impl MinedCommit {
    /// Files this commit counts as modified: renames and additions under the
    /// new path, deletions under the old one.
    pub fn counted_files(&self) -> BTreeSet<EntityId> {
        self.change_ids
            .iter()
            .filter_map(|ids| ids.new.or(ids.old))
            .collect()
    }

    /// Every path id this commit touched, including rename sources.
    pub fn touched_files(&self) -> BTreeSet<EntityId> {
        self.change_ids
            .iter()
            .flat_map(|ids| ids.old.into_iter().chain(ids.new))
            .collect()
    }

    /// False for the additional pairs emitted for non-first merge parents.
    pub fn is_first_parent_pair(&self) -> bool {
        self.pair.parent.sha() == self.pair.current.parent_shas.first().map(String::as_str)
    }

    pub fn changes_with_ids(&self) -> impl Iterator<Item = (&FileChange, ChangeIds)> {
        self.changes.iter().zip(self.change_ids.iter().copied())
    }
}

/// A miner whose result is a commutative fold over individual commits.
pub trait CommitMiner: Sync {
    type Output: Default + Send;

    fn process(&self, commit: &MinedCommit, acc: &mut Self::Output) -> Result<()>;

    fn merge(&self, acc: &mut Self::Output, other: Self::Output);
}

/// Runs `miner` over `commits` on the current rayon pool.
pub fn fold_commits<M: CommitMiner>(miner: &M, commits: &[MinedCommit]) -> Result<M::Output> {
    commits
        .par_iter()
        .try_fold(M::Output::default, |mut acc, commit| {
            miner.process(commit, &mut acc)?;
            Ok(acc)
        })
        .try_reduce(M::Output::default, |mut a, b| {
            miner.merge(&mut a, b);
            Ok(a)
        })
}

/// A named, JSON-serializable miner or calculation output.
pub trait MinerResult: Serialize {
    /// Output file name inside the run's output directory.
    const FILE_NAME: &'static str;

    fn to_json(&self) -> String {
        serde_json::to_string(self).expect("miner outputs serialize")
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(Self::FILE_NAME);
        std::fs::write(&path, self.to_json())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

/// Identifies bug-fixing commits by their message.
#[derive(Debug, Clone)]
pub struct FixMatcher {
    pattern: Regex,
}

impl FixMatcher {
    /// Default rule: "fix" anywhere in the message, any case. Note that this
    /// also matches words such as "prefix".
    pub const DEFAULT_PATTERN: &'static str = "(?i)fix";

    pub fn new(pattern: &str) -> Result<Self> {
        let pattern = Regex::new(pattern)
            .map_err(|e| Error::InvalidConfig(format!("bad fix pattern: {e}")))?;
        Ok(FixMatcher { pattern })
    }

    pub fn as_str(&self) -> &str {
        self.pattern.as_str()
    }

    pub fn is_fix(&self, message: &str) -> bool {
        self.pattern.is_match(message)
    }
}

impl Default for FixMatcher {
    fn default() -> Self {
        FixMatcher::new(Self::DEFAULT_PATTERN).expect("default pattern compiles")
    }
}

/// Line attribution as the blame-based miners need it.
pub trait BlameSource: Sync {
    fn blame(&self, commit_sha: &str, path: &str) -> Result<Vec<LineAttribution>>;

    /// Paths of the non-binary files in the tree of `commit_sha`.
    fn text_files(&self, commit_sha: &str) -> Result<Vec<String>>;
}

/// [`BlameSource`] backed by a repository.
#[derive(Debug, Clone, Copy)]
pub struct RepoBlame<'a> {
    pub handle: &'a RepositoryHandle,
    pub rename_threshold: u8,
}

impl BlameSource for RepoBlame<'_> {
    fn blame(&self, commit_sha: &str, path: &str) -> Result<Vec<LineAttribution>> {
        self.handle.blame_file(commit_sha, path, self.rename_threshold)
    }

    fn text_files(&self, commit_sha: &str) -> Result<Vec<String>> {
        Ok(self
            .handle
            .tree_files(commit_sha)?
            .into_iter()
            .filter(|f| !f.binary)
            .map(|f| f.path)
            .collect())
    }
}

pub(crate) fn is_line_bearing(change: &FileChange) -> bool {
    !change.binary && matches!(change.kind, ChangeKind::Modify | ChangeKind::Delete | ChangeKind::Rename)
}
