use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use super::{fold_commits, CommitMiner, MinedCommit, MinerResult};
use crate::error::Result;
use crate::mappers::EntityId;
use crate::matrix::SparseCountMatrix;

/// Commits changing more files than this are left out of co-change counts.
pub const DEFAULT_MAX_FILES_PER_COMMIT: usize = 500;

/// Symmetric file x file co-change counts.
///
/// Both `(a, b)` and `(b, a)` are stored; the JSON form keeps only `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FileDependencyMatrix {
    matrix: SparseCountMatrix,
    skipped_commits: u64,
}

impl Default for FileDependencyMatrix {
    fn default() -> Self {
        FileDependencyMatrix {
            matrix: SparseCountMatrix::new(0, 0),
            skipped_commits: 0,
        }
    }
}

impl FileDependencyMatrix {
    pub fn new(files: usize) -> Self {
        FileDependencyMatrix {
            matrix: SparseCountMatrix::new(files, files),
            skipped_commits: 0,
        }
    }

    pub fn matrix(&self) -> &SparseCountMatrix {
        &self.matrix
    }

    pub fn files(&self) -> usize {
        self.matrix.rows()
    }

    /// Commits ignored for touching too many files.
    pub fn skipped_commits(&self) -> u64 {
        self.skipped_commits
    }

    pub fn get(&self, a: EntityId, b: EntityId) -> u64 {
        self.matrix.get(a, b).copied().unwrap_or(0)
    }

    /// Adds `count` co-changes between two distinct files.
    pub fn add_pair(&mut self, a: EntityId, b: EntityId, count: u64) {
        assert_ne!(a, b, "a file does not depend on itself");
        let n = a.max(b) as usize + 1;
        self.matrix.grow(n, n);
        self.matrix.add(a, b, count);
        self.matrix.add(b, a, count);
    }

    fn with_dims(mut self, files: usize) -> Self {
        self.matrix.grow(files, files);
        self
    }
}

impl Serialize for FileDependencyMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let upper: BTreeMap<EntityId, BTreeMap<EntityId, u64>> = self
            .matrix
            .row_iter()
            .filter_map(|(a, cols)| {
                let row: BTreeMap<_, _> = cols.range(a + 1..).map(|(b, v)| (*b, *v)).collect();
                (!row.is_empty()).then_some((a, row))
            })
            .collect();
        upper.serialize(serializer)
    }
}

impl MinerResult for FileDependencyMatrix {
    const FILE_NAME: &'static str = "FileDependencyMatrix.json";
}

pub struct FileDependencyMiner {
    pub max_files_per_commit: usize,
}

impl CommitMiner for FileDependencyMiner {
    type Output = FileDependencyMatrix;

    fn process(&self, commit: &MinedCommit, acc: &mut FileDependencyMatrix) -> Result<()> {
        let files: Vec<EntityId> = commit.counted_files().into_iter().collect();
        if files.len() > self.max_files_per_commit {
            acc.skipped_commits += 1;
            return Ok(());
        }
        for (i, &a) in files.iter().enumerate() {
            for &b in &files[i + 1..] {
                acc.add_pair(a, b, 1);
            }
        }
        Ok(())
    }

    fn merge(&self, acc: &mut FileDependencyMatrix, other: FileDependencyMatrix) {
        acc.matrix.merge(other.matrix);
        acc.skipped_commits += other.skipped_commits;
    }
}

/// Counts, for every pair of files, the commits that changed both.
pub fn mine_file_dependency_matrix(
    commits: &[MinedCommit],
    files: usize,
    max_files_per_commit: usize,
) -> Result<FileDependencyMatrix> {
    let miner = FileDependencyMiner {
        max_files_per_commit,
    };
    Ok(fold_commits(&miner, commits)?.with_dims(files))
}
