use serde::Serialize;

use super::{fold_commits, CommitMiner, MinedCommit, MinerResult};
use crate::error::Result;
use crate::matrix::SparseCountMatrix;

/// Developer x file modification counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AssignmentMatrix(pub SparseCountMatrix);

impl Default for AssignmentMatrix {
    fn default() -> Self {
        AssignmentMatrix(SparseCountMatrix::new(0, 0))
    }
}

impl AssignmentMatrix {
    pub fn matrix(&self) -> &SparseCountMatrix {
        &self.0
    }

    /// Fixes the declared dimensions to the registry sizes.
    pub fn with_dims(self, users: usize, files: usize) -> Self {
        AssignmentMatrix(SparseCountMatrix::from_rows(users, files, self.0.into_rows()))
    }
}

impl MinerResult for AssignmentMatrix {
    const FILE_NAME: &'static str = "AssignmentMatrix.json";
}

pub struct AssignmentMiner;

impl CommitMiner for AssignmentMiner {
    type Output = AssignmentMatrix;

    fn process(&self, commit: &MinedCommit, acc: &mut AssignmentMatrix) -> Result<()> {
        for file in commit.counted_files() {
            acc.0.grow(commit.author_id as usize + 1, file as usize + 1);
            acc.0.add(commit.author_id, file, 1);
        }
        Ok(())
    }

    fn merge(&self, acc: &mut AssignmentMatrix, other: AssignmentMatrix) {
        acc.0.merge(other.0);
    }
}

/// Entry `(u, f)` is the number of commits by `u` that changed `f`.
pub fn mine_assignment_matrix(commits: &[MinedCommit], users: usize, files: usize) -> Result<AssignmentMatrix> {
    Ok(fold_commits(&AssignmentMiner, commits)?.with_dims(users, files))
}
