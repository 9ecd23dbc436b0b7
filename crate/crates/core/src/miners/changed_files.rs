use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{fold_commits, CommitMiner, MinedCommit, MinerResult};
use crate::error::Result;
use crate::mappers::EntityId;

/// Files each developer has changed, rename sources included.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ChangedFiles(pub BTreeMap<EntityId, BTreeSet<EntityId>>);

impl ChangedFiles {
    pub fn files_of(&self, user: EntityId) -> Option<&BTreeSet<EntityId>> {
        self.0.get(&user)
    }
}

impl MinerResult for ChangedFiles {
    const FILE_NAME: &'static str = "ChangedFiles.json";
}

pub struct ChangedFilesMiner;

impl CommitMiner for ChangedFilesMiner {
    type Output = ChangedFiles;

    fn process(&self, commit: &MinedCommit, acc: &mut ChangedFiles) -> Result<()> {
        let touched = commit.touched_files();
        if !touched.is_empty() {
            acc.0.entry(commit.author_id).or_default().extend(touched);
        }
        Ok(())
    }

    fn merge(&self, acc: &mut ChangedFiles, other: ChangedFiles) {
        for (user, files) in other.0 {
            acc.0.entry(user).or_default().extend(files);
        }
    }
}

pub fn mine_changed_files(commits: &[MinedCommit]) -> Result<ChangedFiles> {
    fold_commits(&ChangedFilesMiner, commits)
}
