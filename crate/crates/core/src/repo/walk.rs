use std::collections::HashSet;

use super::{find_commit, Branch, CommitMeta, CommitPair, ParentRef, RepositoryHandle};
use crate::error::Result;

/// Traversal switches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WalkOptions {
    /// Also emit a pair for every non-first parent of a merge commit. The
    /// traversal itself still only follows first parents.
    pub merge_parents: bool,
}

impl RepositoryHandle {
    /// Walks each branch from its tip along first parents, pairing every
    /// commit with its first parent (or the empty tree for roots).
    ///
    /// Commits already reached through an earlier branch are not visited
    /// again, and since the visited set is closed under first-parent ancestry
    /// the walk of a branch stops at the first such commit.
    pub fn walk_commit_pairs(
        &self,
        branches: &[Branch],
        options: WalkOptions,
    ) -> Result<Vec<CommitPair>> {
        self.with_repo(|repo| {
            let mut visited = HashSet::new();
            let mut pairs = Vec::new();
            for branch in branches {
                let mut next = Some(branch.tip.clone());
                while let Some(sha) = next.take() {
                    if !visited.insert(sha.clone()) {
                        break;
                    }
                    let commit = find_commit(repo, &sha)?;
                    let current = CommitMeta::from_git(&commit);
                    let parent = match current.parent_shas.first() {
                        Some(first) => {
                            ParentRef::Commit(CommitMeta::from_git(&find_commit(repo, first)?))
                        }
                        None => ParentRef::EmptyTree,
                    };
                    next = current.parent_shas.first().cloned();
                    let extra_parents = if options.merge_parents {
                        current.parent_shas[1.min(current.parent_shas.len())..].to_vec()
                    } else {
                        Vec::new()
                    };
                    pairs.push(CommitPair {
                        current: current.clone(),
                        parent,
                    });
                    for extra in extra_parents {
                        pairs.push(CommitPair {
                            current: current.clone(),
                            parent: ParentRef::Commit(CommitMeta::from_git(&find_commit(
                                repo, &extra,
                            )?)),
                        });
                    }
                }
            }
            Ok(pairs)
        })
    }
}
