use git2::{Delta, Diff, DiffFindOptions, DiffOptions, Oid, Repository, Tree};

use super::{find_commit, ChangeKind, CommitPair, FileChange, Hunk, ParentRef, RepositoryHandle};
use crate::error::{Error, Result};

/// Number of leading bytes inspected for NUL when classifying content.
const BINARY_SNIFF_LEN: usize = 8000;

/// Git's rename-detection candidate limit.
const RENAME_LIMIT: usize = 1000;

/// How much of a diff to materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffDetail {
    /// File-level kinds and paths only.
    FilesOnly,
    /// File-level changes plus zero-context line hunks.
    #[default]
    WithHunks,
}

/// Content is binary when a NUL byte occurs in its first 8000 bytes.
pub fn is_binary(content: &[u8]) -> bool {
    content[..content.len().min(BINARY_SNIFF_LEN)].contains(&0)
}

pub(crate) fn diff_options() -> DiffOptions {
    let mut opts = DiffOptions::new();
    opts.context_lines(0)
        .interhunk_lines(0)
        .indent_heuristic(true)
        .force_text(true);
    opts
}

/// Tree-to-tree diff with rename detection applied.
pub(crate) fn tree_diff<'r>(
    repo: &'r Repository,
    old: Option<&Tree<'r>>,
    new: Option<&Tree<'r>>,
    rename_threshold: u8,
) -> Result<Diff<'r>> {
    let mut opts = diff_options();
    let mut diff = repo.diff_tree_to_tree(old, new, Some(&mut opts))?;
    let mut find = DiffFindOptions::new();
    find.renames(true)
        .rename_threshold(u16::from(rename_threshold))
        .rename_limit(RENAME_LIMIT);
    diff.find_similar(Some(&mut find))?;
    Ok(diff)
}

fn blob_is_binary(repo: &Repository, id: Oid) -> Result<bool> {
    if id.is_zero() {
        return Ok(false);
    }
    match repo.find_blob(id) {
        Ok(blob) => Ok(is_binary(blob.content())),
        // Submodule entries point at commits that are not in this odb.
        Err(e) if e.code() == git2::ErrorCode::NotFound => Ok(false),
        Err(e) => Err(Error::CorruptObject(format!("blob {id}: {}", e.message()))),
    }
}

impl RepositoryHandle {
    /// Computes the file changes between `pair.parent` and `pair.current`.
    pub fn compute_diff(&self, pair: &CommitPair, rename_threshold: u8) -> Result<Vec<FileChange>> {
        self.compute_diff_with(pair, rename_threshold, DiffDetail::WithHunks)
    }

    pub fn compute_diff_with(
        &self,
        pair: &CommitPair,
        rename_threshold: u8,
        detail: DiffDetail,
    ) -> Result<Vec<FileChange>> {
        self.with_repo(|repo| {
            let current = find_commit(repo, &pair.current.sha)?;
            let new_tree = current.tree()?;
            let old_tree = match &pair.parent {
                ParentRef::Commit(meta) => Some(find_commit(repo, &meta.sha)?.tree()?),
                ParentRef::EmptyTree => None,
            };
            let diff = tree_diff(repo, old_tree.as_ref(), Some(&new_tree), rename_threshold)?;
            collect_changes(repo, &diff, detail)
        })
    }
}

fn collect_changes(repo: &Repository, diff: &Diff<'_>, detail: DiffDetail) -> Result<Vec<FileChange>> {
    let mut changes = Vec::with_capacity(diff.deltas().len());
    for (idx, delta) in diff.deltas().enumerate() {
        let kind = match delta.status() {
            Delta::Added => ChangeKind::Add,
            Delta::Deleted => ChangeKind::Delete,
            Delta::Modified | Delta::Typechange => ChangeKind::Modify,
            Delta::Renamed => ChangeKind::Rename,
            _ => continue,
        };
        let path_of = |file: git2::DiffFile<'_>| {
            file.path().map(|p| p.to_string_lossy().into_owned())
        };
        let old_path = match kind {
            ChangeKind::Add => None,
            _ => path_of(delta.old_file()),
        };
        let new_path = match kind {
            ChangeKind::Delete => None,
            _ => path_of(delta.new_file()),
        };
        let binary = blob_is_binary(repo, delta.old_file().id())?
            || blob_is_binary(repo, delta.new_file().id())?;

        let mut hunks = Vec::new();
        if detail == DiffDetail::WithHunks && !binary {
            if let Some(patch) = git2::Patch::from_diff(diff, idx)? {
                for h in 0..patch.num_hunks() {
                    let (hunk, _) = patch.hunk(h)?;
                    hunks.push(Hunk::new(
                        hunk.old_start(),
                        hunk.old_lines(),
                        hunk.new_start(),
                        hunk.new_lines(),
                    ));
                }
            }
        }
        changes.push(FileChange {
            kind,
            old_path,
            new_path,
            binary,
            hunks,
        });
    }
    Ok(changes)
}
