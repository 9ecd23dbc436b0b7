//! First-parent line attribution.
//!
//! Starting from a file revision, every line is carried backwards through
//! first-parent history. At each step the file's blob is compared with the
//! parent's blob; lines inside a changed range belong to the current commit,
//! the rest are renumbered into the parent's coordinates and passed on. A
//! path missing from the parent is looked up through rename detection before
//! the remaining lines are assigned to the commit that added the file.

use std::collections::HashMap;
use std::path::Path;

use git2::{ObjectType, Oid, Repository, Tree};

use super::diff::{diff_options, tree_diff};
use super::{find_commit, Hunk, LineAttribution, RepositoryHandle};
use crate::error::{Error, Result};

/// Number of lines as Git counts them: a trailing fragment without a newline
/// is a line of its own.
pub(crate) fn count_lines(content: &[u8]) -> usize {
    let newlines = content.iter().filter(|&&b| b == b'\n').count();
    match content.last() {
        Some(b'\n') | None => newlines,
        Some(_) => newlines + 1,
    }
}

fn blob_at(tree: &Tree<'_>, path: &str) -> Option<Oid> {
    let entry = tree.get_path(Path::new(path)).ok()?;
    (entry.kind() == Some(ObjectType::Blob)).then(|| entry.id())
}

/// Old path of `path` if the step `parent -> child` renamed it.
fn renamed_from(
    repo: &Repository,
    parent: &Tree<'_>,
    child: &Tree<'_>,
    path: &str,
    rename_threshold: u8,
) -> Result<Option<String>> {
    let diff = tree_diff(repo, Some(parent), Some(child), rename_threshold)?;
    for delta in diff.deltas() {
        if delta.status() != git2::Delta::Renamed {
            continue;
        }
        if delta.new_file().path().and_then(Path::to_str) == Some(path) {
            return Ok(delta
                .old_file()
                .path()
                .map(|p| p.to_string_lossy().into_owned()));
        }
    }
    Ok(None)
}

fn blob_hunks(repo: &Repository, old: Oid, new: Oid) -> Result<Vec<Hunk>> {
    let old_blob = repo.find_blob(old)?;
    let new_blob = repo.find_blob(new)?;
    let mut opts = diff_options();
    let patch = git2::Patch::from_blobs(&old_blob, None, &new_blob, None, Some(&mut opts))?;
    let mut hunks = Vec::with_capacity(patch.num_hunks());
    for h in 0..patch.num_hunks() {
        let (hunk, _) = patch.hunk(h)?;
        hunks.push(Hunk::new(
            hunk.old_start(),
            hunk.old_lines(),
            hunk.new_start(),
            hunk.new_lines(),
        ));
    }
    Ok(hunks)
}

/// Splits `pending` (sorted by line in the child revision) into lines the
/// child changed and lines renumbered into the parent revision.
///
/// Each pending entry is `(line_in_revision, final_line_index)`.
fn pass_to_parent(pending: Vec<(u32, u32)>, hunks: &[Hunk]) -> (Vec<u32>, Vec<(u32, u32)>) {
    let mut blamed = Vec::new();
    let mut passed = Vec::with_capacity(pending.len());
    let mut next_hunk = 0;
    let mut offset: i64 = 0;
    for (line, final_idx) in pending {
        // Absorb every hunk lying entirely before `line`.
        while let Some(h) = hunks.get(next_hunk) {
            let end = if h.new_len == 0 {
                h.new_start + 1
            } else {
                h.new_start + h.new_len
            };
            if end > line {
                break;
            }
            offset += i64::from(h.old_len) - i64::from(h.new_len);
            next_hunk += 1;
        }
        let inside = hunks.get(next_hunk).is_some_and(|h| {
            h.new_len > 0 && h.new_start <= line && line < h.new_start + h.new_len
        });
        if inside {
            blamed.push(final_idx);
        } else {
            passed.push(((i64::from(line) + offset) as u32, final_idx));
        }
    }
    (blamed, passed)
}

impl RepositoryHandle {
    /// Attributes every line of `path` at `commit_sha` to the first-parent
    /// commit that last introduced or modified it.
    pub fn blame_file(
        &self,
        commit_sha: &str,
        path: &str,
        rename_threshold: u8,
    ) -> Result<Vec<LineAttribution>> {
        self.with_repo(|repo| blame_in(repo, commit_sha, path, rename_threshold))
    }
}

fn blame_in(
    repo: &Repository,
    commit_sha: &str,
    path: &str,
    rename_threshold: u8,
) -> Result<Vec<LineAttribution>> {
    let start = find_commit(repo, commit_sha)?;
    let start_tree = start.tree()?;
    let not_found = || Error::FileNotInTree {
        commit: commit_sha.to_owned(),
        path: path.to_owned(),
    };
    let mut blob = blob_at(&start_tree, path).ok_or_else(not_found)?;
    let line_count = count_lines(repo.find_blob(blob)?.content()) as u32;

    let mut owner: Vec<Option<Oid>> = vec![None; line_count as usize];
    let mut pending: Vec<(u32, u32)> = (0..line_count).map(|i| (i + 1, i)).collect();
    let mut commit = start;
    let mut tree = start_tree;
    let mut cur_path = path.to_owned();

    while !pending.is_empty() {
        let parent = match commit.parent_ids().next() {
            Some(id) => Some(repo.find_commit(id).map_err(|e| {
                Error::CorruptObject(format!("commit {id}: {}", e.message()))
            })?),
            None => None,
        };
        let Some(parent) = parent else {
            for (_, idx) in pending.drain(..) {
                owner[idx as usize] = Some(commit.id());
            }
            break;
        };
        let parent_tree = parent.tree()?;
        let parent_path = match blob_at(&parent_tree, &cur_path) {
            Some(_) => Some(cur_path.clone()),
            None => renamed_from(repo, &parent_tree, &tree, &cur_path, rename_threshold)?,
        };
        let parent_blob = parent_path
            .as_deref()
            .and_then(|p| blob_at(&parent_tree, p));
        let (Some(parent_path), Some(parent_blob)) = (parent_path, parent_blob) else {
            for (_, idx) in pending.drain(..) {
                owner[idx as usize] = Some(commit.id());
            }
            break;
        };

        if parent_blob != blob {
            let hunks = blob_hunks(repo, parent_blob, blob)?;
            let (blamed, passed) = pass_to_parent(std::mem::take(&mut pending), &hunks);
            for idx in blamed {
                owner[idx as usize] = Some(commit.id());
            }
            pending = passed;
        }
        commit = parent;
        tree = parent_tree;
        cur_path = parent_path;
        blob = parent_blob;
    }

    let mut emails: HashMap<Oid, String> = HashMap::new();
    owner
        .into_iter()
        .enumerate()
        .map(|(i, oid)| {
            let oid = oid.expect("every line is attributed once the walk ends");
            let email = match emails.get(&oid) {
                Some(e) => e.clone(),
                None => {
                    let c = repo.find_commit(oid)?;
                    let e = String::from_utf8_lossy(c.author().email_bytes()).into_owned();
                    emails.insert(oid, e.clone());
                    e
                }
            };
            Ok(LineAttribution {
                line_no: i as u32 + 1,
                introducing_sha: oid.to_string(),
                author_email: email,
            })
        })
        .collect()
}
