//! Read-only access to an on-disk Git repository.
//!
//! [`RepositoryHandle`] wraps libgit2 and exposes the handful of operations
//! the miners need: branch resolution, first-parent traversal into
//! [`CommitPair`]s, tree-to-tree diffs with rename detection, and line
//! attribution. The handle never writes to the repository.
//!
//! A libgit2 repository object cannot be shared between threads, so the
//! handle keeps a small pool of independently opened instances and lends one
//! to each caller for the duration of an operation. That makes the handle
//! itself `Sync` and lets workers diff or blame distinct pairs concurrently.

mod blame;
mod diff;
mod walk;

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use git2::{Repository, RepositoryOpenFlags};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diff::{is_binary, DiffDetail};
pub use walk::WalkOptions;

/// Default similarity (percent) at which an ADD+DELETE pair becomes a rename.
pub const DEFAULT_RENAME_THRESHOLD: u8 = 50;

/// Metadata of a single commit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitMeta {
    pub sha: String,
    pub author_name: String,
    pub author_email: String,
    /// Seconds since the Unix epoch, UTC.
    pub author_time: i64,
    /// Author's timezone, minutes east of UTC.
    pub tz_offset: i32,
    pub parent_shas: Vec<String>,
    pub message: String,
}

impl CommitMeta {
    pub fn is_root(&self) -> bool {
        self.parent_shas.is_empty()
    }

    fn from_git(commit: &git2::Commit<'_>) -> Self {
        let author = commit.author();
        let when = author.when();
        CommitMeta {
            sha: commit.id().to_string(),
            author_name: String::from_utf8_lossy(author.name_bytes()).into_owned(),
            author_email: String::from_utf8_lossy(author.email_bytes()).into_owned(),
            author_time: when.seconds(),
            tz_offset: when.offset_minutes(),
            parent_shas: commit.parent_ids().map(|id| id.to_string()).collect(),
            message: String::from_utf8_lossy(commit.message_bytes()).into_owned(),
        }
    }
}

/// The "previous" side of a [`CommitPair`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParentRef {
    Commit(CommitMeta),
    /// Stand-in for the parent of a root commit: diffing against it reports
    /// every file of the root as added.
    EmptyTree,
}

impl ParentRef {
    pub fn sha(&self) -> Option<&str> {
        match self {
            ParentRef::Commit(meta) => Some(&meta.sha),
            ParentRef::EmptyTree => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitPair {
    pub current: CommitMeta,
    pub parent: ParentRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ChangeKind {
    Add,
    Modify,
    Delete,
    Rename,
}

/// A changed line range, in the unified-diff convention: a zero-length side
/// starts at the line *before* the change (0 for the start of the file).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: u32,
    pub old_len: u32,
    pub new_start: u32,
    pub new_len: u32,
}

impl Hunk {
    pub fn new(old_start: u32, old_len: u32, new_start: u32, new_len: u32) -> Self {
        Hunk {
            old_start,
            old_len,
            new_start,
            new_len,
        }
    }

    /// 1-based line numbers on the old side covered by this hunk.
    pub fn old_lines(&self) -> std::ops::Range<u32> {
        self.old_start..self.old_start + self.old_len
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub kind: ChangeKind,
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    /// True when either side is binary; binary changes carry no hunks.
    pub binary: bool,
    pub hunks: Vec<Hunk>,
}

impl FileChange {
    /// The path the file has after the change (the old path for deletions).
    pub fn path(&self) -> &str {
        self.new_path
            .as_deref()
            .or(self.old_path.as_deref())
            .expect("a file change always carries at least one path")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineAttribution {
    pub line_no: u32,
    pub introducing_sha: String,
    pub author_email: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeFile {
    pub path: String,
    pub binary: bool,
    pub lines: usize,
}

/// Which branches to traverse.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BranchSelector {
    #[default]
    All,
    Named(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Branch {
    pub name: String,
    pub tip: String,
}

/// Shareable, read-only handle on a repository.
pub struct RepositoryHandle {
    path: PathBuf,
    pool: Mutex<Vec<Repository>>,
}

impl std::fmt::Debug for RepositoryHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RepositoryHandle")
            .field("path", &self.path)
            .finish_non_exhaustive()
    }
}

impl RepositoryHandle {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta = std::fs::metadata(path)
            .map_err(|e| Error::io(format!("cannot access {}", path.display()), e))?;
        if !meta.is_dir() {
            return Err(Error::NotARepository(path.to_path_buf()));
        }
        let repo = open_exact(path)?;
        Ok(RepositoryHandle {
            path: path.to_path_buf(),
            pool: Mutex::new(vec![repo]),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Runs `f` with a repository instance borrowed from the pool.
    pub(crate) fn with_repo<T>(&self, f: impl FnOnce(&Repository) -> Result<T>) -> Result<T> {
        let pooled = self.pool.lock().expect("repository pool poisoned").pop();
        let repo = match pooled {
            Some(repo) => repo,
            None => open_exact(&self.path)?,
        };
        let out = f(&repo);
        self.pool.lock().expect("repository pool poisoned").push(repo);
        out
    }

    /// Resolves `selector` into existing local branches, sorted by name.
    pub fn resolve_branches(&self, selector: &BranchSelector) -> Result<Vec<Branch>> {
        self.with_repo(|repo| {
            let mut out = Vec::new();
            match selector {
                BranchSelector::All => {
                    for item in repo.branches(Some(git2::BranchType::Local))? {
                        let (branch, _) = item?;
                        let Some(name) = branch.name()?.map(str::to_owned) else {
                            continue;
                        };
                        let tip = branch.get().peel_to_commit()?.id().to_string();
                        out.push(Branch { name, tip });
                    }
                }
                BranchSelector::Named(names) => {
                    let mut missing = Vec::new();
                    for name in names {
                        if out.iter().any(|b: &Branch| &b.name == name) {
                            continue;
                        }
                        match repo.find_branch(name, git2::BranchType::Local) {
                            Ok(branch) => {
                                let tip = branch.get().peel_to_commit()?.id().to_string();
                                out.push(Branch {
                                    name: name.clone(),
                                    tip,
                                });
                            }
                            Err(e) if e.code() == git2::ErrorCode::NotFound => {
                                missing.push(name.clone())
                            }
                            Err(e) => return Err(e.into()),
                        }
                    }
                    if !missing.is_empty() {
                        return Err(Error::UnknownBranch(missing));
                    }
                }
            }
            out.sort_by(|a, b| a.name.cmp(&b.name));
            Ok(out)
        })
    }

    /// Every blob in the tree of `sha`, sorted by path.
    pub fn tree_files(&self, sha: &str) -> Result<Vec<TreeFile>> {
        self.with_repo(|repo| {
            let tree = find_commit(repo, sha)?.tree()?;
            let mut entries = Vec::new();
            tree.walk(git2::TreeWalkMode::PreOrder, |root, entry| {
                if entry.kind() == Some(git2::ObjectType::Blob) {
                    let name = String::from_utf8_lossy(entry.name_bytes());
                    entries.push((format!("{root}{name}"), entry.id()));
                }
                git2::TreeWalkResult::Ok
            })?;
            let mut files = entries
                .into_iter()
                .map(|(path, id)| {
                    let blob = repo.find_blob(id)?;
                    Ok(TreeFile {
                        path,
                        binary: is_binary(blob.content()),
                        lines: blame::count_lines(blob.content()),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            files.sort_by(|a, b| a.path.cmp(&b.path));
            Ok(files)
        })
    }

    pub fn commit_meta(&self, sha: &str) -> Result<CommitMeta> {
        self.with_repo(|repo| {
            let commit = find_commit(repo, sha)?;
            Ok(CommitMeta::from_git(&commit))
        })
    }
}

fn open_exact(path: &Path) -> Result<Repository> {
    Repository::open_ext(path, RepositoryOpenFlags::NO_SEARCH, std::iter::empty::<&OsStr>())
        .map_err(|_| Error::NotARepository(path.to_path_buf()))
}

pub(crate) fn find_commit<'r>(repo: &'r Repository, sha: &str) -> Result<git2::Commit<'r>> {
    let oid = git2::Oid::from_str(sha).map_err(|_| Error::CorruptObject(format!("bad id {sha}")))?;
    repo.find_commit(oid)
        .map_err(|e| Error::CorruptObject(format!("commit {sha}: {}", e.message())))
}
