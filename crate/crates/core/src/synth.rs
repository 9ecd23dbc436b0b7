//! Seeded synthetic repositories with known ground truth.
//!
//! The generator writes a linear history directly into the object database
//! (no working tree checkout) and tracks, for every line it writes, the
//! commit that wrote it. Lines are globally unique, so the line diff between
//! two revisions is unambiguous and the tracked origins are exactly what a
//! first-parent blame reports. The resulting [`Manifest`] carries the
//! expected output of each miner, keyed by identity, path and sha.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Datelike, FixedOffset, TimeZone, Timelike};
use git2::build::TreeUpdateBuilder;
use git2::{FileMode, Oid, Repository, RepositoryInitOptions, Signature, Time};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repo::ChangeKind;

const DIRS: [&str; 4] = ["src", "src/core", "docs", "tests"];
const TIMEZONES: [i32; 7] = [-480, -300, 0, 60, 120, 330, 540];
const WORDS: [&str; 8] = ["alpha", "beta", "gamma", "delta", "omega", "sigma", "kappa", "zeta"];
/// 2021-03-01T00:00:00Z
const EPOCH_START: i64 = 1_614_556_800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub commits: usize,
    pub authors: usize,
    pub files: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestChange {
    pub kind: ChangeKind,
    pub old_path: Option<String>,
    pub new_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCommit {
    pub sha: String,
    pub author: String,
    pub time: i64,
    pub tz_offset: i32,
    pub message: String,
    pub changes: Vec<ManifestChange>,
}

/// Ground truth of a synthetic repository. Developers are keyed by their
/// canonical (lowercased) email.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: SyntheticSpec,
    pub branch: String,
    pub head: String,
    /// Oldest first.
    pub commits: Vec<ManifestCommit>,
    pub changed_files: BTreeMap<String, BTreeSet<String>>,
    pub assignment: BTreeMap<String, BTreeMap<String, u64>>,
    /// Co-change counts for path pairs `a < b`.
    pub file_dependency: BTreeMap<String, BTreeMap<String, u64>>,
    pub work_time: BTreeMap<String, [[u64; 24]; 7]>,
    /// Fix commit sha -> introducing commit shas.
    pub influence: BTreeMap<String, BTreeSet<String>>,
    pub first_authors: BTreeMap<String, BTreeSet<String>>,
    /// Path at head -> developer -> surviving lines.
    pub line_ownership: BTreeMap<String, BTreeMap<String, u64>>,
}

impl Manifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

struct Line {
    text: String,
    origin: usize,
}

struct LiveFile {
    path: String,
    lines: Vec<Line>,
    creators: BTreeSet<String>,
}

impl LiveFile {
    fn content(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&line.text);
            out.push('\n');
        }
        out
    }
}

struct Generator {
    rng: ChaCha8Rng,
    next_line: u64,
    next_gen: u64,
}

impl Generator {
    fn line(&mut self, origin: usize) -> Line {
        self.next_line += 1;
        let word = WORDS.choose(&mut self.rng).expect("non-empty");
        Line {
            text: format!("line {} {word} {}", self.next_line, self.rng.gen::<u32>()),
            origin,
        }
    }

    fn path(&mut self, slot: usize) -> String {
        self.next_gen += 1;
        let dir = DIRS.choose(&mut self.rng).expect("non-empty");
        format!("{dir}/file{slot}_{}.txt", self.next_gen)
    }

    fn message(&mut self, i: usize) -> String {
        let templates: [&str; 10] = [
            "Add feature {}",
            "Refactor module {}",
            "Update docs for {}",
            "Improve performance of {}",
            "Tidy up {}",
            "Extend tests around {}",
            "Fix crash in {}",
            "bugfix: handle edge case {}",
            "FIXED regression #{}",
            "Rename prefix handling in {}",
        ];
        templates
            .choose(&mut self.rng)
            .expect("non-empty")
            .replace("{}", &i.to_string())
    }
}

fn signature(name: &str, email: &str, time: i64, tz: i32) -> Result<Signature<'static>> {
    Ok(Signature::new(name, email, &Time::new(time, tz))?)
}

/// Writes a seeded synthetic repository at `path` and returns its ground truth.
pub fn generate_synthetic_repo(path: &Path, spec: &SyntheticSpec) -> Result<Manifest> {
    if spec.commits == 0 || spec.authors == 0 || spec.files == 0 {
        return Err(Error::InvalidConfig("synthetic parameters must be >= 1".into()));
    }
    std::fs::create_dir_all(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    if std::fs::read_dir(path).map_err(|e| Error::io("listing target", e))?.next().is_some() {
        return Err(Error::InvalidConfig(format!("{} is not empty", path.display())));
    }
    let mut init = RepositoryInitOptions::new();
    init.initial_head("main");
    let repo = Repository::init_opts(path, &init)?;

    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        next_line: 0,
        next_gen: 0,
    };
    let authors: Vec<usize> = (0..spec.authors).collect();
    let mut slots: Vec<Option<LiveFile>> = (0..spec.files).map(|_| None).collect();
    let mut parent: Option<Oid> = None;
    let mut shas: Vec<String> = Vec::with_capacity(spec.commits);
    let mut time = EPOCH_START;

    let mut manifest = Manifest {
        spec: *spec,
        branch: "main".into(),
        head: String::new(),
        commits: Vec::new(),
        changed_files: BTreeMap::new(),
        assignment: BTreeMap::new(),
        file_dependency: BTreeMap::new(),
        work_time: BTreeMap::new(),
        influence: BTreeMap::new(),
        first_authors: BTreeMap::new(),
        line_ownership: BTreeMap::new(),
    };
    // Creators of deleted or renamed-away paths still count as first authors.
    let mut creators_by_path: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    for i in 0..spec.commits {
        let author = *authors.choose(&mut g.rng).expect("non-empty");
        let identity = format!("dev{author}@example.com");
        let email = if g.rng.gen_bool(0.2) {
            format!("Dev{author}@Example.COM")
        } else {
            identity.clone()
        };
        let name = format!("Developer {author}");
        time += g.rng.gen_range(600..2 * 86_400);
        let tz = TIMEZONES[author % TIMEZONES.len()];
        let message = g.message(i);

        // Which slots this commit touches.
        let mut touched: Vec<usize> = (0..spec.files).collect();
        touched.shuffle(&mut g.rng);
        let count = if i == 0 {
            spec.files.min(g.rng.gen_range(3..=6))
        } else if g.rng.gen_bool(0.03) {
            spec.files.min(g.rng.gen_range(5..=12))
        } else {
            spec.files.min(g.rng.gen_range(1..=4))
        };
        touched.truncate(count);
        touched.sort_unstable();

        let mut changes = Vec::new();
        let mut removed_origins = BTreeSet::new();
        let mut update = TreeUpdateBuilder::new();
        for slot in touched {
            match slots[slot].take() {
                None => {
                    let path = g.path(slot);
                    let n = g.rng.gen_range(3..=25);
                    let lines = (0..n).map(|_| g.line(i)).collect();
                    let file = LiveFile {
                        path: path.clone(),
                        lines,
                        creators: BTreeSet::from([identity.clone()]),
                    };
                    update.upsert(&path, repo.blob(file.content().as_bytes())?, FileMode::Blob);
                    creators_by_path.entry(path.clone()).or_default().insert(identity.clone());
                    changes.push(ManifestChange {
                        kind: ChangeKind::Add,
                        old_path: None,
                        new_path: Some(path),
                    });
                    slots[slot] = Some(file);
                }
                Some(file) => {
                    let roll: f64 = g.rng.gen();
                    if roll < 0.08 {
                        update.remove(&file.path);
                        removed_origins.extend(file.lines.iter().map(|l| l.origin));
                        changes.push(ManifestChange {
                            kind: ChangeKind::Delete,
                            old_path: Some(file.path),
                            new_path: None,
                        });
                    } else if roll < 0.16 {
                        let new_path = g.path(slot);
                        update.remove(&file.path);
                        update.upsert(&new_path, repo.blob(file.content().as_bytes())?, FileMode::Blob);
                        creators_by_path
                            .entry(new_path.clone())
                            .or_default()
                            .extend(file.creators.iter().cloned());
                        changes.push(ManifestChange {
                            kind: ChangeKind::Rename,
                            old_path: Some(file.path.clone()),
                            new_path: Some(new_path.clone()),
                        });
                        slots[slot] = Some(LiveFile {
                            path: new_path,
                            ..file
                        });
                    } else {
                        let mut file = file;
                        modify(&mut g, &mut file, i, &mut removed_origins);
                        update.upsert(&file.path, repo.blob(file.content().as_bytes())?, FileMode::Blob);
                        changes.push(ManifestChange {
                            kind: ChangeKind::Modify,
                            old_path: Some(file.path.clone()),
                            new_path: Some(file.path.clone()),
                        });
                        slots[slot] = Some(file);
                    }
                }
            }
        }

        let base = match parent {
            Some(oid) => repo.find_commit(oid)?.tree()?,
            None => repo.find_tree(repo.treebuilder(None)?.write()?)?,
        };
        let tree = repo.find_tree(update.create_updated(&repo, &base)?)?;
        let sig = signature(&name, &email, time, tz)?;
        let parents: Vec<git2::Commit<'_>> = parent.iter().map(|p| repo.find_commit(*p)).collect::<Result<_, _>>()?;
        let parent_refs: Vec<&git2::Commit<'_>> = parents.iter().collect();
        let oid = repo.commit(None, &sig, &sig, &message, &tree, &parent_refs)?;
        let sha = oid.to_string();
        shas.push(sha.clone());
        parent = Some(oid);

        // Ground truth for this commit.
        for c in &changes {
            let set = manifest.changed_files.entry(identity.clone()).or_default();
            set.extend(c.old_path.iter().cloned());
            set.extend(c.new_path.iter().cloned());
        }
        let counted: BTreeSet<String> = changes
            .iter()
            .map(|c| c.new_path.clone().or_else(|| c.old_path.clone()).expect("a path"))
            .collect();
        for path in &counted {
            *manifest
                .assignment
                .entry(identity.clone())
                .or_default()
                .entry(path.clone())
                .or_insert(0) += 1;
        }
        let counted: Vec<&String> = counted.iter().collect();
        for (k, a) in counted.iter().enumerate() {
            for b in &counted[k + 1..] {
                *manifest
                    .file_dependency
                    .entry((*a).clone())
                    .or_default()
                    .entry((*b).clone())
                    .or_insert(0) += 1;
            }
        }
        let local = FixedOffset::east_opt(tz * 60)
            .expect("valid offset")
            .timestamp_opt(time, 0)
            .single()
            .expect("unambiguous");
        manifest.work_time.entry(identity.clone()).or_insert([[0; 24]; 7])
            [local.weekday().num_days_from_monday() as usize][local.hour() as usize] += 1;
        if message.to_lowercase().contains("fix") {
            manifest.influence.insert(
                sha.clone(),
                removed_origins
                    .iter()
                    .filter(|&&o| o != i)
                    .map(|&o| shas[o].clone())
                    .collect(),
            );
        }
        manifest.commits.push(ManifestCommit {
            sha,
            author: identity,
            time,
            tz_offset: tz,
            message,
            changes,
        });
    }

    let head = parent.expect("at least one commit");
    repo.reference("refs/heads/main", head, true, "synthetic history")?;
    repo.set_head("refs/heads/main")?;
    manifest.head = head.to_string();
    manifest.first_authors = creators_by_path;
    for file in slots.iter().flatten() {
        let counts = manifest.line_ownership.entry(file.path.clone()).or_default();
        for line in &file.lines {
            *counts.entry(manifest.commits[line.origin].author.clone()).or_insert(0) += 1;
        }
    }
    Ok(manifest)
}

/// Replaces, inserts or deletes a few lines; always changes the content.
fn modify(g: &mut Generator, file: &mut LiveFile, commit: usize, removed: &mut BTreeSet<usize>) {
    let edits = g.rng.gen_range(1..=3);
    for _ in 0..edits {
        let len = file.lines.len();
        match g.rng.gen_range(0..3) {
            0 if len > 0 => {
                let at = g.rng.gen_range(0..len);
                removed.insert(file.lines[at].origin);
                file.lines[at] = g.line(commit);
            }
            1 if len > 2 => {
                let at = g.rng.gen_range(0..len);
                removed.insert(file.lines[at].origin);
                file.lines.remove(at);
            }
            _ => {
                let at = g.rng.gen_range(0..=len);
                let n = g.rng.gen_range(1..=3);
                for k in 0..n {
                    let line = g.line(commit);
                    file.lines.insert(at + k, line);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_history() {
        let spec = SyntheticSpec { commits: 15, authors: 3, files: 6, seed: 7 };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = generate_synthetic_repo(a.path(), &spec).unwrap();
        let mb = generate_synthetic_repo(b.path(), &spec).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(ma.commits.len(), 15);
    }

    #[test]
    fn rejects_zero_parameters_and_non_empty_targets() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec { commits: 0, authors: 1, files: 1, seed: 0 };
        assert!(generate_synthetic_repo(dir.path(), &spec).is_err());
        std::fs::write(dir.path().join("x"), "x").unwrap();
        let spec = SyntheticSpec { commits: 1, ..spec };
        assert!(generate_synthetic_repo(dir.path(), &spec).is_err());
    }
}
