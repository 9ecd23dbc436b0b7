//! Fixture repositories scripted with the git CLI, and oracles that derive
//! every miner output from plain git plumbing commands.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

pub const EMPTY_TREE: &str = "4b825dc642cb6eb9a060e54bf8d69288fbee4904";

/// Runs git in `dir` isolated from user and system configuration.
pub fn git_in(dir: &Path, args: &[&str], env: &[(&str, String)]) -> String {
    let out = Command::new("git")
        .current_dir(dir)
        .args(args)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("HOME", dir)
        .envs(env.iter().map(|(k, v)| (*k, v.as_str())))
        .output()
        .expect("git is installed");
    assert!(
        out.status.success(),
        "git {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 git output")
}

pub fn git(dir: &Path, args: &[&str]) -> String {
    git_in(dir, args, &[])
}

/// A repository built commit by commit through the git CLI.
pub struct GitRepo {
    pub dir: TempDir,
}

impl GitRepo {
    pub fn init() -> Self {
        let dir = tempfile::tempdir().unwrap();
        git(dir.path(), &["init", "-q", "-b", "main"]);
        GitRepo { dir }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn git(&self, args: &[&str]) -> String {
        git(self.path(), args)
    }

    pub fn write(&self, path: &str, content: impl AsRef<[u8]>) {
        let full = self.path().join(path);
        std::fs::create_dir_all(full.parent().unwrap()).unwrap();
        std::fs::write(full, content).unwrap();
    }

    pub fn write_lines(&self, path: &str, lines: &[&str]) {
        let mut text = lines.join("\n");
        text.push('\n');
        self.write(path, text);
    }

    pub fn remove(&self, path: &str) {
        self.git(&["rm", "-q", path]);
    }

    pub fn mv(&self, from: &str, to: &str) {
        let full = self.path().join(to);
        std::fs::create_dir_all(full.parent().unwrap()).unwrap();
        self.git(&["mv", from, to]);
    }

    fn author_env(name: &str, email: &str, time: i64, tz: &str) -> Vec<(&'static str, String)> {
        let date = format!("@{time} {tz}");
        vec![
            ("GIT_AUTHOR_NAME", name.to_owned()),
            ("GIT_AUTHOR_EMAIL", email.to_owned()),
            ("GIT_AUTHOR_DATE", date.clone()),
            ("GIT_COMMITTER_NAME", name.to_owned()),
            ("GIT_COMMITTER_EMAIL", email.to_owned()),
            ("GIT_COMMITTER_DATE", date),
        ]
    }

    /// Stages everything and commits; returns the new sha.
    pub fn commit(&self, name: &str, email: &str, time: i64, tz: &str, message: &str) -> String {
        self.git(&["add", "-A"]);
        git_in(
            self.path(),
            &["commit", "-q", "--allow-empty", "-m", message],
            &Self::author_env(name, email, time, tz),
        );
        self.head()
    }

    pub fn merge(&self, branch: &str, name: &str, email: &str, time: i64, tz: &str, message: &str) -> String {
        git_in(
            self.path(),
            &["merge", "-q", "--no-ff", "-m", message, branch],
            &Self::author_env(name, email, time, tz),
        );
        self.head()
    }

    pub fn head(&self) -> String {
        self.git(&["rev-parse", "HEAD"]).trim().to_owned()
    }

    pub fn checkout(&self, args: &[&str]) {
        let mut full = vec!["checkout", "-q"];
        full.extend_from_slice(args);
        self.git(&full);
    }
}

/// Numbered, globally unique lines.
pub fn lines(prefix: &str, range: std::ops::RangeInclusive<u32>) -> Vec<String> {
    range.map(|i| format!("{prefix} line {i}")).collect()
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// A history covering merges, several branches, renames with and without
/// edits, a binary file, an empty commit, fix messages and an email that
/// differs only in case.
pub fn hand_crafted_repo() -> GitRepo {
    let r = GitRepo::init();
    let t0 = 1_700_000_000;
    let mut lib = lines("lib", 1..=8);
    r.write_lines("README.md", &refs(&lines("readme", 1..=3)));
    r.write_lines("src/lib.rs", &refs(&lib));
    r.write("assets/logo.png", b"\x89PNG\r\n\x1a\n\0\0\0\rIHDR\x01\x02");
    r.commit("Alice", "alice@example.com", t0, "+0100", "Initial import");

    lib[1] = "lib line 2 changed by bob".into();
    r.write_lines("src/lib.rs", &refs(&lib));
    r.write_lines("docs/guide.md", &refs(&lines("guide", 1..=6)));
    r.commit("Bob", "Bob@Example.COM", t0 + 3_600, "-0500", "Add guide");

    lib[2] = "lib line 3 fixed".into();
    lib[3] = "lib line 4 fixed".into();
    let readme = lines("readme", 2..=3);
    r.write_lines("src/lib.rs", &refs(&lib));
    r.write_lines("README.md", &refs(&readme));
    r.commit("Alice", "alice@example.com", t0 + 7_200, "+0100", "Fix off-by-one in lib");

    r.git(&["branch", "feature"]);
    r.checkout(&["-b", "dev"]);
    r.mv("docs/guide.md", "docs/manual.md");
    r.write("assets/logo.png", b"\x89PNG\r\n\x1a\n\0\0\0\rIHDR\x03\x04\x05");
    r.commit("Carol", "carol@example.com", t0 + 90_000, "+0530", "Move guide");

    let mut manual = lines("guide", 1..=6);
    manual[4] = "guide line 5 fixed by carol".into();
    manual.remove(0);
    r.write_lines("docs/manual.md", &refs(&manual));
    r.commit("Carol", "carol@example.com", t0 + 93_600, "+0530", "fix manual wording");

    r.checkout(&["main"]);
    lib.push("lib line 9".into());
    lib.insert(0, "lib line 0".into());
    r.write_lines("src/lib.rs", &refs(&lib));
    r.commit("Bob", "bob@example.com", t0 + 100_000, "-0500", "Handle prefix options");

    r.mv("src/lib.rs", "src/core.rs");
    lib[5] = "lib line 5 after move".into();
    r.write_lines("src/core.rs", &refs(&lib));
    r.commit("Bob", "BOB@example.com", t0 + 180_000, "-0500", "Rename lib to core");

    r.merge("dev", "Alice", "alice@example.com", t0 + 200_000, "+0100", "Merge branch dev");

    r.remove("README.md");
    r.commit("Bob", "bob@example.com", t0 + 300_000, "-0500", "FIX: drop stale readme");

    r.commit("Alice", "alice@example.com", t0 + 310_000, "+0100", "Empty checkpoint");

    r.write_lines("docs/manual.md", &refs(&manual[..3]));
    r.write_lines("tests/t.txt", &refs(&lines("t", 1..=4)));
    r.commit("Dave", "dave@example.com", t0 + 400_000, "+0000", "Trim manual, bugfix for tests");

    r.checkout(&["feature"]);
    lib = lines("lib", 1..=8);
    lib[6] = "lib line 7 on feature".into();
    r.write_lines("src/lib.rs", &refs(&lib));
    r.write_lines("notes.txt", &refs(&lines("notes", 1..=2)));
    r.commit("Eve", "eve@example.com", t0 + 500_000, "+0900", "Hotfix on feature");
    r.checkout(&["main"]);
    r
}

// ---------------------------------------------------------------------------
// Oracles

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleChange {
    pub status: char,
    pub old: Option<String>,
    pub new: Option<String>,
    pub binary: bool,
    pub hunks: Vec<(u32, u32, u32, u32)>,
}

impl OracleChange {
    pub fn counted(&self) -> &str {
        self.new.as_deref().or(self.old.as_deref()).unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct OraclePair {
    pub sha: String,
    pub parent: Option<String>,
    pub author: String,
    pub message: String,
    pub changes: Vec<OracleChange>,
}

/// Local branches and tips sorted by name, from for-each-ref.
pub fn oracle_branches(repo: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = git(repo, &["for-each-ref", "--format=%(refname:short) %(objectname)", "refs/heads"])
        .lines()
        .map(|l| {
            let (n, t) = l.split_once(' ').unwrap();
            (n.to_owned(), t.to_owned())
        })
        .collect();
    out.sort();
    out
}

/// First-parent pairs of every branch, each commit once, from rev-list.
pub fn oracle_walk(repo: &Path) -> Vec<(String, Option<String>)> {
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    for (_, tip) in oracle_branches(repo) {
        for line in git(repo, &["rev-list", "--first-parent", "--parents", &tip]).lines() {
            let mut parts = line.split(' ');
            let sha = parts.next().unwrap().to_owned();
            if !seen.insert(sha.clone()) {
                break;
            }
            pairs.push((sha, parts.next().map(str::to_owned)));
        }
    }
    pairs
}

/// Changes between two commits from diff-tree, with hunks from `diff -U0`.
pub fn oracle_diff(repo: &Path, parent: Option<&str>, sha: &str) -> Vec<OracleChange> {
    let parent = parent.unwrap_or(EMPTY_TREE);
    let raw = git(repo, &["diff-tree", "-r", "-z", "-M50%", "--name-status", parent, sha]);
    let mut fields = raw.split('\0').filter(|s| !s.is_empty());
    let mut changes = Vec::new();
    while let Some(status) = fields.next() {
        let s = status.chars().next().unwrap();
        let (old, new) = match s {
            'A' => (None, Some(fields.next().unwrap().to_owned())),
            'D' => (Some(fields.next().unwrap().to_owned()), None),
            'R' => (
                Some(fields.next().unwrap().to_owned()),
                Some(fields.next().unwrap().to_owned()),
            ),
            'M' | 'T' => {
                let p = fields.next().unwrap().to_owned();
                (Some(p.clone()), Some(p))
            }
            other => panic!("unexpected status {other}"),
        };
        changes.push(OracleChange {
            status: if s == 'T' { 'M' } else { s },
            old,
            new,
            binary: false,
            hunks: Vec::new(),
        });
    }

    let patch = git(repo, &["diff", "-U0", "--no-color", "--no-ext-diff", "-M50%", parent, sha]);
    let mut current: Option<usize> = None;
    let mut header: (Option<String>, Option<String>) = (None, None);
    let find = |changes: &[OracleChange], old: &Option<String>, new: &Option<String>| {
        changes
            .iter()
            .position(|c| (old.is_some() && &c.old == old) || (old.is_none() && &c.new == new))
    };
    for line in patch.lines() {
        if let Some(rest) = line.strip_prefix("diff --git a/") {
            let (a, b) = rest.split_once(" b/").unwrap();
            header = (Some(a.to_owned()), Some(b.to_owned()));
            current = None;
        } else if line.starts_with("new file mode") {
            header.0 = None;
        } else if line.starts_with("deleted file mode") {
            header.1 = None;
        } else if line.starts_with("Binary files") {
            let i = find(&changes, &header.0, &header.1).unwrap();
            changes[i].binary = true;
        } else if let Some(h) = line.strip_prefix("@@ -") {
            let i = match current {
                Some(i) => i,
                None => {
                    let i = find(&changes, &header.0, &header.1).unwrap();
                    current = Some(i);
                    i
                }
            };
            let spec = h.split(" @@").next().unwrap();
            let (old, new) = spec.split_once(" +").unwrap();
            let range = |r: &str| {
                let mut it = r.split(',');
                let start: u32 = it.next().unwrap().parse().unwrap();
                let len: u32 = it.next().map_or(1, |l| l.parse().unwrap());
                (start, len)
            };
            let ((os, ol), (ns, nl)) = (range(old), range(new));
            changes[i].hunks.push((os, ol, ns, nl));
        }
    }
    changes
}

pub fn commit_field(repo: &Path, sha: &str, format: &str) -> String {
    git(repo, &["log", "-1", &format!("--format={format}"), sha])
}

pub fn oracle_history(repo: &Path) -> Vec<OraclePair> {
    oracle_walk(repo)
        .into_iter()
        .map(|(sha, parent)| OraclePair {
            author: commit_field(repo, &sha, "%ae").trim().to_lowercase(),
            message: commit_field(repo, &sha, "%B"),
            changes: oracle_diff(repo, parent.as_deref(), &sha),
            sha,
            parent,
        })
        .collect()
}

/// Introducing commit of every line, from `git blame --first-parent`.
pub fn oracle_blame(repo: &Path, sha: &str, path: &str) -> Vec<String> {
    let out = git(repo, &["blame", "--first-parent", "--porcelain", sha, "--", path]);
    let mut by_line = BTreeMap::new();
    for line in out.lines() {
        let mut parts = line.split(' ');
        let first = parts.next().unwrap_or("");
        if first.len() == 40 && first.bytes().all(|b| b.is_ascii_hexdigit()) {
            let _orig: u32 = parts.next().unwrap().parse().unwrap();
            let fin: u32 = parts.next().unwrap().parse().unwrap();
            by_line.insert(fin, first.to_owned());
        }
    }
    by_line.into_values().collect()
}

/// Every miner output expressed with developer emails, paths and shas.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NamedOutputs {
    pub changed_files: BTreeMap<String, BTreeSet<String>>,
    pub assignment: BTreeMap<String, BTreeMap<String, u64>>,
    pub dependency: BTreeMap<(String, String), u64>,
    pub work_time: BTreeMap<String, Vec<Vec<u64>>>,
    pub influence: BTreeMap<String, BTreeSet<String>>,
    pub lines: BTreeMap<String, BTreeMap<String, u64>>,
    pub doa: BTreeMap<String, BTreeMap<String, f64>>,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a < b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

fn doa_raw(fa: bool, dl: u64, ac: u64) -> f64 {
    3.293 + if fa { 1.098 } else { 0.0 } + 0.164 * dl as f64 - 0.321 * (ac as f64).ln_1p()
}

/// Derives all miner outputs of a default run from git commands alone.
pub fn oracle_outputs(repo: &Path, max_files_per_commit: usize) -> NamedOutputs {
    let history = oracle_history(repo);
    let mut out = NamedOutputs::default();
    for pair in &history {
        let files = out.changed_files.entry(pair.author.clone()).or_default();
        for c in &pair.changes {
            files.extend(c.old.iter().cloned());
            files.extend(c.new.iter().cloned());
        }
        let counted: BTreeSet<&str> = pair.changes.iter().map(OracleChange::counted).collect();
        for f in &counted {
            *out.assignment.entry(pair.author.clone()).or_default().entry((*f).to_owned()).or_insert(0) += 1;
        }
        if counted.len() <= max_files_per_commit {
            let v: Vec<&str> = counted.into_iter().collect();
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    *out.dependency.entry(ordered(v[i], v[j])).or_insert(0) += 1;
                }
            }
        }
    }

    // Local weekday (1 = Monday) and hour as git formats them in the
    // author's own timezone.
    if !history.is_empty() {
        let mut args = vec!["log", "--no-walk=unsorted", "--date=format:%u %H", "--format=%H %ad"];
        args.extend(history.iter().map(|p| p.sha.as_str()));
        let author: HashMap<&str, &str> = history.iter().map(|p| (p.sha.as_str(), p.author.as_str())).collect();
        for line in git(repo, &args).lines() {
            let mut parts = line.split(' ');
            let sha = parts.next().unwrap();
            let day: usize = parts.next().unwrap().parse().unwrap();
            let hour: usize = parts.next().unwrap().parse().unwrap();
            let grid = out
                .work_time
                .entry(author[sha].to_owned())
                .or_insert_with(|| vec![vec![0; 24]; 7]);
            grid[day - 1][hour] += 1;
        }
    }

    for pair in &history {
        if !pair.message.to_lowercase().contains("fix") {
            continue;
        }
        let mut introducers = BTreeSet::new();
        for c in &pair.changes {
            if c.binary || c.status == 'A' {
                continue;
            }
            let (Some(parent), Some(old)) = (&pair.parent, &c.old) else {
                continue;
            };
            let blame = oracle_blame(repo, parent, old);
            for &(start, len, _, _) in &c.hunks {
                for line in start..start + len {
                    introducers.insert(blame[line as usize - 1].clone());
                }
            }
        }
        introducers.remove(&pair.sha);
        out.influence.insert(pair.sha.clone(), introducers);
    }

    let head = oracle_branches(repo).first().map(|(_, tip)| tip.clone());
    if let Some(head) = head {
        let authors: HashMap<String, String> = history.iter().map(|p| (p.sha.clone(), p.author.clone())).collect();
        let files = git(repo, &["ls-tree", "-r", "--name-only", &head]);
        for path in files.lines() {
            let numstat = git(repo, &["diff", "--numstat", EMPTY_TREE, &head, "--", path]);
            if numstat.starts_with('-') {
                continue;
            }
            let counts = out.lines.entry(path.to_owned()).or_default();
            for sha in oracle_blame(repo, &head, path) {
                let author = authors
                    .get(&sha)
                    .cloned()
                    .unwrap_or_else(|| commit_field(repo, &sha, "%ae").trim().to_lowercase());
                *counts.entry(author).or_insert(0) += 1;
            }
        }
    }

    // Creators follow renames: a path's creators include those of every
    // path it was renamed from.
    let mut added: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut renamed_from: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for pair in &history {
        for c in &pair.changes {
            match c.status {
                'A' => {
                    added.entry(c.new.as_deref().unwrap()).or_default().insert(&pair.author);
                }
                'R' => {
                    renamed_from.entry(c.new.as_deref().unwrap()).or_default().insert(c.old.as_deref().unwrap());
                }
                _ => {}
            }
        }
    }
    fn creators_of<'a>(
        path: &'a str,
        added: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        renamed_from: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        seen: &mut BTreeSet<&'a str>,
        acc: &mut BTreeSet<&'a str>,
    ) {
        if !seen.insert(path) {
            return;
        }
        acc.extend(added.get(path).into_iter().flatten());
        for src in renamed_from.get(path).into_iter().flatten() {
            creators_of(src, added, renamed_from, seen, acc);
        }
    }
    let mut by_file: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for (user, files) in &out.assignment {
        for (f, n) in files {
            by_file.entry(f.clone()).or_default().insert(user.clone(), *n);
        }
    }
    let all_files: BTreeSet<String> = by_file.keys().cloned().chain(added.keys().map(|s| s.to_string())).collect();
    for file in all_files {
        let mut fa = BTreeSet::new();
        creators_of(&file, &added, &renamed_from, &mut BTreeSet::new(), &mut fa);
        let dl = by_file.get(&file).cloned().unwrap_or_default();
        let total: u64 = dl.values().sum();
        let users: BTreeSet<String> = dl.keys().cloned().chain(fa.iter().map(|s| s.to_string())).collect();
        let raw: Vec<(String, f64)> = users
            .into_iter()
            .map(|u| {
                let d = dl.get(&u).copied().unwrap_or(0);
                let r = doa_raw(fa.contains(u.as_str()), d, total - d);
                (u, r)
            })
            .collect();
        let max = raw.iter().map(|r| r.1).fold(f64::MIN, f64::max);
        for (u, r) in raw {
            out.doa.entry(u).or_default().insert(file.clone(), (r / max).clamp(0.0, 1.0));
        }
    }
    out
}

pub fn read_json(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    serde_json::from_str(&text).unwrap()
}

fn id_map(dir: &Path, name: &str) -> HashMap<String, String> {
    read_json(dir, name)
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_str().unwrap().to_owned()))
        .collect()
}

fn obj(v: &Value) -> impl Iterator<Item = (&String, &Value)> {
    v.as_object().unwrap().iter()
}

/// Reads a run's output directory back into names.
pub fn mined_outputs(dir: &Path) -> NamedOutputs {
    let users = id_map(dir, "idToUser.json");
    let files = id_map(dir, "idToFile.json");
    let commits = id_map(dir, "idToCommit.json");
    let name = |map: &HashMap<String, String>, id: &str| map[id].clone();
    let id_str = |v: &Value| v.as_u64().unwrap().to_string();

    let mut out = NamedOutputs::default();
    for (u, fs) in obj(&read_json(dir, "ChangedFiles.json")) {
        out.changed_files.insert(
            name(&users, u),
            fs.as_array().unwrap().iter().map(|f| name(&files, &id_str(f))).collect(),
        );
    }
    for (u, row) in obj(&read_json(dir, "AssignmentMatrix.json")) {
        out.assignment.insert(
            name(&users, u),
            obj(row).map(|(f, n)| (name(&files, f), n.as_u64().unwrap())).collect(),
        );
    }
    for (a, row) in obj(&read_json(dir, "FileDependencyMatrix.json")) {
        for (b, n) in obj(row) {
            let key = ordered(&name(&files, a), &name(&files, b));
            assert!(out.dependency.insert(key, n.as_u64().unwrap()).is_none());
        }
    }
    for (u, grid) in obj(&read_json(dir, "WorkTime.json")) {
        let grid = grid
            .as_array()
            .unwrap()
            .iter()
            .map(|row| row.as_array().unwrap().iter().map(|n| n.as_u64().unwrap()).collect())
            .collect();
        out.work_time.insert(name(&users, u), grid);
    }
    for (c, targets) in obj(&read_json(dir, "CommitInfluenceGraph.json")) {
        out.influence.insert(
            name(&commits, c),
            targets.as_array().unwrap().iter().map(|t| name(&commits, &id_str(t))).collect(),
        );
    }
    let own = read_json(dir, "FilesOwnership.json");
    for (f, row) in obj(&own["lines"]) {
        out.lines.insert(
            name(&files, f),
            obj(row).map(|(u, n)| (name(&users, u), n.as_u64().unwrap())).collect(),
        );
    }
    for (u, row) in obj(&own["doa"]) {
        out.doa.insert(
            name(&users, u),
            obj(row).map(|(f, s)| (name(&files, f), s.as_f64().unwrap())).collect(),
        );
    }
    out
}

/// Field-by-field comparison; DOA scores within `doa_tol`.
pub fn diff_outputs(expected: &NamedOutputs, actual: &NamedOutputs, doa_tol: f64) -> Vec<String> {
    let mut problems = Vec::new();
    macro_rules! cmp {
        ($field:ident) => {
            if expected.$field != actual.$field {
                problems.push(format!(
                    "{}: expected {:?}\n  got {:?}",
                    stringify!($field),
                    expected.$field,
                    actual.$field
                ));
            }
        };
    }
    cmp!(changed_files);
    cmp!(assignment);
    cmp!(dependency);
    cmp!(work_time);
    cmp!(influence);
    cmp!(lines);
    let same_doa = expected.doa.len() == actual.doa.len()
        && expected.doa.iter().all(|(u, row)| {
            actual.doa.get(u).is_some_and(|other| {
                row.len() == other.len()
                    && row.iter().all(|(f, s)| other.get(f).is_some_and(|o| (o - s).abs() <= doa_tol))
            })
        });
    if !same_doa {
        problems.push(format!("doa: expected {:?}\n  got {:?}", expected.doa, actual.doa));
    }
    problems
}
