//! End-to-end mining runs.
//!
//! A run has three stages:
//!
//! 1. A single-threaded walk that fixes the commit order and registers
//!    commit and developer ids.
//! 2. Parallel diffing of every commit pair, followed by a sequential pass
//!    that registers file ids in traversal order, then the selected miners.
//! 3. The selected calculations.
//!
//! Ids are only ever assigned sequentially in traversal order, so every
//! output file is byte-identical whatever the worker count.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::calculations::{
    compute_coordination_needs, compute_mirroring_congruence, compute_pagerank,
    proxy_communication_graph, CommitActivity, CommunicationGraph, PageRankParams, PageRankVector,
};
use crate::error::{Error, Result};
use crate::mappers::{AliasTable, Registries};
use crate::miners::{
    mine_assignment_matrix, mine_changed_files, mine_commit_influence_graph,
    mine_file_dependency_matrix, mine_files_ownership, mine_work_time, ChangeIds,
    CommitInfluenceGraph, DoaWeights, FixMatcher, MinedCommit, MinerResult, RepoBlame,
    DEFAULT_MAX_FILES_PER_COMMIT,
};
use crate::repo::{
    Branch, BranchSelector, DiffDetail, RepositoryHandle, WalkOptions, DEFAULT_RENAME_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum MinerKind {
    ChangedFiles,
    AssignmentMatrix,
    FileDependency,
    WorkTime,
    CommitInfluence,
    FilesOwnership,
}

impl MinerKind {
    pub const ALL: [MinerKind; 6] = [
        MinerKind::ChangedFiles,
        MinerKind::AssignmentMatrix,
        MinerKind::FileDependency,
        MinerKind::WorkTime,
        MinerKind::CommitInfluence,
        MinerKind::FilesOwnership,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MinerKind::ChangedFiles => "changed-files",
            MinerKind::AssignmentMatrix => "assignment-matrix",
            MinerKind::FileDependency => "file-dependency",
            MinerKind::WorkTime => "work-time",
            MinerKind::CommitInfluence => "commit-influence",
            MinerKind::FilesOwnership => "files-ownership",
        }
    }

    fn needs_hunks(self) -> bool {
        matches!(self, MinerKind::CommitInfluence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CalculationKind {
    CoordinationNeeds,
    Congruence,
    PageRank,
}

impl CalculationKind {
    pub const ALL: [CalculationKind; 3] = [
        CalculationKind::CoordinationNeeds,
        CalculationKind::Congruence,
        CalculationKind::PageRank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CalculationKind::CoordinationNeeds => "coordination-needs",
            CalculationKind::Congruence => "congruence",
            CalculationKind::PageRank => "pagerank",
        }
    }
}

macro_rules! parse_by_name {
    ($ty:ty) => {
        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                <$ty>::ALL
                    .into_iter()
                    .find(|k| k.name() == s)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown name `{s}`")))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

parse_by_name!(MinerKind);
parse_by_name!(CalculationKind);

/// Everything a run needs to know.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub repo_path: PathBuf,
    pub branches: BranchSelector,
    pub miners: BTreeSet<MinerKind>,
    pub calculations: BTreeSet<CalculationKind>,
    pub threads: usize,
    pub output_dir: PathBuf,
    pub rename_threshold: u8,
    pub max_files_per_commit: usize,
    pub fix_pattern: String,
    pub pagerank: PageRankParams,
    pub need_threshold: f64,
    pub aliases_path: Option<PathBuf>,
    pub communication_path: Option<PathBuf>,
    pub proxy_window_days: u32,
    pub merge_parents: bool,
    pub doa_weights: DoaWeights,
}

impl RunConfig {
    pub fn new(repo_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            repo_path: repo_path.into(),
            branches: BranchSelector::All,
            miners: BTreeSet::new(),
            calculations: BTreeSet::new(),
            threads: 1,
            output_dir: output_dir.into(),
            rename_threshold: DEFAULT_RENAME_THRESHOLD,
            max_files_per_commit: DEFAULT_MAX_FILES_PER_COMMIT,
            fix_pattern: FixMatcher::DEFAULT_PATTERN.to_owned(),
            pagerank: PageRankParams::default(),
            need_threshold: 0.0,
            aliases_path: None,
            communication_path: None,
            proxy_window_days: 30,
            merge_parents: false,
            doa_weights: DoaWeights::default(),
        }
    }

    /// Every miner and every calculation.
    pub fn everything(mut self) -> Self {
        self.miners = MinerKind::ALL.into_iter().collect();
        self.calculations = CalculationKind::ALL.into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if self.rename_threshold > 100 {
            return bad(format!("rename threshold {} exceeds 100", self.rename_threshold));
        }
        if self.max_files_per_commit == 0 {
            return bad("max files per commit must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.need_threshold) {
            return bad(format!("need threshold {} not in [0, 1)", self.need_threshold));
        }
        self.pagerank.validate()?;
        FixMatcher::new(&self.fix_pattern)?;
        Ok(())
    }

    /// Selected miners plus those the selected calculations depend on.
    pub fn effective_miners(&self) -> BTreeSet<MinerKind> {
        let mut miners = self.miners.clone();
        for calc in &self.calculations {
            match calc {
                CalculationKind::CoordinationNeeds | CalculationKind::Congruence => {
                    miners.insert(MinerKind::AssignmentMatrix);
                    miners.insert(MinerKind::FileDependency);
                }
                CalculationKind::PageRank => {
                    miners.insert(MinerKind::CommitInfluence);
                }
            }
        }
        miners
    }

    pub fn effective_calculations(&self) -> BTreeSet<CalculationKind> {
        let mut calcs = self.calculations.clone();
        if calcs.contains(&CalculationKind::Congruence) {
            calcs.insert(CalculationKind::CoordinationNeeds);
        }
        calcs
    }
}

/// Commits of a repository, diffed and registered, ready to be mined.
#[derive(Debug)]
pub struct MiningSession {
    pub handle: RepositoryHandle,
    pub branches: Vec<Branch>,
    pub registries: Registries,
    pub commits: Vec<MinedCommit>,
    pub rename_threshold: u8,
}

impl MiningSession {
    /// Walks, registers and diffs. Diffing runs on the current rayon pool.
    pub fn prepare(
        handle: RepositoryHandle,
        selector: &BranchSelector,
        aliases: AliasTable,
        rename_threshold: u8,
        detail: DiffDetail,
        walk: WalkOptions,
    ) -> Result<Self> {
        let started = Instant::now();
        let branches = handle.resolve_branches(selector)?;
        let pairs = handle.walk_commit_pairs(&branches, walk)?;

        let mut registries = Registries::new(aliases);
        let mut ids = Vec::with_capacity(pairs.len());
        for pair in &pairs {
            let commit = registries.commits.register(&pair.current.sha)?;
            let author =
                registries.register_user(&pair.current.author_name, &pair.current.author_email)?;
            ids.push((commit, author));
        }
        log::debug!("walked {} pairs in {:?}", pairs.len(), started.elapsed());
        let started = Instant::now();

        let diffs: Vec<_> = pairs
            .par_iter()
            .with_min_len(16)
            .map(|pair| handle.compute_diff_with(pair, rename_threshold, detail))
            .collect::<Result<_>>()?;
        log::debug!("diffed in {:?}", started.elapsed());

        let mut commits = Vec::with_capacity(pairs.len());
        for ((pair, changes), (commit_id, author_id)) in pairs.into_iter().zip(diffs).zip(ids) {
            let mut change_ids = Vec::with_capacity(changes.len());
            for change in &changes {
                let old = change.old_path.as_deref().map(|p| registries.files.register(p)).transpose()?;
                let new = change.new_path.as_deref().map(|p| registries.files.register(p)).transpose()?;
                change_ids.push(ChangeIds { old, new });
            }
            commits.push(MinedCommit {
                pair,
                commit_id,
                author_id,
                changes,
                change_ids,
            });
        }

        Ok(MiningSession {
            handle,
            branches,
            registries,
            commits,
            rename_threshold,
        })
    }

    /// Tip of the first mined branch.
    pub fn head(&self) -> Option<&str> {
        self.branches.first().map(|b| b.tip.as_str())
    }

    pub fn blame(&self) -> RepoBlame<'_> {
        RepoBlame {
            handle: &self.handle,
            rename_threshold: self.rename_threshold,
        }
    }

    pub fn users(&self) -> usize {
        self.registries.users.len()
    }

    pub fn files(&self) -> usize {
        self.registries.files.len()
    }

    pub fn activity(&self) -> Vec<CommitActivity> {
        self.commits
            .iter()
            .filter(|c| c.is_first_parent_pair())
            .map(|c| CommitActivity {
                user: c.author_id,
                time: c.pair.current.author_time,
                files: c.counted_files().into_iter().collect(),
            })
            .collect()
    }
}

/// Metadata written to `run_meta.json`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub branches: Vec<Branch>,
    pub commits: usize,
    pub commit_pairs: usize,
    pub users: usize,
    pub files: usize,
    pub skipped_commits: u64,
    pub unresolved_communication_edges: usize,
    pub outputs: Vec<String>,
    pub wall_time_ms: u128,
}

impl RunMeta {
    pub const FILE_NAME: &'static str = "run_meta.json";
}

fn write_output<T: MinerResult>(dir: &Path, value: &T, outputs: &mut Vec<String>) -> Result<()> {
    value.save(dir)?;
    outputs.push(T::FILE_NAME.to_owned());
    Ok(())
}

/// Executes a full run and writes every output into `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<RunMeta> {
    config.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_in_pool(config, started))
}

fn run_in_pool(config: &RunConfig, started: Instant) -> Result<RunMeta> {
    let handle = RepositoryHandle::open(&config.repo_path)?;
    let aliases = match &config.aliases_path {
        Some(path) => AliasTable::load(path)?,
        None => AliasTable::default(),
    };
    let fix = FixMatcher::new(&config.fix_pattern)?;
    let miners = config.effective_miners();
    let calculations = config.effective_calculations();
    let detail = if miners.iter().any(|m| m.needs_hunks()) {
        DiffDetail::WithHunks
    } else {
        DiffDetail::FilesOnly
    };
    let walk = WalkOptions {
        merge_parents: config.merge_parents,
    };
    let session = MiningSession::prepare(
        handle,
        &config.branches,
        aliases,
        config.rename_threshold,
        detail,
        walk,
    )?;

    let out = config.output_dir.as_path();
    std::fs::create_dir_all(out)
        .map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
    session.registries.save_all(out)?;
    let mut outputs = vec![
        "idToCommit.json".to_owned(),
        "idToFile.json".to_owned(),
        "idToUser.json".to_owned(),
    ];

    let commits = &session.commits;
    let (users, files) = (session.users(), session.files());
    let mut assignment = None;
    let mut dependency = None;
    let mut influence: Option<CommitInfluenceGraph> = None;
    let mut skipped_commits = 0;

    for miner in &miners {
        let started = Instant::now();
        match miner {
            MinerKind::ChangedFiles => write_output(out, &mine_changed_files(commits)?, &mut outputs)?,
            MinerKind::AssignmentMatrix => {
                let a = mine_assignment_matrix(commits, users, files)?;
                write_output(out, &a, &mut outputs)?;
                assignment = Some(a);
            }
            MinerKind::FileDependency => {
                let d = mine_file_dependency_matrix(commits, files, config.max_files_per_commit)?;
                skipped_commits = d.skipped_commits();
                write_output(out, &d, &mut outputs)?;
                dependency = Some(d);
            }
            MinerKind::WorkTime => write_output(out, &mine_work_time(commits)?, &mut outputs)?,
            MinerKind::CommitInfluence => {
                let g = mine_commit_influence_graph(commits, &session.registries, &session.blame(), &fix)?;
                write_output(out, &g, &mut outputs)?;
                influence = Some(g);
            }
            MinerKind::FilesOwnership => {
                let o = mine_files_ownership(
                    commits,
                    &session.registries,
                    &session.blame(),
                    session.head(),
                    &config.doa_weights,
                )?;
                write_output(out, &o, &mut outputs)?;
            }
        }
        log::debug!("{miner} done in {:?}", started.elapsed());
    }

    let mut needs = None;
    let mut unresolved_communication_edges = 0;
    for calc in &calculations {
        match calc {
            CalculationKind::CoordinationNeeds => {
                let (Some(a), Some(d)) = (&assignment, &dependency) else {
                    unreachable!("coordination needs imply both matrix miners");
                };
                let c = compute_coordination_needs(a, d)?;
                write_output(out, &c, &mut outputs)?;
                needs = Some(c);
            }
            CalculationKind::Congruence => {
                let c = needs.as_ref().expect("coordination needs are computed first");
                let actual = match &config.communication_path {
                    Some(path) => {
                        let (graph, unresolved) = CommunicationGraph::load(path, &session.registries)?;
                        unresolved_communication_edges = unresolved;
                        graph
                    }
                    None => proxy_communication_graph(
                        &session.activity(),
                        i64::from(config.proxy_window_days) * 86_400,
                    ),
                };
                let score = compute_mirroring_congruence(c, &actual, config.need_threshold)?;
                write_output(out, &score, &mut outputs)?;
            }
            CalculationKind::PageRank => {
                let g = influence.as_ref().expect("pagerank implies the influence miner");
                let ranks = match compute_pagerank(g, &config.pagerank) {
                    Ok(r) => r,
                    Err(Error::EmptyGraph) => PageRankVector::default(),
                    Err(e) => return Err(e),
                };
                write_output(out, &ranks, &mut outputs)?;
            }
        }
    }

    let unique_commits = commits.iter().filter(|c| c.is_first_parent_pair()).count();
    let meta = RunMeta {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        branches: session.branches.clone(),
        commits: unique_commits,
        commit_pairs: commits.len(),
        users,
        files,
        skipped_commits,
        unresolved_communication_edges,
        outputs,
        wall_time_ms: started.elapsed().as_millis(),
    };
    let meta_path = out.join(RunMeta::FILE_NAME);
    let text = serde_json::to_string_pretty(&meta).expect("run metadata serializes");
    std::fs::write(&meta_path, text)
        .map_err(|e| Error::io(format!("writing {}", meta_path.display()), e))?;
    Ok(meta)
}
