use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use sociominer::calculations::PageRankParams;
use sociominer::miners::{FixMatcher, DEFAULT_MAX_FILES_PER_COMMIT};
use sociominer::repo::DEFAULT_RENAME_THRESHOLD;
use sociominer::synth::{generate_synthetic_repo, SyntheticSpec};
use sociominer::{BranchSelector, CalculationKind, Error, MinerKind, RunConfig};

#[derive(Parser)]
#[command(name = "sociominer", version, about = "Mine socio-technical data from a local Git repository")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Files touched by each developer.
    ChangedFiles(MineArgs),
    /// Developer x file modification counts.
    AssignmentMatrix(MineArgs),
    /// File x file co-change counts.
    FileDependency(MineArgs),
    /// Commits per developer by local weekday and hour.
    WorkTime(MineArgs),
    /// Fix commits and the commits whose lines they changed.
    CommitInfluence(MineArgs),
    /// Degree of authorship and line ownership per file.
    FilesOwnership(MineArgs),
    /// Normalized developer x developer coordination needs.
    CoordinationNeeds(MineArgs),
    /// Share of coordination needs matched by communication.
    Congruence(MineArgs),
    /// PageRank of the commit influence graph.
    Pagerank(MineArgs),
    /// Every miner and every calculation.
    All(MineArgs),
    /// Write a seeded synthetic repository and its ground-truth manifest.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct MineArgs {
    /// Repository to mine (the directory containing .git, or a bare repository).
    #[arg(long, default_value = ".")]
    repo: PathBuf,
    /// Comma-separated local branches; all local branches when omitted.
    #[arg(long, value_delimiter = ',')]
    branches: Vec<String>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Similarity percentage for rename detection.
    #[arg(long, default_value_t = DEFAULT_RENAME_THRESHOLD)]
    rename_threshold: u8,
    /// Commits touching more files are left out of the dependency matrix.
    #[arg(long, default_value_t = DEFAULT_MAX_FILES_PER_COMMIT)]
    max_files_per_commit: usize,
    /// Regex marking bug-fixing commit messages.
    #[arg(long, default_value = FixMatcher::DEFAULT_PATTERN)]
    fix_pattern: String,
    /// JSON object mapping alias emails to canonical emails.
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Communication graph for congruence; co-activity proxy when omitted.
    #[arg(long)]
    communication: Option<PathBuf>,
    #[arg(long, default_value_t = PageRankParams::default().damping)]
    damping: f64,
    #[arg(long, default_value_t = PageRankParams::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = PageRankParams::default().max_iter)]
    max_iter: usize,
    /// Coordination needs above this value count as required.
    #[arg(long, default_value_t = 0.0)]
    need_threshold: f64,
    /// Window of the co-activity communication proxy.
    #[arg(long, default_value_t = 30)]
    proxy_window_days: u32,
    /// Also diff merge commits against their non-first parents.
    #[arg(long)]
    merge_parents: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory to create; must be absent or empty.
    #[arg(long)]
    path: PathBuf,
    #[arg(long, default_value_t = 100)]
    commits: usize,
    #[arg(long, default_value_t = 5)]
    authors: usize,
    #[arg(long, default_value_t = 20)]
    files: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the manifest; `<path>.manifest.json` by default.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

impl MineArgs {
    fn into_config(self, miners: &[MinerKind], calculations: &[CalculationKind]) -> RunConfig {
        let mut config = RunConfig::new(self.repo, self.output);
        config.branches = if self.branches.is_empty() {
            BranchSelector::All
        } else {
            BranchSelector::Named(self.branches)
        };
        config.miners = miners.iter().copied().collect();
        config.calculations = calculations.iter().copied().collect();
        config.threads = self.threads;
        config.rename_threshold = self.rename_threshold;
        config.max_files_per_commit = self.max_files_per_commit;
        config.fix_pattern = self.fix_pattern;
        config.aliases_path = self.aliases;
        config.communication_path = self.communication;
        config.pagerank = PageRankParams {
            damping: self.damping,
            tol: self.tol,
            max_iter: self.max_iter,
        };
        config.need_threshold = self.need_threshold;
        config.proxy_window_days = self.proxy_window_days;
        config.merge_parents = self.merge_parents;
        config
    }
}

fn execute(command: Command) -> Result<(), Error> {
    let (args, miners, calcs): (MineArgs, Vec<MinerKind>, Vec<CalculationKind>) = match command {
        Command::Synth(args) => {
            let spec = SyntheticSpec {
                commits: args.commits,
                authors: args.authors,
                files: args.files,
                seed: args.seed,
            };
            let manifest = generate_synthetic_repo(&args.path, &spec)?;
            let target = args.manifest.unwrap_or_else(|| {
                let mut p = args.path.clone().into_os_string();
                p.push(".manifest.json");
                p.into()
            });
            manifest.save(&target)?;
            info!("wrote {} commits to {}", manifest.commits.len(), args.path.display());
            return Ok(());
        }
        Command::ChangedFiles(a) => (a, vec![MinerKind::ChangedFiles], vec![]),
        Command::AssignmentMatrix(a) => (a, vec![MinerKind::AssignmentMatrix], vec![]),
        Command::FileDependency(a) => (a, vec![MinerKind::FileDependency], vec![]),
        Command::WorkTime(a) => (a, vec![MinerKind::WorkTime], vec![]),
        Command::CommitInfluence(a) => (a, vec![MinerKind::CommitInfluence], vec![]),
        Command::FilesOwnership(a) => (a, vec![MinerKind::FilesOwnership], vec![]),
        Command::CoordinationNeeds(a) => (a, vec![], vec![CalculationKind::CoordinationNeeds]),
        Command::Congruence(a) => (a, vec![], vec![CalculationKind::Congruence]),
        Command::Pagerank(a) => (a, vec![], vec![CalculationKind::PageRank]),
        Command::All(a) => (a, MinerKind::ALL.to_vec(), CalculationKind::ALL.to_vec()),
    };
    let meta = sociominer::run(&args.into_config(&miners, &calcs))?;
    info!(
        "mined {} commits in {} ms; wrote {}",
        meta.commits,
        meta.wall_time_ms,
        meta.outputs.join(", ")
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
