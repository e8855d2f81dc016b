//! `vbisect`: locate the source files and functions responsible for
//! floating-point differences between compilations.

mod cmd;
mod digest;
mod exit;
mod output;
mod render;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vbisect_core::sim::InjectionMode;
use vbisect_toolchain::ProjectManifest;

use exit::{CmdResult, Failure};
use output::OutDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Real builds with the configured compilers.
    Toolchain,
    /// Synthetic projects with known injected variability.
    Sim,
}

#[derive(Debug, Parser)]
#[command(name = "vbisect", version, about = "Find the files and functions behind compiler-induced floating-point differences")]
struct Cli {
    /// Project configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Results directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Backend::Toolchain)]
    backend: Backend,
    /// Parallel builds and simulated searches [default: available cores].
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Seed for simulated instances.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that every test is deterministic under the baseline.
    Check(CheckArgs),
    /// Build and time every compilation, and classify each against the baseline.
    Sweep(SweepArgs),
    /// Find the files and symbols that make a candidate compilation differ.
    Bisect(BisectArgs),
    /// Run an injection campaign over synthetic projects.
    Inject(InjectArgs),
    /// Brute-force ground truth for a small synthetic instance.
    #[command(hide = true)]
    Oracle(OracleArgs),
    /// Regenerate summaries from the records in the results directory.
    Report,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Runs per test [default: from the configuration].
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Timed runs per cell; the median is kept.
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    /// Keep cells already recorded in sweep.jsonl.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Files in the synthetic project.
    #[arg(long = "files", value_name = "N")]
    pub n_files: Option<usize>,
    #[arg(long, value_name = "N")]
    pub symbols_per_file: Option<usize>,
    /// Injected sites per project [default: as the mode requires].
    #[arg(long, value_name = "N")]
    pub injections: Option<usize>,
    #[arg(long, default_value_t = InjectionMode::Independent)]
    pub mode: InjectionMode,
}

impl SimArgs {
    pub fn injections(&self) -> usize {
        self.injections.unwrap_or(match self.mode {
            InjectionMode::Coupled | InjectionMode::SubFileCancellation => 2,
            _ => 1,
        })
    }
}

#[derive(Debug, Args)]
pub struct BisectArgs {
    /// Candidate compilation, e.g. "gcc -O3 -ffast-math".
    #[arg(long)]
    pub candidate: Option<String>,
    /// Test to bisect; may be omitted when the project has one test.
    #[arg(long, conflicts_with = "all_tests")]
    pub test: Option<String>,
    /// Bisect every configured test in turn.
    #[arg(long)]
    pub all_tests: bool,
    /// Only find the k largest contributors.
    #[arg(long, conflicts_with = "files_only")]
    pub k: Option<usize>,
    /// Stop after the file level.
    #[arg(long)]
    pub files_only: bool,
    /// Exit with status 1 when variability is found.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long = "files", default_value_t = 45)]
    pub n_files: usize,
    #[arg(long, default_value_t = 25)]
    pub symbols_per_file: usize,
    /// Injected projects to search.
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    #[arg(long, default_value_t = InjectionMode::Independent)]
    pub mode: InjectionMode,
    /// Injected sites per project [default: as the mode requires].
    #[arg(long)]
    pub injections: Option<usize>,
    /// Use the k-largest search instead of the exhaustive one.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub sim: SimArgs,
}

/// Global options every command sees.
pub struct Ctx {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub backend: Backend,
    pub jobs: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct Invocation<'a> {
    version: &'a str,
    args: Vec<String>,
    backend: Backend,
    seed: u64,
    jobs: usize,
}

impl Ctx {
    pub fn manifest(&self) -> Result<ProjectManifest, Failure> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| Failure::config("the toolchain backend needs --config <path>"))?;
        Ok(ProjectManifest::load(path)?)
    }

    /// Create the results directory and record how it was produced.
    pub fn prepare_out(&self) -> Result<OutDir, Failure> {
        let out = OutDir::create(&self.out)?;
        if let Some(config) = &self.config {
            let text = std::fs::read(config).map_err(|e| Failure::config(format!("{}: {e}", config.display())))?;
            out.write("config.toml", &text)?;
        }
        out.write_json(
            "invocation.json",
            &Invocation {
                version: env!("CARGO_PKG_VERSION"),
                args: std::env::args().collect(),
                backend: self.backend,
                seed: self.seed,
                jobs: self.jobs,
            },
        )?;
        Ok(out)
    }

    pub fn out_path(&self) -> &Path {
        &self.out
    }
}

fn run(cli: Cli) -> CmdResult {
    let jobs = cli
        .jobs
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
        log::debug!("thread pool already configured: {e}");
    }
    let ctx = Ctx {
        config: cli.config,
        out: cli.out,
        backend: cli.backend,
        jobs,
        seed: cli.seed,
    };
    match cli.command {
        Command::Check(args) => cmd::check::run(&ctx, &args),
        Command::Sweep(args) => cmd::sweep::run(&ctx, &args),
        Command::Bisect(args) => cmd::bisect::run(&ctx, &args),
        Command::Inject(args) => cmd::inject::run(&ctx, &args),
        Command::Oracle(args) => cmd::oracle::run(&ctx, &args),
        Command::Report => cmd::report::run(&ctx),
    }
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let status = match run(cli) {
        Ok(status) => status,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            failure.status
        }
    };
    std::process::exit(status.code());
}
