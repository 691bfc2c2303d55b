//! Command-line front end for the tabletop harness.
//!
//! stdout carries only machine-readable payloads; progress and human-readable tables go to stderr.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tabletop::control::{compare_strategies, rollout, RolloutConfig, Strategy};
use tabletop::dataset::{self, sha256_hex, GenerationConfig, LoadError, DEFAULT_EPISODES_PER_TASK, MANIFEST_FILE};
use tabletop::eval::{planning_accuracy, MetricsReport, ProbeConfig};
use tabletop::policy::PolicyError;
use tabletop::tasks::TaskId;
use tabletop::world::WorkspaceConfig;

pub use config::{ConfigError, NoisePreset, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "tabletop", version, about = "Tabletop long-horizon manipulation harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a replay-verified demonstration dataset into --out.
    Generate(Flags),
    /// Run one strategy and print one JSON summary per episode.
    Rollout(Flags),
    /// Run strategies a, b and c on paired seeds and print the metrics CSV.
    Compare(Flags),
    /// Measure how often the policy plans a valid next sub-task.
    ProbePlanning(Flags),
    /// Verify a dataset's checksums (and optionally replay it) and print a summary.
    Inspect {
        path: PathBuf,
        /// Also replay every demonstration against the simulator.
        #[arg(long)]
        replay: bool,
    },
    /// List the task catalog.
    Tasks,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    UnknownTask(String),
    Policy(String),
    Io(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::UnknownTask(_) => 2,
            CliError::Policy(_) => 3,
            CliError::Io(_) => 4,
            CliError::Failed(_) => 1,
        }
    }

    fn report(&self) {
        match self {
            CliError::UnknownTask(t) => {
                eprintln!("error: unknown task `{t}`; available tasks:\n{}", TaskId::catalog_listing())
            }
            CliError::Usage(m) => eprintln!("error: {m}"),
            CliError::Policy(m) => eprintln!("policy failure: {m}"),
            CliError::Io(m) => eprintln!("i/o error: {m}"),
            CliError::Failed(m) => eprintln!("error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Usage(m) => CliError::Usage(m),
            ConfigError::UnknownTask(t) => CliError::UnknownTask(t),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::InvalidNoise(m) => CliError::Usage(m),
            other => CliError::Policy(other.to_string()),
        }
    }
}

/// Parses `args` (program name first), runs the command and maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}

/// Layers the config file (if any) under the flags and validates the result.
pub fn resolve(flags: &Flags) -> Result<RunConfig, CliError> {
    let base = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let cfg = base.merge(flags.run.clone());
    cfg.validate()?;
    Ok(cfg)
}

fn execute(command: Command) -> Result<(), CliError> {
    let (flags, which) = match command {
        Command::Inspect { path, replay } => return cmd_inspect(&path, replay),
        Command::Tasks => return cmd_tasks(),
        Command::Generate(f) => (f, "generate"),
        Command::Rollout(f) => (f, "rollout"),
        Command::Compare(f) => (f, "compare"),
        Command::ProbePlanning(f) => (f, "probe-planning"),
    };
    let mut cfg = resolve(&flags)?;
    if which == "compare" && cfg.noise_preset.is_none() {
        cfg.noise_preset = Some(NoisePreset::Noisy);
    }
    if flags.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    match which {
        "generate" => cmd_generate(&cfg),
        "rollout" => cmd_rollout(&cfg),
        "compare" => cmd_compare(&cfg),
        _ => cmd_probe(&cfg),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn emit(payload: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(payload.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn rollout_config(cfg: &RunConfig, strategies: Vec<Strategy>) -> Result<RolloutConfig, CliError> {
    Ok(RolloutConfig {
        tasks: cfg.tasks()?,
        episodes: cfg.episodes.unwrap_or(20),
        seed: cfg.seed.unwrap_or(0),
        strategies,
        noise: cfg.noise(),
        p: cfg.p(),
        step_budget: cfg.step_budget,
        workspace: WorkspaceConfig::default(),
        parallel: cfg.parallel(),
    })
}

fn ndjson<T: serde::Serialize>(items: &[T]) -> String {
    items.iter().map(|i| to_json(i) + "\n").collect()
}

fn cmd_generate(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("generate needs --out <dir>".to_string()))?;
    let gen = GenerationConfig::new(
        cfg.tasks()?,
        cfg.episodes.unwrap_or(DEFAULT_EPISODES_PER_TASK),
        cfg.seed.unwrap_or(0),
    );
    eprintln!(
        "generating {} episodes for {} tasks into {}",
        u64::from(gen.episodes_per_task) * gen.tasks.len() as u64,
        gen.tasks.len(),
        out.display()
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel())
        .build()
        .map_err(|e| CliError::Failed(format!("thread pool: {e}")))?;
    let manifest = pool.install(|| dataset::generate(&gen, &out)).map_err(|e| match e {
        dataset::DatasetError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::Failed(other.to_string()),
    })?;
    let manifest_path = out.join(MANIFEST_FILE);
    let bytes = fs::read(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let summary = json!({
        "manifest": manifest_path,
        "manifest_sha256": sha256_hex(&bytes),
        "config_hash": manifest.config_hash,
        "schema_version": manifest.schema_version,
        "total_episodes": manifest.total_episodes,
        "total_subtasks": manifest.total_subtasks,
        "regenerated": manifest.regenerated,
        "tasks": manifest.tasks,
    });
    eprintln!("wrote {} episodes ({} regenerated)", manifest.total_episodes, manifest.regenerated);
    emit(&(serde_json::to_string_pretty(&summary).expect("json") + "\n"))
}

fn cmd_rollout(cfg: &RunConfig) -> Result<(), CliError> {
    let rc = rollout_config(cfg, vec![cfg.strategy()])?;
    let source = cfg.policy()?;
    eprintln!(
        "rollout: {} tasks x {} episodes, strategy {}",
        rc.tasks.len(),
        rc.episodes,
        cfg.strategy()
    );
    let episodes = rollout(&rc, &source)?;
    let payload = ndjson(&episodes);
    if let Some(path) = &cfg.out {
        write_file(path, &payload)?;
    }
    eprint!("{}", MetricsReport::from_summaries(&episodes).to_table());
    emit(&payload)
}

fn cmd_compare(cfg: &RunConfig) -> Result<(), CliError> {
    let strategies = match cfg.strategy {
        Some(_) => vec![cfg.strategy()],
        None => Strategy::all(cfg.k()).to_vec(),
    };
    let rc = rollout_config(cfg, strategies)?;
    let source = cfg.policy()?;
    eprintln!(
        "compare: {} tasks x {} episodes, eps_plan {} eps_act {} p {}",
        rc.tasks.len(),
        rc.episodes,
        rc.noise.eps_plan,
        rc.noise.eps_act,
        rc.p
    );
    let cmp = compare_strategies(&rc, &source)?;
    let csv = cmp.report.to_csv();
    let table = cmp.report.to_table();
    if let Some(dir) = &cfg.out {
        write_file(&dir.join("metrics.csv"), &csv)?;
        write_file(&dir.join("metrics.txt"), &table)?;
        write_file(&dir.join("episodes.ndjson"), &ndjson(&cmp.episodes))?;
        write_file(&dir.join("config.toml"), &cfg.to_toml())?;
    }
    eprint!("{table}");
    emit(&csv)
}

fn cmd_probe(cfg: &RunConfig) -> Result<(), CliError> {
    let pc = ProbeConfig {
        tasks: cfg.tasks()?,
        samples_per_task: cfg.samples_per_task.unwrap_or(10),
        seed: cfg.seed.unwrap_or(0),
        workspace: WorkspaceConfig::default(),
        parallel: cfg.parallel(),
    };
    let source = cfg.policy()?;
    let report = planning_accuracy(&pc, &source, cfg.noise())?;
    for t in &report.per_task {
        eprintln!("{:<60} {:>4}/{:<4} {:.3}", t.task_id.as_str(), t.hits, t.samples, t.accuracy);
    }
    eprintln!("overall {}/{} {:.4}", report.hits, report.samples, report.accuracy);
    let payload = serde_json::to_string_pretty(&report).expect("json") + "\n";
    if let Some(path) = &cfg.out {
        write_file(path, &payload)?;
    }
    emit(&payload)
}

fn cmd_inspect(root: &Path, replay: bool) -> Result<(), CliError> {
    let ds = dataset::load(root).map_err(|e| match e {
        LoadError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::Failed(other.to_string()),
    })?;
    let ws = &ds.manifest.config.workspace;
    let mut verified = 0u64;
    let mut replayed = 0u64;
    let mut failures = Vec::new();
    for entry in &ds.manifest.episodes {
        match ds.read_episode(entry) {
            Ok(rec) => {
                verified += 1;
                if replay {
                    match dataset::replay(&rec, ws) {
                        Ok(f) if f == 1.0 => replayed += 1,
                        Ok(f) => failures.push(format!("{} #{}: replay ends at {f}", rec.task_id, rec.index)),
                        Err(e) => failures.push(format!("{} #{}: {e}", rec.task_id, rec.index)),
                    }
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    let summary = json!({
        "root": root,
        "schema_version": ds.manifest.schema_version,
        "config_hash": ds.manifest.config_hash,
        "total_episodes": ds.manifest.total_episodes,
        "total_subtasks": ds.manifest.total_subtasks,
        "checksums_verified": verified,
        "replayed": if replay { Some(replayed) } else { None },
        "tasks": ds.manifest.tasks,
        "failures": failures,
    });
    emit(&(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} episodes failed verification", failures.len())))
    }
}

fn cmd_tasks() -> Result<(), CliError> {
    let lines: Vec<_> = TaskId::ALL
        .iter()
        .map(|t| {
            json!({
                "task_id": t,
                "letter": t.letter().map(String::from),
                "split": t.split(),
                "long_horizon": t.is_long_horizon(),
            })
        })
        .collect();
    emit(&ndjson(&lines))
}
