//! Run configuration: optional TOML file merged under command-line flags.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tabletop::control::{Strategy, StrategyKind, DEFAULT_K};
use tabletop::policy::{NoiseConfig, PolicySource};
use tabletop::tasks::TaskId;

/// Every knob a subcommand may read. All fields are optional so a file and the flags can be
/// layered; [`RunConfig::merge`] lets the flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// `all`, `long-horizon`, or comma-separated task names / letters A-K [default: all]
    #[arg(long)]
    pub task: Option<String>,
    /// Episodes per task [default: 20]
    #[arg(long)]
    pub episodes: Option<u32>,
    /// Master seed [default: 0]
    #[arg(long)]
    #[serde(default, with = "seed_repr")]
    pub seed: Option<u64>,
    /// Replanning strategy: a, b or c [default: c; compare runs all three]
    #[arg(long)]
    pub strategy: Option<StrategyKind>,
    /// Consecutive-failure threshold for strategy c [default: 2]
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<u32>,
    /// Probability of a wrong sub-task per plan call
    #[arg(long)]
    pub eps_plan: Option<f64>,
    /// Probability of a displaced place pose per act call
    #[arg(long)]
    pub eps_act: Option<f64>,
    /// Noise starting point [default: noisy for compare, none otherwise]
    #[arg(long, value_enum)]
    pub noise_preset: Option<NoisePreset>,
    /// Seed of the noise wrapper [default: 0]
    #[arg(long)]
    #[serde(default, with = "seed_repr")]
    pub noise_seed: Option<u64>,
    /// Per-substep drop probability
    #[arg(long)]
    pub p: Option<f64>,
    /// Step budget per episode [default: derived from the expert plan length]
    #[arg(long)]
    pub step_budget: Option<u32>,
    /// `oracle` or `exec:<command line>` [default: oracle]
    #[arg(long)]
    pub policy: Option<String>,
    /// Per-request timeout for external policies, in seconds [default: 10]
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    /// Output location (dataset directory for generate, file or directory otherwise)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core [default: 0]
    #[arg(long)]
    pub parallel: Option<usize>,
    /// Probe situations per task [default: 10]
    #[arg(long)]
    pub samples_per_task: Option<u32>,
}

/// Named starting points for the noise knobs; explicit `--eps-*` / `--p` flags override them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NoisePreset {
    /// Perfect planner and actor, reliable transport.
    None,
    /// eps_plan = eps_act = 0.2, p = 0.1: enough failures to separate the strategies.
    Noisy,
}

impl NoisePreset {
    /// (eps_plan, eps_act, p)
    pub fn values(self) -> (f64, f64, f64) {
        match self {
            NoisePreset::None => (0.0, 0.0, 0.0),
            NoisePreset::Noisy => (0.2, 0.2, 0.1),
        }
    }
}

/// TOML integers are signed 64-bit, so seeds above `i64::MAX` are written as strings.
mod seed_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(seed: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        seed.map(|v| i64::try_from(v).map(Repr::Int).unwrap_or_else(|_| Repr::Text(v.to_string())))
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        use serde::de::Error;
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Int(v)) => u64::try_from(v).map(Some).map_err(|_| D::Error::custom("seed must be non-negative")),
            Some(Repr::Text(t)) => t.parse().map(Some).map_err(|_| D::Error::custom(format!("bad seed `{t}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    Usage(String),
    UnknownTask(String),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// `other`'s set fields override ours.
    pub fn merge(self, other: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            task,
            episodes,
            seed,
            strategy,
            k,
            eps_plan,
            eps_act,
            noise_preset,
            noise_seed,
            p,
            step_budget,
            policy,
            timeout_secs,
            out,
            parallel,
            samples_per_task
        )
    }

    /// Rejects combinations that make no sense regardless of subcommand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k.is_some() && matches!(self.strategy, Some(StrategyKind::A | StrategyKind::B)) {
            return Err(ConfigError::Usage("--K only applies to strategy c".to_string()));
        }
        for (name, v) in [("eps-plan", self.eps_plan), ("eps-act", self.eps_act), ("p", self.p)] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ConfigError::Usage(format!("--{name} must be in [0, 1], got {v}")));
                }
            }
        }
        if self.step_budget == Some(0) {
            return Err(ConfigError::Usage("--step-budget must be at least 1".to_string()));
        }
        if let Some(t) = self.timeout_secs {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::Usage(format!("--timeout-secs must be positive, got {t}")));
            }
        }
        self.policy()?;
        self.tasks()?;
        Ok(())
    }

    /// `all`, `long-horizon`, or a comma-separated list of task names or letters A-K.
    /// Defaults to `all`.
    pub fn tasks(&self) -> Result<Vec<TaskId>, ConfigError> {
        parse_tasks(self.task.as_deref().unwrap_or("all"))
    }

    pub fn strategy(&self) -> Strategy {
        match self.strategy.unwrap_or(StrategyKind::C) {
            StrategyKind::A => Strategy::A,
            StrategyKind::B => Strategy::B,
            StrategyKind::C => Strategy::c(self.k()),
        }
    }

    pub fn k(&self) -> u32 {
        self.k.unwrap_or(DEFAULT_K)
    }

    pub fn preset(&self) -> NoisePreset {
        self.noise_preset.unwrap_or(NoisePreset::None)
    }

    pub fn noise(&self) -> NoiseConfig {
        let (plan, act, _) = self.preset().values();
        NoiseConfig::new(
            self.eps_plan.unwrap_or(plan),
            self.eps_act.unwrap_or(act),
            self.noise_seed.unwrap_or(0),
        )
    }

    pub fn p(&self) -> f64 {
        self.p.unwrap_or(self.preset().values().2)
    }

    pub fn policy(&self) -> Result<PolicySource, ConfigError> {
        let mut src: PolicySource = self
            .policy
            .as_deref()
            .unwrap_or("oracle")
            .parse()
            .map_err(ConfigError::Usage)?;
        if let (PolicySource::External { timeout, .. }, Some(t)) = (&mut src, self.timeout_secs) {
            *timeout = Duration::from_secs_f64(t);
        }
        Ok(src)
    }

    pub fn parallel(&self) -> usize {
        self.parallel.unwrap_or(0)
    }
}

pub fn parse_tasks(spec: &str) -> Result<Vec<TaskId>, ConfigError> {
    match spec.trim() {
        "all" => return Ok(TaskId::ALL.to_vec()),
        "long-horizon" => return Ok(TaskId::long_horizon().collect()),
        _ => {}
    }
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let task = match part.parse::<TaskId>() {
            Ok(t) => t,
            Err(_) => {
                let mut chars = part.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => TaskId::from_letter(c).ok_or_else(|| ConfigError::UnknownTask(part.to_string()))?,
                    _ => return Err(ConfigError::UnknownTask(part.to_string())),
                }
            }
        };
        if !out.contains(&task) {
            out.push(task);
        }
    }
    if out.is_empty() {
        return Err(ConfigError::Usage("--task selects no tasks".to_string()));
    }
    Ok(out)
}
