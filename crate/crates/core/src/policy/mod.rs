//! Policies: the high-level planner `plan(o, g) -> sub-task` and the low-level actor
//! `act(o, g, sub-task) -> action`, with an in-process oracle, noise-injecting and quantizing
//! wrappers, and an external child process speaking NDJSON over stdio.

mod external;
mod noise;
mod oracle;
pub mod protocol;

use crate::env::Observation;
use crate::tasks::{OracleError, SubTask};
use crate::tokenizer::{ActionCodec, TokenizerError};
use crate::world::Action;

pub use external::{ExternalPolicy, DEFAULT_TIMEOUT};
pub use noise::{corrupt_place, corrupt_subtask, NoiseConfig, NoiseStats, NoisyPolicy, ACT_OFFSET_RANGE};
pub use oracle::{oracle_plan, OraclePolicy};
pub use protocol::ProtocolError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("oracle requires symbolic channel")]
    MissingSymbolic,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("invalid noise config: {0}")]
    InvalidNoise(String),
}

impl PolicyError {
    /// Errors after which no further progress is possible in the episode.
    pub fn ends_episode(&self) -> bool {
        matches!(
            self,
            PolicyError::Oracle(OracleError::ReplanImpossible(_) | OracleError::AlreadyDone)
        )
    }
}

pub trait Policy: Send {
    fn plan(&mut self, obs: &Observation, goal: &str) -> Result<SubTask, PolicyError>;

    fn act(&mut self, obs: &Observation, goal: &str, subtask: &SubTask) -> Result<Action, PolicyError>;

    /// Called before each episode with that episode's seed.
    fn reset(&mut self, _episode_seed: u64) {}

    /// Whether observations passed to this policy need rendered rasters.
    fn wants_rasters(&self) -> bool {
        false
    }

    /// Fails once the policy can no longer answer at all (e.g. its process died).
    fn health(&mut self) -> Result<(), PolicyError> {
        Ok(())
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn plan(&mut self, obs: &Observation, goal: &str) -> Result<SubTask, PolicyError> {
        (**self).plan(obs, goal)
    }

    fn act(&mut self, obs: &Observation, goal: &str, subtask: &SubTask) -> Result<Action, PolicyError> {
        (**self).act(obs, goal, subtask)
    }

    fn reset(&mut self, episode_seed: u64) {
        (**self).reset(episode_seed)
    }

    fn wants_rasters(&self) -> bool {
        (**self).wants_rasters()
    }

    fn health(&mut self) -> Result<(), PolicyError> {
        (**self).health()
    }
}

/// Emits actions as a tokenized policy would: every action goes through the codec.
pub struct Quantized<P> {
    pub inner: P,
    pub codec: ActionCodec,
}

impl<P: Policy> Quantized<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            codec: ActionCodec::default(),
        }
    }
}

impl<P: Policy> Policy for Quantized<P> {
    fn plan(&mut self, obs: &Observation, goal: &str) -> Result<SubTask, PolicyError> {
        self.inner.plan(obs, goal)
    }

    fn act(&mut self, obs: &Observation, goal: &str, subtask: &SubTask) -> Result<Action, PolicyError> {
        let a = self.inner.act(obs, goal, subtask)?;
        Ok(self.codec.quantize(&a)?)
    }

    fn reset(&mut self, episode_seed: u64) {
        self.inner.reset(episode_seed)
    }

    fn wants_rasters(&self) -> bool {
        self.inner.wants_rasters()
    }

    fn health(&mut self) -> Result<(), PolicyError> {
        self.inner.health()
    }
}

/// Where episode workers get their policy from.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    Oracle { seed: u64 },
    /// Command line of a child process speaking the wire protocol.
    External { command: String, timeout: std::time::Duration },
}

impl PolicySource {
    /// A fresh policy instance wrapped with `noise`.
    pub fn build(&self, noise: NoiseConfig) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(match self {
            PolicySource::Oracle { seed } => Box::new(NoisyPolicy::new(OraclePolicy::new(*seed), noise)?),
            PolicySource::External { command, timeout } => {
                Box::new(NoisyPolicy::new(ExternalPolicy::spawn(command, *timeout)?, noise)?)
            }
        })
    }
}

impl std::str::FromStr for PolicySource {
    type Err = String;

    /// `oracle` or `exec:<command line>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "oracle" {
            return Ok(PolicySource::Oracle { seed: 0 });
        }
        match s.strip_prefix("exec:") {
            Some(cmd) if !cmd.trim().is_empty() => Ok(PolicySource::External {
                command: cmd.to_string(),
                timeout: DEFAULT_TIMEOUT,
            }),
            _ => Err(format!("policy must be `oracle` or `exec:<command>`, got `{s}`")),
        }
    }
}
