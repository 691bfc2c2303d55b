//! Expert demonstration datasets.
//!
//! Layout:
//!
//! ```text
//! out_dir/
//!   manifest.json
//!   <task_id>/episode_<idx>/
//!     record.json
//!     step_<t>_color.png   8-bit RGB
//!     step_<t>_depth.png   16-bit grayscale, millimeters
//! ```
//!
//! Every byte is a function of the generation config, so regenerating into another directory
//! yields identical files. Observations are recorded noiseless.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{sample_episode, step};
use crate::seed::{derive_seed, derived_rng};
use crate::tasks::{oracle_decompose, Split, SubTask, TaskId};
use crate::tokenizer::ActionCodec;
use crate::world::{render_clean, Action, Transport, WorkspaceConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORD_FILE: &str = "record.json";
pub const DEFAULT_EPISODES_PER_TASK: u32 = 20;
/// Fresh seeds tried per episode before generation gives up on it.
pub const MAX_ATTEMPTS: u32 = 16;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{task} episode {index}: no replay-verified demonstration after {attempts} attempts: {last}")]
    Exhausted {
        task: TaskId,
        index: u32,
        attempts: u32,
        last: String,
    },
    #[error("{0}")]
    Encode(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsRefs {
    pub color: String,
    pub depth: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u32,
    /// Observation before the step, relative to the episode directory.
    pub obs: ObsRefs,
    pub subtask: SubTask,
    pub action_continuous: [f64; 6],
    pub action_tokens: [u32; 6],
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub schema_version: u32,
    pub task_id: TaskId,
    pub index: u32,
    /// Seed the scene was sampled from.
    pub seed: u64,
    pub split: Split,
    pub goal_text: String,
    pub steps: Vec<StepRecord>,
    pub codec: ActionCodec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub tasks: Vec<TaskId>,
    pub episodes_per_task: u32,
    pub master_seed: u64,
    pub workspace: WorkspaceConfig,
}

impl GenerationConfig {
    pub fn new(tasks: Vec<TaskId>, episodes_per_task: u32, master_seed: u64) -> Self {
        Self {
            tasks,
            episodes_per_task,
            master_seed,
            workspace: WorkspaceConfig::default(),
        }
    }

    /// Hex sha256 over the serialized config, schema and codec.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("config serializes"));
        h.update(SCHEMA_VERSION.to_le_bytes());
        h.update(serde_json::to_vec(&ActionCodec::default()).expect("codec serializes"));
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub episodes: u32,
    pub split: Split,
    pub subtasks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEpisode {
    pub task_id: TaskId,
    pub index: u32,
    pub seed: u64,
    /// Relative to the dataset root.
    pub dir: String,
    /// File name → hex sha256.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub config: GenerationConfig,
    pub config_hash: String,
    pub codec: ActionCodec,
    /// Always "noiseless": observation noise is regenerated from seeds downstream.
    pub observations: String,
    pub tasks: BTreeMap<TaskId, TaskEntry>,
    pub total_episodes: u64,
    pub total_subtasks: u64,
    /// Episodes whose first seed failed and were regenerated from a fresh seed.
    pub regenerated: u32,
    pub episodes: Vec<ManifestEpisode>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Seed of the `attempt`-th try at episode `index`.
pub fn attempt_seed(master: u64, task: TaskId, index: u32, attempt: u32) -> u64 {
    if attempt == 0 {
        derive_seed(master, task.as_str(), u64::from(index))
    } else {
        derive_seed(master, &format!("{}/retry{attempt}", task.as_str()), u64::from(index))
    }
}

/// An episode ready to be written: the record plus its file contents.
#[derive(Debug, Clone)]
pub struct BuiltEpisode {
    pub record: EpisodeRecord,
    pub files: Vec<(String, Vec<u8>)>,
    pub attempts: u32,
}

/// Expert episode for one seed, not yet verified.
pub fn build_episode(task: TaskId, index: u32, seed: u64, ws: &WorkspaceConfig) -> Result<BuiltEpisode, String> {
    let codec = ActionCodec::default();
    let inst = sample_episode(task, ws, seed).map_err(|e| e.to_string())?;
    let mut rng = derived_rng(seed, "demo", 0);
    let plan = oracle_decompose(&inst.scene, &inst.goal, &mut rng).map_err(|e| e.to_string())?;
    let mut state = inst.scene.clone();
    let mut steps = Vec::with_capacity(plan.len());
    let mut files = Vec::with_capacity(2 * plan.len() + 1);
    for (t, (subtask, action)) in plan.into_iter().enumerate() {
        let (color, depth) = render_clean(&state, ws);
        let color_name = format!("step_{t:03}_color.png");
        let depth_name = format!("step_{t:03}_depth.png");
        files.push((color_name.clone(), color.to_png().map_err(|e| e.to_string())?));
        files.push((depth_name.clone(), depth.to_png().map_err(|e| e.to_string())?));
        let tokens = codec.encode(&action).map_err(|e| e.to_string())?;
        let (next, out) = step(&state, &action, &inst.goal, Transport::RELIABLE, &mut rng);
        state = next;
        steps.push(StepRecord {
            t: t as u32,
            obs: ObsRefs {
                color: color_name,
                depth: depth_name,
            },
            subtask,
            action_continuous: action.to_array(),
            action_tokens: tokens,
            reward: out.reward,
        });
    }
    let record = EpisodeRecord {
        schema_version: SCHEMA_VERSION,
        task_id: task,
        index,
        seed,
        split: task.split(),
        goal_text: inst.goal_text,
        steps,
        codec,
    };
    Ok(BuiltEpisode {
        record,
        files,
        attempts: 1,
    })
}

/// Re-samples the initial scene from the record's seed, executes the continuous actions without
/// disturbances and checks that every recorded reward is reproduced exactly. Returns the final
/// satisfied fraction.
pub fn replay(record: &EpisodeRecord, ws: &WorkspaceConfig) -> Result<f64, String> {
    let inst = sample_episode(record.task_id, ws, record.seed).map_err(|e| e.to_string())?;
    if inst.goal_text != record.goal_text {
        return Err("goal text differs from the sampled scene".to_string());
    }
    let mut state = inst.scene;
    let mut rng = derived_rng(record.seed, "replay", 0);
    for s in &record.steps {
        let action = Action::from_array(s.action_continuous);
        let (next, out) = step(&state, &action, &inst.goal, Transport::RELIABLE, &mut rng);
        if out.reward != s.reward {
            return Err(format!("step {}: replayed reward {} != recorded {}", s.t, out.reward, s.reward));
        }
        state = next;
    }
    Ok(inst.goal.satisfied_fraction(&state))
}

/// Checks that the tokens decode to the continuous action within the codec bound.
pub fn tokens_consistent(step: &StepRecord, codec: &ActionCodec) -> bool {
    let decoded = codec.decode_ids(&step.action_tokens).to_array();
    (0..6).all(|d| (decoded[d] - step.action_continuous[d]).abs() <= codec.half_bin(d) + 1e-12)
}

/// Builds episode `index`, moving to fresh seeds until one passes replay verification.
pub fn build_verified(task: TaskId, index: u32, master: u64, ws: &WorkspaceConfig) -> Result<BuiltEpisode, DatasetError> {
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let seed = attempt_seed(master, task, index, attempt);
        let built = match build_episode(task, index, seed, ws) {
            Ok(b) => b,
            Err(e) => {
                last = e;
                continue;
            }
        };
        match replay(&built.record, ws) {
            Ok(f) if f == 1.0 => {}
            Ok(f) => {
                last = format!("replay reaches satisfied fraction {f}");
                continue;
            }
            Err(e) => {
                last = e;
                continue;
            }
        }
        if !built.record.steps.iter().all(|s| tokens_consistent(s, &built.record.codec)) {
            last = "tokens inconsistent with continuous actions".to_string();
            continue;
        }
        if attempt > 0 {
            eprintln!("{task} episode {index}: regenerated after {attempt} rejected seed(s)");
        }
        return Ok(BuiltEpisode {
            attempts: attempt + 1,
            ..built
        });
    }
    Err(DatasetError::Exhausted {
        task,
        index,
        attempts: MAX_ATTEMPTS,
        last,
    })
}

fn episode_dir(task: TaskId, index: u32) -> String {
    format!("{}/episode_{index}", task.as_str())
}

fn write_episode(root: &Path, built: &BuiltEpisode) -> Result<ManifestEpisode, DatasetError> {
    let rel = episode_dir(built.record.task_id, built.record.index);
    let dir = root.join(&rel);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut files = BTreeMap::new();
    let mut record_json = serde_json::to_vec_pretty(&built.record).map_err(|e| DatasetError::Encode(e.to_string()))?;
    record_json.push(b'\n');
    for (name, bytes) in built.files.iter().map(|(n, b)| (n.as_str(), b)).chain([(RECORD_FILE, &record_json)]) {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        files.insert(name.to_string(), sha256_hex(bytes));
    }
    Ok(ManifestEpisode {
        task_id: built.record.task_id,
        index: built.record.index,
        seed: built.record.seed,
        dir: rel,
        files,
    })
}

/// Generates, verifies and writes every episode of `cfg` under `out_dir`, then writes the
/// manifest. Episodes are built in parallel; the manifest is assembled in (task, index) order.
pub fn generate(cfg: &GenerationConfig, out_dir: &Path) -> Result<DatasetManifest, DatasetError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let jobs: Vec<(TaskId, u32)> = cfg
        .tasks
        .iter()
        .flat_map(|&t| (0..cfg.episodes_per_task).map(move |i| (t, i)))
        .collect();
    let written: Vec<Result<(ManifestEpisode, u32, u64), DatasetError>> = jobs
        .par_iter()
        .map(|&(task, index)| {
            let built = build_verified(task, index, cfg.master_seed, &cfg.workspace)?;
            let entry = write_episode(out_dir, &built)?;
            Ok((entry, built.attempts, built.record.steps.len() as u64))
        })
        .collect();

    let mut tasks: BTreeMap<TaskId, TaskEntry> = BTreeMap::new();
    let mut episodes = Vec::with_capacity(written.len());
    let mut regenerated = 0;
    let mut total_subtasks = 0;
    for w in written {
        let (entry, attempts, n) = w?;
        let t = tasks.entry(entry.task_id).or_insert(TaskEntry {
            episodes: 0,
            split: entry.task_id.split(),
            subtasks: 0,
        });
        t.episodes += 1;
        t.subtasks += n;
        total_subtasks += n;
        regenerated += u32::from(attempts > 1);
        episodes.push(entry);
    }
    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        config_hash: cfg.hash(),
        codec: ActionCodec::default(),
        observations: "noiseless".to_string(),
        total_episodes: episodes.len() as u64,
        tasks,
        total_subtasks,
        regenerated,
        episodes,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| DatasetError::Encode(e.to_string()))?;
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(manifest)
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    Schema { found: u32 },
    #[error("bad manifest: {0}")]
    Manifest(String),
    #[error("{task} episode {index}: checksum mismatch in {file}")]
    Checksum { task: TaskId, index: u32, file: String },
    #[error("{task} episode {index}: {message}")]
    Record { task: TaskId, index: u32, message: String },
}

/// An opened dataset. Episodes are read one at a time when iterated.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
}

/// Opens the dataset at `root`, reading only the manifest.
pub fn load(root: &Path) -> Result<Dataset, LoadError> {
    let path = root.join(MANIFEST_FILE);
    let bytes = fs::read(&path).map_err(|e| LoadError::Io {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let raw: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| LoadError::Manifest(e.to_string()))?;
    let found = raw.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(LoadError::Schema { found });
    }
    let manifest: DatasetManifest = serde_json::from_value(raw).map_err(|e| LoadError::Manifest(e.to_string()))?;
    Ok(Dataset {
        root: root.to_path_buf(),
        manifest,
    })
}

impl Dataset {
    /// Lazily reads and checks every episode in manifest order.
    pub fn episodes(&self) -> impl Iterator<Item = Result<EpisodeRecord, LoadError>> + '_ {
        self.manifest.episodes.iter().map(move |e| self.read_episode(e))
    }

    /// Like [`Dataset::episodes`], restricted to one split.
    pub fn split(&self, split: Split) -> impl Iterator<Item = Result<EpisodeRecord, LoadError>> + '_ {
        self.manifest
            .episodes
            .iter()
            .filter(move |e| e.task_id.split() == split)
            .map(move |e| self.read_episode(e))
    }

    pub fn read_episode(&self, entry: &ManifestEpisode) -> Result<EpisodeRecord, LoadError> {
        let dir = self.root.join(&entry.dir);
        let record_err = |message: String| LoadError::Record {
            task: entry.task_id,
            index: entry.index,
            message,
        };
        let mut record_bytes = None;
        for (name, sum) in &entry.files {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|e| record_err(format!("cannot read {name}: {e}")))?;
            if &sha256_hex(&bytes) != sum {
                return Err(LoadError::Checksum {
                    task: entry.task_id,
                    index: entry.index,
                    file: name.clone(),
                });
            }
            if name == RECORD_FILE {
                record_bytes = Some(bytes);
            }
        }
        let bytes = record_bytes.ok_or_else(|| record_err(format!("{RECORD_FILE} not listed")))?;
        let raw: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| record_err(e.to_string()))?;
        let found = raw.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != SCHEMA_VERSION {
            return Err(record_err(format!("unsupported schema version {found}")));
        }
        serde_json::from_value(raw).map_err(|e| record_err(e.to_string()))
    }

    /// Path of a file referenced from an episode record.
    pub fn file_path(&self, record: &EpisodeRecord, name: &str) -> PathBuf {
        self.root.join(episode_dir(record.task_id, record.index)).join(name)
    }
}
