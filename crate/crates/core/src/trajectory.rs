//! Line-delimited trajectory logs and deterministic replay.
//!
//! A log starts with a header record carrying the task and configuration,
//! followed by one record per step. Each record stores a SHA-256 digest of
//! the serialized observation so replays can be checked byte for byte.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::board::Coord;
use crate::env::{Action, CoGripEnv, EnvConfig, EnvError, Observation, Transition};
use crate::tasks::Task;

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Header {
        version: u32,
        task: Task,
        config: EnvConfig,
        re: String,
        obs_sha256: String,
    },
    Step {
        t: u32,
        action: Action,
        gripper: Coord,
        feedback: Option<String>,
        reward: f64,
        done: bool,
        obs_sha256: String,
    },
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("log does not start with a header record")]
    MissingHeader,
    #[error("unsupported log version {0}")]
    Version(u32),
    #[error(transparent)]
    Env(#[from] EnvError),
}

pub fn observation_digest(obs: &Observation) -> String {
    let bytes = serde_json::to_vec(obs).expect("observations serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Collects records while an episode runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<LogRecord>,
}

impl Trajectory {
    pub fn start(task: &Task, config: EnvConfig, env: &CoGripEnv, obs: &Observation) -> Self {
        Self::begin(task, config, &env.initial_re().text, obs)
    }

    /// Like `start`, for callers that only see the episode's messages.
    pub fn begin(task: &Task, config: EnvConfig, re: &str, obs: &Observation) -> Self {
        Self {
            records: vec![LogRecord::Header {
                version: LOG_VERSION,
                task: task.clone(),
                config,
                re: re.to_string(),
                obs_sha256: observation_digest(obs),
            }],
        }
    }

    pub fn push(&mut self, action: Action, tr: &Transition) {
        self.records.push(LogRecord::Step {
            t: tr.observation.t,
            action,
            gripper: tr.info.position,
            feedback: tr.info.feedback.as_ref().map(|u| u.text.clone()),
            reward: tr.reward,
            done: tr.done,
            obs_sha256: observation_digest(&tr.observation),
        });
    }

    pub fn actions(&self) -> Vec<Action> {
        self.records
            .iter()
            .filter_map(|r| match r {
                LogRecord::Step { action, .. } => Some(*action),
                LogRecord::Header { .. } => None,
            })
            .collect()
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, TrajectoryError> {
        let mut records = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|source| TrajectoryError::Json { line: i + 1, source })?;
            records.push(rec);
        }
        match records.first() {
            Some(LogRecord::Header { version, .. }) if *version != LOG_VERSION => {
                Err(TrajectoryError::Version(*version))
            }
            Some(LogRecord::Header { .. }) => Ok(Self { records }),
            _ => Err(TrajectoryError::MissingHeader),
        }
    }
}

/// Run `actions` on `task` and log every step. Stops early if the episode ends.
pub fn record(task: &Task, config: EnvConfig, actions: &[Action]) -> Result<Trajectory, EnvError> {
    let (mut env, obs) = CoGripEnv::reset(task, config)?;
    let mut log = Trajectory::start(task, config, &env, &obs);
    for &a in actions {
        let tr = env.step(a)?;
        log.push(a, &tr);
        if tr.done {
            break;
        }
    }
    Ok(log)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub steps: usize,
    /// Index of the first differing record (0 is the header).
    pub first_mismatch: Option<usize>,
}

impl ReplayReport {
    pub fn matched(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Re-execute a log's actions and compare each regenerated record with the logged one.
pub fn replay(log: &Trajectory) -> Result<ReplayReport, TrajectoryError> {
    let (task, config) = match log.records.first() {
        Some(LogRecord::Header { task, config, .. }) => (task, *config),
        _ => return Err(TrajectoryError::MissingHeader),
    };
    let fresh = record(task, config, &log.actions())?;
    let first_mismatch = (0..log.records.len().max(fresh.records.len()))
        .find(|&i| log.records.get(i) != fresh.records.get(i));
    Ok(ReplayReport {
        steps: log.records.len() - 1,
        first_mismatch,
    })
}
