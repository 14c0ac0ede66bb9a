//! Evaluation harness: run a follower over a task set and report mSR / mEPL.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::followers::{Follower, FollowerKind};
use super::solver::SolverError;
use crate::env::{CoGripEnv, EnvConfig, EnvError, EpisodeOutcome, Status};
use crate::tasks::Task;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("task {task}: {source}")]
    Env { task: String, source: EnvError },
    #[error("task {task}: {source}")]
    Solver { task: String, source: SolverError },
    #[error("empty task set")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub task_id: String,
    pub status: Status,
    pub steps: u32,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub follower: String,
    pub config: EnvConfig,
    pub n: usize,
    /// Fraction of episodes ending with the target gripped, in `[0, 1]`.
    pub msr: f64,
    /// Mean steps per episode, counting the final grip.
    pub mepl: f64,
    pub mean_reward: f64,
    pub episodes: Vec<EpisodeRecord>,
}

/// Run one episode to completion.
pub fn run_episode(
    follower: &mut dyn Follower,
    task: &Task,
    config: EnvConfig,
    mut log: Option<&mut Trajectory>,
) -> Result<EpisodeOutcome, EnvError> {
    let (mut env, mut obs) = CoGripEnv::reset(task, config)?;
    if let Some(log) = log.as_deref_mut() {
        *log = Trajectory::start(task, config, &env, &obs);
    }
    loop {
        let action = follower.act(&obs);
        let tr = env.step(action)?;
        if let Some(log) = log.as_deref_mut() {
            log.push(action, &tr);
        }
        if let Some(outcome) = tr.info.outcome {
            return Ok(outcome);
        }
        obs = tr.observation;
    }
}

fn episode(kind: FollowerKind, task: &Task, config: EnvConfig) -> Result<EpisodeRecord, EvalError> {
    logged_episode(kind, task, config, None)
}

fn logged_episode(
    kind: FollowerKind,
    task: &Task,
    config: EnvConfig,
    log: Option<&mut Trajectory>,
) -> Result<EpisodeRecord, EvalError> {
    let mut follower = kind.build(task).map_err(|source| EvalError::Solver {
        task: task.id.clone(),
        source,
    })?;
    let outcome = run_episode(follower.as_mut(), task, config, log).map_err(|source| EvalError::Env {
        task: task.id.clone(),
        source,
    })?;
    Ok(EpisodeRecord {
        task_id: task.id.clone(),
        status: outcome.status,
        steps: outcome.steps,
        reward: outcome.reward,
    })
}

/// Evaluate `kind` on every task in parallel; records keep task order.
pub fn evaluate(kind: FollowerKind, tasks: &[Task], config: EnvConfig) -> Result<EvalReport, EvalError> {
    if tasks.is_empty() {
        return Err(EvalError::Empty);
    }
    let episodes = tasks
        .par_iter()
        .map(|t| episode(kind, t, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(kind.as_str(), config, episodes))
}

/// `evaluate`, also returning each episode's trajectory in task order.
pub fn evaluate_logged(
    kind: FollowerKind,
    tasks: &[Task],
    config: EnvConfig,
) -> Result<(EvalReport, Vec<Trajectory>), EvalError> {
    if tasks.is_empty() {
        return Err(EvalError::Empty);
    }
    let (episodes, logs): (Vec<_>, Vec<_>) = tasks
        .par_iter()
        .map(|t| {
            let mut log = Trajectory { records: Vec::new() };
            logged_episode(kind, t, config, Some(&mut log)).map(|e| (e, log))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();
    Ok((summarize(kind.as_str(), config, episodes), logs))
}

pub fn summarize(follower: &str, config: EnvConfig, episodes: Vec<EpisodeRecord>) -> EvalReport {
    let n = episodes.len();
    let successes = episodes.iter().filter(|e| e.status == Status::Correct).count();
    let steps: u64 = episodes.iter().map(|e| e.steps as u64).sum();
    // Rewards are whole thousandths; summing them as integers keeps the mean
    // free of accumulated rounding.
    let milli: i64 = episodes.iter().map(|e| (e.reward * 1000.0).round() as i64).sum();
    EvalReport {
        follower: follower.to_string(),
        config,
        n,
        msr: successes as f64 / n as f64,
        mepl: steps as f64 / n as f64,
        mean_reward: milli as f64 / 1000.0 / n as f64,
        episodes,
    }
}
