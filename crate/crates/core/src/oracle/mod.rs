//! Reference solutions and the evaluation harness.

mod eval;
mod followers;
mod solver;

pub use eval::{evaluate, evaluate_logged, run_episode, summarize, EpisodeRecord, EvalError, EvalReport};
pub use followers::{
    FeedbackFollower, Follower, FollowerKind, Heard, OracleFollower, ParseFollowerError, RandomFollower,
    WaitFollower,
};
pub use solver::{oracle_actions, shortest_episode, shortest_path, SolverError};
