//! CoGRIP: a collaborative reference game on a Pentomino board.
//!
//! A follower moves a gripper over the board and must grip the piece a
//! heuristic teacher describes. The teacher opens with a referring expression
//! produced by the Incremental Algorithm and may comment on the follower's
//! progress during the episode.
//!
//! - [`board`]: pieces, placement, rendering and the 11×11 partial view
//! - [`language`]: Incremental Algorithm, templates, feedback, vocabulary
//! - [`env`]: the episode state machine and sparse reward
//! - [`tasks`]: symbol splits and seeded scene generation
//! - [`oracle`]: shortest-path solver, scripted followers, evaluation
//! - [`trajectory`]: step logs and replay

pub mod board;
pub mod env;
pub mod language;
pub mod oracle;
pub mod taskfile;
pub mod tasks;
pub mod trajectory;

pub use board::{Board, Color, Coord, Frame, PieceId, PieceSymbol, Region, Rotation, Shape};
pub use env::{Action, CoGripEnv, EnvConfig, EnvError, EpisodeOutcome, Observation, Status, Transition, T_MAX};
pub use language::{PreferenceOrder, Utterance};
pub use tasks::{Task, TaskSelector, DEFAULT_SEED};
