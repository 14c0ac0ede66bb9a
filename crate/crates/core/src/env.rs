//! Episode state machine: actions, transitions, termination and reward.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{draw_gripper, extract_view, project_coords, render_pieces, Board, Coord, Frame, GripperState, PieceId};
use crate::language::{initial_expression, tokenize, PreferenceOrder, TeacherState, Tokens, Utterance};
use crate::tasks::{Task, TaskError};

/// Episode step limit.
pub const T_MAX: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    Left,
    Right,
    Up,
    Down,
    Wait,
    Grip,
}

impl Action {
    pub const ALL: [Action; 6] = [Action::Left, Action::Right, Action::Up, Action::Down, Action::Wait, Action::Grip];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Left => "LEFT",
            Action::Right => "RIGHT",
            Action::Up => "UP",
            Action::Down => "DOWN",
            Action::Wait => "WAIT",
            Action::Grip => "GRIP",
        }
    }

    /// Tile displacement of a movement action.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Wait | Action::Grip => (0, 0),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown action {0:?}")]
pub struct ParseActionError(String);

impl FromStr for Action {
    type Err = ParseActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ParseActionError(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Correct,
    Wrong,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub status: Status,
    /// Steps used, including the terminal one.
    pub steps: u32,
    pub reward: f64,
    pub gripped: Option<PieceId>,
}

/// `1 - 0.9 * T / T_MAX`, plus 1 on success and minus 1 otherwise.
///
/// Evaluated in thousandths so that the result is the double nearest the
/// exact decimal (e.g. 1.91, not 1.9099999999999999).
pub fn terminal_reward(status: Status, steps: u32) -> f64 {
    let bonus = match status {
        Status::Correct => 1000,
        Status::Wrong | Status::Timeout => -1000,
    };
    let milli = 1000 - (900 * steps as i64) / T_MAX as i64 + bonus;
    milli as f64 / 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub order: PreferenceOrder,
    pub feedback_enabled: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            order: PreferenceOrder::default(),
            feedback_enabled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// 11×11 RGB crop around the gripper.
    pub view: Frame,
    /// Gripper position projected into `[-1, 1]²`.
    pub gripper: [f64; 2],
    pub re_tokens: Tokens,
    /// All padding when the teacher said nothing this step.
    pub fb_tokens: Tokens,
    pub t: u32,
    pub re_text: String,
    pub fb_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub position: Coord,
    pub feedback: Option<Utterance>,
    pub outcome: Option<EpisodeOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("invalid task: {0}")]
    InvalidTask(#[from] TaskError),
    #[error("episode is already finished")]
    EpisodeDone,
}

/// One episode. Cheap to clone, so search procedures can branch on it.
#[derive(Debug, Clone)]
pub struct CoGripEnv {
    board: Board,
    target: PieceId,
    config: EnvConfig,
    gripper: GripperState,
    teacher: TeacherState,
    layer: Frame,
    t: u32,
    last_feedback: Option<Utterance>,
    outcome: Option<EpisodeOutcome>,
}

impl CoGripEnv {
    /// Start an episode on `task` with the gripper at the board center.
    pub fn reset(task: &Task, config: EnvConfig) -> Result<(Self, Observation), EnvError> {
        let board = task.build_board()?;
        let target = task.target_id();
        let re = initial_expression(&board, target, config.order).ok_or(TaskError::MissingTarget(task.target))?;
        let start = board.center();
        let env = Self {
            layer: render_pieces(&board),
            gripper: GripperState::new(start),
            teacher: TeacherState::new(config.order, re, start, config.feedback_enabled),
            board,
            target,
            config,
            t: 0,
            last_feedback: None,
            outcome: None,
        };
        let obs = env.observe();
        Ok((env, obs))
    }

    pub fn step(&mut self, action: Action) -> Result<Transition, EnvError> {
        if self.outcome.is_some() {
            return Err(EnvError::EpisodeDone);
        }
        self.t += 1;
        let (dx, dy) = action.delta();
        let pos = self.gripper.position;
        let next = Coord::new(
            (pos.x + dx).clamp(0, self.board.width() as i32 - 1),
            (pos.y + dy).clamp(0, self.board.height() as i32 - 1),
        );
        self.gripper.advance(next);

        let over = self.board.piece_at(next);
        let status = match (action, over) {
            (Action::Grip, Some(id)) if id == self.target => Some(Status::Correct),
            (Action::Grip, Some(_)) => Some(Status::Wrong),
            _ if self.t >= T_MAX => Some(Status::Timeout),
            _ => None,
        };
        self.outcome = status.map(|status| EpisodeOutcome {
            status,
            steps: self.t,
            reward: terminal_reward(status, self.t),
            gripped: over.filter(|_| action == Action::Grip),
        });

        let target = self.board.piece(self.target).expect("target exists");
        self.last_feedback = self.teacher.feedback(next, over, target);

        Ok(Transition {
            observation: self.observe(),
            reward: self.outcome.map_or(0.0, |o| o.reward),
            done: self.outcome.is_some(),
            info: StepInfo {
                position: next,
                feedback: self.last_feedback.clone(),
                outcome: self.outcome,
            },
        })
    }

    pub fn observe(&self) -> Observation {
        let mut frame = self.layer.clone();
        draw_gripper(&mut frame, &self.gripper);
        let (px, py) = project_coords(self.gripper.position, self.board.width(), self.board.height());
        let fb_tokens = self
            .last_feedback
            .as_ref()
            .map_or_else(|| tokenize(""), |u| u.tokens);
        Observation {
            view: extract_view(&frame, self.gripper.position),
            gripper: [px, py],
            re_tokens: self.teacher.initial_re.tokens,
            fb_tokens,
            t: self.t,
            re_text: self.teacher.initial_re.text.clone(),
            fb_text: self.last_feedback.as_ref().map(|u| u.text.clone()),
        }
    }

    /// Whole board with the gripper trail, as shown to human players.
    pub fn render_full(&self) -> Frame {
        let mut frame = self.layer.clone();
        draw_gripper(&mut frame, &self.gripper);
        frame
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn target(&self) -> PieceId {
        self.target
    }

    pub fn gripper(&self) -> &GripperState {
        &self.gripper
    }

    pub fn config(&self) -> EnvConfig {
        self.config
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn initial_re(&self) -> &Utterance {
        &self.teacher.initial_re
    }

    pub fn last_feedback(&self) -> Option<&Utterance> {
        self.last_feedback.as_ref()
    }

    pub fn outcome(&self) -> Option<EpisodeOutcome> {
        self.outcome
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }
}
