//! Wire messages. One JSON object per line (TCP) or per text frame (WebSocket),
//! discriminated by a `type` field. See `PROTOCOL.md` at the repository root.

use std::fmt;

use cogrip::env::{Action, EpisodeOutcome, Observation, Transition};
use cogrip::language::{PreferenceOrder, Utterance};
use cogrip::{Coord, Frame, PieceSymbol, Task};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

pub type SessionId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The client sees the 11×11 partial view only.
    #[default]
    Agent,
    /// The client also receives full-board renders.
    Human,
}

fn default_true() -> bool {
    true
}

fn default_map_size() -> usize {
    20
}

fn default_pieces() -> usize {
    4
}

fn default_seed() -> u64 {
    cogrip::DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    #[serde(default)]
    pub order: PreferenceOrder,
    #[serde(default = "default_true")]
    pub feedback: bool,
    #[serde(default)]
    pub mode: Mode,
    /// Task selector (e.g. `test20`) into the server's task library. When
    /// absent, resets without an explicit task generate one.
    #[serde(default)]
    pub tasks: Option<String>,
    #[serde(default = "default_map_size")]
    pub map_size: usize,
    #[serde(default = "default_pieces")]
    pub n_pieces: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            order: PreferenceOrder::default(),
            feedback: true,
            mode: Mode::Agent,
            tasks: None,
            map_size: default_map_size(),
            n_pieces: default_pieces(),
            seed: default_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskRef {
    Inline(Task),
    Library { set: String, index: usize },
    Generate {
        symbol: Option<PieceSymbol>,
        map_size: usize,
        n_pieces: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Hello {
        #[serde(default)]
        client: Option<String>,
    },
    NewSession {
        #[serde(default)]
        config: SessionConfig,
    },
    Reset {
        session: SessionId,
        #[serde(default)]
        task: Option<TaskRef>,
    },
    Step {
        session: SessionId,
        action: Action,
    },
    RenderRequest {
        session: SessionId,
    },
    Close {
        session: SessionId,
    },
}

impl Request {
    pub fn session(&self) -> Option<SessionId> {
        match self {
            Request::Hello { .. } | Request::NewSession { .. } => None,
            Request::Reset { session, .. }
            | Request::Step { session, .. }
            | Request::RenderRequest { session }
            | Request::Close { session } => Some(*session),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    MalformedMessage,
    UnknownSession,
    NoEpisode,
    EpisodeDone,
    InvalidTask,
    UnknownTask,
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("codes serialize");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Hello {
        version: u32,
        server: String,
        actions: Vec<Action>,
    },
    Session {
        session: SessionId,
        actions: Vec<Action>,
        config: SessionConfig,
    },
    Reset {
        session: SessionId,
        task_id: String,
        observation: Observation,
        re: Utterance,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        board: Option<Frame>,
    },
    Step {
        session: SessionId,
        /// Steps processed in this session's current episode.
        step: u32,
        transition: Transition,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        board: Option<Frame>,
    },
    Render {
        session: SessionId,
        t: u32,
        board: Frame,
    },
    Closed {
        session: SessionId,
    },
    Error {
        code: ErrorCode,
        message: String,
        #[serde(default)]
        session: Option<SessionId>,
    },
}

impl Reply {
    pub fn error(code: ErrorCode, message: impl Into<String>, session: Option<SessionId>) -> Self {
        Reply::Error {
            code,
            message: message.into(),
            session,
        }
    }
}

/// Pushed to streaming (human-mode) clients after each processed request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Frame {
        session: SessionId,
        t: u32,
        board: Frame,
        view: Frame,
        gripper: Coord,
    },
    Utterance {
        session: SessionId,
        t: u32,
        utterance: Utterance,
    },
    Outcome {
        session: SessionId,
        outcome: EpisodeOutcome,
    },
}

/// Anything the server writes to a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServerMessage {
    Reply(Reply),
    Event(Event),
}
