//! Scripted followers. Each acts on observations only, except the oracle,
//! which is handed the solved action sequence up front.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::solver::{oracle_actions, SolverError};
use crate::board::{Color, Frame, Region, PADDING, VIEW_SIZE};
use crate::env::{Action, Observation};
use crate::language::vocab::{self, Tokens, PAD};
use crate::language::{NOT_THIS_PIECE, NOT_THIS_WAY, YES_THIS_PIECE, YES_THIS_WAY};
use crate::tasks::Task;

pub trait Follower: Send {
    fn act(&mut self, obs: &Observation) -> Action;
}

/// Replays a precomputed shortest path.
#[derive(Debug, Clone)]
pub struct OracleFollower {
    plan: VecDeque<Action>,
}

impl OracleFollower {
    pub fn new(task: &Task) -> Result<Self, SolverError> {
        Ok(Self {
            plan: oracle_actions(task)?.into(),
        })
    }
}

impl Follower for OracleFollower {
    fn act(&mut self, _obs: &Observation) -> Action {
        self.plan.pop_front().unwrap_or(Action::Grip)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WaitFollower;

impl Follower for WaitFollower {
    fn act(&mut self, _obs: &Observation) -> Action {
        Action::Wait
    }
}

#[derive(Debug, Clone)]
pub struct RandomFollower {
    rng: ChaCha8Rng,
}

impl RandomFollower {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Follower for RandomFollower {
    fn act(&mut self, _obs: &Observation) -> Action {
        Action::ALL[self.rng.random_range(0..6u32) as usize]
    }
}

/// What the teacher said this step, as far as the follower can tell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heard {
    Nothing,
    YesWay,
    NotWay,
    YesPiece,
    NotPiece,
    Repeat,
    Other,
}

impl Heard {
    pub fn classify(obs: &Observation) -> Heard {
        let fb = &obs.fb_tokens;
        if fb.iter().all(|&t| t == PAD) {
            return Heard::Nothing;
        }
        let is = |text: &str| *fb == vocab::tokenize(text);
        if is(YES_THIS_PIECE) {
            Heard::YesPiece
        } else if is(NOT_THIS_PIECE) {
            Heard::NotPiece
        } else if is(YES_THIS_WAY) {
            Heard::YesWay
        } else if is(NOT_THIS_WAY) {
            Heard::NotWay
        } else if *fb == obs.re_tokens {
            Heard::Repeat
        } else {
            Heard::Other
        }
    }
}

const MOVES: [Action; 4] = [Action::Up, Action::Right, Action::Down, Action::Left];

fn clockwise(a: Action) -> Action {
    match a {
        Action::Up => Action::Right,
        Action::Right => Action::Down,
        Action::Down => Action::Left,
        Action::Left => Action::Up,
        other => other,
    }
}

fn neighbor(view: &Frame, a: Action) -> [u8; 3] {
    let c = (VIEW_SIZE / 2) as i32;
    let (dx, dy) = a.delta();
    view.get((c + dx) as usize, (c + dy) as usize)
}

/// Color and position words mentioned in a referring expression.
fn parse_expression(tokens: &Tokens) -> (Option<Color>, Option<Region>) {
    let text = vocab::detokenize(tokens);
    let words: Vec<&str> = text.split_whitespace().collect();
    let color = words.iter().find_map(|w| w.parse::<Color>().ok());
    let region = words.windows(2).find_map(|w| format!("{} {}", w[0], w[1]).parse::<Region>().ok());
    (color, region)
}

/// Region cell `(col, row)` of a projected coordinate.
fn cell_of(gripper: [f64; 2]) -> (u8, u8) {
    let third = |p: f64| ((p + 1.0) * 1.5 + 1e-9).floor().clamp(0.0, 2.0) as u8;
    (third(gripper[0]), third(gripper[1]))
}

/// Heuristic observation-driven follower.
///
/// Walks in a persistent direction, turning clockwise at the border. It
/// steps onto adjacent pieces whose color matches the expression; with no
/// feedback it grips such a piece right away. Feedback rules: `Not this way`
/// turns clockwise, `Yes this way` keeps course, `Yes this piece` grips,
/// `Not this piece` moves on, and a repeated expression picks a new random
/// direction. Until it has heard any feedback it steers toward the region
/// the expression names.
#[derive(Debug, Clone)]
pub struct FeedbackFollower {
    rng: ChaCha8Rng,
    dir: Action,
    started: bool,
    color: Option<Color>,
    region: Option<Region>,
    heard_feedback: bool,
    on_candidate: bool,
    leaving: bool,
    rejected: HashSet<(i64, i64)>,
    last_coords: Option<[f64; 2]>,
    tile: Option<f64>,
}

impl FeedbackFollower {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir = MOVES[rng.random_range(0..4u32) as usize];
        Self {
            rng,
            dir,
            started: false,
            color: None,
            region: None,
            heard_feedback: false,
            on_candidate: false,
            leaving: false,
            rejected: HashSet::new(),
            last_coords: None,
            tile: None,
        }
    }

    fn random_dir(&mut self) -> Action {
        MOVES[self.rng.random_range(0..4u32) as usize]
    }

    fn key(p: [f64; 2]) -> (i64, i64) {
        ((p[0] * 1e6).round() as i64, (p[1] * 1e6).round() as i64)
    }

    fn neighbor_key(&self, obs: &Observation, a: Action) -> Option<(i64, i64)> {
        let step = self.tile?;
        let (dx, dy) = a.delta();
        Some(Self::key([obs.gripper[0] + dx as f64 * step, obs.gripper[1] + dy as f64 * step]))
    }

    /// Direction toward the named region, if the gripper is outside it.
    fn toward_region(&mut self, obs: &Observation) -> Option<Action> {
        let (want_col, want_row) = self.region?.cell();
        let (col, row) = cell_of(obs.gripper);
        let horizontal = match want_col.cmp(&col) {
            std::cmp::Ordering::Less => Some(Action::Left),
            std::cmp::Ordering::Greater => Some(Action::Right),
            std::cmp::Ordering::Equal => None,
        };
        let vertical = match want_row.cmp(&row) {
            std::cmp::Ordering::Less => Some(Action::Up),
            std::cmp::Ordering::Greater => Some(Action::Down),
            std::cmp::Ordering::Equal => None,
        };
        match (horizontal, vertical) {
            (Some(h), Some(v)) => Some(if self.dir == h || self.dir == v {
                self.dir
            } else if self.rng.random_bool(0.5) {
                h
            } else {
                v
            }),
            (h, v) => h.or(v),
        }
    }

    fn in_region(&self, obs: &Observation) -> bool {
        self.region.is_none_or(|r| r.cell() == cell_of(obs.gripper))
    }

    fn matches(&self, rgb: [u8; 3]) -> bool {
        match (Color::from_rgb(rgb), self.color) {
            (Some(c), Some(want)) => c == want,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }
}

impl Follower for FeedbackFollower {
    fn act(&mut self, obs: &Observation) -> Action {
        if !self.started {
            self.started = true;
            (self.color, self.region) = parse_expression(&obs.re_tokens);
        }
        if let Some(prev) = self.last_coords {
            let d = (obs.gripper[0] - prev[0]).abs().max((obs.gripper[1] - prev[1]).abs());
            if d > 0.0 && self.tile.is_none() {
                self.tile = Some(d);
            }
        }
        self.last_coords = Some(obs.gripper);

        let heard = Heard::classify(obs);
        if heard != Heard::Nothing {
            self.heard_feedback = true;
        }
        let was_candidate = std::mem::take(&mut self.on_candidate);
        match heard {
            Heard::YesPiece => return Action::Grip,
            Heard::NotPiece => {
                self.rejected.insert(Self::key(obs.gripper));
                self.leaving = true;
            }
            Heard::NotWay => {
                self.leaving = false;
                self.dir = clockwise(self.dir);
            }
            Heard::Repeat => {
                self.leaving = false;
                self.dir = self.random_dir();
            }
            Heard::YesWay | Heard::Other => self.leaving = false,
            Heard::Nothing => {
                self.leaving = false;
                if was_candidate {
                    return Action::Grip;
                }
            }
        }

        if !self.leaving && self.in_region(obs) {
            let order = [self.dir, clockwise(self.dir), clockwise(clockwise(clockwise(self.dir))), clockwise(clockwise(self.dir))];
            for a in order {
                let rgb = neighbor(&obs.view, a);
                let rejected = self.neighbor_key(obs, a).is_some_and(|k| self.rejected.contains(&k));
                if self.matches(rgb) && !rejected {
                    self.on_candidate = true;
                    return a;
                }
            }
        }

        if !self.heard_feedback {
            if let Some(a) = self.toward_region(obs) {
                self.dir = a;
            }
        }
        for _ in 0..4 {
            if neighbor(&obs.view, self.dir) != PADDING {
                break;
            }
            self.dir = clockwise(self.dir);
        }
        self.dir
    }
}

/// Named follower policies available to the evaluation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FollowerKind {
    ShortestPath,
    Feedback,
    Wait,
    Random,
}

impl FollowerKind {
    pub const ALL: [FollowerKind; 4] = [FollowerKind::ShortestPath, FollowerKind::Feedback, FollowerKind::Wait, FollowerKind::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            FollowerKind::ShortestPath => "shortest-path",
            FollowerKind::Feedback => "feedback",
            FollowerKind::Wait => "wait",
            FollowerKind::Random => "random",
        }
    }

    /// A fresh follower for `task`, seeded from the task seed.
    pub fn build(self, task: &Task) -> Result<Box<dyn Follower>, SolverError> {
        Ok(match self {
            FollowerKind::ShortestPath => Box::new(OracleFollower::new(task)?),
            FollowerKind::Feedback => Box::new(FeedbackFollower::new(task.seed)),
            FollowerKind::Wait => Box::new(WaitFollower),
            FollowerKind::Random => Box::new(RandomFollower::new(task.seed)),
        })
    }
}

impl fmt::Display for FollowerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown follower {0:?}; expected one of shortest-path, feedback, wait, random")]
pub struct ParseFollowerError(String);

impl FromStr for FollowerKind {
    type Err = ParseFollowerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "shortest-path" | "oracle" => Ok(FollowerKind::ShortestPath),
            "feedback" => Ok(FollowerKind::Feedback),
            "wait" => Ok(FollowerKind::Wait),
            "random" => Ok(FollowerKind::Random),
            _ => Err(ParseFollowerError(s.to_string())),
        }
    }
}
