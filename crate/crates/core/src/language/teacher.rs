//! Heuristic teacher: initial expression plus intra-episodic feedback.

use super::ia::{incremental_algorithm, PreferenceOrder};
use super::{realize, Utterance, UtteranceKind};
use super::{NOT_THIS_PIECE, NOT_THIS_WAY, YES_THIS_PIECE, YES_THIS_WAY};
use crate::board::{Board, Coord, Piece, PieceId};

/// Displacement (euclidean, in tiles) that must be exceeded to trigger direction feedback.
pub const D_DIST: i64 = 3;
/// Silent steps after which the initial expression is repeated.
pub const D_TIME: u32 = 6;

/// Referring expression for `target` against every other piece on the board.
pub fn initial_expression(board: &Board, target: PieceId, order: PreferenceOrder) -> Option<Utterance> {
    let target = board.piece(target)?;
    let distractors: Vec<_> = board
        .pieces()
        .iter()
        .filter(|p| p.id != target.id)
        .map(|p| p.symbol)
        .collect();
    let selection = incremental_algorithm(&target.symbol, &distractors, order);
    realize(&selection.properties).ok()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeacherState {
    pub order: PreferenceOrder,
    pub initial_re: Utterance,
    /// Gripper position at the last emitted feedback.
    pub anchor: Coord,
    /// Steps since the last utterance.
    pub silence: u32,
    pub feedback_enabled: bool,
}

impl TeacherState {
    pub fn new(order: PreferenceOrder, initial_re: Utterance, start: Coord, feedback_enabled: bool) -> Self {
        Self {
            order,
            initial_re,
            anchor: start,
            silence: 0,
            feedback_enabled,
        }
    }

    /// Decide this step's utterance. Call once per step, after the follower's
    /// action was applied.
    pub fn feedback(&mut self, gripper: Coord, over_piece: Option<PieceId>, target: &Piece) -> Option<Utterance> {
        if !self.feedback_enabled {
            return None;
        }
        let utterance = if let Some(id) = over_piece {
            let text = if id == target.id { YES_THIS_PIECE } else { NOT_THIS_PIECE };
            Some(Utterance::new(text, UtteranceKind::PieceFeedback))
        } else if gripper.dist_sq(self.anchor) > D_DIST * D_DIST {
            let goal = target.center();
            let closer = gripper.dist_sq(goal) < self.anchor.dist_sq(goal);
            let text = if closer { YES_THIS_WAY } else { NOT_THIS_WAY };
            Some(Utterance::new(text, UtteranceKind::DirectionFeedback))
        } else if self.silence >= D_TIME {
            Some(Utterance {
                kind: UtteranceKind::RepeatedRe,
                ..self.initial_re.clone()
            })
        } else {
            None
        };
        match &utterance {
            Some(_) => {
                self.anchor = gripper;
                self.silence = 0;
            }
            None => self.silence += 1,
        }
        utterance
    }
}
