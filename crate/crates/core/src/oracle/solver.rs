//! Breadth-first shortest path from the start tile to the target piece.

use std::collections::VecDeque;

use thiserror::Error;

use crate::board::Coord;
use crate::env::Action;
use crate::tasks::{Task, TaskError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("target piece is unreachable")]
    Unreachable,
}

const MOVES: [Action; 4] = [Action::Left, Action::Right, Action::Up, Action::Down];

/// Shortest movement sequence from `start` to any tile in `goals` on an open
/// `width × height` grid. Pieces do not block the gripper; only the border does.
pub fn shortest_path(width: usize, height: usize, start: Coord, goals: &[Coord]) -> Option<Vec<Action>> {
    let in_bounds = |c: Coord| c.x >= 0 && c.y >= 0 && (c.x as usize) < width && (c.y as usize) < height;
    if !in_bounds(start) {
        return None;
    }
    let idx = |c: Coord| c.y as usize * width + c.x as usize;
    let mut came_from: Vec<Option<(Coord, Action)>> = vec![None; width * height];
    let mut seen = vec![false; width * height];
    let mut queue = VecDeque::from([start]);
    seen[idx(start)] = true;
    while let Some(cur) = queue.pop_front() {
        if goals.contains(&cur) {
            let mut path = Vec::new();
            let mut at = cur;
            while let Some((prev, action)) = came_from[idx(at)] {
                path.push(action);
                at = prev;
            }
            path.reverse();
            return Some(path);
        }
        for action in MOVES {
            let (dx, dy) = action.delta();
            let next = cur.offset(dx, dy);
            if in_bounds(next) && !seen[idx(next)] {
                seen[idx(next)] = true;
                came_from[idx(next)] = Some((cur, action));
                queue.push_back(next);
            }
        }
    }
    None
}

/// Moves to the nearest target tile followed by `GRIP`.
pub fn oracle_actions(task: &Task) -> Result<Vec<Action>, SolverError> {
    let board = task.build_board()?;
    let target = board.piece(task.target_id()).ok_or(TaskError::MissingTarget(task.target))?;
    let mut path =
        shortest_path(board.width(), board.height(), board.center(), &target.tiles).ok_or(SolverError::Unreachable)?;
    path.push(Action::Grip);
    Ok(path)
}

/// Length of the shortest successful episode, counting the final grip.
pub fn shortest_episode(task: &Task) -> Result<u32, SolverError> {
    oracle_actions(task).map(|a| a.len() as u32)
}
