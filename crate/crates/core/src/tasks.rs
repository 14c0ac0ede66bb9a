//! Target-symbol splits and reproducible scene generation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{Board, BoardError, Color, Coord, PieceId, PieceSymbol, Region, Rotation, Shape};

/// Seed used for every published artifact unless overridden.
pub const DEFAULT_SEED: u64 = 49184;
/// Task file format version, recorded in the manifest.
pub const FORMAT_VERSION: u32 = 1;

const PLACEMENT_ATTEMPTS: usize = 100;
const PIECE_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("piece {index} cannot be placed: {source}")]
    Placement { index: usize, source: BoardError },
    #[error("target index {0} does not name a piece")]
    MissingTarget(usize),
    #[error("task has no pieces")]
    Empty,
    #[error("map size {0} is too small")]
    MapSize(usize),
    #[error("could not complete the scene after {0} piece re-samples")]
    GenerationFailure(usize),
}

pub fn enumerate_symbols() -> Vec<PieceSymbol> {
    let mut out = Vec::with_capacity(432);
    for &shape in Shape::ALL {
        for &color in Color::ALL {
            for &region in Region::ALL {
                out.push(PieceSymbol::new(shape, color, region));
            }
        }
    }
    out
}

/// Placement of one piece in a task file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PieceSpec {
    #[serde(flatten)]
    pub symbol: PieceSymbol,
    pub anchor: Coord,
    pub rotation: Rotation,
}

impl PieceSpec {
    pub fn new(symbol: PieceSymbol, anchor: Coord, rotation: Rotation) -> Self {
        Self { symbol, anchor, rotation }
    }
}

/// A scene plus its target. Piece ids are list indices; the generator always
/// places the target first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub map_size: usize,
    pub pieces: Vec<PieceSpec>,
    pub target: usize,
    pub seed: u64,
}

impl Task {
    pub fn target_id(&self) -> PieceId {
        PieceId(self.target as u16)
    }

    pub fn target_symbol(&self) -> Option<PieceSymbol> {
        self.pieces.get(self.target).map(|p| p.symbol)
    }

    pub fn build_board(&self) -> Result<Board, TaskError> {
        if self.pieces.is_empty() {
            return Err(TaskError::Empty);
        }
        if self.target >= self.pieces.len() {
            return Err(TaskError::MissingTarget(self.target));
        }
        let mut board = Board::new(self.map_size, self.map_size);
        for (index, p) in self.pieces.iter().enumerate() {
            board
                .place_piece(p.symbol, p.anchor, p.rotation)
                .map_err(|source| TaskError::Placement { index, source })?;
        }
        Ok(board)
    }

    /// Regenerate a scene from its defining parameters.
    pub fn generate(
        id: impl Into<String>,
        symbol: PieceSymbol,
        map_size: usize,
        n_pieces: usize,
        seed: u64,
    ) -> Result<Task, TaskError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pieces = generate_scene(symbol, map_size, n_pieces, &mut rng)?;
        Ok(Task {
            id: id.into(),
            map_size,
            pieces,
            target: 0,
            seed,
        })
    }
}

fn try_place<R: Rng>(board: &mut Board, symbol: PieceSymbol, rng: &mut R) -> Option<PieceSpec> {
    let ((x0, x1), (y0, y1)) = symbol.region.bounds(board.width(), board.height());
    for _ in 0..PLACEMENT_ATTEMPTS {
        let rotation = Rotation::ALL[rng.random_range(0..4u32) as usize];
        let center = Coord::new(rng.random_range(x0..=x1), rng.random_range(y0..=y1));
        let anchor = center.offset(-2, -2);
        if board.place_piece(symbol, anchor, rotation).is_ok() {
            return Some(PieceSpec::new(symbol, anchor, rotation));
        }
    }
    None
}

/// Place the target, then uniformly sampled distractors, each inside the
/// region its symbol names.
pub fn generate_scene<R: Rng>(
    target: PieceSymbol,
    map_size: usize,
    n_pieces: usize,
    rng: &mut R,
) -> Result<Vec<PieceSpec>, TaskError> {
    if n_pieces == 0 {
        return Err(TaskError::Empty);
    }
    if map_size < 9 {
        return Err(TaskError::MapSize(map_size));
    }
    let all = enumerate_symbols();
    let mut board = Board::new(map_size, map_size);
    let mut pieces = Vec::with_capacity(n_pieces);
    let mut symbol = target;
    let mut resamples = 0;
    while pieces.len() < n_pieces {
        match try_place(&mut board, symbol, rng) {
            Some(spec) => {
                pieces.push(spec);
                symbol = all[rng.random_range(0..all.len() as u32) as usize];
            }
            None => {
                resamples += 1;
                if resamples > PIECE_RESAMPLES || pieces.is_empty() {
                    return Err(TaskError::GenerationFailure(resamples));
                }
                symbol = all[rng.random_range(0..all.len() as u32) as usize];
            }
        }
    }
    Ok(pieces)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
    Holdout,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Holdout];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Holdout => "holdout",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSplits {
    pub train: Vec<PieceSymbol>,
    pub val: Vec<PieceSymbol>,
    pub test: Vec<PieceSymbol>,
    pub holdout: Vec<PieceSymbol>,
}

impl SymbolSplits {
    pub fn get(&self, split: Split) -> &[PieceSymbol] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
            Split::Holdout => &self.holdout,
        }
    }
}

/// True when `symbols` mention every shape, color and region at least once.
pub fn covers_all_attributes(symbols: &[PieceSymbol]) -> bool {
    let shapes: BTreeSet<_> = symbols.iter().map(|s| s.shape).collect();
    let colors: BTreeSet<_> = symbols.iter().map(|s| s.color).collect();
    let regions: BTreeSet<_> = symbols.iter().map(|s| s.region).collect();
    shapes.len() == Shape::ALL.len() && colors.len() == Color::ALL.len() && regions.len() == Region::ALL.len()
}

/// Hold out one color per shape (in all regions), then partition the rest
/// 275 / 25 / 60, re-shuffling until each part covers every attribute.
pub fn make_splits(seed: u64) -> SymbolSplits {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let held: Vec<(Shape, Color)> = Shape::ALL
        .iter()
        .map(|&s| (s, Color::ALL[rng.random_range(0..Color::ALL.len() as u32) as usize]))
        .collect();
    let (holdout, mut rest): (Vec<_>, Vec<_>) = enumerate_symbols()
        .into_iter()
        .partition(|s| held.contains(&(s.shape, s.color)));
    loop {
        rest.shuffle(&mut rng);
        let (train, tail) = rest.split_at(275);
        let (val, test) = tail.split_at(25);
        if [train, val, test].iter().all(|part| covers_all_attributes(part)) {
            let sorted = |v: &[PieceSymbol]| {
                let mut v = v.to_vec();
                v.sort();
                v
            };
            return SymbolSplits {
                train: sorted(train),
                val: sorted(val),
                test: sorted(test),
                holdout,
            };
        }
    }
}

/// One homogeneous group of tasks: same split, map size and piece count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSet {
    pub split: Split,
    pub map_size: usize,
    pub n_pieces: usize,
    pub tasks: Vec<Task>,
}

impl TaskSet {
    pub fn name(&self) -> String {
        set_name(self.split, self.map_size, self.n_pieces)
    }
}

pub fn set_name(split: Split, map_size: usize, n_pieces: usize) -> String {
    format!("{split}-{map_size}-{n_pieces}p")
}

/// Task-set layout: `(split, map size, piece count, task count)`.
pub const BENCHMARK_LAYOUT: [(Split, usize, usize, usize); 12] = [
    (Split::Train, 20, 4, 1650),
    (Split::Train, 20, 8, 1650),
    (Split::Val, 20, 4, 150),
    (Split::Val, 20, 8, 150),
    (Split::Test, 20, 4, 360),
    (Split::Test, 20, 8, 360),
    (Split::Test, 30, 4, 180),
    (Split::Test, 30, 8, 180),
    (Split::Test, 30, 12, 180),
    (Split::Test, 30, 18, 180),
    (Split::Holdout, 20, 4, 432),
    (Split::Holdout, 20, 8, 432),
];

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-task seed, independent of generation order so sets can be built in parallel.
pub fn task_seed(base: u64, set: &str, index: usize) -> u64 {
    // FNV-1a over the set name
    let salt = set
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    splitmix64(splitmix64(base ^ salt).wrapping_add(index as u64))
}

/// Tasks for one set, cycling the split's symbols in order.
pub fn build_task_set(
    symbols: &[PieceSymbol],
    split: Split,
    map_size: usize,
    n_pieces: usize,
    count: usize,
    seed: u64,
) -> Result<TaskSet, TaskError> {
    let name = set_name(split, map_size, n_pieces);
    let tasks = (0..count)
        .into_par_iter()
        .map(|i| {
            let symbol = symbols[i % symbols.len()];
            Task::generate(format!("{name}-{i:04}"), symbol, map_size, n_pieces, task_seed(seed, &name, i))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TaskSet {
        split,
        map_size,
        n_pieces,
        tasks,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Benchmark {
    pub seed: u64,
    pub splits: SymbolSplits,
    pub sets: Vec<TaskSet>,
}

impl Benchmark {
    /// Tasks matching `selector`, in set order.
    pub fn select(&self, selector: &TaskSelector) -> Vec<Task> {
        self.sets
            .iter()
            .filter(|s| selector.matches(s))
            .flat_map(|s| s.tasks.iter().cloned())
            .collect()
    }

    pub fn count(&self, selector: &TaskSelector) -> usize {
        self.sets.iter().filter(|s| selector.matches(s)).map(|s| s.tasks.len()).sum()
    }
}

pub fn build_benchmark(splits: &SymbolSplits, seed: u64) -> Result<Benchmark, TaskError> {
    let sets = BENCHMARK_LAYOUT
        .iter()
        .map(|&(split, size, n, count)| build_task_set(splits.get(split), split, size, n, count, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Benchmark {
        seed,
        splits: splits.clone(),
        sets,
    })
}

/// Picks task sets by split and optionally by map size and piece count,
/// written like `test20`, `test30-18p` or `holdout`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSelector {
    pub split: Split,
    pub map_size: Option<usize>,
    pub n_pieces: Option<usize>,
}

impl TaskSelector {
    pub fn new(split: Split) -> Self {
        Self {
            split,
            map_size: None,
            n_pieces: None,
        }
    }

    pub fn matches(&self, set: &TaskSet) -> bool {
        set.split == self.split
            && self.map_size.is_none_or(|m| m == set.map_size)
            && self.n_pieces.is_none_or(|n| n == set.n_pieces)
    }
}

impl fmt::Display for TaskSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.split)?;
        if let Some(m) = self.map_size {
            write!(f, "{m}")?;
        }
        if let Some(n) = self.n_pieces {
            write!(f, "-{n}p")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid task selector {0:?}: expected e.g. train, val, test20, test30-18p, holdout")]
pub struct ParseSelectorError(String);

impl FromStr for TaskSelector {
    type Err = ParseSelectorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseSelectorError(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let (head, pieces) = match lower.split_once('-') {
            Some((h, p)) => {
                let n = p.strip_suffix('p').ok_or_else(err)?.parse().map_err(|_| err())?;
                (h, Some(n))
            }
            None => (lower.as_str(), None),
        };
        let digits = head.find(|c: char| c.is_ascii_digit()).unwrap_or(head.len());
        let (name, size) = head.split_at(digits);
        let split = match name {
            "train" | "training" => Split::Train,
            "val" | "validation" => Split::Val,
            "test" | "testing" => Split::Test,
            "holdout" => Split::Holdout,
            _ => return Err(err()),
        };
        let map_size = if size.is_empty() { None } else { Some(size.parse().map_err(|_| err())?) };
        Ok(TaskSelector {
            split,
            map_size,
            n_pieces: pieces,
        })
    }
}
