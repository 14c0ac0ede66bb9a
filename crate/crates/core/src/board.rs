//! Board geometry, pentomino pieces, gripper state and rendering.
//!
//! The board is a `width × height` grid of tiles. A tile is either empty or
//! holds the id of the piece occupying it. Pieces are pentominoes drawn inside
//! a virtual 5×5 box whose top-left corner is the piece *anchor*; the box
//! center (`anchor + (2, 2)`) is always one of the piece's own tiles.
//!
//! Rendering produces an RGB [`Frame`] with one pixel per tile, row-major,
//! 8 bits per channel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Side length of the agent's partial view.
pub const VIEW_SIZE: usize = 11;

pub const BACKGROUND: [u8; 3] = [255, 255, 255];
pub const PADDING: [u8; 3] = [0, 0, 0];
/// Gripper trail, newest first: current position, `t-1`, `t-2`.
pub const TRAIL: [[u8; 3]; 3] = [[200, 200, 200], [150, 150, 150], [100, 100, 100]];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoardError {
    #[error("piece {shape} at {anchor} rotated {rotation} overlaps another piece or leaves the board")]
    PlacementConflict {
        shape: Shape,
        anchor: Coord,
        rotation: Rotation,
    },
    #[error("piece center {0} lies in the central region")]
    CenterRegion(Coord),
    #[error("coordinate {0} is outside the board")]
    OutOfBounds(Coord),
    #[error("invalid {kind}: {value:?}")]
    Parse { kind: &'static str, value: String },
}

/// A tile coordinate. `x` grows to the right, `y` grows downwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub x: i32,
    pub y: i32,
}

impl Coord {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub const fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    /// Squared euclidean distance; exact, so threshold tests never round.
    pub fn dist_sq(self, other: Coord) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }

    pub fn manhattan(self, other: Coord) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

macro_rules! string_enum {
    ($name:ident, $kind:literal, [$($variant:ident => $text:literal),+ $(,)?]) => {
        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = BoardError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
                    .ok_or_else(|| BoardError::Parse { kind: $kind, value: s.to_string() })
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

/// The nine pentomino shapes. Variants are declared in alphabetical order,
/// which is also their `Ord`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    F,
    N,
    P,
    T,
    U,
    W,
    X,
    Y,
    Z,
}

string_enum!(Shape, "shape", [
    F => "F", N => "N", P => "P", T => "T", U => "U",
    W => "W", X => "X", Y => "Y", Z => "Z",
]);

impl Shape {
    /// Canonical mask inside the 5×5 box; every mask covers the box center.
    fn mask(self) -> [&'static str; 5] {
        match self {
            Shape::F => [".....", "..##.", ".##..", "..#..", "....."],
            Shape::N => ["..#..", "..#..", ".##..", ".#...", "....."],
            Shape::P => [".....", ".##..", ".##..", ".#...", "....."],
            Shape::T => [".....", ".###.", "..#..", "..#..", "....."],
            Shape::U => [".....", ".#.#.", ".###.", ".....", "....."],
            Shape::W => [".....", ".#...", ".##..", "..##.", "....."],
            Shape::X => [".....", "..#..", ".###.", "..#..", "....."],
            Shape::Y => ["..#..", ".##..", "..#..", "..#..", "....."],
            Shape::Z => [".....", ".##..", "..#..", "..##.", "....."],
        }
    }

    /// Tile offsets relative to the anchor (box top-left) after rotating the
    /// mask clockwise about the box center.
    pub fn offsets(self, rotation: Rotation) -> [Coord; 5] {
        let mut out = [Coord::new(0, 0); 5];
        let mut n = 0;
        for (y, row) in self.mask().iter().enumerate() {
            for (x, c) in row.bytes().enumerate() {
                if c == b'#' {
                    let (mut x, mut y) = (x as i32, y as i32);
                    for _ in 0..rotation.quarter_turns() {
                        (x, y) = (4 - y, x);
                    }
                    out[n] = Coord::new(x, y);
                    n += 1;
                }
            }
        }
        debug_assert_eq!(n, 5);
        out.sort();
        out
    }
}

/// Piece colors. Declared alphabetically; the RGB values are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Blue,
    Brown,
    Green,
    Purple,
    Red,
    Yellow,
}

string_enum!(Color, "color", [
    Blue => "blue", Brown => "brown", Green => "green",
    Purple => "purple", Red => "red", Yellow => "yellow",
]);

impl Color {
    pub const fn rgb(self) -> [u8; 3] {
        match self {
            Color::Red => [255, 0, 0],
            Color::Yellow => [255, 255, 0],
            Color::Green => [0, 128, 0],
            Color::Blue => [0, 0, 255],
            Color::Purple => [128, 0, 128],
            Color::Brown => [139, 69, 19],
        }
    }

    pub fn from_rgb(rgb: [u8; 3]) -> Option<Color> {
        Color::ALL.iter().copied().find(|c| c.rgb() == rgb)
    }
}

/// The eight named board areas. The middle ninth of the board has no name
/// and never holds a piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    BottomCenter,
    BottomLeft,
    BottomRight,
    LeftCenter,
    RightCenter,
    TopCenter,
    TopLeft,
    TopRight,
}

string_enum!(Region, "region", [
    BottomCenter => "bottom center", BottomLeft => "bottom left",
    BottomRight => "bottom right", LeftCenter => "left center",
    RightCenter => "right center", TopCenter => "top center",
    TopLeft => "top left", TopRight => "top right",
]);

impl Region {
    /// Cell of the 3×3 partition as `(column, row)`, each in `0..3`.
    pub const fn cell(self) -> (u8, u8) {
        match self {
            Region::TopLeft => (0, 0),
            Region::TopCenter => (1, 0),
            Region::TopRight => (2, 0),
            Region::LeftCenter => (0, 1),
            Region::RightCenter => (2, 1),
            Region::BottomLeft => (0, 2),
            Region::BottomCenter => (1, 2),
            Region::BottomRight => (2, 2),
        }
    }

    pub fn from_cell(col: u8, row: u8) -> Option<Region> {
        Region::ALL.iter().copied().find(|r| r.cell() == (col, row))
    }

    /// Region containing `center`, or `None` for the middle ninth and for
    /// coordinates off the board.
    pub fn at(center: Coord, width: usize, height: usize) -> Option<Region> {
        let col = third(center.x, width)?;
        let row = third(center.y, height)?;
        Region::from_cell(col, row)
    }

    /// Inclusive coordinate range of this region along x and y.
    pub fn bounds(self, width: usize, height: usize) -> ((i32, i32), (i32, i32)) {
        let (col, row) = self.cell();
        (third_range(col, width), third_range(row, height))
    }
}

fn third(v: i32, extent: usize) -> Option<u8> {
    if v < 0 || v as usize >= extent {
        return None;
    }
    Some((3 * v as usize / extent) as u8)
}

fn third_range(index: u8, extent: usize) -> (i32, i32) {
    let lo = (0..extent).find(|&v| 3 * v / extent == index as usize).unwrap_or(0);
    let hi = (0..extent).rev().find(|&v| 3 * v / extent == index as usize).unwrap_or(0);
    (lo as i32, hi as i32)
}

/// Rotation of a piece in quarter turns, clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub const fn quarter_turns(self) -> u8 {
        self as u8
    }

    pub const fn degrees(self) -> u16 {
        self as u16 * 90
    }

    pub fn from_degrees(deg: u16) -> Option<Rotation> {
        match deg {
            0 => Some(Rotation::R0),
            90 => Some(Rotation::R90),
            180 => Some(Rotation::R180),
            270 => Some(Rotation::R270),
            _ => None,
        }
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.degrees())
    }
}

impl Serialize for Rotation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u16(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let deg = u16::deserialize(deserializer)?;
        Rotation::from_degrees(deg)
            .ok_or_else(|| serde::de::Error::custom(format!("rotation must be a multiple of 90, got {deg}")))
    }
}

/// Symbolic description of a piece. Rotation is deliberately not part of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PieceSymbol {
    pub shape: Shape,
    pub color: Color,
    pub region: Region,
}

impl PieceSymbol {
    pub const fn new(shape: Shape, color: Color, region: Region) -> Self {
        Self { shape, color, region }
    }
}

impl fmt::Display for PieceSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} at {}", self.color, self.shape, self.region)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PieceId(pub u16);

impl fmt::Display for PieceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub id: PieceId,
    pub symbol: PieceSymbol,
    pub anchor: Coord,
    pub rotation: Rotation,
    pub tiles: [Coord; 5],
}

impl Piece {
    /// Center of the piece's 5×5 box.
    pub fn center(&self) -> Coord {
        self.anchor.offset(2, 2)
    }

    pub fn covers(&self, pos: Coord) -> bool {
        self.tiles.contains(&pos)
    }
}

fn piece_tiles(shape: Shape, anchor: Coord, rotation: Rotation) -> [Coord; 5] {
    shape.offsets(rotation).map(|o| anchor.offset(o.x, o.y))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Board {
    width: usize,
    height: usize,
    tiles: Vec<Option<PieceId>>,
    pieces: Vec<Piece>,
}

impl Board {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            tiles: vec![None; width * height],
            pieces: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Board center, where the gripper starts.
    pub fn center(&self) -> Coord {
        Coord::new((self.width / 2) as i32, (self.height / 2) as i32)
    }

    pub fn contains(&self, pos: Coord) -> bool {
        pos.x >= 0 && pos.y >= 0 && (pos.x as usize) < self.width && (pos.y as usize) < self.height
    }

    fn index(&self, pos: Coord) -> usize {
        pos.y as usize * self.width + pos.x as usize
    }

    /// Piece occupying `pos`, if any. Off-board coordinates are empty.
    pub fn piece_at(&self, pos: Coord) -> Option<PieceId> {
        if !self.contains(pos) {
            return None;
        }
        self.tiles[self.index(pos)]
    }

    pub fn piece(&self, id: PieceId) -> Option<&Piece> {
        self.pieces.get(id.0 as usize)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn occupied_tiles(&self) -> usize {
        self.tiles.iter().filter(|t| t.is_some()).count()
    }

    pub fn can_place(&self, shape: Shape, anchor: Coord, rotation: Rotation) -> bool {
        piece_tiles(shape, anchor, rotation)
            .iter()
            .all(|&t| self.contains(t) && self.tiles[self.index(t)].is_none())
    }

    pub fn place_piece(
        &mut self,
        symbol: PieceSymbol,
        anchor: Coord,
        rotation: Rotation,
    ) -> Result<PieceId, BoardError> {
        if !self.can_place(symbol.shape, anchor, rotation) {
            return Err(BoardError::PlacementConflict {
                shape: symbol.shape,
                anchor,
                rotation,
            });
        }
        let id = PieceId(self.pieces.len() as u16);
        let tiles = piece_tiles(symbol.shape, anchor, rotation);
        for &t in &tiles {
            let i = self.index(t);
            self.tiles[i] = Some(id);
        }
        self.pieces.push(Piece {
            id,
            symbol,
            anchor,
            rotation,
            tiles,
        });
        Ok(id)
    }

    pub fn region_of(&self, piece: &Piece) -> Result<Region, BoardError> {
        region_of(piece, self.width, self.height)
    }
}

pub fn region_of(piece: &Piece, width: usize, height: usize) -> Result<Region, BoardError> {
    let center = piece.center();
    if third(center.x, width).is_none() || third(center.y, height).is_none() {
        return Err(BoardError::OutOfBounds(center));
    }
    Region::at(center, width, height).ok_or(BoardError::CenterRegion(center))
}

/// Gripper position plus the two positions before it, newest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GripperState {
    pub position: Coord,
    pub history: [Option<Coord>; 2],
}

impl GripperState {
    pub fn new(position: Coord) -> Self {
        Self {
            position,
            history: [None, None],
        }
    }

    /// Record one time step ending at `next`. Called for every step, moving or not.
    pub fn advance(&mut self, next: Coord) {
        self.history = [Some(self.position), self.history[0]];
        self.position = next;
    }
}

/// Row-major RGB image, 8 bits per channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn rows(&self) -> Vec<Vec<[u8; 3]>> {
        (0..self.height)
            .map(|y| (0..self.width).map(|x| self.get(x, y)).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[u8; 3]>]) -> Option<Frame> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return None;
        }
        let data = rows.iter().flatten().flatten().copied().collect();
        Some(Frame { width, height, data })
    }
}

// Frames cross the wire as nested integer rows: [[[r,g,b], ...], ...].
impl Serialize for Frame {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Frame {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<[u8; 3]>>::deserialize(deserializer)?;
        Frame::from_rows(&rows).ok_or_else(|| serde::de::Error::custom("ragged frame rows"))
    }
}

/// Pieces only, no gripper.
pub fn render_pieces(board: &Board) -> Frame {
    let mut frame = Frame::filled(board.width, board.height, BACKGROUND);
    for piece in &board.pieces {
        let rgb = piece.symbol.color.rgb();
        for t in &piece.tiles {
            frame.set(t.x as usize, t.y as usize, rgb);
        }
    }
    frame
}

/// Overdraw the gripper trail, oldest first so the current position wins.
pub fn draw_gripper(frame: &mut Frame, gripper: &GripperState) {
    let trail = [gripper.history[1], gripper.history[0], Some(gripper.position)];
    for (pos, rgb) in trail.iter().zip(TRAIL.iter().rev()) {
        if let Some(p) = pos {
            frame.set(p.x as usize, p.y as usize, *rgb);
        }
    }
}

pub fn render(board: &Board, gripper: &GripperState) -> Frame {
    let mut frame = render_pieces(board);
    draw_gripper(&mut frame, gripper);
    frame
}

/// 11×11 crop centered on `center`; cells off the image are black.
pub fn extract_view(image: &Frame, center: Coord) -> Frame {
    let half = (VIEW_SIZE / 2) as i32;
    let mut view = Frame::filled(VIEW_SIZE, VIEW_SIZE, PADDING);
    for vy in 0..VIEW_SIZE {
        let y = center.y - half + vy as i32;
        if y < 0 || y as usize >= image.height {
            continue;
        }
        for vx in 0..VIEW_SIZE {
            let x = center.x - half + vx as i32;
            if x < 0 || x as usize >= image.width {
                continue;
            }
            view.set(vx, vy, image.get(x as usize, y as usize));
        }
    }
    view
}

/// Map a tile coordinate into `[-1, 1]²` with the board center at the origin.
pub fn project_coords(pos: Coord, width: usize, height: usize) -> (f64, f64) {
    (
        2.0 * pos.x as f64 / width as f64 - 1.0,
        2.0 * pos.y as f64 / height as f64 - 1.0,
    )
}
