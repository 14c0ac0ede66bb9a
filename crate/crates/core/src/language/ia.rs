//! Incremental Algorithm over symbolic piece properties.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::board::{Color, PieceSymbol, Region, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PropertyKind {
    Color,
    Shape,
    Position,
}

impl PropertyKind {
    pub fn letter(self) -> char {
        match self {
            PropertyKind::Color => 'C',
            PropertyKind::Shape => 'S',
            PropertyKind::Position => 'P',
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'C' => Some(PropertyKind::Color),
            'S' => Some(PropertyKind::Shape),
            'P' => Some(PropertyKind::Position),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Property {
    Color(Color),
    Shape(Shape),
    Position(Region),
}

impl Property {
    pub fn kind(self) -> PropertyKind {
        match self {
            Property::Color(_) => PropertyKind::Color,
            Property::Shape(_) => PropertyKind::Shape,
            Property::Position(_) => PropertyKind::Position,
        }
    }

    /// The value `symbol` has for `kind`.
    pub fn of(symbol: &PieceSymbol, kind: PropertyKind) -> Property {
        match kind {
            PropertyKind::Color => Property::Color(symbol.color),
            PropertyKind::Shape => Property::Shape(symbol.shape),
            PropertyKind::Position => Property::Position(symbol.region),
        }
    }

    pub fn holds_for(self, symbol: &PieceSymbol) -> bool {
        Property::of(symbol, self.kind()) == self
    }
}

/// A permutation of color, shape and position. Only the six permutations
/// can be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PreferenceOrder([PropertyKind; 3]);

impl PreferenceOrder {
    pub const ALL: [PreferenceOrder; 6] = {
        use PropertyKind::*;
        [
            PreferenceOrder([Color, Shape, Position]),
            PreferenceOrder([Color, Position, Shape]),
            PreferenceOrder([Position, Color, Shape]),
            PreferenceOrder([Position, Shape, Color]),
            PreferenceOrder([Shape, Color, Position]),
            PreferenceOrder([Shape, Position, Color]),
        ]
    };

    pub fn new(kinds: [PropertyKind; 3]) -> Option<Self> {
        let distinct = kinds[0] != kinds[1] && kinds[1] != kinds[2] && kinds[0] != kinds[2];
        distinct.then_some(PreferenceOrder(kinds))
    }

    pub fn kinds(&self) -> [PropertyKind; 3] {
        self.0
    }

    /// Compact form, e.g. `PCS`.
    pub fn code(&self) -> String {
        self.0.iter().map(|k| k.letter()).collect()
    }
}

impl Default for PreferenceOrder {
    fn default() -> Self {
        use PropertyKind::*;
        PreferenceOrder([Position, Color, Shape])
    }
}

impl fmt::Display for PreferenceOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        write!(f, "{}-{}-{}", a.letter(), b.letter(), c.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid preference order {0:?}: expected a permutation of C, S, P such as PCS or P-C-S")]
pub struct ParseOrderError(String);

impl FromStr for PreferenceOrder {
    type Err = ParseOrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let letters: Vec<char> = s.chars().filter(|c| *c != '-').collect();
        let err = || ParseOrderError(s.to_string());
        if letters.len() != 3 {
            return Err(err());
        }
        let mut kinds = [PropertyKind::Color; 3];
        for (slot, c) in kinds.iter_mut().zip(letters) {
            *slot = PropertyKind::from_letter(c).ok_or_else(err)?;
        }
        PreferenceOrder::new(kinds).ok_or_else(err)
    }
}

impl Serialize for PreferenceOrder {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for PreferenceOrder {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Result of one run of the algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    /// Properties in the order they were added.
    pub properties: Vec<Property>,
    /// Distractors that no property ruled out.
    pub remaining: usize,
    /// No property excluded anything and all three were substituted.
    pub fallback: bool,
}

impl Selection {
    /// The loop ended with no distractor left.
    pub fn resolved(&self) -> bool {
        self.remaining == 0
    }
}

/// Run the Incremental Algorithm and report how it terminated.
pub fn incremental_algorithm(
    target: &PieceSymbol,
    distractors: &[PieceSymbol],
    order: PreferenceOrder,
) -> Selection {
    let mut remaining: Vec<&PieceSymbol> = distractors.iter().collect();
    let mut properties = Vec::with_capacity(3);
    for kind in order.kinds() {
        let prop = Property::of(target, kind);
        let before = remaining.len();
        remaining.retain(|d| prop.holds_for(d));
        if remaining.len() < before {
            properties.push(prop);
        }
    }
    let fallback = properties.is_empty();
    if fallback {
        properties = order.kinds().iter().map(|&k| Property::of(target, k)).collect();
    }
    Selection {
        properties,
        remaining: remaining.len(),
        fallback,
    }
}

/// Distinguishing properties of `target`, in preference order.
pub fn ia_select(
    target: &PieceSymbol,
    distractors: &[PieceSymbol],
    order: PreferenceOrder,
) -> Vec<Property> {
    incremental_algorithm(target, distractors, order).properties
}
