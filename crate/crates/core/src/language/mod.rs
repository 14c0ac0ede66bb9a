//! The teacher's language: referring expressions, feedback and tokens.

mod expression;
mod ia;
mod teacher;
pub mod vocab;

use serde::{Deserialize, Serialize};

pub use expression::{realize_text, RealizeError};
pub use ia::{
    ia_select, incremental_algorithm, ParseOrderError, PreferenceOrder, Property, PropertyKind,
    Selection,
};
pub use teacher::{initial_expression, TeacherState, D_DIST, D_TIME};
pub use vocab::{detokenize, tokenize, TokenId, Tokens, MAX_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtteranceKind {
    InitialRe,
    DirectionFeedback,
    PieceFeedback,
    RepeatedRe,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    pub tokens: Tokens,
    pub kind: UtteranceKind,
}

impl Utterance {
    pub fn new(text: impl Into<String>, kind: UtteranceKind) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Self { text, tokens, kind }
    }
}

pub const YES_THIS_WAY: &str = "Yes this way";
pub const NOT_THIS_WAY: &str = "Not this way";
pub const YES_THIS_PIECE: &str = "Yes this piece";
pub const NOT_THIS_PIECE: &str = "Not this piece";

/// Realize a property set as an initial referring expression.
pub fn realize(props: &[Property]) -> Result<Utterance, RealizeError> {
    realize_text(props).map(|t| Utterance::new(t, UtteranceKind::InitialRe))
}
