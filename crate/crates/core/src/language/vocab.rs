//! Fixed 33-entry vocabulary and the length-11 tokenizer.

use std::sync::OnceLock;

use std::collections::HashMap;

pub type TokenId = u16;

/// Maximal token sequence length, including `<s>` and `<e>`.
pub const MAX_LEN: usize = 11;

pub const PAD: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;
pub const UNK: TokenId = 3;

/// Stable word list; the index is the token id.
///
/// `no` is kept as listed in the original word inventory while the feedback
/// templates use `not`; both ids exist, `no` is simply never produced.
pub const WORDS: [&str; 33] = [
    "<pad>", "<s>", "<e>", "<unk>",
    // template words
    "take", "the", "piece", "at", "yes", "no", "not", "this", "way",
    // colors
    "red", "yellow", "green", "blue", "purple", "brown",
    // shapes
    "F", "N", "P", "T", "U", "W", "X", "Y", "Z",
    // position words
    "left", "right", "top", "bottom", "center",
];

pub type Tokens = [TokenId; MAX_LEN];

fn index() -> &'static HashMap<String, TokenId> {
    static INDEX: OnceLock<HashMap<String, TokenId>> = OnceLock::new();
    INDEX.get_or_init(|| {
        WORDS
            .iter()
            .enumerate()
            .map(|(i, w)| (w.to_ascii_lowercase(), i as TokenId))
            .collect()
    })
}

pub fn vocab_size() -> usize {
    WORDS.len()
}

/// Case-insensitive lookup.
pub fn token_id(word: &str) -> Option<TokenId> {
    index().get(&word.to_ascii_lowercase()).copied()
}

pub fn word(id: TokenId) -> Option<&'static str> {
    WORDS.get(id as usize).copied()
}

/// `<s> w1 .. wn <e>` padded to [`MAX_LEN`]. The empty utterance is all padding.
/// Words beyond the length budget are dropped; no template comes close.
pub fn tokenize(text: &str) -> Tokens {
    let mut out = [PAD; MAX_LEN];
    let mut words = text.split_whitespace().peekable();
    if words.peek().is_none() {
        return out;
    }
    out[0] = BOS;
    let mut n = 1;
    for w in words.take(MAX_LEN - 2) {
        out[n] = token_id(w).unwrap_or(UNK);
        n += 1;
    }
    out[n] = EOS;
    out
}

/// Inverse of [`tokenize`] up to padding and case.
pub fn detokenize(tokens: &[TokenId]) -> String {
    tokens
        .iter()
        .filter(|&&t| !matches!(t, PAD | BOS | EOS))
        .map(|&t| word(t).unwrap_or("<unk>"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Vocabulary file body: one `id<TAB>word` line per entry.
pub fn vocab_listing() -> String {
    WORDS
        .iter()
        .enumerate()
        .map(|(i, w)| format!("{i}\t{w}\n"))
        .collect()
}
