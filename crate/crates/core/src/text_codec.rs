//! Character vocabularies and text <-> index sequence conversion.
//!
//! A vocabulary is the sorted set of distinct Unicode scalar values of a
//! text, optionally followed by the start and end markers used to frame
//! decoder sequences.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Start-of-sequence marker (STX).
pub const SOS: char = '\u{2}';
/// End-of-sequence marker (ETX).
pub const EOS: char = '\u{3}';

/// Bijective character <-> index dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
    index_of: HashMap<char, usize>,
    has_markers: bool,
}

/// Token indices tied to the size of the vocabulary that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSequence {
    pub indices: Vec<usize>,
    pub vocab_size: usize,
}

impl IndexSequence {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

impl CharVocab {
    /// Builds the sorted, deduplicated character set of `text`. With
    /// `with_markers`, [`SOS`] and [`EOS`] are appended after the text
    /// characters.
    pub fn build(text: &str, with_markers: bool) -> Result<Self> {
        if text.is_empty() {
            return Err(Error::EmptyText);
        }
        if let Some(m) = text.chars().find(|&c| c == SOS || c == EOS) {
            return Err(Error::MarkerCollision(m));
        }
        let mut chars: Vec<char> = text.chars().collect();
        chars.sort_unstable();
        chars.dedup();
        if with_markers {
            chars.push(SOS);
            chars.push(EOS);
        }
        Ok(Self::from_parts(chars, with_markers))
    }

    /// A vocabulary holding only the two markers. Used as the encoder
    /// vocabulary of an empty ciphertext.
    pub fn markers_only() -> Self {
        Self::from_parts(vec![SOS, EOS], true)
    }

    /// Rebuilds a vocabulary from its ordered character list, checking the
    /// same invariants `build` guarantees.
    pub fn from_chars(chars: Vec<char>, has_markers: bool) -> Result<Self> {
        let body = if has_markers {
            if chars.len() < 2 || chars[chars.len() - 2..] != [SOS, EOS] {
                return Err(Error::Config("marker vocabulary must end with SOS, EOS".into()));
            }
            &chars[..chars.len() - 2]
        } else {
            &chars[..]
        };
        if body.is_empty() && !has_markers {
            return Err(Error::EmptyText);
        }
        if let Some(&m) = body.iter().find(|&&c| c == SOS || c == EOS) {
            return Err(Error::MarkerCollision(m));
        }
        if body.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("vocabulary characters must be strictly sorted".into()));
        }
        Ok(Self::from_parts(chars, has_markers))
    }

    fn from_parts(chars: Vec<char>, has_markers: bool) -> Self {
        let index_of = chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Self {
            chars,
            index_of,
            has_markers,
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn has_markers(&self) -> bool {
        self.has_markers
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.index_of.get(&c).copied()
    }

    pub fn char_at(&self, index: usize) -> Option<char> {
        self.chars.get(index).copied()
    }

    pub fn sos(&self) -> Option<usize> {
        self.has_markers.then(|| self.chars.len() - 2)
    }

    pub fn eos(&self) -> Option<usize> {
        self.has_markers.then(|| self.chars.len() - 1)
    }

    /// True for the marker indices.
    pub fn is_marker(&self, index: usize) -> bool {
        self.has_markers && index + 2 >= self.chars.len() && index < self.chars.len()
    }

    pub fn contains(&self, c: char) -> bool {
        self.index_of.contains_key(&c)
    }

    pub fn encode(&self, text: &str) -> Result<IndexSequence> {
        let indices = text
            .chars()
            .enumerate()
            .map(|(position, ch)| {
                self.index_of(ch)
                    .ok_or(Error::UnknownCharacter { position, ch })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IndexSequence {
            indices,
            vocab_size: self.len(),
        })
    }

    /// Encodes `text` framed as `SOS text EOS`. Requires markers.
    pub fn encode_framed(&self, text: &str) -> Result<IndexSequence> {
        let (sos, eos) = match (self.sos(), self.eos()) {
            (Some(s), Some(e)) => (s, e),
            _ => return Err(Error::Config("framing requires a vocabulary with markers".into())),
        };
        let mut seq = self.encode(text)?;
        seq.indices.insert(0, sos);
        seq.indices.push(eos);
        Ok(seq)
    }

    pub fn decode(&self, seq: &IndexSequence) -> Result<String> {
        seq.indices
            .iter()
            .enumerate()
            .map(|(position, &index)| {
                self.char_at(index).ok_or(Error::IndexOutOfRange {
                    position,
                    index,
                    vocab_size: self.len(),
                })
            })
            .collect()
    }
}
