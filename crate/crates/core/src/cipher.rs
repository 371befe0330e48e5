//! Ciphertext generation: the plaintext is encoded by a randomly weighted
//! encoder and the ciphertext is whatever the equally random decoder emits.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seq2seq::{self, Seq2SeqConfig};
use crate::text_codec::CharVocab;

pub const DEFAULT_RANDOMNESS_INDEX: u32 = 10;
pub const DEFAULT_CHARSET_ID: &str = "printable-ascii-95";
pub const SIDECAR_VERSION: u32 = 1;

/// Printable ASCII, space through tilde.
pub fn default_charset() -> String {
    (32u8..=126).map(char::from).collect()
}

pub fn sha256(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

/// Identifier recorded in sidecars. Custom charsets are named by a prefix of
/// their digest so two records can be compared without shipping the charset.
pub fn charset_id(charset: &str) -> String {
    if charset == default_charset() {
        DEFAULT_CHARSET_ID.to_string()
    } else {
        format!("custom-{}", &hex::encode(sha256(charset))[..16])
    }
}

/// A ciphertext and everything needed to regenerate it, minus the plaintext.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherRecord {
    pub ciphertext: String,
    pub plaintext_sha256: [u8; 32],
    pub seed: u64,
    pub randomness_index: u32,
    pub charset_id: String,
    pub config_snapshot: Seq2SeqConfig,
}

/// The `.obf.meta.json` sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub version: u32,
    pub seed: u64,
    pub n: u32,
    pub charset_id: String,
    pub sha256: String,
    pub max_decode_len: usize,
    pub hidden_size: usize,
}

impl CipherRecord {
    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            version: SIDECAR_VERSION,
            seed: self.seed,
            n: self.randomness_index,
            charset_id: self.charset_id.clone(),
            sha256: hex::encode(self.plaintext_sha256),
            max_decode_len: self.config_snapshot.max_decode_len,
            hidden_size: self.config_snapshot.hidden_size,
        }
    }

    /// Single-line JSON.
    pub fn sidecar_json(&self) -> String {
        serde_json::to_string(&self.sidecar()).expect("sidecar serializes")
    }

    /// Rebuilds a record from a ciphertext file and its sidecar. Vocabulary
    /// sizes are not stored and come back as derived from the ciphertext.
    pub fn from_sidecar(ciphertext: String, json: &str) -> Result<Self> {
        let meta: Sidecar = serde_json::from_str(json)?;
        if meta.version != SIDECAR_VERSION {
            return Err(Error::Config(format!("unsupported sidecar version {}", meta.version)));
        }
        let digest: [u8; 32] = hex::decode(&meta.sha256)
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| Error::Config("sidecar sha256 must be 64 hex digits".into()))?;
        let config_snapshot = Seq2SeqConfig {
            hidden_size: meta.hidden_size,
            max_decode_len: meta.max_decode_len,
            seed: meta.seed,
            ..Default::default()
        };
        Ok(Self {
            ciphertext,
            plaintext_sha256: digest,
            seed: meta.seed,
            randomness_index: meta.n,
            charset_id: meta.charset_id,
            config_snapshot,
        })
    }
}

/// Obfuscates `plaintext`.
///
/// The encoder vocabulary is the plaintext's character set; the decoder
/// vocabulary is `charset` united with the plaintext's characters, plus
/// markers. Weights come from [`seq2seq::init_random`] with `config.seed`
/// and `randomness_index`. The vocabulary sizes in `config` are ignored and
/// replaced by the derived ones in the returned snapshot.
pub fn generate_ciphertext(
    plaintext: &str,
    charset: &str,
    config: &Seq2SeqConfig,
    randomness_index: u32,
) -> Result<CipherRecord> {
    if plaintext.is_empty() {
        return Err(Error::EmptyText);
    }
    if randomness_index == 0 {
        return Err(Error::Config("randomness index must be at least 1".into()));
    }
    let charset_vocab = CharVocab::build(charset, false).map_err(|e| match e {
        Error::EmptyText => Error::CharsetTooSmall(0),
        other => other,
    })?;
    if charset_vocab.len() < 2 {
        return Err(Error::CharsetTooSmall(charset_vocab.len()));
    }
    let input_vocab = CharVocab::build(plaintext, false)?;
    let mut union = String::with_capacity(charset.len() + plaintext.len());
    union.push_str(charset);
    union.extend(input_vocab.chars());
    let output_vocab = CharVocab::build(&union, true)?;

    let snapshot = config
        .clone()
        .with_vocab_sizes(input_vocab.len(), output_vocab.len());
    snapshot.validate()?;

    let weights = seq2seq::init_random(&snapshot, randomness_index);
    let input = input_vocab.encode(plaintext)?;
    let state = seq2seq::encode(&weights, &input)?;
    let ciphertext = seq2seq::decode_greedy(&weights, &state, &output_vocab, snapshot.max_decode_len);

    Ok(CipherRecord {
        ciphertext,
        plaintext_sha256: sha256(plaintext),
        seed: snapshot.seed,
        randomness_index,
        charset_id: charset_id(charset),
        config_snapshot: snapshot,
    })
}
