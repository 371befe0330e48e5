//! `.dobk` key files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "DOBK" | u32 version | u32 header_len | header (UTF-8 JSON)
//!        | f32 arrays in storage order   | SHA-256 of everything before it
//! ```
//!
//! Nothing in the file is executed or interpreted beyond JSON, code points
//! and floats.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seq2seq::{ModelWeights, Seq2SeqConfig};
use crate::text_codec::{CharVocab, EOS, SOS};

pub const MAGIC: &[u8; 4] = b"DOBK";
pub const FORMAT_VERSION: u32 = 1;
const PREAMBLE_LEN: usize = 12;
const CHECKSUM_LEN: usize = 32;

/// Trained decryption key: weights plus both vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyFile {
    pub format_version: u32,
    pub config: Seq2SeqConfig,
    pub encoder_vocab: CharVocab,
    pub decoder_vocab: CharVocab,
    pub weights: ModelWeights,
    pub optimizer_id: String,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    hidden_size: usize,
    max_decode_len: usize,
    learning_rate: f64,
    max_iterations: u32,
    check_interval: u32,
    seed: u64,
    optimizer: String,
    enc_vocab: Vec<u32>,
    dec_vocab: Vec<u32>,
    shapes: Vec<Vec<usize>>,
}

fn corrupt(reason: &str) -> Error {
    Error::CorruptKey(reason.to_string())
}

fn vocab_from_code_points(points: &[u32]) -> Result<CharVocab> {
    let chars = points
        .iter()
        .map(|&p| char::from_u32(p).ok_or_else(|| corrupt("vocab")))
        .collect::<Result<Vec<_>>>()?;
    let has_markers = chars.ends_with(&[SOS, EOS]);
    CharVocab::from_chars(chars, has_markers).map_err(|_| corrupt("vocab"))
}

impl KeyFile {
    /// Checks that shapes agree with the config and vocabularies.
    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        let c = &self.config;
        let consistent = w.hidden() == c.hidden_size
            && w.input_vocab() == self.encoder_vocab.len()
            && w.output_vocab() == self.decoder_vocab.len()
            && c.input_vocab_size == self.encoder_vocab.len()
            && c.output_vocab_size == self.decoder_vocab.len();
        if !consistent {
            return Err(corrupt("shape"));
        }
        if !self.decoder_vocab.has_markers() {
            return Err(corrupt("decoder vocabulary lacks markers"));
        }
        if !w.is_finite() {
            return Err(corrupt("non-finite weight"));
        }
        Ok(())
    }

    fn header(&self) -> Header {
        let code_points = |v: &CharVocab| v.chars().iter().map(|&c| c as u32).collect();
        Header {
            version: self.format_version,
            hidden_size: self.config.hidden_size,
            max_decode_len: self.config.max_decode_len,
            learning_rate: self.config.learning_rate,
            max_iterations: self.config.max_iterations,
            check_interval: self.config.check_interval,
            seed: self.config.seed,
            optimizer: self.optimizer_id.clone(),
            enc_vocab: code_points(&self.encoder_vocab),
            dec_vocab: code_points(&self.decoder_vocab),
            shapes: self.weights.shapes().to_vec(),
        }
    }

    /// Canonical byte encoding, checksum included.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let header = serde_json::to_vec(&self.header())?;
        let header_len = u32::try_from(header.len()).map_err(|_| corrupt("header too large"))?;
        let mut out = Vec::with_capacity(
            PREAMBLE_LEN + header.len() + 4 * self.weights.param_count() + CHECKSUM_LEN,
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.format_version.to_le_bytes());
        out.extend_from_slice(&header_len.to_le_bytes());
        out.extend_from_slice(&header);
        for v in self.weights.arrays().iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn checksum(&self) -> Result<[u8; 32]> {
        let bytes = self.to_bytes()?;
        Ok(bytes[bytes.len() - CHECKSUM_LEN..].try_into().expect("32 bytes"))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < PREAMBLE_LEN {
            return Err(corrupt("truncated"));
        }
        if &bytes[..4] != MAGIC {
            return Err(corrupt("magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let header_end = PREAMBLE_LEN
            .checked_add(header_len)
            .ok_or_else(|| corrupt("truncated"))?;
        if bytes.len() < header_end + CHECKSUM_LEN {
            return Err(corrupt("truncated"));
        }
        let checksum_ok = |len: usize| {
            len >= CHECKSUM_LEN
                && Sha256::digest(&bytes[..len - CHECKSUM_LEN])[..] == bytes[len - CHECKSUM_LEN..len]
        };
        let header: Header = match serde_json::from_slice(&bytes[PREAMBLE_LEN..header_end]) {
            Ok(h) => h,
            Err(_) if !checksum_ok(bytes.len()) => return Err(corrupt("checksum")),
            Err(_) => return Err(corrupt("header")),
        };
        let floats: usize = header.shapes.iter().map(|s| s.iter().product::<usize>()).sum();
        let expected = header_end + 4 * floats + CHECKSUM_LEN;
        if bytes.len() < expected {
            return Err(corrupt("truncated"));
        }
        if bytes.len() > expected {
            return Err(corrupt("trailing bytes"));
        }
        if !checksum_ok(bytes.len()) {
            return Err(corrupt("checksum"));
        }
        if header.version != version || header.shapes.len() != 8 {
            return Err(corrupt("header"));
        }

        let encoder_vocab = vocab_from_code_points(&header.enc_vocab)?;
        let decoder_vocab = vocab_from_code_points(&header.dec_vocab)?;
        let hidden = header.hidden_size;
        let mut payload = bytes[header_end..expected - CHECKSUM_LEN]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()));
        let arrays: [Vec<f32>; 8] = std::array::from_fn(|i| {
            let n = header.shapes[i].iter().product();
            payload.by_ref().take(n).collect()
        });
        let weights = ModelWeights::from_arrays(encoder_vocab.len(), hidden, decoder_vocab.len(), arrays)
            .ok_or_else(|| corrupt("shape"))?;
        if weights.shapes().as_slice() != header.shapes.as_slice() {
            return Err(corrupt("shape"));
        }
        let key = KeyFile {
            format_version: version,
            config: Seq2SeqConfig {
                hidden_size: hidden,
                input_vocab_size: encoder_vocab.len(),
                output_vocab_size: decoder_vocab.len(),
                max_decode_len: header.max_decode_len,
                learning_rate: header.learning_rate,
                max_iterations: header.max_iterations,
                check_interval: header.check_interval,
                seed: header.seed,
            },
            encoder_vocab,
            decoder_vocab,
            weights,
            optimizer_id: header.optimizer,
        };
        key.validate()?;
        Ok(key)
    }
}

/// Writes the key through a temporary file in the target directory, syncs
/// it and renames it into place.
pub fn save_key(key: &KeyFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = key.to_bytes()?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn load_key(path: impl AsRef<Path>) -> Result<KeyFile> {
    KeyFile::from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq2seq::{init_random, OPTIMIZER_ID};

    fn sample_key() -> KeyFile {
        let encoder_vocab = CharVocab::build("k#9!", false).unwrap();
        let decoder_vocab = CharVocab::build("print(1)", true).unwrap();
        let config = Seq2SeqConfig {
            hidden_size: 5,
            seed: 3,
            ..Default::default()
        }
        .with_vocab_sizes(encoder_vocab.len(), decoder_vocab.len());
        KeyFile {
            format_version: FORMAT_VERSION,
            weights: init_random(&config, 1),
            config,
            encoder_vocab,
            decoder_vocab,
            optimizer_id: OPTIMIZER_ID.to_string(),
        }
    }

    #[test]
    fn bytes_round_trip() {
        let key = sample_key();
        let bytes = key.to_bytes().unwrap();
        assert_eq!(&bytes[..4], MAGIC);
        let back = KeyFile::from_bytes(&bytes).unwrap();
        assert_eq!(back, key);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn payload_size_is_four_bytes_per_parameter() {
        let key = sample_key();
        let bytes = key.to_bytes().unwrap();
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        assert_eq!(
            bytes.len() - PREAMBLE_LEN - header_len - CHECKSUM_LEN,
            4 * key.weights.param_count()
        );
    }

    #[test]
    fn header_field_names() {
        let bytes = sample_key().to_bytes().unwrap();
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let v: serde_json::Value = serde_json::from_slice(&bytes[12..12 + header_len]).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            [
                "check_interval", "dec_vocab", "enc_vocab", "hidden_size", "learning_rate",
                "max_decode_len", "max_iterations", "optimizer", "seed", "shapes", "version"
            ]
        );
    }

    #[test]
    fn flipped_payload_byte_is_checksum_error() {
        let mut bytes = sample_key().to_bytes().unwrap();
        let i = bytes.len() - CHECKSUM_LEN - 7;
        bytes[i] ^= 0x10;
        assert!(matches!(KeyFile::from_bytes(&bytes), Err(Error::CorruptKey(r)) if r == "checksum"));
    }

    #[test]
    fn flipped_header_byte_is_rejected() {
        let mut bytes = sample_key().to_bytes().unwrap();
        bytes[20] ^= 0x01;
        assert!(matches!(KeyFile::from_bytes(&bytes), Err(Error::CorruptKey(_))));
    }

    #[test]
    fn truncation() {
        let bytes = sample_key().to_bytes().unwrap();
        for cut in [0, 3, 11, 40, bytes.len() - 1] {
            assert!(
                matches!(KeyFile::from_bytes(&bytes[..cut]), Err(Error::CorruptKey(r)) if r == "truncated"),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn magic_and_version() {
        let mut bytes = sample_key().to_bytes().unwrap();
        bytes[0] = b'X';
        assert!(matches!(KeyFile::from_bytes(&bytes), Err(Error::CorruptKey(r)) if r == "magic"));
        let mut bytes = sample_key().to_bytes().unwrap();
        bytes[4] = 9;
        assert!(matches!(KeyFile::from_bytes(&bytes), Err(Error::UnsupportedVersion(9))));
    }

    #[test]
    fn inconsistent_key_refuses_to_serialize() {
        let mut key = sample_key();
        key.config.hidden_size = 6;
        assert!(key.to_bytes().is_err());
    }

    #[test]
    fn save_and_load_files() {
        let dir = tempfile::tempdir().unwrap();
        let key = sample_key();
        let a = dir.path().join("a.dobk");
        let b = dir.path().join("b.dobk");
        save_key(&key, &a).unwrap();
        save_key(&key, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(load_key(&a).unwrap(), key);
        assert!(matches!(load_key(dir.path().join("missing.dobk")), Err(Error::Io(_))));
    }
}
