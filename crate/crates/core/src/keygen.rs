//! Key generation: train a second encoder-decoder that maps the ciphertext
//! back onto the plaintext, retrying from fresh initializations on failure.

use std::time::Instant;

use serde::Serialize;

use crate::cipher::{sha256, CipherRecord};
use crate::error::{Error, Result};
use crate::key_store::{KeyFile, FORMAT_VERSION};
use crate::runner::deobfuscate;
use crate::seq2seq::{self, Seq2SeqConfig, OPTIMIZER_ID};
use crate::text_codec::CharVocab;

pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;
const FORGET_BIAS: f32 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyGenReport {
    /// Training steps summed over all attempts.
    pub iterations_used: u32,
    pub final_loss: f64,
    pub wall_time_s: f64,
    pub attempts: u32,
    pub success: bool,
}

/// Result of a keygen run; `key` is present iff the report says success.
#[derive(Debug, Clone)]
pub struct KeyGenOutcome {
    pub key: Option<KeyFile>,
    pub report: KeyGenReport,
}

fn encoder_vocab_for(ciphertext: &str) -> Result<CharVocab> {
    if ciphertext.is_empty() {
        Ok(CharVocab::markers_only())
    } else {
        CharVocab::build(ciphertext, false)
    }
}

/// Runs the retrain loop and reports on it whether or not it converged.
///
/// Attempt `k` (from 0) initializes with seed `config.seed + k`. Every
/// attempt is a single uniform draw with the forget-gate biases set to 1.
pub fn train_key(
    plaintext: &str,
    cipher: &CipherRecord,
    config: &Seq2SeqConfig,
    max_attempts: u32,
) -> Result<KeyGenOutcome> {
    if sha256(plaintext) != cipher.plaintext_sha256 {
        return Err(Error::DigestMismatch);
    }
    if max_attempts == 0 {
        return Err(Error::Config("max_attempts must be at least 1".into()));
    }
    let encoder_vocab = encoder_vocab_for(&cipher.ciphertext)?;
    let decoder_vocab = CharVocab::build(plaintext, true)?;
    let base = Seq2SeqConfig {
        max_decode_len: plaintext.chars().count() + 1,
        ..config.clone()
    }
    .with_vocab_sizes(encoder_vocab.len(), decoder_vocab.len());
    base.validate()?;
    let input = encoder_vocab.encode(&cipher.ciphertext)?;

    let start = Instant::now();
    let mut iterations_used = 0;
    let mut last = None;
    let mut attempts = 0;
    for attempt in 0..max_attempts {
        attempts = attempt + 1;
        let attempt_cfg = base.clone().with_seed(base.seed.wrapping_add(attempt as u64));
        let mut init = seq2seq::init_random(&attempt_cfg, 1);
        init.set_forget_bias(FORGET_BIAS);
        let outcome = seq2seq::train_to_target(init, &input, plaintext, &decoder_vocab, &attempt_cfg)?;
        iterations_used += outcome.iterations_used;
        let success = outcome.success;
        last = Some(outcome);
        if success {
            break;
        }
    }
    let outcome = last.expect("at least one attempt");
    let final_loss = match outcome.final_loss {
        Some(l) => l,
        None => {
            let target = decoder_vocab.encode_framed(plaintext)?;
            seq2seq::loss_and_gradients(&outcome.weights, &input, &target)?.0
        }
    };

    let key = KeyFile {
        format_version: FORMAT_VERSION,
        config: base,
        encoder_vocab,
        decoder_vocab,
        weights: outcome.weights,
        optimizer_id: OPTIMIZER_ID.to_string(),
    };
    let success = outcome.success && verify_roundtrip(&key, &cipher.ciphertext, plaintext)?;
    let report = KeyGenReport {
        iterations_used,
        final_loss,
        wall_time_s: start.elapsed().as_secs_f64(),
        attempts,
        success,
    };
    Ok(KeyGenOutcome {
        key: success.then_some(key),
        report,
    })
}

/// Trains a key for `(plaintext, cipher)`; fails with
/// [`Error::KeyGenFailed`] when no attempt reproduces the plaintext.
pub fn generate_key(
    plaintext: &str,
    cipher: &CipherRecord,
    config: &Seq2SeqConfig,
    max_attempts: u32,
) -> Result<(KeyFile, KeyGenReport)> {
    let outcome = train_key(plaintext, cipher, config, max_attempts)?;
    match outcome.key {
        Some(key) => Ok((key, outcome.report)),
        None => Err(Error::KeyGenFailed {
            attempts: outcome.report.attempts,
        }),
    }
}

/// True iff decoding `ciphertext` with `key` gives back `plaintext` exactly.
pub fn verify_roundtrip(key: &KeyFile, ciphertext: &str, plaintext: &str) -> Result<bool> {
    Ok(deobfuscate(ciphertext, key)?.as_bytes() == plaintext.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{default_charset, generate_ciphertext};

    fn cfg(seed: u64) -> Seq2SeqConfig {
        Seq2SeqConfig {
            hidden_size: 16,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn short_program_round_trips() {
        let plain = "x=1";
        let cipher = generate_ciphertext(plain, &default_charset(), &cfg(4), 10).unwrap();
        let (key, report) = generate_key(plain, &cipher, &cfg(4), 3).unwrap();
        assert!(report.success);
        assert!(report.iterations_used <= report.attempts * 2000);
        assert!(report.final_loss >= 0.0);
        assert!(verify_roundtrip(&key, &cipher.ciphertext, plain).unwrap());
        assert_eq!(deobfuscate(&cipher.ciphertext, &key).unwrap(), plain);
    }

    #[test]
    fn digest_mismatch() {
        let cipher = generate_ciphertext("x=1", &default_charset(), &cfg(4), 10).unwrap();
        assert!(matches!(generate_key("x=2", &cipher, &cfg(4), 3), Err(Error::DigestMismatch)));
    }

    #[test]
    fn zero_iterations_fails() {
        let plain = "print('hello')";
        let cipher = generate_ciphertext(plain, &default_charset(), &cfg(4), 10).unwrap();
        let c = Seq2SeqConfig { max_iterations: 0, ..cfg(4) };
        match generate_key(plain, &cipher, &c, 1) {
            Err(Error::KeyGenFailed { attempts: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let outcome = train_key(plain, &cipher, &c, 2).unwrap();
        assert!(!outcome.report.success && outcome.key.is_none());
        assert_eq!(outcome.report.iterations_used, 0);
        assert_eq!(outcome.report.attempts, 2);
    }

    #[test]
    fn empty_ciphertext_still_keys() {
        let plain = "ok";
        let cipher = CipherRecord {
            ciphertext: String::new(),
            plaintext_sha256: sha256(plain),
            seed: 0,
            randomness_index: 10,
            charset_id: "test".into(),
            config_snapshot: cfg(0),
        };
        let (key, _) = generate_key(plain, &cipher, &cfg(0), 3).unwrap();
        assert_eq!(key.encoder_vocab, CharVocab::markers_only());
        assert!(verify_roundtrip(&key, "", plain).unwrap());
    }

    #[test]
    fn unknown_character_in_ciphertext() {
        let plain = "x=1";
        let cipher = generate_ciphertext(plain, &default_charset(), &cfg(4), 10).unwrap();
        let (key, _) = generate_key(plain, &cipher, &cfg(4), 3).unwrap();
        assert!(matches!(
            verify_roundtrip(&key, "\u{1F600}", plain),
            Err(Error::UnknownCharacter { .. })
        ));
    }

    #[test]
    fn rerun_is_bitwise_identical() {
        let plain = "a+b";
        let cipher = generate_ciphertext(plain, &default_charset(), &cfg(8), 10).unwrap();
        let (k1, _) = generate_key(plain, &cipher, &cfg(8), 3).unwrap();
        let (k2, _) = generate_key(plain, &cipher, &cfg(8), 3).unwrap();
        assert_eq!(k1.to_bytes().unwrap(), k2.to_bytes().unwrap());
    }
}
