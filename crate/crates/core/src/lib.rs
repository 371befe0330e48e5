//! Source-code obfuscation with character-level LSTM encoder-decoders.
//!
//! A plaintext program is pushed through a randomly weighted encoder-decoder
//! to get a short ciphertext ([`cipher`]). A second encoder-decoder is then
//! trained until it maps that ciphertext back onto the exact plaintext; its
//! weights and vocabularies form the key ([`keygen`], [`key_store`]). With
//! the key, the program can be recovered and run ([`runner`]). [`eval`]
//! holds the stealth and execution-cost experiments.

pub mod cipher;
pub mod cli;
pub mod error;
pub mod eval;
pub mod key_store;
pub mod keygen;
pub mod runner;
pub mod seq2seq;
pub mod text_codec;

pub use cipher::{default_charset, generate_ciphertext, CipherRecord};
pub use error::{Error, Result};
pub use key_store::{load_key, save_key, KeyFile};
pub use keygen::{generate_key, verify_roundtrip, KeyGenReport};
pub use runner::{deobfuscate, execute, ExecOptions, ExecutionResult};
pub use seq2seq::{ModelWeights, Seq2SeqConfig};
pub use text_codec::{CharVocab, IndexSequence};
