//! Character-level LSTM encoder-decoder.
//!
//! One LSTM layer per side, one-hot inputs, and a dense projection onto the
//! output vocabulary. Parameters are stored as `f32`; all arithmetic runs in
//! `f64`.

mod lstm;
mod train;
mod weights;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lstm::{decode_greedy, encode, loss_and_gradients, softmax, EncoderState, Gradients};
pub use train::{train_to_target, RmsProp, TrainOutcome, Trainer, OPTIMIZER_ID};
pub use weights::{init_random, ModelWeights, ARRAY_NAMES};

pub const DEFAULT_HIDDEN_SIZE: usize = 64;
pub const REFERENCE_HIDDEN_SIZE: usize = 256;
pub const DEFAULT_MAX_DECODE_LEN: usize = 100;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-2;
pub const DEFAULT_MAX_ITERATIONS: u32 = 2000;
pub const DEFAULT_CHECK_INTERVAL: u32 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seq2SeqConfig {
    pub hidden_size: usize,
    pub input_vocab_size: usize,
    pub output_vocab_size: usize,
    pub max_decode_len: usize,
    pub learning_rate: f64,
    pub max_iterations: u32,
    pub check_interval: u32,
    pub seed: u64,
}

impl Default for Seq2SeqConfig {
    fn default() -> Self {
        Self {
            hidden_size: DEFAULT_HIDDEN_SIZE,
            input_vocab_size: 1,
            output_vocab_size: 1,
            max_decode_len: DEFAULT_MAX_DECODE_LEN,
            learning_rate: DEFAULT_LEARNING_RATE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            check_interval: DEFAULT_CHECK_INTERVAL,
            seed: 0,
        }
    }
}

impl Seq2SeqConfig {
    pub fn with_vocab_sizes(mut self, input: usize, output: usize) -> Self {
        self.input_vocab_size = input;
        self.output_vocab_size = output;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `max_iterations = 0` is accepted so a caller can ask for a check of
    /// the initial weights only.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.hidden_size == 0 {
            return bad("hidden_size must be positive");
        }
        if self.input_vocab_size == 0 || self.output_vocab_size == 0 {
            return bad("vocabulary sizes must be positive");
        }
        if self.max_decode_len == 0 {
            return bad("max_decode_len must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be a positive finite number");
        }
        if self.check_interval == 0 {
            return bad("check_interval must be positive");
        }
        if self.max_iterations > 0 && self.check_interval > self.max_iterations {
            return bad("check_interval must not exceed max_iterations");
        }
        Ok(())
    }
}
