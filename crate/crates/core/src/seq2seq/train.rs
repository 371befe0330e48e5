use crate::error::{Error, Result};
use crate::text_codec::{CharVocab, IndexSequence};

use super::lstm::{decode_greedy_params, encode_params, loss_and_gradients_params, Gradients, Params};
use super::{ModelWeights, Seq2SeqConfig};

pub const OPTIMIZER_ID: &str = "rmsprop(rho=0.9,eps=1e-7)";

const RHO: f64 = 0.9;
const EPSILON: f64 = 1e-7;

/// RMSprop with a per-parameter running mean of squared gradients.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub learning_rate: f64,
    mean_square: [Vec<f64>; 8],
}

impl RmsProp {
    pub fn new(w: &ModelWeights, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            mean_square: w.arrays().each_ref().map(|a| vec![0.0; a.len()]),
        }
    }

    fn apply(&mut self, params: &mut Params, grads: &Gradients) {
        let lr = self.learning_rate;
        for ((p, g), ms) in params
            .arrays
            .iter_mut()
            .zip(&grads.arrays)
            .zip(self.mean_square.iter_mut())
        {
            for ((pi, &gi), si) in p.iter_mut().zip(g).zip(ms.iter_mut()) {
                *si = RHO * *si + (1.0 - RHO) * gi * gi;
                *pi -= lr * gi / (si.sqrt() + EPSILON);
            }
        }
    }
}

/// Owns a model and its optimizer state for one training session.
#[derive(Debug, Clone)]
pub struct Trainer {
    weights: ModelWeights,
    optimizer: RmsProp,
}

impl Trainer {
    pub fn new(weights: ModelWeights, learning_rate: f64) -> Self {
        let optimizer = RmsProp::new(&weights, learning_rate);
        Self { weights, optimizer }
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    pub fn into_weights(self) -> ModelWeights {
        self.weights
    }

    /// One teacher-forced forward pass, one BPTT pass and one RMSprop
    /// update. Returns the loss before the update.
    pub fn train_step(&mut self, input: &IndexSequence, target: &IndexSequence) -> Result<f64> {
        let (loss, grads) = super::loss_and_gradients(&self.weights, input, target)?;
        self.apply(&grads)?;
        Ok(loss)
    }

    fn apply(&mut self, grads: &Gradients) -> Result<()> {
        let mut params = Params::from_weights(&self.weights);
        self.optimizer.apply(&mut params, grads);
        for (w, p) in self.weights.arrays_mut().iter_mut().zip(&params.arrays) {
            for (wi, &pi) in w.iter_mut().zip(p) {
                *wi = pi as f32;
            }
        }
        if !self.weights.is_finite() {
            return Err(Error::NumericalDivergence("non-finite weight after update".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: ModelWeights,
    pub iterations_used: u32,
    pub success: bool,
    /// Loss of the last completed step; `None` when no step ran.
    pub final_loss: Option<f64>,
}

/// Trains until greedy decoding of `input` reproduces `target_text`
/// exactly, checking before the first step and then every
/// `config.check_interval` steps (and after the last one).
pub fn train_to_target(
    weights: ModelWeights,
    input: &IndexSequence,
    target_text: &str,
    out_vocab: &CharVocab,
    config: &Seq2SeqConfig,
) -> Result<TrainOutcome> {
    let target = out_vocab.encode_framed(target_text)?;
    let target_len = target_text.chars().count();
    let reproduces = |w: &ModelWeights| {
        let p = Params::from_weights(w);
        let state = encode_params(&p, &input.indices);
        decode_greedy_params(&p, &state, out_vocab, target_len + 1) == target_text
    };

    if reproduces(&weights) {
        return Ok(TrainOutcome {
            weights,
            iterations_used: 0,
            success: true,
            final_loss: None,
        });
    }

    let mut trainer = Trainer::new(weights, config.learning_rate);
    let mut final_loss = None;
    for it in 1..=config.max_iterations {
        let (loss, grads) = loss_and_gradients_params(
            &Params::from_weights(&trainer.weights),
            &input.indices,
            &target.indices,
        )?;
        trainer.apply(&grads)?;
        final_loss = Some(loss);
        if (it % config.check_interval == 0 || it == config.max_iterations)
            && reproduces(&trainer.weights)
        {
            return Ok(TrainOutcome {
                weights: trainer.into_weights(),
                iterations_used: it,
                success: true,
                final_loss,
            });
        }
    }
    Ok(TrainOutcome {
        weights: trainer.into_weights(),
        iterations_used: config.max_iterations,
        success: false,
        final_loss,
    })
}
