use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Seq2SeqConfig;

pub const ARRAY_NAMES: [&str; 8] = [
    "enc_input_kernel",
    "enc_recurrent_kernel",
    "enc_bias",
    "dec_input_kernel",
    "dec_recurrent_kernel",
    "dec_bias",
    "proj_kernel",
    "proj_bias",
];

pub(crate) const ENC_X: usize = 0;
pub(crate) const ENC_H: usize = 1;
pub(crate) const ENC_B: usize = 2;
pub(crate) const DEC_X: usize = 3;
pub(crate) const DEC_H: usize = 4;
pub(crate) const DEC_B: usize = 5;
pub(crate) const PROJ_W: usize = 6;
pub(crate) const PROJ_B: usize = 7;

const INIT_RANGE: f32 = 0.5;

/// The full encoder-decoder parameter set.
///
/// Kernels are row-major with the gate axis last: a pre-activation is
/// `x * input_kernel + h * recurrent_kernel + bias`, gates packed as
/// (input, forget, cell candidate, output) along the `4H` axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    input_vocab: usize,
    hidden: usize,
    output_vocab: usize,
    arrays: [Vec<f32>; 8],
}

impl ModelWeights {
    pub fn zeros(input_vocab: usize, hidden: usize, output_vocab: usize) -> Self {
        let shapes = Self::shapes_for(input_vocab, hidden, output_vocab);
        Self {
            input_vocab,
            hidden,
            output_vocab,
            arrays: shapes.map(|s| vec![0.0; s.iter().product()]),
        }
    }

    pub fn for_config(config: &Seq2SeqConfig) -> Self {
        Self::zeros(
            config.input_vocab_size,
            config.hidden_size,
            config.output_vocab_size,
        )
    }

    /// Builds weights from raw arrays, checking every length.
    pub fn from_arrays(
        input_vocab: usize,
        hidden: usize,
        output_vocab: usize,
        arrays: [Vec<f32>; 8],
    ) -> Option<Self> {
        let shapes = Self::shapes_for(input_vocab, hidden, output_vocab);
        let ok = arrays
            .iter()
            .zip(shapes.iter())
            .all(|(a, s)| a.len() == s.iter().product::<usize>());
        ok.then_some(Self {
            input_vocab,
            hidden,
            output_vocab,
            arrays,
        })
    }

    fn shapes_for(v_in: usize, h: usize, v_out: usize) -> [Vec<usize>; 8] {
        [
            vec![v_in, 4 * h],
            vec![h, 4 * h],
            vec![4 * h],
            vec![v_out, 4 * h],
            vec![h, 4 * h],
            vec![4 * h],
            vec![h, v_out],
            vec![v_out],
        ]
    }

    pub fn shapes(&self) -> [Vec<usize>; 8] {
        Self::shapes_for(self.input_vocab, self.hidden, self.output_vocab)
    }

    /// First dimension of each array, in storage order.
    pub fn leading_dims(&self) -> [usize; 8] {
        self.shapes().map(|s| s[0])
    }

    pub fn param_count(&self) -> usize {
        self.arrays.iter().map(Vec::len).sum()
    }

    pub fn input_vocab(&self) -> usize {
        self.input_vocab
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn output_vocab(&self) -> usize {
        self.output_vocab
    }

    pub fn arrays(&self) -> &[Vec<f32>; 8] {
        &self.arrays
    }

    pub fn arrays_mut(&mut self) -> &mut [Vec<f32>; 8] {
        &mut self.arrays
    }

    pub fn is_finite(&self) -> bool {
        self.arrays.iter().flatten().all(|v| v.is_finite())
    }

    /// Sets the forget-gate slice of both LSTM biases.
    pub fn set_forget_bias(&mut self, value: f32) {
        let h = self.hidden;
        for idx in [ENC_B, DEC_B] {
            self.arrays[idx][h..2 * h].fill(value);
        }
    }
}

/// Draws the full weight set `randomness_index` times from a generator
/// seeded with `config.seed` and keeps the last draw. Every entry, biases
/// included, is uniform on [-0.5, 0.5].
pub fn init_random(config: &Seq2SeqConfig, randomness_index: u32) -> ModelWeights {
    debug_assert!(randomness_index >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dist = Uniform::new_inclusive(-INIT_RANGE, INIT_RANGE);
    let mut w = ModelWeights::for_config(config);
    for _ in 0..randomness_index.max(1) {
        for array in w.arrays.iter_mut() {
            for v in array.iter_mut() {
                *v = dist.sample(&mut rng);
            }
        }
    }
    w
}
