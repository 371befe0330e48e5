use crate::error::{Error, Result};
use crate::text_codec::{CharVocab, IndexSequence};

use super::weights::{ModelWeights, DEC_B, DEC_H, DEC_X, ENC_B, ENC_H, ENC_X, PROJ_B, PROJ_W};

/// Final carry of the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl EncoderState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            hidden: vec![0.0; hidden],
            cell: vec![0.0; hidden],
        }
    }
}

/// Loss gradients, one `f64` array per weight array in storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub arrays: [Vec<f64>; 8],
}

impl Gradients {
    fn zeros_like(p: &Params) -> Self {
        Self {
            arrays: p.arrays.each_ref().map(|a| vec![0.0; a.len()]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.arrays.iter().flatten().all(|v| v.is_finite())
    }

    pub fn global_norm(&self) -> f64 {
        self.arrays.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// `f64` working copy of the weights.
pub(crate) struct Params {
    pub(crate) hidden: usize,
    pub(crate) output_vocab: usize,
    pub(crate) arrays: [Vec<f64>; 8],
}

impl Params {
    pub(crate) fn from_weights(w: &ModelWeights) -> Self {
        Self {
            hidden: w.hidden(),
            output_vocab: w.output_vocab(),
            arrays: w
                .arrays()
                .each_ref()
                .map(|a| a.iter().map(|&v| v as f64).collect()),
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four fixed lanes; the summation order is part of the determinism
    // contract, so do not reorder.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let j = c * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in chunks * 4..a.len() {
        s += a[j] * b[j];
    }
    s
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    out
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Kernel views for one side of the model.
struct Side<'a> {
    input_kernel: &'a [f64],
    recurrent_kernel: &'a [f64],
    bias: &'a [f64],
}

impl<'a> Side<'a> {
    fn encoder(p: &'a Params) -> Self {
        Self {
            input_kernel: &p.arrays[ENC_X],
            recurrent_kernel: &p.arrays[ENC_H],
            bias: &p.arrays[ENC_B],
        }
    }

    fn decoder(p: &'a Params) -> Self {
        Self {
            input_kernel: &p.arrays[DEC_X],
            recurrent_kernel: &p.arrays[DEC_H],
            bias: &p.arrays[DEC_B],
        }
    }

    /// One recurrence step. `z` receives the activated gates (i, f, g, o);
    /// `h` and `c` are updated in place.
    fn step(&self, x: usize, h: &mut [f64], c: &mut [f64], z: &mut [f64]) {
        let hd = h.len();
        let g4 = 4 * hd;
        z.copy_from_slice(self.bias);
        axpy(z, 1.0, &self.input_kernel[x * g4..(x + 1) * g4]);
        for (k, &hk) in h.iter().enumerate() {
            if hk != 0.0 {
                axpy(z, hk, &self.recurrent_kernel[k * g4..(k + 1) * g4]);
            }
        }
        for j in 0..hd {
            let i = sigmoid(z[j]);
            let f = sigmoid(z[hd + j]);
            let g = z[2 * hd + j].tanh();
            let o = sigmoid(z[3 * hd + j]);
            z[j] = i;
            z[hd + j] = f;
            z[2 * hd + j] = g;
            z[3 * hd + j] = o;
            c[j] = f * c[j] + i * g;
            h[j] = o * c[j].tanh();
        }
    }
}

/// Per-step record of one LSTM side for backpropagation.
struct Tape {
    hidden: usize,
    inputs: Vec<usize>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: Vec<f64>,
    cell: Vec<f64>,
    h_out: Vec<f64>,
}

impl Tape {
    fn with_capacity(hidden: usize, steps: usize) -> Self {
        Self {
            hidden,
            inputs: Vec::with_capacity(steps),
            h_prev: Vec::with_capacity(steps * hidden),
            c_prev: Vec::with_capacity(steps * hidden),
            gates: Vec::with_capacity(steps * 4 * hidden),
            cell: Vec::with_capacity(steps * hidden),
            h_out: Vec::with_capacity(steps * hidden),
        }
    }

    fn run(&mut self, side: &Side, inputs: &[usize], h: &mut [f64], c: &mut [f64]) {
        let mut z = vec![0.0; 4 * self.hidden];
        for &x in inputs {
            self.inputs.push(x);
            self.h_prev.extend_from_slice(h);
            self.c_prev.extend_from_slice(c);
            side.step(x, h, c, &mut z);
            self.gates.extend_from_slice(&z);
            self.cell.extend_from_slice(c);
            self.h_out.extend_from_slice(h);
        }
    }

    fn h_at(&self, t: usize) -> &[f64] {
        &self.h_out[t * self.hidden..(t + 1) * self.hidden]
    }

    /// Backpropagates through every recorded step. `dh_steps`, when given,
    /// holds extra gradient flowing into each step's hidden output.
    /// Returns the gradient with respect to the initial (h, c).
    fn backward(
        &self,
        side: &Side,
        dh_steps: Option<&[f64]>,
        mut dh: Vec<f64>,
        mut dc: Vec<f64>,
        grad_x: &mut [f64],
        grad_h: &mut [f64],
        grad_b: &mut [f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let hd = self.hidden;
        let g4 = 4 * hd;
        let mut dz = vec![0.0; g4];
        let mut dh_prev = vec![0.0; hd];
        for t in (0..self.inputs.len()).rev() {
            if let Some(extra) = dh_steps {
                axpy(&mut dh, 1.0, &extra[t * hd..(t + 1) * hd]);
            }
            let gates = &self.gates[t * g4..(t + 1) * g4];
            let cell = &self.cell[t * hd..(t + 1) * hd];
            let c_prev = &self.c_prev[t * hd..(t + 1) * hd];
            for j in 0..hd {
                let (i, f, g, o) = (gates[j], gates[hd + j], gates[2 * hd + j], gates[3 * hd + j]);
                let tc = cell[j].tanh();
                let d_o = dh[j] * tc;
                let dcell = dc[j] + dh[j] * o * (1.0 - tc * tc);
                dz[j] = dcell * g * i * (1.0 - i);
                dz[hd + j] = dcell * c_prev[j] * f * (1.0 - f);
                dz[2 * hd + j] = dcell * i * (1.0 - g * g);
                dz[3 * hd + j] = d_o * o * (1.0 - o);
                dc[j] = dcell * f;
            }
            let x = self.inputs[t];
            axpy(&mut grad_x[x * g4..(x + 1) * g4], 1.0, &dz);
            axpy(grad_b, 1.0, &dz);
            let h_prev = &self.h_prev[t * hd..(t + 1) * hd];
            for k in 0..hd {
                let row = k * g4..(k + 1) * g4;
                if h_prev[k] != 0.0 {
                    axpy(&mut grad_h[row.clone()], h_prev[k], &dz);
                }
                dh_prev[k] = dot(&side.recurrent_kernel[row], &dz);
            }
            std::mem::swap(&mut dh, &mut dh_prev);
        }
        (dh, dc)
    }
}

fn check_range(seq: &IndexSequence, limit: usize) -> Result<()> {
    match seq.indices.iter().enumerate().find(|(_, &i)| i >= limit) {
        Some((position, &index)) => Err(Error::IndexOutOfRange {
            position,
            index,
            vocab_size: limit,
        }),
        None => Ok(()),
    }
}

pub(crate) fn encode_params(p: &Params, input: &[usize]) -> EncoderState {
    let side = Side::encoder(p);
    let mut state = EncoderState::zeros(p.hidden);
    let mut z = vec![0.0; 4 * p.hidden];
    for &x in input {
        side.step(x, &mut state.hidden, &mut state.cell, &mut z);
    }
    state
}

/// Runs the encoder over `input` from the zero state.
pub fn encode(w: &ModelWeights, input: &IndexSequence) -> Result<EncoderState> {
    check_range(input, w.input_vocab())?;
    Ok(encode_params(&Params::from_weights(w), &input.indices))
}

pub(crate) fn decode_greedy_params(
    p: &Params,
    state: &EncoderState,
    out_vocab: &CharVocab,
    max_len: usize,
) -> String {
    let (sos, eos) = match (out_vocab.sos(), out_vocab.eos()) {
        (Some(s), Some(e)) => (s, e),
        _ => return String::new(),
    };
    let side = Side::decoder(p);
    let vo = p.output_vocab;
    let proj = &p.arrays[PROJ_W];
    let mut h = state.hidden.clone();
    let mut c = state.cell.clone();
    let mut z = vec![0.0; 4 * p.hidden];
    let mut logits = vec![0.0; vo];
    let mut out = String::new();
    let mut prev = sos;
    for _ in 0..max_len {
        side.step(prev, &mut h, &mut c, &mut z);
        logits.copy_from_slice(&p.arrays[PROJ_B]);
        for (k, &hk) in h.iter().enumerate() {
            axpy(&mut logits, hk, &proj[k * vo..(k + 1) * vo]);
        }
        // SOS is never a valid output; it is excluded from the argmax.
        let mut best = None;
        for (j, &v) in logits.iter().enumerate() {
            if j == sos {
                continue;
            }
            match best {
                Some((_, bv)) if v <= bv => {}
                _ => best = Some((j, v)),
            }
        }
        let next = match best {
            Some((j, _)) => j,
            None => break,
        };
        if next == eos {
            break;
        }
        if let Some(ch) = out_vocab.char_at(next) {
            out.push(ch);
        }
        prev = next;
    }
    out
}

/// Greedy decoding from `state`: starts at SOS, feeds back the argmax
/// character, stops at EOS or after `max_len` characters. Markers are not
/// part of the returned text.
pub fn decode_greedy(
    w: &ModelWeights,
    state: &EncoderState,
    out_vocab: &CharVocab,
    max_len: usize,
) -> String {
    decode_greedy_params(&Params::from_weights(w), state, out_vocab, max_len)
}

pub(crate) fn loss_and_gradients_params(
    p: &Params,
    input: &[usize],
    target: &[usize],
) -> Result<(f64, Gradients)> {
    let hd = p.hidden;
    let vo = p.output_vocab;
    let steps = target.len() - 1;
    let enc = Side::encoder(p);
    let dec = Side::decoder(p);

    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    let mut enc_tape = Tape::with_capacity(hd, input.len());
    enc_tape.run(&enc, input, &mut h, &mut c);
    let mut dec_tape = Tape::with_capacity(hd, steps);
    dec_tape.run(&dec, &target[..steps], &mut h, &mut c);

    let mut grads = Gradients::zeros_like(p);
    let proj = &p.arrays[PROJ_W];
    let scale = 1.0 / steps as f64;
    let mut loss = 0.0;
    let mut probs = vec![0.0; vo];
    let mut dh_steps = vec![0.0; steps * hd];
    for t in 0..steps {
        let ht = dec_tape.h_at(t);
        probs.copy_from_slice(&p.arrays[PROJ_B]);
        for (k, &hk) in ht.iter().enumerate() {
            axpy(&mut probs, hk, &proj[k * vo..(k + 1) * vo]);
        }
        softmax_in_place(&mut probs);
        let y = target[t + 1];
        loss -= probs[y].ln();
        // probs becomes dlogits
        probs[y] -= 1.0;
        for v in probs.iter_mut() {
            *v *= scale;
        }
        let [.., gw, gb] = &mut grads.arrays;
        axpy(gb, 1.0, &probs);
        let dh_t = &mut dh_steps[t * hd..(t + 1) * hd];
        for (k, &hk) in ht.iter().enumerate() {
            axpy(&mut gw[k * vo..(k + 1) * vo], hk, &probs);
            dh_t[k] = dot(&proj[k * vo..(k + 1) * vo], &probs);
        }
    }
    loss *= scale;

    let [gex, geh, geb, gdx, gdh, gdb, ..] = &mut grads.arrays;
    let (dh0, dc0) = dec_tape.backward(
        &dec,
        Some(&dh_steps),
        vec![0.0; hd],
        vec![0.0; hd],
        gdx,
        gdh,
        gdb,
    );
    enc_tape.backward(&enc, None, dh0, dc0, gex, geh, geb);

    if !loss.is_finite() {
        return Err(Error::NumericalDivergence(format!("loss is {loss}")));
    }
    if !grads.is_finite() {
        return Err(Error::NumericalDivergence("non-finite gradient".into()));
    }
    Ok((loss, grads))
}

/// Teacher-forced mean per-character cross-entropy of `target` given
/// `input`, and its gradient with respect to every weight array.
///
/// `target` must be framed (`SOS text EOS`): the decoder is fed
/// `target[..n-1]` and scored against `target[1..]`.
pub fn loss_and_gradients(
    w: &ModelWeights,
    input: &IndexSequence,
    target: &IndexSequence,
) -> Result<(f64, Gradients)> {
    check_range(input, w.input_vocab())?;
    check_range(target, w.output_vocab())?;
    if target.len() < 2 {
        return Err(Error::Config("target must be framed with SOS and EOS".into()));
    }
    loss_and_gradients_params(&Params::from_weights(w), &input.indices, &target.indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq2seq::{init_random, Seq2SeqConfig};

    fn tiny(v_in: usize, h: usize, v_out: usize, seed: u64) -> ModelWeights {
        init_random(
            &Seq2SeqConfig {
                hidden_size: h,
                input_vocab_size: v_in,
                output_vocab_size: v_out,
                seed,
                ..Default::default()
            },
            1,
        )
    }

    #[test]
    fn empty_input_gives_zero_state() {
        let w = tiny(3, 4, 5, 1);
        let seq = IndexSequence { indices: vec![], vocab_size: 3 };
        assert_eq!(encode(&w, &seq).unwrap(), EncoderState::zeros(4));
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let w = ModelWeights::zeros(3, 4, 5);
        let seq = IndexSequence { indices: vec![0, 2, 1, 1], vocab_size: 3 };
        let s = encode(&w, &seq).unwrap();
        assert!(s.hidden.iter().chain(&s.cell).all(|&v| v == 0.0));
    }

    #[test]
    fn encode_rejects_out_of_range() {
        let w = tiny(2, 3, 4, 1);
        let seq = IndexSequence { indices: vec![0, 2], vocab_size: 3 };
        assert!(matches!(encode(&w, &seq), Err(Error::IndexOutOfRange { index: 2, .. })));
    }

    #[test]
    fn uniform_model_loss_is_ln_v() {
        let w = ModelWeights::zeros(3, 4, 6);
        let input = IndexSequence { indices: vec![0, 1], vocab_size: 3 };
        let target = IndexSequence { indices: vec![4, 0, 1, 2, 5], vocab_size: 6 };
        let (loss, _) = loss_and_gradients(&w, &input, &target).unwrap();
        assert!((loss - (6f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn eos_bias_stops_immediately() {
        let vocab = CharVocab::build("ab", true).unwrap();
        let mut w = tiny(2, 3, vocab.len(), 5);
        let eos = vocab.eos().unwrap();
        w.arrays_mut()[PROJ_B][eos] = 1.0e3;
        let out = decode_greedy(&w, &EncoderState::zeros(3), &vocab, 10);
        assert_eq!(out, "");
    }

    #[test]
    fn decode_respects_cap_and_vocab() {
        let vocab = CharVocab::build("abcdef", true).unwrap();
        for seed in 0..20 {
            let w = tiny(3, 5, vocab.len(), seed);
            let state = encode(&w, &IndexSequence { indices: vec![0, 1, 2], vocab_size: 3 }).unwrap();
            for cap in [1, 7, 30] {
                let out = decode_greedy(&w, &state, &vocab, cap);
                assert!(out.chars().count() <= cap);
                assert!(out.chars().all(|c| "abcdef".contains(c)));
            }
        }
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1.0, -3.0, 1000.0, 0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let p = softmax(&[0.0; 7]);
        assert!(p.iter().all(|&v| (v - 1.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5 - 2.0).collect();
        let b: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn gradients_keep_shapes() {
        let w = tiny(3, 4, 5, 2);
        let input = IndexSequence { indices: vec![0, 1, 2], vocab_size: 3 };
        let target = IndexSequence { indices: vec![3, 0, 1, 4], vocab_size: 5 };
        let (_, g) = loss_and_gradients(&w, &input, &target).unwrap();
        for (ga, wa) in g.arrays.iter().zip(w.arrays()) {
            assert_eq!(ga.len(), wa.len());
        }
    }
}
