//! Reference implementations used as test oracles. None of this shares code
//! with the library's numeric paths.
#![allow(dead_code)]

use std::collections::HashMap;

use dobf::ModelWeights;

/// `f64` copies of the eight weight arrays.
pub fn to_f64(w: &ModelWeights) -> Vec<Vec<f64>> {
    w.arrays()
        .iter()
        .map(|a| a.iter().map(|&v| v as f64).collect())
        .collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One LSTM step, written gate by gate with column-wise sums.
pub fn ref_step(
    kx: &[f64],
    kh: &[f64],
    b: &[f64],
    hidden: usize,
    x: usize,
    h: &[f64],
    c: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let width = 4 * hidden;
    let pre = |gate: usize, j: usize| {
        let col = gate * hidden + j;
        let mut s = b[col] + kx[x * width + col];
        for k in 0..hidden {
            s += h[k] * kh[k * width + col];
        }
        s
    };
    let mut h_new = vec![0.0; hidden];
    let mut c_new = vec![0.0; hidden];
    for j in 0..hidden {
        let i = sig(pre(0, j));
        let f = sig(pre(1, j));
        let g = pre(2, j).tanh();
        let o = sig(pre(3, j));
        c_new[j] = f * c[j] + i * g;
        h_new[j] = o * c_new[j].tanh();
    }
    (h_new, c_new)
}

pub fn ref_encode(p: &[Vec<f64>], hidden: usize, input: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    for &x in input {
        let (hn, cn) = ref_step(&p[0], &p[1], &p[2], hidden, x, &h, &c);
        h = hn;
        c = cn;
    }
    (h, c)
}

/// Mean teacher-forced cross-entropy over a framed target.
pub fn ref_loss(p: &[Vec<f64>], hidden: usize, v_out: usize, input: &[usize], target: &[usize]) -> f64 {
    let (mut h, mut c) = ref_encode(p, hidden, input);
    let steps = target.len() - 1;
    let mut total = 0.0;
    for t in 0..steps {
        let (hn, cn) = ref_step(&p[3], &p[4], &p[5], hidden, target[t], &h, &c);
        h = hn;
        c = cn;
        let logits: Vec<f64> = (0..v_out)
            .map(|j| p[7][j] + (0..hidden).map(|k| h[k] * p[6][k * v_out + j]).sum::<f64>())
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
        total += lse - logits[target[t + 1]];
    }
    total / steps as f64
}

/// Central finite differences of `ref_loss` for every parameter.
pub fn finite_difference_gradients(
    w: &ModelWeights,
    input: &[usize],
    target: &[usize],
    eps: f64,
) -> Vec<Vec<f64>> {
    let mut p = to_f64(w);
    let (hidden, v_out) = (w.hidden(), w.output_vocab());
    let mut grads = Vec::new();
    for a in 0..8 {
        let mut g = vec![0.0; p[a].len()];
        for i in 0..p[a].len() {
            let orig = p[a][i];
            p[a][i] = orig + eps;
            let plus = ref_loss(&p, hidden, v_out, input, target);
            p[a][i] = orig - eps;
            let minus = ref_loss(&p, hidden, v_out, input, target);
            p[a][i] = orig;
            g[i] = (plus - minus) / (2.0 * eps);
        }
        grads.push(g);
    }
    grads
}

/// Plain recursive edit distance, memoized on suffix positions.
pub fn recursive_levenshtein(a: &str, b: &str) -> usize {
    fn go(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        if let Some(&d) = memo.get(&(a.len(), b.len())) {
            return d;
        }
        let cost = usize::from(a[0] != b[0]);
        let d = (go(&a[1..], b, memo) + 1)
            .min(go(a, &b[1..], memo) + 1)
            .min(go(&a[1..], &b[1..], memo) + cost);
        memo.insert((a.len(), b.len()), d);
        d
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    go(&a, &b, &mut HashMap::new())
}

/// Every string over `alphabet` with length `0..=max_len`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let next: Vec<String> = frontier
            .iter()
            .flat_map(|w| alphabet.iter().map(move |&c| format!("{w}{c}")))
            .collect();
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Two-pass Pearson correlation.
pub fn two_pass_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n;
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n;
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / n;
    cov / (vx.sqrt() * vy.sqrt())
}
