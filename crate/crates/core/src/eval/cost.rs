use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cipher::{default_charset, generate_ciphertext, DEFAULT_RANDOMNESS_INDEX};
use crate::error::{Error, Result};
use crate::seq2seq::{self, Seq2SeqConfig, Trainer};
use crate::text_codec::CharVocab;

use super::levenshtein::levenshtein;
use super::stats::pearson;

pub const DEFAULT_KEYGEN_ITERATIONS: u32 = 200;

pub const VARIABLES: [&str; 6] = [
    "plaintext_len",
    "lev_distance",
    "encrypt_time_s",
    "keygen_time_s",
    "char_variation",
    "ciphertext_len",
];

/// One point of the execution-cost sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub plaintext_len: usize,
    pub lev_distance: usize,
    pub encrypt_time_s: f64,
    pub keygen_time_s: f64,
    pub char_variation: usize,
    pub ciphertext_len: usize,
    pub seed: u64,
}

impl EvalRecord {
    fn variables(&self) -> [f64; 6] {
        [
            self.plaintext_len as f64,
            self.lev_distance as f64,
            self.encrypt_time_s,
            self.keygen_time_s,
            self.char_variation as f64,
            self.ciphertext_len as f64,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct CostOptions {
    pub config: Seq2SeqConfig,
    pub randomness_index: u32,
    /// Training steps per key, always run to completion.
    pub keygen_iterations: u32,
}

impl Default for CostOptions {
    fn default() -> Self {
        Self {
            config: Seq2SeqConfig::default(),
            randomness_index: DEFAULT_RANDOMNESS_INDEX,
            keygen_iterations: DEFAULT_KEYGEN_ITERATIONS,
        }
    }
}

/// `n_points` lengths evenly spaced from `min_len` to `max_len`, rounded.
pub fn sweep_lengths(min_len: usize, max_len: usize, n_points: usize) -> Vec<usize> {
    let span = (max_len - min_len) as f64;
    let steps = (n_points - 1) as f64;
    (0..n_points)
        .map(|i| min_len + (span * i as f64 / steps).round() as usize)
        .collect()
}

/// Runs the sweep. Point `i` uses seed `seed + i` for its random plaintext,
/// its ciphertext and its key initialization. Points run one at a time so
/// the timings do not contend.
pub fn cost_experiment(
    min_len: usize,
    max_len: usize,
    n_points: usize,
    opts: &CostOptions,
    seed: u64,
) -> Result<Vec<EvalRecord>> {
    if min_len == 0 || min_len >= max_len {
        return Err(Error::Config("need 1 <= min_len < max_len".into()));
    }
    if n_points < 2 {
        return Err(Error::Config("need at least 2 points".into()));
    }
    let charset: Vec<char> = default_charset().chars().collect();
    let charset_str: String = charset.iter().collect();
    sweep_lengths(min_len, max_len, n_points)
        .into_iter()
        .enumerate()
        .map(|(i, len)| {
            let point_seed = seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
            let plaintext: String = (0..len).map(|_| *charset.choose(&mut rng).unwrap()).collect();
            let cfg = opts.config.clone().with_seed(point_seed);

            let start = Instant::now();
            let cipher = generate_ciphertext(&plaintext, &charset_str, &cfg, opts.randomness_index)?;
            let encrypt_time_s = start.elapsed().as_secs_f64();

            let start = Instant::now();
            fixed_keygen(&plaintext, &cipher.ciphertext, &cfg, opts.keygen_iterations)?;
            let keygen_time_s = start.elapsed().as_secs_f64();

            Ok(EvalRecord {
                plaintext_len: len,
                lev_distance: levenshtein(&plaintext, &cipher.ciphertext),
                encrypt_time_s,
                keygen_time_s,
                char_variation: super::char_variation(&cipher.ciphertext),
                ciphertext_len: cipher.ciphertext.chars().count(),
                seed: point_seed,
            })
        })
        .collect()
}

/// Key training without the early-stopping check.
fn fixed_keygen(plaintext: &str, ciphertext: &str, cfg: &Seq2SeqConfig, iterations: u32) -> Result<()> {
    let enc = if ciphertext.is_empty() {
        CharVocab::markers_only()
    } else {
        CharVocab::build(ciphertext, false)?
    };
    let dec = CharVocab::build(plaintext, true)?;
    let cfg = cfg.clone().with_vocab_sizes(enc.len(), dec.len());
    let input = enc.encode(ciphertext)?;
    let target = dec.encode_framed(plaintext)?;
    let mut init = seq2seq::init_random(&cfg, 1);
    init.set_forget_bias(1.0);
    let mut trainer = Trainer::new(init, cfg.learning_rate);
    for _ in 0..iterations {
        trainer.train_step(&input, &target)?;
    }
    Ok(())
}

/// Pearson correlations between the six swept variables. Entries involving
/// a zero-variance variable are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub values: [[Option<f64>; 6]; 6],
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = VARIABLES.iter().position(|v| *v == a)?;
        let j = VARIABLES.iter().position(|v| *v == b)?;
        self.values[i][j]
    }
}

pub fn correlation_matrix(records: &[EvalRecord]) -> Result<CorrelationMatrix> {
    if records.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 records, got {}",
            records.len()
        )));
    }
    let columns: Vec<Vec<f64>> = (0..6)
        .map(|k| records.iter().map(|r| r.variables()[k]).collect())
        .collect();
    let mut values = [[None; 6]; 6];
    for i in 0..6 {
        for j in i..6 {
            let r = if i == j {
                pearson(&columns[i], &columns[i]).map(|_| 1.0)
            } else {
                pearson(&columns[i], &columns[j])
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { values })
}

pub fn write_cost_csv<W: Write>(out: W, records: &[EvalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Square CSV with variable names as header row and first column; missing
/// entries are empty.
pub fn write_correlation_csv<W: Write>(out: W, matrix: &CorrelationMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["variable".to_string()];
    header.extend(VARIABLES.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (name, row) in VARIABLES.iter().zip(&matrix.values) {
        let mut rec = vec![name.to_string()];
        rec.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
