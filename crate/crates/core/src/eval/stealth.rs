use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::cipher::{default_charset, generate_ciphertext, DEFAULT_RANDOMNESS_INDEX};
use crate::error::{Error, Result};
use crate::seq2seq::Seq2SeqConfig;

use super::levenshtein::{levenshtein, normalized_levenshtein};
use super::stats::{mean, population_std};

pub const DEFAULT_TRIALS: u32 = 100;
const DEOBF_EXT: &str = "deobf";
const BENCHMARK_EXT: &str = "obf-benchmark";

/// A readable program and a hand-obfuscated version of it.
#[derive(Debug, Clone, PartialEq)]
pub struct StealthPair {
    pub id: String,
    pub deobfuscated: String,
    pub benchmark: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StealthRow {
    pub set_id: String,
    pub benchmark_distance: usize,
    pub proposed_mean_distance: f64,
    /// `None` when the benchmark distance is 0; such rows are left out of
    /// the aggregates.
    pub ratio: Option<f64>,
    pub trials: u32,
    pub mean_normalized_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StealthSummary {
    pub rows: Vec<StealthRow>,
    pub mean_ratio: Option<f64>,
    pub std_ratio: Option<f64>,
    /// Mean ratio with the keyed set left out.
    pub mean_ratio_excl: BTreeMap<String, f64>,
    pub ciphertexts: usize,
    /// Mean of `lev(p, c) / max(|p|, |c|)` over every trial.
    pub mean_normalized_distance: f64,
}

#[derive(Debug, Clone)]
pub struct StealthOptions {
    pub trials: u32,
    pub config: Seq2SeqConfig,
    pub randomness_index: u32,
    pub charset: String,
    pub seed: u64,
    /// Worker threads for ciphertext generation.
    pub jobs: usize,
}

impl Default for StealthOptions {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            config: Seq2SeqConfig::default(),
            randomness_index: DEFAULT_RANDOMNESS_INDEX,
            charset: default_charset(),
            seed: 0,
            jobs: 1,
        }
    }
}

/// Reads `<id>.deobf` / `<id>.obf-benchmark` pairs, sorted by id.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<StealthPair>> {
    let dir = dir.as_ref();
    let mut deobf = BTreeMap::new();
    let mut bench = BTreeMap::new();
    let entries = fs::read_dir(dir)
        .map_err(|e| Error::Corpus(format!("cannot read {}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry?.path();
        let (Some(stem), Some(ext)) = (path.file_stem(), path.extension()) else {
            continue;
        };
        let id = stem.to_string_lossy().into_owned();
        match ext.to_str() {
            Some(DEOBF_EXT) => deobf.insert(id, fs::read_to_string(&path)?),
            Some(BENCHMARK_EXT) => bench.insert(id, fs::read_to_string(&path)?),
            _ => None,
        };
    }
    if let Some(id) = deobf.keys().find(|k| !bench.contains_key(*k)) {
        return Err(Error::Corpus(format!("{id}.{DEOBF_EXT} has no {BENCHMARK_EXT} partner")));
    }
    if let Some(id) = bench.keys().find(|k| !deobf.contains_key(*k)) {
        return Err(Error::Corpus(format!("{id}.{BENCHMARK_EXT} has no {DEOBF_EXT} partner")));
    }
    if deobf.is_empty() {
        return Err(Error::Corpus(format!("no pairs found in {}", dir.display())));
    }
    Ok(deobf
        .into_iter()
        .map(|(id, deobfuscated)| {
            let benchmark = bench.remove(&id).expect("partner checked");
            StealthPair { id, deobfuscated, benchmark }
        })
        .collect())
}

pub fn stealth_benchmark(corpus_dir: impl AsRef<Path>, opts: &StealthOptions) -> Result<StealthSummary> {
    stealth_benchmark_pairs(&load_corpus(corpus_dir)?, opts)
}

/// Trial `t` of pair `i` uses seed `opts.seed + i * trials + t`.
pub fn stealth_benchmark_pairs(pairs: &[StealthPair], opts: &StealthOptions) -> Result<StealthSummary> {
    if opts.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let trials = opts.trials as usize;
    let jobs = opts.jobs.max(1);
    let work: Vec<(usize, u64)> = (0..pairs.len() * trials)
        .map(|k| (k / trials, opts.seed.wrapping_add(k as u64)))
        .collect();

    let run = |&(pair, seed): &(usize, u64)| -> Result<(usize, f64)> {
        let p = &pairs[pair].deobfuscated;
        let cfg = opts.config.clone().with_seed(seed);
        let rec = generate_ciphertext(p, &opts.charset, &cfg, opts.randomness_index)?;
        Ok((levenshtein(p, &rec.ciphertext), normalized_levenshtein(p, &rec.ciphertext)))
    };
    let results: Vec<(usize, f64)> = if jobs == 1 {
        work.iter().map(run).collect::<Result<_>>()?
    } else {
        let chunk = work.len().div_ceil(jobs);
        std::thread::scope(|s| {
            let handles: Vec<_> = work
                .chunks(chunk)
                .map(|c| s.spawn(move || c.iter().map(run).collect::<Result<Vec<_>>>()))
                .collect();
            let mut out = Vec::with_capacity(work.len());
            for h in handles {
                out.extend(h.join().expect("stealth worker panicked")?);
            }
            Ok::<_, Error>(out)
        })?
    };

    let rows: Vec<StealthRow> = pairs
        .iter()
        .zip(results.chunks(trials))
        .map(|(pair, res)| {
            let benchmark_distance = levenshtein(&pair.deobfuscated, &pair.benchmark);
            let dists: Vec<f64> = res.iter().map(|&(d, _)| d as f64).collect();
            let norms: Vec<f64> = res.iter().map(|&(_, n)| n).collect();
            let proposed = mean(&dists).unwrap_or(0.0);
            StealthRow {
                set_id: pair.id.clone(),
                benchmark_distance,
                proposed_mean_distance: proposed,
                ratio: (benchmark_distance > 0).then(|| proposed / benchmark_distance as f64),
                trials: opts.trials,
                mean_normalized_distance: mean(&norms).unwrap_or(0.0),
            }
        })
        .collect();

    let ratios: Vec<(&str, f64)> = rows
        .iter()
        .filter_map(|r| r.ratio.map(|x| (r.set_id.as_str(), x)))
        .collect();
    let values: Vec<f64> = ratios.iter().map(|&(_, x)| x).collect();
    let mut mean_ratio_excl = BTreeMap::new();
    if ratios.len() >= 2 {
        for (i, &(id, _)) in ratios.iter().enumerate() {
            let rest: Vec<f64> = values
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .collect();
            mean_ratio_excl.insert(id.to_string(), mean(&rest).expect("non-empty"));
        }
    }
    let all_norms: Vec<f64> = results.iter().map(|&(_, n)| n).collect();
    Ok(StealthSummary {
        mean_ratio: mean(&values),
        std_ratio: population_std(&values),
        mean_ratio_excl,
        ciphertexts: results.len(),
        mean_normalized_distance: mean(&all_norms).unwrap_or(0.0),
        rows,
    })
}

/// Table CSV followed by `#`-prefixed aggregate lines.
pub fn write_stealth_csv<W: Write>(out: W, summary: &StealthSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["set_id", "benchmark_distance", "proposed_mean_distance", "ratio", "trials"])?;
    for r in &summary.rows {
        w.write_record([
            r.set_id.clone(),
            r.benchmark_distance.to_string(),
            format!("{:.5}", r.proposed_mean_distance),
            r.ratio.map(|x| format!("{x:.5}")).unwrap_or_default(),
            r.trials.to_string(),
        ])?;
    }
    let mut out = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.5}")).unwrap_or_else(|| "undefined".into());
    writeln!(out, "# mean_ratio={}", fmt(summary.mean_ratio))?;
    writeln!(out, "# std_ratio={}", fmt(summary.std_ratio))?;
    writeln!(out, "# std_convention=population")?;
    for (id, m) in &summary.mean_ratio_excl {
        writeln!(out, "# mean_ratio_excl[{id}]={m:.5}")?;
    }
    for r in summary.rows.iter().filter(|r| r.ratio.is_none()) {
        writeln!(out, "# excluded[{}]=zero benchmark distance", r.set_id)?;
    }
    writeln!(out, "# ciphertexts={}", summary.ciphertexts)?;
    writeln!(out, "# mean_normalized_distance={:.5}", summary.mean_normalized_distance)?;
    Ok(())
}
