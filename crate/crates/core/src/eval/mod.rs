//! Evaluation harness: Levenshtein stealth benchmark, execution-cost sweep
//! and the correlation matrix over the sweep's variables.

mod cost;
mod levenshtein;
mod stats;
mod stealth;

use std::collections::HashSet;

pub use cost::{
    correlation_matrix, cost_experiment, sweep_lengths, write_correlation_csv, write_cost_csv,
    CorrelationMatrix, CostOptions, EvalRecord, DEFAULT_KEYGEN_ITERATIONS, VARIABLES,
};
pub use levenshtein::{levenshtein, normalized_levenshtein};
pub use stats::{mean, pearson, population_std};
pub use stealth::{
    load_corpus, stealth_benchmark, stealth_benchmark_pairs, write_stealth_csv, StealthOptions,
    StealthPair, StealthRow, StealthSummary, DEFAULT_TRIALS,
};

/// Number of distinct characters in `text`.
pub fn char_variation(text: &str) -> usize {
    text.chars().collect::<HashSet<_>>().len()
}
