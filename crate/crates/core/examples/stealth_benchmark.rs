//! Compares generated ciphertexts against the hand-obfuscated fixture pairs.
//!
//!     cargo run --example stealth_benchmark -- [corpus_dir] [trials]

use dobf::eval::{stealth_benchmark, write_stealth_csv, StealthOptions};
use dobf::Seq2SeqConfig;

fn main() -> dobf::Result<()> {
    let mut args = std::env::args().skip(1);
    let corpus = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/stealth").into());
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);

    let opts = StealthOptions {
        trials,
        config: Seq2SeqConfig {
            hidden_size: 64,
            ..Default::default()
        },
        seed: 1,
        ..Default::default()
    };
    let summary = stealth_benchmark(&corpus, &opts)?;
    write_stealth_csv(std::io::stdout().lock(), &summary)?;
    Ok(())
}
