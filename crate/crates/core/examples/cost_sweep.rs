//! Times obfuscation and key training over random programs of growing
//! length and prints the correlation matrix.

use dobf::eval::{correlation_matrix, cost_experiment, write_correlation_csv, write_cost_csv, CostOptions};
use dobf::Seq2SeqConfig;

fn main() -> dobf::Result<()> {
    let opts = CostOptions {
        config: Seq2SeqConfig {
            hidden_size: 32,
            ..Default::default()
        },
        keygen_iterations: 50,
        ..Default::default()
    };
    let records = cost_experiment(20, 300, 6, &opts, 1)?;
    let out = std::io::stdout();
    write_cost_csv(out.lock(), &records)?;
    println!();
    write_correlation_csv(out.lock(), &correlation_matrix(&records)?)?;
    Ok(())
}
