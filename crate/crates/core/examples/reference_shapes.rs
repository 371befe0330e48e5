//! Prints the weight layout of the full-size configuration: 39 input
//! characters, 72 output characters, 256 hidden units.

use dobf::seq2seq::{init_random, ARRAY_NAMES};
use dobf::Seq2SeqConfig;

fn main() {
    let config = Seq2SeqConfig {
        hidden_size: 256,
        input_vocab_size: 39,
        output_vocab_size: 72,
        ..Default::default()
    };
    let weights = init_random(&config, 1);
    for (name, shape) in ARRAY_NAMES.iter().zip(weights.shapes()) {
        let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
        println!("{name:<22} {:<12} {:>7}", dims.join(" x "), shape.iter().product::<usize>());
    }
    println!("{:<35} {}", "total", weights.param_count());
}
