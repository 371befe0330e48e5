//! Obfuscates a small program and prints the ciphertext with its sidecar.
//!
//!     cargo run --example obfuscate -- [path] [seed]

use dobf::{default_charset, generate_ciphertext, Seq2SeqConfig};

fn main() -> dobf::Result<()> {
    let mut args = std::env::args().skip(1);
    let plaintext = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => "print(\"hello, world\")\n".to_string(),
    };
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let config = Seq2SeqConfig {
        hidden_size: 64,
        seed,
        ..Default::default()
    };
    let record = generate_ciphertext(&plaintext, &default_charset(), &config, 10)?;

    println!("plaintext:  {} chars", plaintext.chars().count());
    println!("ciphertext: {} chars", record.ciphertext.chars().count());
    println!("{:?}", record.ciphertext);
    println!("{}", record.sidecar_json());
    Ok(())
}
