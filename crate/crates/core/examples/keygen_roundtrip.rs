//! Trains a key for a ciphertext, saves it, reloads it and checks that the
//! reloaded key recovers the program.

use dobf::{
    default_charset, generate_ciphertext, generate_key, load_key, save_key, verify_roundtrip,
    Seq2SeqConfig,
};

fn main() -> dobf::Result<()> {
    let plaintext = "def square(x):\n    return x * x\n\nprint(square(12))\n";
    let config = Seq2SeqConfig {
        hidden_size: 64,
        seed: 42,
        ..Default::default()
    };
    let cipher = generate_ciphertext(plaintext, &default_charset(), &config, 10)?;
    let (key, report) = generate_key(plaintext, &cipher, &config, 3)?;
    println!(
        "trained in {} steps over {} attempt(s), loss {:.4}, {:.2}s",
        report.iterations_used, report.attempts, report.final_loss, report.wall_time_s
    );

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("square.dobk");
    save_key(&key, &path)?;
    let reloaded = load_key(&path)?;
    println!(
        "{} bytes on disk, {} weights",
        std::fs::metadata(&path)?.len(),
        reloaded.weights.param_count()
    );
    println!("round trip: {}", verify_roundtrip(&reloaded, &cipher.ciphertext, plaintext)?);
    Ok(())
}
