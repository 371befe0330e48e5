//! Executes an obfuscated Python program without writing the plaintext
//! anywhere except a private temporary file.

use dobf::cipher::sha256;
use dobf::{default_charset, execute, generate_ciphertext, generate_key, ExecOptions, Seq2SeqConfig};

fn main() -> dobf::Result<()> {
    let plaintext = "import sys\nprint(sum(range(10)))\nsys.exit(3)\n";
    let config = Seq2SeqConfig {
        hidden_size: 64,
        seed: 5,
        ..Default::default()
    };
    let cipher = generate_ciphertext(plaintext, &default_charset(), &config, 10)?;
    let (key, _) = generate_key(plaintext, &cipher, &config, 3)?;

    let opts = ExecOptions {
        interpreter_cmd: Some("python3 {file}".into()),
        verify_digest: Some(sha256(plaintext)),
        file_suffix: Some(".py".into()),
    };
    let result = execute(&cipher.ciphertext, &key, &opts)?;
    print!("{}", result.stdout);
    println!("exit code {:?} after {:.3}s", result.exit_code, result.duration_s);
    Ok(())
}
