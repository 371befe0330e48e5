//! Live execution: decode a ciphertext with its key and hand the recovered
//! program to an interpreter.
//!
//! Trust model: whoever holds the key can run the program. Nothing here
//! sandboxes the child process.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use crate::cipher::sha256;
use crate::error::{Error, Result};
use crate::key_store::KeyFile;
use crate::seq2seq;

pub const FILE_PLACEHOLDER: &str = "{file}";

/// Recovers the plaintext for `ciphertext`. The key is only read.
pub fn deobfuscate(ciphertext: &str, key: &KeyFile) -> Result<String> {
    let input = key.encoder_vocab.encode(ciphertext)?;
    let state = seq2seq::encode(&key.weights, &input)?;
    if !state.hidden.iter().chain(&state.cell).all(|v| v.is_finite()) {
        return Err(Error::NumericalDivergence("non-finite encoder state".into()));
    }
    Ok(seq2seq::decode_greedy(
        &key.weights,
        &state,
        &key.decoder_vocab,
        key.config.max_decode_len,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionResult {
    /// `None` when the child was terminated by a signal.
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExecOptions {
    /// Command template such as `python3 {file}`. Split on whitespace; the
    /// placeholder is replaced in every argument that contains it.
    pub interpreter_cmd: Option<String>,
    /// Refuse to run unless the recovered plaintext hashes to this.
    pub verify_digest: Option<[u8; 32]>,
    /// Suffix for the temporary plaintext file, e.g. `.py`.
    pub file_suffix: Option<String>,
}

fn parse_template(template: &str) -> Result<Vec<String>> {
    let argv: Vec<String> = template.split_whitespace().map(str::to_string).collect();
    if argv.is_empty() {
        return Err(Error::Config("interpreter command is empty".into()));
    }
    if !argv.iter().any(|a| a.contains(FILE_PLACEHOLDER)) {
        return Err(Error::Config(format!(
            "interpreter command must contain the {FILE_PLACEHOLDER} placeholder"
        )));
    }
    Ok(argv)
}

/// Deobfuscates, optionally verifies, and runs the plaintext through the
/// configured interpreter. The plaintext lives in a private temporary file
/// that is removed when this returns.
pub fn execute(ciphertext: &str, key: &KeyFile, opts: &ExecOptions) -> Result<ExecutionResult> {
    let template = opts
        .interpreter_cmd
        .as_deref()
        .ok_or_else(|| Error::Config("no interpreter command given".into()))?;
    let argv = parse_template(template)?;

    let plaintext = deobfuscate(ciphertext, key)?;
    if let Some(expected) = opts.verify_digest {
        if sha256(&plaintext) != expected {
            return Err(Error::DigestMismatch);
        }
    }

    let mut file = tempfile::Builder::new()
        .prefix("dobf-")
        .suffix(opts.file_suffix.as_deref().unwrap_or(""))
        .tempfile()?;
    file.write_all(plaintext.as_bytes())?;
    file.flush()?;
    let path = file.path().to_string_lossy().into_owned();
    let args: Vec<String> = argv
        .iter()
        .map(|a| a.replace(FILE_PLACEHOLDER, &path))
        .collect();

    let start = Instant::now();
    let output = Command::new(&args[0])
        .args(&args[1..])
        .output()
        .map_err(|e| Error::SpawnError(format!("{}: {e}", args[0])))?;
    let duration_s = start.elapsed().as_secs_f64();
    drop(file);

    Ok(ExecutionResult {
        exit_code: output.status.code(),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        duration_s,
    })
}
