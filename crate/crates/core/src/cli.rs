//! `dobf` command-line frontend.
//!
//! Exit codes: 0 success, 1 I/O or usage error, 2 key generation failed,
//! 3 verification failed. Machine-readable results go to stdout,
//! diagnostics to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::cipher::{self, generate_ciphertext, CipherRecord, DEFAULT_RANDOMNESS_INDEX};
use crate::error::Error;
use crate::eval::{self, CostOptions, StealthOptions, DEFAULT_KEYGEN_ITERATIONS, DEFAULT_TRIALS};
use crate::key_store::{load_key, save_key};
use crate::keygen::{train_key, verify_roundtrip, DEFAULT_MAX_ATTEMPTS};
use crate::runner::{deobfuscate, execute, ExecOptions};
use crate::seq2seq::Seq2SeqConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_KEYGEN: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const SEED_ENV: &str = "DOBF_SEED";

#[derive(Debug, Parser)]
#[command(name = "dobf", version, about = "Obfuscate source code with seq2seq models")]
struct Cli {
    /// TOML file with default model and training settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn a source file into <out>.obf plus <out>.obf.meta.json.
    Obfuscate(ObfuscateArgs),
    /// Train the key that maps a ciphertext back to its plaintext.
    Keygen(KeygenArgs),
    /// Decode a ciphertext with its key, optionally executing the result.
    Run(RunArgs),
    /// Stealth and execution-cost experiments.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// LSTM hidden size.
    #[arg(long)]
    hidden: Option<usize>,
    /// Longest ciphertext the decoder may emit.
    #[arg(long)]
    max_decode_len: Option<usize>,
}

#[derive(Debug, Args)]
struct ObfuscateArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Output prefix.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Randomness index: number of successive weight draws.
    #[arg(long)]
    n: Option<u32>,
    /// File whose characters form the output charset.
    #[arg(long)]
    charset_file: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct KeygenArgs {
    /// Original source file.
    #[arg(short, long)]
    plaintext: PathBuf,
    /// The .obf ciphertext.
    #[arg(short, long)]
    ciphertext: PathBuf,
    /// Sidecar; defaults to <ciphertext>.meta.json.
    #[arg(short, long)]
    meta: Option<PathBuf>,
    /// Output prefix; the key goes to <out>.dobk.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<u32>,
    #[arg(long)]
    check_interval: Option<u32>,
    #[arg(long)]
    max_attempts: Option<u32>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// The .obf ciphertext.
    #[arg(short, long)]
    ciphertext: PathBuf,
    /// The .dobk key.
    #[arg(short, long)]
    key: PathBuf,
    /// Sidecar holding the expected digest; defaults to <ciphertext>.meta.json
    /// when that file exists.
    #[arg(short, long)]
    meta: Option<PathBuf>,
    /// Expected plaintext SHA-256 (hex); overrides the sidecar.
    #[arg(long)]
    expect_sha256: Option<String>,
    /// Interpreter template, e.g. "python3 {file}". Without it the plaintext
    /// is only decoded and checked.
    #[arg(long = "exec")]
    exec: Option<String>,
    /// Suffix for the temporary plaintext file.
    #[arg(long)]
    suffix: Option<String>,
    /// Execute even when no digest check is possible or wanted.
    #[arg(long)]
    no_verify: bool,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Levenshtein comparison against hand-obfuscated benchmarks.
    Stealth(StealthArgs),
    /// Execution-cost sweep over random plaintexts of growing length.
    Cost(CostArgs),
}

#[derive(Debug, Args)]
struct StealthArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct CostArgs {
    #[arg(long)]
    min: usize,
    #[arg(long)]
    max: usize,
    #[arg(long)]
    points: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<u32>,
    /// Fixed training steps per key.
    #[arg(long)]
    iterations: Option<u32>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
}

/// Optional `--config` file. Flags override it; it overrides defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    hidden_size: Option<usize>,
    max_decode_len: Option<usize>,
    learning_rate: Option<f64>,
    max_iterations: Option<u32>,
    check_interval: Option<u32>,
    max_attempts: Option<u32>,
    randomness_index: Option<u32>,
    keygen_iterations: Option<u32>,
    trials: Option<u32>,
}

/// Error carrying the exit code it should map to.
struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Self {
            code: EXIT_IO,
            error: e.into(),
        }
    }
}

fn fail(code: i32, error: anyhow::Error) -> Failure {
    Failure { code, error }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Obfuscate(a) => cmd_obfuscate(a, &file),
        Command::Keygen(a) => cmd_keygen(a, &file),
        Command::Run(a) => cmd_run(a),
        Command::Eval(EvalCommand::Stealth(a)) => cmd_stealth(a, &file),
        Command::Eval(EvalCommand::Cost(a)) => cmd_cost(a, &file),
    }
}

/// `--seed`, then `DOBF_SEED`, then OS entropy (announced on stderr).
fn resolve_seed(flag: Option<u64>) -> anyhow::Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        return v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV} is not an unsigned integer"));
    }
    let seed = rand::random::<u64>();
    eprintln!("seed: {seed}");
    Ok(seed)
}

fn model_config(model: &ModelArgs, file: &FileConfig, seed: u64) -> Seq2SeqConfig {
    let d = Seq2SeqConfig::default();
    Seq2SeqConfig {
        hidden_size: model.hidden.or(file.hidden_size).unwrap_or(d.hidden_size),
        max_decode_len: model
            .max_decode_len
            .or(file.max_decode_len)
            .unwrap_or(d.max_decode_len),
        learning_rate: file.learning_rate.unwrap_or(d.learning_rate),
        max_iterations: file.max_iterations.unwrap_or(d.max_iterations),
        check_interval: file.check_interval.unwrap_or(d.check_interval),
        seed,
        ..d
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn meta_path_for(ciphertext: &Path) -> PathBuf {
    with_suffix(ciphertext, ".meta.json")
}

fn cmd_obfuscate(a: ObfuscateArgs, file: &FileConfig) -> CmdResult {
    let plaintext = read_text(&a.input)?;
    let seed = resolve_seed(a.seed)?;
    let charset = match &a.charset_file {
        Some(p) => read_text(p)?,
        None => cipher::default_charset(),
    };
    let n = a.n.or(file.randomness_index).unwrap_or(DEFAULT_RANDOMNESS_INDEX);
    let config = model_config(&a.model, file, seed);
    let record = generate_ciphertext(&plaintext, &charset, &config, n)?;

    let obf = with_suffix(&a.output, ".obf");
    fs::write(&obf, &record.ciphertext).with_context(|| format!("writing {}", obf.display()))?;
    let meta = meta_path_for(&obf);
    fs::write(&meta, format!("{}\n", record.sidecar_json()))
        .with_context(|| format!("writing {}", meta.display()))?;

    let summary = serde_json::json!({
        "ciphertext_len": record.ciphertext.chars().count(),
        "seed": record.seed,
        "n": record.randomness_index,
        "obf": obf,
        "meta": meta,
    });
    println!("{summary}");
    Ok(EXIT_OK)
}

fn cmd_keygen(a: KeygenArgs, file: &FileConfig) -> CmdResult {
    let plaintext = read_text(&a.plaintext)?;
    let ciphertext = read_text(&a.ciphertext)?;
    let meta_path = a.meta.clone().unwrap_or_else(|| meta_path_for(&a.ciphertext));
    let record = CipherRecord::from_sidecar(ciphertext, &read_text(&meta_path)?)
        .with_context(|| format!("parsing {}", meta_path.display()))?;
    let seed = resolve_seed(a.seed)?;

    let d = Seq2SeqConfig::default();
    let config = Seq2SeqConfig {
        hidden_size: a.hidden.or(file.hidden_size).unwrap_or(d.hidden_size),
        learning_rate: a.learning_rate.or(file.learning_rate).unwrap_or(d.learning_rate),
        max_iterations: a.max_iterations.or(file.max_iterations).unwrap_or(d.max_iterations),
        check_interval: a.check_interval.or(file.check_interval).unwrap_or(d.check_interval),
        seed,
        ..d
    };
    let max_attempts = a.max_attempts.or(file.max_attempts).unwrap_or(DEFAULT_MAX_ATTEMPTS);

    let outcome = match train_key(&plaintext, &record, &config, max_attempts) {
        Err(Error::DigestMismatch) => {
            return Err(fail(EXIT_VERIFY, anyhow!("plaintext does not match the sidecar digest")))
        }
        other => other?,
    };
    println!("{}", serde_json::to_string(&outcome.report)?);
    let Some(key) = outcome.key else {
        return Err(fail(
            EXIT_KEYGEN,
            anyhow!("key generation failed after {} attempt(s)", outcome.report.attempts),
        ));
    };
    let key_path = with_suffix(&a.output, ".dobk");
    save_key(&key, &key_path).with_context(|| format!("writing {}", key_path.display()))?;
    let reloaded = load_key(&key_path)?;
    if !verify_roundtrip(&reloaded, &record.ciphertext, &plaintext)? {
        return Err(fail(EXIT_VERIFY, anyhow!("saved key does not reproduce the plaintext")));
    }
    eprintln!("wrote {}", key_path.display());
    Ok(EXIT_OK)
}

fn expected_digest(a: &RunArgs) -> anyhow::Result<Option<[u8; 32]>> {
    if let Some(hex_digest) = &a.expect_sha256 {
        let bytes = hex::decode(hex_digest.trim()).context("--expect-sha256 is not hex")?;
        let digest = bytes
            .try_into()
            .map_err(|_| anyhow!("--expect-sha256 must be 32 bytes"))?;
        return Ok(Some(digest));
    }
    let meta = match &a.meta {
        Some(p) => p.clone(),
        None => {
            let p = meta_path_for(&a.ciphertext);
            if !p.exists() {
                return Ok(None);
            }
            p
        }
    };
    let record = CipherRecord::from_sidecar(String::new(), &read_text(&meta)?)?;
    Ok(Some(record.plaintext_sha256))
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let ciphertext = read_text(&a.ciphertext)?;
    let key = load_key(&a.key).with_context(|| format!("loading {}", a.key.display()))?;
    let digest = expected_digest(&a)?;

    let Some(template) = a.exec.clone() else {
        let plaintext = match deobfuscate(&ciphertext, &key) {
            Ok(p) => p,
            Err(e @ Error::UnknownCharacter { .. }) => return Err(fail(EXIT_VERIFY, e.into())),
            Err(e) => return Err(e.into()),
        };
        let actual = cipher::sha256(&plaintext);
        println!("sha256: {}", hex::encode(actual));
        return match digest {
            Some(d) if d == actual => {
                println!("verified: true");
                Ok(EXIT_OK)
            }
            Some(_) => {
                println!("verified: false");
                Err(fail(EXIT_VERIFY, anyhow!("recovered plaintext does not match the digest")))
            }
            None => {
                println!("verified: unchecked");
                Ok(EXIT_OK)
            }
        };
    };

    if digest.is_none() && !a.no_verify {
        return Err(fail(
            EXIT_VERIFY,
            anyhow!("no digest to verify against; pass --meta, --expect-sha256 or --no-verify"),
        ));
    }
    let opts = ExecOptions {
        interpreter_cmd: Some(template),
        verify_digest: if a.no_verify { None } else { digest },
        file_suffix: a.suffix.clone(),
    };
    let result = match execute(&ciphertext, &key, &opts) {
        Ok(r) => r,
        Err(e @ (Error::DigestMismatch | Error::UnknownCharacter { .. })) => {
            return Err(fail(EXIT_VERIFY, e.into()))
        }
        Err(e) => return Err(e.into()),
    };
    print!("{}", result.stdout);
    eprint!("{}", result.stderr);
    std::io::stdout().flush()?;
    eprintln!("duration_s: {:.6}", result.duration_s);
    Ok(result.exit_code.unwrap_or(EXIT_IO))
}

fn create_out_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_stealth(a: StealthArgs, file: &FileConfig) -> CmdResult {
    let seed = resolve_seed(a.seed)?;
    let opts = StealthOptions {
        trials: a.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
        config: model_config(&a.model, file, seed),
        randomness_index: a.n.or(file.randomness_index).unwrap_or(DEFAULT_RANDOMNESS_INDEX),
        seed,
        jobs: a.jobs,
        ..Default::default()
    };
    let summary = eval::stealth_benchmark(&a.corpus, &opts)?;
    create_out_dir(&a.out_dir)?;
    let path = a.out_dir.join("stealth.csv");
    eval::write_stealth_csv(fs::File::create(&path)?, &summary)?;
    eval::write_stealth_csv(std::io::stdout().lock(), &summary)?;
    eprintln!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn cmd_cost(a: CostArgs, file: &FileConfig) -> CmdResult {
    let seed = resolve_seed(a.seed)?;
    let opts = CostOptions {
        config: model_config(&a.model, file, seed),
        randomness_index: a.n.or(file.randomness_index).unwrap_or(DEFAULT_RANDOMNESS_INDEX),
        keygen_iterations: a
            .iterations
            .or(file.keygen_iterations)
            .unwrap_or(DEFAULT_KEYGEN_ITERATIONS),
    };
    let records = eval::cost_experiment(a.min, a.max, a.points, &opts, seed)?;
    create_out_dir(&a.out_dir)?;
    let cost_path = a.out_dir.join("cost.csv");
    eval::write_cost_csv(fs::File::create(&cost_path)?, &records)?;
    eval::write_cost_csv(std::io::stdout().lock(), &records)?;
    eprintln!("wrote {}", cost_path.display());
    match eval::correlation_matrix(&records) {
        Ok(m) => {
            let corr_path = a.out_dir.join("correlation.csv");
            eval::write_correlation_csv(fs::File::create(&corr_path)?, &m)?;
            eprintln!("wrote {}", corr_path.display());
        }
        Err(e) => eprintln!("correlation matrix skipped: {e}"),
    }
    Ok(EXIT_OK)
}
