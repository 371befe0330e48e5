use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dobf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dobf"))
        .args(args)
        .env_remove("DOBF_SEED")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes `text`, obfuscates it and trains a key under `dir/prog`.
fn prepare(dir: &Path, text: &str, seed: &str) -> (String, String, String) {
    let src = dir.join("prog.py");
    fs::write(&src, text).unwrap();
    let prefix = dir.join("prog");
    let obf = format!("{}.obf", s(&prefix));
    let out = dobf(&["obfuscate", "-i", s(&src), "-o", s(&prefix), "--seed", seed]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = dobf(&["keygen", "-p", s(&src), "-c", &obf, "-o", s(&prefix), "--seed", seed]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (s(&src).to_string(), obf, format!("{}.dobk", s(&prefix)))
}

#[test]
fn full_cycle_runs_program() {
    let dir = tempfile::tempdir().unwrap();
    let (_, obf, key) = prepare(dir.path(), "print(1)", "4");
    assert!(Path::new(&format!("{obf}.meta.json")).exists());

    let out = dobf(&["run", "-c", &obf, "-k", &key]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("verified: true"), "{stdout}");

    let out = dobf(&["run", "-c", &obf, "-k", &key, "--exec", "python3 {file}", "--suffix", ".py"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "1\n");
}

#[test]
fn child_exit_code_is_relayed() {
    let dir = tempfile::tempdir().unwrap();
    let (_, obf, key) = prepare(dir.path(), "exit(5)", "8");
    let out = dobf(&["run", "-c", &obf, "-k", &key, "--exec", "python3 {file}"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn wrong_digest_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (_, obf, key) = prepare(dir.path(), "print(1)", "4");
    let bogus = "00".repeat(32);
    let out = dobf(&["run", "-c", &obf, "-k", &key, "--expect-sha256", &bogus]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout).unwrap().contains("verified: false"));

    let out = dobf(&["run", "-c", &obf, "-k", &key, "--expect-sha256", &bogus, "--exec", "python3 {file}"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn tampered_ciphertext_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (_, obf, key) = prepare(dir.path(), "print(1)", "4");
    let original = fs::read_to_string(&obf).unwrap();

    fs::write(&obf, format!("{original}\u{00e9}")).unwrap();
    assert_eq!(dobf(&["run", "-c", &obf, "-k", &key]).status.code(), Some(3));

    fs::write(&obf, original.chars().take(3).collect::<String>()).unwrap();
    let out = dobf(&["run", "-c", &obf, "-k", &key]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout).unwrap().contains("verified: false"));
}

#[test]
fn keygen_exhaustion_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("long.py");
    fs::write(&src, "for i in range(10):\n    print(i * i, 'squared')\n").unwrap();
    let prefix = dir.path().join("long");
    let obf = format!("{}.obf", s(&prefix));
    assert!(dobf(&["obfuscate", "-i", s(&src), "-o", s(&prefix), "--seed", "1"]).status.success());
    let out = dobf(&[
        "keygen", "-p", s(&src), "-c", &obf, "-o", s(&prefix), "--seed", "1",
        "--max-iterations", "1", "--check-interval", "1", "--max-attempts", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!Path::new(&format!("{}.dobk", s(&prefix))).exists());

    let out = dobf(&["keygen", "-p", s(&src), "-c", &obf, "-o", s(&prefix), "--seed", "1", "--max-iterations", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn keygen_with_wrong_plaintext_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (src, obf, _) = prepare(dir.path(), "print(1)", "4");
    fs::write(&src, "print(2)").unwrap();
    let out = dobf(&["keygen", "-p", &src, "-c", &obf, "-o", s(&dir.path().join("other")), "--seed", "4"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_and_io_errors_exit_1() {
    assert_eq!(dobf(&["obfuscate"]).status.code(), Some(1));
    assert_eq!(dobf(&["frobnicate"]).status.code(), Some(1));
    let out = dobf(&["obfuscate", "-i", "/nonexistent/file", "-o", "/tmp/x", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(dobf(&["--help"]).status.code(), Some(0));
}

#[test]
fn corrupt_key_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let (_, obf, key) = prepare(dir.path(), "print(1)", "4");
    let mut bytes = fs::read(&key).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    fs::write(&key, bytes).unwrap();
    let out = dobf(&["run", "-c", &obf, "-k", &key]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}

#[test]
fn seed_comes_from_environment_or_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("p.py");
    fs::write(&src, "print(1)").unwrap();
    let run = |prefix: &str, seed_env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_dobf"));
        cmd.args(["obfuscate", "-i", s(&src), "-o", s(&dir.path().join(prefix))]);
        match seed_env {
            Some(v) => cmd.env("DOBF_SEED", v),
            None => cmd.env_remove("DOBF_SEED"),
        };
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        (
            fs::read(dir.path().join(format!("{prefix}.obf"))).unwrap(),
            String::from_utf8(out.stderr).unwrap(),
        )
    };
    let (a, _) = run("a", Some("9"));
    let (b, _) = run("b", Some("9"));
    assert_eq!(a, b);
    let (_, stderr) = run("c", None);
    assert!(stderr.contains("seed: "), "{stderr}");
}

#[test]
fn eval_subcommands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/stealth");
    let out = dobf(&[
        "eval", "stealth", "--corpus", s(&corpus), "--trials", "2", "--seed", "1",
        "--hidden", "8", "--out-dir", s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("stealth.csv")).unwrap();
    assert!(csv.starts_with("set_id,"), "{csv}");
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 6);

    let out = dobf(&[
        "eval", "cost", "--min", "20", "--max", "40", "--points", "3", "--seed", "1",
        "--iterations", "2", "--hidden", "8", "--out-dir", s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cost = fs::read_to_string(dir.path().join("cost.csv")).unwrap();
    assert_eq!(cost.lines().count(), 4);
    assert!(dir.path().join("correlation.csv").exists());
}

#[test]
fn config_file_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("p.py");
    fs::write(&src, "print(1)").unwrap();
    let cfg = dir.path().join("dobf.toml");
    fs::write(&cfg, "hidden_size = 16\nrandomness_index = 2\n").unwrap();
    let out = dobf(&[
        "--config", s(&cfg), "obfuscate", "-i", s(&src), "-o", s(&dir.path().join("p")), "--seed", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = fs::read_to_string(dir.path().join("p.obf.meta.json")).unwrap();
    assert!(meta.contains("\"hidden_size\":16") || meta.contains("\"hidden_size\": 16"), "{meta}");

    fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = dobf(&["--config", s(&cfg), "obfuscate", "-i", s(&src), "-o", s(&dir.path().join("q")), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
}
