//! Command-level behavior: exit codes, determinism, shard/merge
//! equivalence, config precedence.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use support::annotated_fixture;

fn morphlm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphlm"))
        .args(args)
        .current_dir(dir)
        .env_remove("MORPHLM_CONFIG")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_fixture(dir: &Path) {
    fs::write(dir.join("corpus.tsv"), annotated_fixture(400, 12)).unwrap();
}

fn run_standard_preprocess(dir: &Path) {
    write_fixture(dir);
    let out = morphlm(
        &[
            "preprocess", "--input", "corpus.tsv", "--glf", "--threshold", "2", "--seed", "9",
            "--dedup", "--out-dir", "out",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&morphlm(&["--help"], dir.path())), 0);
    assert_eq!(code(&morphlm(&["--version"], dir.path())), 0);
    assert_eq!(code(&morphlm(&["preprocess", "--help"], dir.path())), 0);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&morphlm(&["preprocess", "--nope"], dir.path())), 1);
}

#[test]
fn bad_split_ratios_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = morphlm(
        &[
            "preprocess", "--input", "corpus.tsv", "--glf", "--splits", "0.5,0.5,0.5",
            "--out-dir", "out",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage error"));
}

#[test]
fn malformed_tsv_exits_two_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.tsv"), "a\ta\tNOUN\nbroken line\n").unwrap();
    let out = morphlm(
        &["preprocess", "--input", "bad.tsv", "--glf", "--out-dir", "out"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn missing_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = morphlm(
        &["preprocess", "--input", "nope.tsv", "--glf", "--out-dir", "out"],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn preprocess_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    for out_dir in ["a", "b"] {
        let out = morphlm(
            &[
                "preprocess", "--input", "corpus.tsv", "--glf", "--threshold", "2", "--seed",
                "42", "--out-dir", out_dir,
            ],
            dir.path(),
        );
        assert_eq!(code(&out), 0);
    }
    for name in ["train.txt", "dev.txt", "test.txt", "vocab.txt", "freq_word.tsv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn counting_empty_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    run_standard_preprocess(dir.path());
    fs::write(dir.path().join("empty.txt"), "").unwrap();
    let out = morphlm(
        &[
            "count", "--vocab", "out/vocab.txt", "--order", "2", "--out", "c.bin", "empty.txt",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn sharded_count_and_merge_equal_single_run() {
    let dir = tempfile::tempdir().unwrap();
    run_standard_preprocess(dir.path());
    let train = fs::read_to_string(dir.path().join("out/train.txt")).unwrap();
    let lines: Vec<&str> = train.lines().collect();
    let half = lines.len() / 2;
    fs::write(dir.path().join("shard1.txt"), lines[..half].join("\n") + "\n").unwrap();
    fs::write(dir.path().join("shard2.txt"), lines[half..].join("\n") + "\n").unwrap();

    let run = |args: &[&str]| {
        let out = morphlm(args, dir.path());
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    };
    run(&["count", "--vocab", "out/vocab.txt", "--order", "3", "--out", "whole.bin",
          "out/train.txt"]);
    // Both shards in one invocation...
    run(&["count", "--vocab", "out/vocab.txt", "--order", "3", "--out", "together.bin",
          "shard1.txt", "shard2.txt"]);
    // ...and separately counted then merged.
    run(&["count", "--vocab", "out/vocab.txt", "--order", "3", "--out", "s1.bin", "shard1.txt"]);
    run(&["count", "--vocab", "out/vocab.txt", "--order", "3", "--out", "s2.bin", "shard2.txt"]);
    run(&["count", "--merge", "--out", "merged.bin", "s1.bin", "s2.bin"]);

    let whole = fs::read(dir.path().join("whole.bin")).unwrap();
    assert_eq!(whole, fs::read(dir.path().join("together.bin")).unwrap());
    assert_eq!(whole, fs::read(dir.path().join("merged.bin")).unwrap());
}

#[test]
fn train_presets_expand_in_print_config() {
    let dir = tempfile::tempdir().unwrap();
    run_standard_preprocess(dir.path());
    let out = morphlm(
        &[
            "count", "--vocab", "out/vocab.txt", "--order", "3", "--out", "c.bin",
            "out/train.txt",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let out = morphlm(
        &[
            "train", "--counts", "c.bin", "--vocab", "out/vocab.txt", "--flavor",
            "srilm-default", "--arpa-out", "m.arpa", "--print-config",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("min_counts = 1,1,2"), "stdout: {stdout}");
    assert!(stdout.contains("flavor = backoff"), "stdout: {stdout}");

    let out = morphlm(
        &[
            "train", "--counts", "c.bin", "--vocab", "out/vocab.txt", "--flavor",
            "unpruned-interpolated", "--arpa-out", "m.arpa", "--print-config",
        ],
        dir.path(),
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("min_counts = 1,1,1"), "stdout: {stdout}");
    assert!(stdout.contains("flavor = interpolated"), "stdout: {stdout}");
}

#[test]
fn config_file_supplies_defaults_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    fs::write(dir.path().join("morphlm.conf"), "threshold = 5\nseed = 1\n").unwrap();
    let out = morphlm(
        &[
            "preprocess", "--config", "morphlm.conf", "--input", "corpus.tsv", "--glf",
            "--threshold", "3", "--out-dir", "out", "--print-config",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("threshold = 3"), "flag must win: {stdout}");
    assert!(stdout.contains("seed = 1"), "config must fill the gap: {stdout}");
}

#[test]
fn eval_lambda_one_equals_plain_word_model() {
    let dir = tempfile::tempdir().unwrap();
    run_standard_preprocess(dir.path());
    let run = |args: &[&str]| {
        let out = morphlm(args, dir.path());
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    run(&["count", "--vocab", "out/vocab.txt", "--order", "3", "--out", "c.bin",
          "out/train.txt"]);
    run(&["train", "--counts", "c.bin", "--vocab", "out/vocab.txt", "--flavor",
          "unpruned-interpolated", "--arpa-out", "m.arpa"]);
    run(&["train-class", "--annotated", "corpus.tsv", "--corpus", "out/train.txt",
          "--vocab", "out/vocab.txt", "--order", "2", "--out-dir", "bundle"]);

    run(&["eval", "--model", "m.arpa", "--corpus", "out/test.txt", "--report", "plain.tsv"]);
    run(&["eval", "--model", "m.arpa", "--corpus", "out/test.txt", "--class-model", "bundle",
          "--lambda", "1.0", "--report", "blend.tsv"]);
    let plain = fs::read(dir.path().join("plain.tsv")).unwrap();
    let blend = fs::read(dir.path().join("blend.tsv")).unwrap();
    assert_eq!(plain, blend);
}

#[test]
fn eval_cross_flags_the_report() {
    let dir = tempfile::tempdir().unwrap();
    run_standard_preprocess(dir.path());
    let run = |args: &[&str]| {
        let out = morphlm(args, dir.path());
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    run(&["count", "--vocab", "out/vocab.txt", "--order", "2", "--out", "c.bin",
          "out/train.txt"]);
    run(&["train", "--counts", "c.bin", "--vocab", "out/vocab.txt", "--arpa-out", "m.arpa"]);
    let out = run(&["eval", "--model", "m.arpa", "--corpus", "out/test.txt", "--cross"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let header: Vec<&str> = stdout.lines().next().unwrap().split_whitespace().collect();
    let row: Vec<&str> = stdout.lines().nth(1).unwrap().split_whitespace().collect();
    let cross_col = header.iter().position(|&h| h == "cross").unwrap();
    assert_eq!(row[cross_col], "yes");
}

#[test]
fn commands_do_not_mutate_inputs() {
    let dir = tempfile::tempdir().unwrap();
    run_standard_preprocess(dir.path());
    let before = fs::read(dir.path().join("corpus.tsv")).unwrap();
    let train_before = fs::read(dir.path().join("out/train.txt")).unwrap();
    let out = morphlm(
        &[
            "count", "--vocab", "out/vocab.txt", "--order", "2", "--out", "c.bin",
            "out/train.txt",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(dir.path().join("corpus.tsv")).unwrap(), before);
    assert_eq!(fs::read(dir.path().join("out/train.txt")).unwrap(), train_before);
}
