//! End-to-end tests of the `softdistill` binary: command wiring, file
//! formats, exit codes, and output determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_softdistill")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to spawn softdistill")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process terminated by signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Generate a small synthetic dataset under `dir/name` and return its path.
fn sample_small(dir: &Path, name: &str, pairs: usize) -> PathBuf {
    let out = run_in(
        dir,
        &[
            "sample-data",
            "--concepts",
            "4",
            "--pairs",
            &pairs.to_string(),
            "--vocab",
            "20",
            "--teacher-dim",
            "8",
            "--seed",
            "11",
            "--out",
            name,
        ],
    );
    assert_eq!(exit_code(&out), 0, "sample-data failed: {}", stderr(&out));
    dir.join(name)
}

fn small_train_config(data: &str) -> String {
    format!(
        "corpus = aa,bb,{data}/corpus.tsv\n\
         teacher_table = {data}/teacher.tsv\n\
         priority = aa,bb\n\
         label_mode = priority\n\
         student_dim = 16\n\
         lr0 = 0.04\n\
         global_batch = 8\n\
         shards = 2\n\
         max_epochs = 3\n\
         n_total = 60\n\
         n_train = 48\n\
         seed = 11\n"
    )
}

#[test]
fn sample_data_writes_deterministic_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = sample_small(dir.path(), "a", 60);
    let b = sample_small(dir.path(), "b", 60);
    for file in ["corpus.tsv", "teacher.tsv", "gold.tsv"] {
        let fa = std::fs::read(a.join(file)).unwrap();
        let fb = std::fs::read(b.join(file)).unwrap();
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{file} differs between identical seeds");
    }
}

#[test]
fn sample_data_rejects_more_concepts_than_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "sample-data",
            "--concepts",
            "30",
            "--pairs",
            "20",
            "--out",
            "x",
        ],
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn train_produces_checkpoint_and_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    sample_small(dir.path(), "data", 60);
    std::fs::write(dir.path().join("run.conf"), small_train_config("data")).unwrap();

    let out = run_in(
        dir.path(),
        &["train", "--config", "run.conf", "--out", "run1"],
    );
    assert_eq!(exit_code(&out), 0, "train failed: {}", stderr(&out));
    assert!(dir.path().join("run1/checkpoint.json").exists());
    assert!(dir.path().join("run1/history.json").exists());
    assert!(dir.path().join("run1/summary.txt").exists());

    let out = run_in(
        dir.path(),
        &["train", "--config", "run.conf", "--out", "run2"],
    );
    assert_eq!(exit_code(&out), 0);
    let h1 = std::fs::read(dir.path().join("run1/history.json")).unwrap();
    let h2 = std::fs::read(dir.path().join("run2/history.json")).unwrap();
    assert_eq!(h1, h2, "same config and seed must reproduce the history");
}

#[test]
fn train_rejects_missing_corpus() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.conf"),
        "corpus = aa,bb,missing.tsv\nteacher_synthetic_dim = 8\nn_total = 10\nn_train = 5\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["train", "--config", "bad.conf"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("missing.tsv"));
}

#[test]
fn train_divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // full-size run so the runaway weight-decay amplification has enough
    // steps to overflow before early stopping can trigger
    let out = run_in(dir.path(), &["sample-data", "--out", "data"]);
    assert_eq!(exit_code(&out), 0);
    std::fs::write(
        dir.path().join("div.conf"),
        "corpus = aa,bb,data/corpus.tsv\n\
         teacher_table = data/teacher.tsv\n\
         priority = aa,bb\n\
         student_dim = 32\n\
         lr0 = 1e3\n\
         patience = 30\n\
         n_total = 600\n\
         n_train = 500\n",
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &["train", "--config", "div.conf", "--out", "div"],
    );
    assert_eq!(exit_code(&out), 3, "stderr: {}", stderr(&out));
}

fn train_once(dir: &Path) {
    sample_small(dir, "data", 60);
    std::fs::write(dir.join("run.conf"), small_train_config("data")).unwrap();
    let out = run_in(dir, &["train", "--config", "run.conf", "--out", "run"]);
    assert_eq!(exit_code(&out), 0, "train failed: {}", stderr(&out));
}

#[test]
fn eval_bitext_reports_and_validates_gold() {
    let dir = tempfile::tempdir().unwrap();
    train_once(dir.path());

    let out = run_in(
        dir.path(),
        &[
            "eval-bitext",
            "--checkpoint",
            "run/checkpoint.json",
            "--corpus",
            "data/corpus.tsv",
            "--gold",
            "data/gold.tsv",
        ],
    );
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["acc_avg"].is_f64() || report["acc_avg"].is_u64());
    assert!(report["xsim_error"].is_f64() || report["xsim_error"].is_u64());
    assert_eq!(report["counts"], 60);

    // both margin modes produce valid JSON
    let out = run_in(
        dir.path(),
        &[
            "eval-bitext",
            "--checkpoint",
            "run/checkpoint.json",
            "--corpus",
            "data/corpus.tsv",
            "--margin",
            "cosine",
        ],
    );
    assert_eq!(exit_code(&out), 0);
    assert!(serde_json::from_str::<serde_json::Value>(&stdout(&out)).is_ok());

    // out-of-range gold index
    std::fs::write(dir.path().join("bad_gold.tsv"), "0\t999\n").unwrap();
    let out = run_in(
        dir.path(),
        &[
            "eval-bitext",
            "--checkpoint",
            "run/checkpoint.json",
            "--corpus",
            "data/corpus.tsv",
            "--gold",
            "bad_gold.tsv",
        ],
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn eval_sts_reports_and_rejects_constant_gold() {
    let dir = tempfile::tempdir().unwrap();
    train_once(dir.path());

    // construct a gold column that matches the predicted cosine order
    // exactly, so spearman must be 1.0
    let ckpt =
        softdistill::trainer::load_checkpoint(&dir.path().join("run/checkpoint.json")).unwrap();
    let sents = [
        ("aa_c0_w1 aa_c0_w2", "aa_c0_w1 aa_c0_w2"),
        ("aa_c1_w1 aa_c1_w2", "aa_c1_w3 aa_c1_w4"),
        ("aa_c2_w0", "aa_c3_w0"),
    ];
    let mut scored: Vec<(f64, &str, &str)> = sents
        .iter()
        .map(|(a, b)| {
            let ea = ckpt.encoder.encode_text(a).unwrap();
            let eb = ckpt.encoder.encode_text(b).unwrap();
            (softdistill::simcore::cosine(&ea, &eb).unwrap(), *a, *b)
        })
        .collect();
    scored.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let lines: Vec<String> = scored
        .iter()
        .enumerate()
        .map(|(rank, (_, a, b))| format!("{a}\t{b}\t{}.0", rank + 1))
        .collect();
    std::fs::write(dir.path().join("sts.tsv"), lines.join("\n") + "\n").unwrap();

    let out = run_in(
        dir.path(),
        &[
            "eval-sts",
            "--checkpoint",
            "run/checkpoint.json",
            "--sts",
            "sts.tsv",
        ],
    );
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["spearman"], 1.0);
    assert_eq!(report["counts"], 3);

    // constant gold column is an undefined correlation
    std::fs::write(
        dir.path().join("const.tsv"),
        "aa_c0_w1\taa_c0_w2\t2.0\naa_c1_w1\taa_c1_w2\t2.0\n",
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &[
            "eval-sts",
            "--checkpoint",
            "run/checkpoint.json",
            "--sts",
            "const.tsv",
        ],
    );
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr(&out).contains("undefined"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn inspect_labels_prints_row_sums_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    sample_small(dir.path(), "data", 60);
    std::fs::write(dir.path().join("run.conf"), small_train_config("data")).unwrap();

    let out = run_in(
        dir.path(),
        &["inspect-labels", "--config", "run.conf", "--batch", "4"],
    );
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("hard:"));
    assert!(text.contains("priority"));
    assert!(text.contains("average:"));
    // every printed row sums to 1 within 1e-6
    for line in text.lines() {
        if let Some(pos) = line.find("row sum ") {
            let sum: f64 = line[pos + 8..].trim().parse().unwrap();
            assert!((sum - 1.0).abs() < 1e-6, "row sum {sum}");
        }
    }
    // hard block prints the identity
    assert!(text.contains("1.0000  0.0000  0.0000  0.0000"));
}

#[test]
fn inspect_labels_average_needs_bilingual_teacher() {
    let dir = tempfile::tempdir().unwrap();
    sample_small(dir.path(), "data", 60);
    // strip language bb from the teacher table
    let table = std::fs::read_to_string(dir.path().join("data/teacher.tsv")).unwrap();
    let mono: String = table
        .lines()
        .filter(|l| !l.starts_with("bb\t"))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(dir.path().join("mono_teacher.tsv"), mono + "\n").unwrap();
    std::fs::write(
        dir.path().join("avg.conf"),
        "corpus = aa,bb,data/corpus.tsv\n\
         teacher_table = mono_teacher.tsv\n\
         priority = aa,bb\n\
         label_mode = average\n\
         n_total = 60\n\
         n_train = 48\n",
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &["inspect-labels", "--config", "avg.conf", "--batch", "3"],
    );
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr(&out).contains("'bb'"),
        "error must name the uncovered language, got: {}",
        stderr(&out)
    );
}
