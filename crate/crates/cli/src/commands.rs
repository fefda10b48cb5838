//! Implementations of the five subcommands.

use std::path::Path;

use softdistill::data::{
    filter_overlap, generate_synthetic, load_gold_index, load_sts_tsv, load_tsv, sample_split,
    write_corpus_tsv, write_gold_index, ParallelCorpus, SyntheticSpec,
};
use softdistill::error::{Error, Result};
use softdistill::eval::{retrieval_accuracy, sts_eval, xsim_error_rate, EvalReport, MarginMode};
use softdistill::labels::{
    average_labels, hard_labels, priority_labels, select_anchor, LabelMatrix,
};
use softdistill::model::{write_teacher_table, StudentEncoder, TeacherOracle};
use softdistill::rng::stable_hash64;
use softdistill::trainer::{
    fit, load_checkpoint, save_checkpoint, Checkpoint, TrainHistory, CHECKPOINT_VERSION,
};

use crate::config::{RunConfig, TeacherSource};

fn build_teacher(cfg: &RunConfig) -> Result<TeacherOracle> {
    match &cfg.teacher {
        TeacherSource::Table(path) => {
            let (teacher, stats) = TeacherOracle::from_table_file(path)?;
            if stats.norm_warnings > 0 {
                eprintln!(
                    "warning: {} teacher vectors deviated from unit norm and were renormalized",
                    stats.norm_warnings
                );
            }
            Ok(teacher)
        }
        TeacherSource::Synthetic { dim } => {
            let mut langs = Vec::new();
            for c in &cfg.corpora {
                for lang in [&c.src_lang, &c.tgt_lang] {
                    if !langs.contains(lang) {
                        langs.push(lang.clone());
                    }
                }
            }
            TeacherOracle::synthetic(*dim, cfg.seed, &langs)
        }
    }
}

fn check_average_coverage(cfg: &RunConfig, teacher: &TeacherOracle) -> Result<()> {
    if cfg.label_mode != softdistill::labels::LabelMode::Average {
        return Ok(());
    }
    for c in &cfg.corpora {
        for lang in [&c.src_lang, &c.tgt_lang] {
            if !teacher.covers(lang) {
                return Err(Error::Config(format!(
                    "average labels need a teacher covering language '{lang}' \
                     (pair {}-{})",
                    c.src_lang, c.tgt_lang
                )));
            }
        }
    }
    Ok(())
}

/// Load, sample, split, and overlap-filter every configured corpus.
/// Returns the train corpora and the first corpus's validation split,
/// which serves as the early-stopping set.
fn prepare_data(cfg: &RunConfig) -> Result<(Vec<ParallelCorpus>, ParallelCorpus)> {
    let mut filter_sentences: Vec<String> = Vec::new();
    for path in &cfg.overlap_filters {
        let (corpus, _) = load_tsv(path, "_filter_src", "_filter_tgt")?;
        for (s, t) in corpus.pairs {
            filter_sentences.push(s);
            filter_sentences.push(t);
        }
    }

    let mut train_parts = Vec::new();
    let mut valid_part: Option<ParallelCorpus> = None;
    for entry in &cfg.corpora {
        let (corpus, malformed) = load_tsv(&entry.path, &entry.src_lang, &entry.tgt_lang)?;
        if malformed > 0 {
            eprintln!(
                "warning: skipped {malformed} malformed lines in {}",
                entry.path.display()
            );
        }
        let (train, valid) = sample_split(&corpus, cfg.n_total, cfg.n_train, cfg.seed)?;
        let (train, removed) = filter_overlap(&train, &filter_sentences);
        if removed > 0 {
            eprintln!(
                "info: overlap filter removed {removed} pairs from {}-{} train split",
                entry.src_lang, entry.tgt_lang
            );
        }
        if train.is_empty() {
            return Err(Error::Config(format!(
                "train split for {}-{} is empty after filtering",
                entry.src_lang, entry.tgt_lang
            )));
        }
        train_parts.push(train);
        if valid_part.is_none() {
            valid_part = Some(valid);
        }
    }
    Ok((train_parts, valid_part.expect("at least one corpus")))
}

pub fn cmd_train(config_path: &Path, override_seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(seed) = override_seed {
        cfg.seed = seed;
    }
    let run_dir = match out {
        Some(dir) => dir.to_path_buf(),
        None => {
            let hash = stable_hash64(&[cfg.echo().as_bytes()]);
            let ts = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            cfg.out.join(format!("{hash:016x}-{ts}"))
        }
    };
    std::fs::create_dir_all(&run_dir)?;

    let (train_corpora, valid) = prepare_data(&cfg)?;
    let teacher = build_teacher(&cfg)?;
    check_average_coverage(&cfg, &teacher)?;

    let refs: Vec<&ParallelCorpus> = train_corpora.iter().collect();
    let vocab = softdistill::data::build_vocab(&refs, cfg.min_count)?;
    let student = StudentEncoder::new_seeded(vocab, cfg.student_dim, cfg.seed)?;
    let trainer_cfg = cfg.trainer_config();

    let (best, history) = fit(student, &train_corpora, &teacher, &valid, &trainer_cfg)?;

    let checkpoint = Checkpoint {
        version: CHECKPOINT_VERSION,
        encoder: best,
        config: trainer_cfg,
        epochs_trained: history.epochs.len(),
    };
    let ckpt_path = run_dir.join("checkpoint.json");
    save_checkpoint(&ckpt_path, &checkpoint)?;

    let history_path = run_dir.join("history.json");
    let history_json = serde_json::to_string_pretty(&history)
        .map_err(|e| Error::Data(format!("history serialization: {e}")))?;
    std::fs::write(&history_path, history_json)?;

    std::fs::write(run_dir.join("config.echo.txt"), cfg.echo())?;
    std::fs::write(run_dir.join("summary.txt"), summarize(&history))?;

    println!("checkpoint: {}", ckpt_path.display());
    println!("history:    {}", history_path.display());
    println!(
        "best validation accuracy {:.4} at epoch {:?} ({} epochs run)",
        history.best_val_accuracy,
        history.best_epoch,
        history.epochs.len()
    );
    Ok(())
}

fn summarize(history: &TrainHistory) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "initial validation accuracy: {:.4}\n",
        history.initial_val_accuracy
    ));
    if let Some(l0) = history.step0_loss {
        out.push_str(&format!("loss at step 0: {l0:.6}\n"));
    }
    for e in &history.epochs {
        out.push_str(&format!(
            "epoch {:3}  loss {:.6}  cross {:.6}  mono {:.6}  val_acc {:.4}  lr {:.6}\n",
            e.epoch, e.mean_total, e.mean_cross, e.mean_mono, e.val_accuracy, e.lr
        ));
    }
    out.push_str(&format!(
        "best epoch: {:?}  best validation accuracy: {:.4}  stopped early: {}\n",
        history.best_epoch, history.best_val_accuracy, history.stopped_early
    ));
    out
}

fn load_encoder(checkpoint: &Path) -> Result<StudentEncoder> {
    Ok(load_checkpoint(checkpoint)?.encoder)
}

fn emit_report(
    report: &EvalReport,
    config_echo: serde_json::Value,
    out: Option<&Path>,
) -> Result<()> {
    let mut doc = serde_json::to_value(report)
        .map_err(|e| Error::Data(format!("report serialization: {e}")))?;
    doc.as_object_mut()
        .expect("report is an object")
        .insert("config".into(), config_echo);
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Data(format!("report serialization: {e}")))?;
    println!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), text + "\n")?;
    }
    Ok(())
}

pub fn cmd_eval_bitext(
    checkpoint: &Path,
    corpus_path: &Path,
    gold_path: Option<&Path>,
    k: usize,
    margin: MarginMode,
    out: Option<&Path>,
) -> Result<()> {
    let encoder = load_encoder(checkpoint)?;
    let (corpus, _) = load_tsv(corpus_path, "src", "tgt")?;
    if corpus.is_empty() {
        return Err(Error::Data(format!(
            "empty corpus: {}",
            corpus_path.display()
        )));
    }
    let gold = match gold_path {
        Some(p) => load_gold_index(p, corpus.len())?,
        None => (0..corpus.len()).collect(),
    };
    let src: Vec<&str> = corpus.pairs.iter().map(|(s, _)| s.as_str()).collect();
    let tgt: Vec<&str> = corpus.pairs.iter().map(|(_, t)| t.as_str()).collect();
    let src_emb = encoder.encode_batch(&src)?;
    let tgt_emb = encoder.encode_batch(&tgt)?;

    let (a, b, avg) = retrieval_accuracy(&src_emb, &tgt_emb, &gold)?;
    let xsim = xsim_error_rate(&src_emb, &tgt_emb, &gold, k, margin)?;

    let mut report = EvalReport::empty(corpus.len());
    report.acc_src2tgt = Some(a);
    report.acc_tgt2src = Some(b);
    report.acc_avg = Some(avg);
    report.xsim_error = Some(xsim);

    let echo = serde_json::json!({
        "checkpoint": checkpoint.display().to_string(),
        "corpus": corpus_path.display().to_string(),
        "gold": gold_path.map(|p| p.display().to_string()),
        "k": k,
        "margin": if margin == MarginMode::Ratio { "ratio" } else { "cosine" },
    });
    emit_report(&report, echo, out)
}

pub fn cmd_eval_sts(checkpoint: &Path, sts_path: &Path, out: Option<&Path>) -> Result<()> {
    let encoder = load_encoder(checkpoint)?;
    let records = load_sts_tsv(sts_path)?;
    let value = sts_eval(&encoder, &records)?;
    let mut report = EvalReport::empty(records.len());
    report.spearman = Some(value);
    let echo = serde_json::json!({
        "checkpoint": checkpoint.display().to_string(),
        "sts": sts_path.display().to_string(),
    });
    emit_report(&report, echo, out)
}

fn print_label_matrix(name: &str, labels: &LabelMatrix) {
    println!("{name}:");
    let n = labels.size();
    for i in 0..n {
        let mut row = String::from("  ");
        let mut sum = 0.0;
        for j in 0..n {
            let v = labels.get(i, j);
            sum += v;
            row.push_str(&format!("{v:8.4}"));
        }
        row.push_str(&format!("   | row sum {sum:.6}"));
        println!("{row}");
    }
}

pub fn cmd_inspect_labels(config_path: &Path, batch: usize) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let entry = &cfg.corpora[0];
    let (corpus, _) = load_tsv(&entry.path, &entry.src_lang, &entry.tgt_lang)?;
    if corpus.is_empty() {
        return Err(Error::Data("corpus is empty".into()));
    }
    let n = batch.min(corpus.len());
    let src: Vec<&str> = corpus.pairs[..n].iter().map(|(s, _)| s.as_str()).collect();
    let tgt: Vec<&str> = corpus.pairs[..n].iter().map(|(_, t)| t.as_str()).collect();
    let teacher = build_teacher(&cfg)?;

    println!(
        "label matrices for the first {n} pairs of {}-{} (tau = {})",
        entry.src_lang, entry.tgt_lang, cfg.temperature
    );
    print_label_matrix("hard", &hard_labels(n)?);

    let anchor = select_anchor(&entry.src_lang, &entry.tgt_lang, &cfg.priority)?;
    if !teacher.covers(anchor) {
        return Err(Error::Config(format!(
            "priority labels need the teacher to cover anchor language '{anchor}'"
        )));
    }
    let anchor_sents = if anchor == entry.src_lang { &src } else { &tgt };
    let anchor_emb = teacher.embed_batch(anchor_sents, anchor)?;
    print_label_matrix(
        &format!("priority (anchor {anchor})"),
        &priority_labels(&anchor_emb, cfg.temperature)?,
    );

    for lang in [&entry.src_lang, &entry.tgt_lang] {
        if !teacher.covers(lang) {
            return Err(Error::Config(format!(
                "average labels need a teacher covering language '{lang}'"
            )));
        }
    }
    let src_emb = teacher.embed_batch(&src, &entry.src_lang)?;
    let tgt_emb = teacher.embed_batch(&tgt, &entry.tgt_lang)?;
    print_label_matrix(
        "average",
        &average_labels(&src_emb, &tgt_emb, cfg.temperature)?,
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_sample_data(
    concepts: usize,
    pairs: usize,
    vocab: usize,
    noise: f64,
    teacher_dim: usize,
    seed: u64,
    src_lang: &str,
    tgt_lang: &str,
    out: &Path,
) -> Result<()> {
    let spec = SyntheticSpec {
        concepts,
        pairs,
        vocab_per_language: vocab,
        noise,
        teacher_dim,
        seed,
        src_lang: src_lang.to_string(),
        tgt_lang: tgt_lang.to_string(),
    };
    let data = generate_synthetic(&spec)?;
    std::fs::create_dir_all(out)?;
    let corpus_path = out.join("corpus.tsv");
    let teacher_path = out.join("teacher.tsv");
    let gold_path = out.join("gold.tsv");
    write_corpus_tsv(&corpus_path, &data.corpus)?;
    write_teacher_table(&teacher_path, &data.teacher_entries)?;
    write_gold_index(&gold_path, &data.gold)?;
    println!("corpus:  {}", corpus_path.display());
    println!("teacher: {}", teacher_path.display());
    println!("gold:    {}", gold_path.display());
    Ok(())
}

/// Exit code for an error: 3 for numerical failures, 2 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NonFinite(_) => 3,
        _ => 2,
    }
}
