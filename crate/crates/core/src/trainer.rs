//! Mini-batch training loop: shard pooling, per-batch label construction,
//! loss/gradient evaluation, AdamW updates with linear learning-rate decay,
//! and early stopping on validation retrieval accuracy.
//!
//! Shard pooling emulates cross-accelerator negative expansion: the global
//! batch is drawn once, split into equal shards, and concatenated back
//! before any math, so every pooled sentence serves as a negative for every
//! other and shard count cannot change results.
//!
//! Determinism: each epoch derives its own ChaCha20 stream from
//! (seed, epoch), so a checkpoint's (seed, epochs_trained) pair is the
//! entire PRNG state needed to resume.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ParallelBatch, ParallelCorpus};
use crate::error::{Error, Result};
use crate::eval::retrieval_accuracy;
use crate::labels::{
    average_labels, hard_labels, priority_labels, select_anchor, LabelMatrix, LabelMode,
    LanguagePriority,
};
use crate::loss::{total_loss, LossConfig};
use crate::model::{encoder_gradient_step, StudentEncoder, TeacherOracle};
use crate::rng::{rng_from_seed, shuffle, stable_hash64};

/// AdamW hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Per-tensor optimizer state: first and second moment estimates plus the
/// step counter used for bias correction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamWState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamWState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One decoupled-weight-decay adaptive update, in place.
pub fn adamw_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamWState,
    lr: f64,
    hp: &AdamWParams,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adamw: {} params, {} grads, {} state entries",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(idx) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!(
            "gradient entry {idx} is {} at optimizer step {}",
            grads[idx],
            state.step + 1
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - hp.beta1.powi(t);
    let bc2 = 1.0 - hp.beta2.powi(t);
    for i in 0..params.len() {
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grads[i];
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * (m_hat / (v_hat.sqrt() + hp.epsilon) + hp.weight_decay * params[i]);
    }
    Ok(())
}

/// Linearly decayed learning rate: lr0 * (1 - step / total_steps).
pub fn lr_schedule(step: usize, total_steps: usize, lr0: f64) -> Result<f64> {
    if total_steps == 0 {
        return Err(Error::Config("lr schedule needs total_steps >= 1".into()));
    }
    if step > total_steps {
        return Err(Error::Config(format!(
            "lr schedule step {step} exceeds total_steps {total_steps}"
        )));
    }
    Ok(lr0 * (1.0 - step as f64 / total_steps as f64))
}

/// Concatenate equal-sized shard batches in shard order. Loss denominators
/// later range over the pooled batch, so every pooled sentence is a
/// negative for every other.
pub fn pool_shards(shard_batches: &[ParallelBatch]) -> Result<ParallelBatch> {
    let first = shard_batches
        .first()
        .ok_or_else(|| Error::Shape("cannot pool zero shards".into()))?;
    let mut src = Vec::new();
    let mut tgt = Vec::new();
    for shard in shard_batches {
        if shard.len() != first.len() {
            return Err(Error::Shape(format!(
                "ragged shards: {} vs {}",
                shard.len(),
                first.len()
            )));
        }
        if shard.src_lang != first.src_lang || shard.tgt_lang != first.tgt_lang {
            return Err(Error::Shape("shards with mixed language pairs".into()));
        }
        src.extend(shard.src.iter().cloned());
        tgt.extend(shard.tgt.iter().cloned());
    }
    ParallelBatch::new(&first.src_lang, &first.tgt_lang, src, tgt)
}

/// Trainer configuration. Defaults follow the training protocol: 30 epochs,
/// global batch 32 over 2 shards, initial learning rate 5e-3 with linear
/// decay, AdamW.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub max_epochs: usize,
    pub global_batch: usize,
    pub shards: usize,
    pub lr0: f64,
    pub adamw: AdamWParams,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub loss: LossConfig,
    pub priority: LanguagePriority,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            max_epochs: 30,
            global_batch: 32,
            shards: 2,
            lr0: 5e-3,
            adamw: AdamWParams::default(),
            patience: 3,
            seed: 7,
            loss: LossConfig::default(),
            priority: LanguagePriority::default_order(),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.global_batch == 0
            || self.shards == 0
            || !self.global_batch.is_multiple_of(self.shards)
        {
            return Err(Error::Config(format!(
                "global_batch {} must be a positive multiple of shards {}",
                self.global_batch, self.shards
            )));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if self.lr0 < 0.0 || !self.lr0.is_finite() {
            return Err(Error::Config(format!("lr0 must be >= 0, got {}", self.lr0)));
        }
        self.loss.validate()
    }
}

/// One completed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_total: f64,
    pub mean_row: f64,
    pub mean_col: f64,
    pub mean_cross: f64,
    pub mean_mono: f64,
    pub val_accuracy: f64,
    /// Learning rate of the last step in the epoch.
    pub lr: f64,
}

/// Training trace: one record per completed epoch plus the step-0 loss and
/// the untrained validation accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub step0_loss: Option<f64>,
    pub initial_val_accuracy: f64,
    pub best_epoch: Option<usize>,
    pub best_val_accuracy: f64,
    pub stopped_early: bool,
    pub epochs: Vec<EpochRecord>,
}

fn batch_labels(
    batch: &ParallelBatch,
    teacher: &TeacherOracle,
    cfg: &LossConfig,
    priority: &LanguagePriority,
) -> Result<LabelMatrix> {
    match cfg.mode {
        LabelMode::Hard => hard_labels(batch.len()),
        LabelMode::Priority => {
            let anchor = select_anchor(&batch.src_lang, &batch.tgt_lang, priority)?;
            let sentences = if anchor == batch.src_lang {
                &batch.src
            } else {
                &batch.tgt
            };
            let anchor_emb = teacher.embed_batch(sentences, anchor)?;
            priority_labels(&anchor_emb, cfg.temperature)
        }
        LabelMode::Average => {
            let src_emb = teacher.embed_batch(&batch.src, &batch.src_lang)?;
            let tgt_emb = teacher.embed_batch(&batch.tgt, &batch.tgt_lang)?;
            average_labels(&src_emb, &tgt_emb, cfg.temperature)
        }
    }
}

fn check_teacher_coverage(
    corpora: &[ParallelCorpus],
    teacher: &TeacherOracle,
    cfg: &TrainerConfig,
) -> Result<()> {
    for corpus in corpora {
        match cfg.loss.mode {
            LabelMode::Hard => {}
            LabelMode::Priority => {
                let anchor = select_anchor(&corpus.src_lang, &corpus.tgt_lang, &cfg.priority)?;
                if !teacher.covers(anchor) {
                    return Err(Error::Config(format!(
                        "priority labels need the teacher to cover anchor language '{anchor}'"
                    )));
                }
            }
            LabelMode::Average => {
                for lang in [&corpus.src_lang, &corpus.tgt_lang] {
                    if !teacher.covers(lang) {
                        return Err(Error::Config(format!(
                            "average labels need a teacher covering language '{lang}'"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn validation_accuracy(student: &StudentEncoder, valid: &ParallelCorpus) -> Result<f64> {
    let src: Vec<&str> = valid.pairs.iter().map(|(s, _)| s.as_str()).collect();
    let tgt: Vec<&str> = valid.pairs.iter().map(|(_, t)| t.as_str()).collect();
    let src_emb = student.encode_batch(&src)?;
    let tgt_emb = student.encode_batch(&tgt)?;
    let gold: Vec<usize> = (0..valid.len()).collect();
    let (_, _, avg) = retrieval_accuracy(&src_emb, &tgt_emb, &gold)?;
    Ok(avg)
}

/// Train the student on the given corpora, early-stopping on validation
/// retrieval accuracy, and return the best-validation checkpoint with the
/// per-epoch history.
///
/// Batches are drawn round-robin across corpora. Each step draws one global
/// batch, splits it into shards, pools them back (pure concatenation),
/// builds teacher labels for the pooled batch, and applies one AdamW update
/// at the scheduled learning rate. The teacher is never mutated and labels
/// are never backpropagated through.
pub fn fit(
    student: StudentEncoder,
    corpora: &[ParallelCorpus],
    teacher: &TeacherOracle,
    valid: &ParallelCorpus,
    cfg: &TrainerConfig,
) -> Result<(StudentEncoder, TrainHistory)> {
    cfg.validate()?;
    if corpora.is_empty() {
        return Err(Error::Config("no training corpora".into()));
    }
    if corpora.iter().any(ParallelCorpus::is_empty) {
        return Err(Error::Config("empty training corpus".into()));
    }
    if valid.is_empty() {
        return Err(Error::Config("empty validation corpus".into()));
    }
    check_teacher_coverage(corpora, teacher, cfg)?;

    let mut student = student;
    let initial_val_accuracy = validation_accuracy(&student, valid)?;
    let mut history = TrainHistory {
        step0_loss: None,
        initial_val_accuracy,
        best_epoch: None,
        best_val_accuracy: f64::NEG_INFINITY,
        stopped_early: false,
        epochs: Vec::new(),
    };

    let steps_per_epoch: usize = corpora.iter().map(|c| c.len() / cfg.global_batch).sum();
    if cfg.max_epochs == 0 {
        history.best_val_accuracy = initial_val_accuracy;
        return Ok((student, history));
    }
    if steps_per_epoch == 0 {
        return Err(Error::Config(format!(
            "no corpus holds a full global batch of {}",
            cfg.global_batch
        )));
    }
    let total_steps = cfg.max_epochs * steps_per_epoch;

    let mut best_encoder = student.clone();
    let mut no_improve = 0usize;
    let mut step = 0usize;
    let mut table_state = AdamWState::new(student.token_table().data().len());
    let mut proj_state = AdamWState::new(student.projection().data().len());

    for epoch in 1..=cfg.max_epochs {
        let mut epoch_rng = rng_from_seed(stable_hash64(&[
            &cfg.seed.to_le_bytes(),
            b"epoch",
            &(epoch as u64).to_le_bytes(),
        ]));
        // per-corpus shuffled orders, then batches interleaved round-robin
        let orders: Vec<Vec<usize>> = corpora
            .iter()
            .map(|c| {
                let mut idx: Vec<usize> = (0..c.len()).collect();
                shuffle(&mut epoch_rng, &mut idx);
                idx
            })
            .collect();
        let batch_counts: Vec<usize> = corpora.iter().map(|c| c.len() / cfg.global_batch).collect();
        let max_batches = batch_counts.iter().copied().max().unwrap_or(0);

        let mut sums = [0.0f64; 5]; // total, row, col, cross, mono
        let mut steps_this_epoch = 0usize;
        let mut last_lr = 0.0;

        for round in 0..max_batches {
            for (ci, corpus) in corpora.iter().enumerate() {
                if round >= batch_counts[ci] {
                    continue;
                }
                let start = round * cfg.global_batch;
                let ids = &orders[ci][start..start + cfg.global_batch];

                // emulated cross-accelerator sharding: equal contiguous
                // shard batches pooled back in shard order
                let per_shard = cfg.global_batch / cfg.shards;
                let shards: Vec<ParallelBatch> = (0..cfg.shards)
                    .map(|s| {
                        let slice = &ids[s * per_shard..(s + 1) * per_shard];
                        ParallelBatch::new(
                            &corpus.src_lang,
                            &corpus.tgt_lang,
                            slice.iter().map(|&i| corpus.pairs[i].0.clone()).collect(),
                            slice.iter().map(|&i| corpus.pairs[i].1.clone()).collect(),
                        )
                    })
                    .collect::<Result<_>>()?;
                let pooled = pool_shards(&shards)?;

                let labels = batch_labels(&pooled, teacher, &cfg.loss, &cfg.priority)?;
                let src_ids: Vec<Vec<usize>> =
                    pooled.src.iter().map(|s| student.token_ids(s)).collect();
                let tgt_ids: Vec<Vec<usize>> =
                    pooled.tgt.iter().map(|s| student.token_ids(s)).collect();
                let src_emb = student.encode_id_batch(&src_ids)?;
                let tgt_emb = student.encode_id_batch(&tgt_ids)?;

                let bundle = total_loss(&src_emb, &tgt_emb, &labels, &cfg.loss)?;
                if !bundle.total.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "loss diverged at epoch {epoch}, step {step}"
                    )));
                }
                if step == 0 {
                    history.step0_loss = Some(bundle.total);
                }

                let lr = lr_schedule(step, total_steps, cfg.lr0)?;
                last_lr = lr;
                encoder_gradient_step(
                    &mut student,
                    &src_ids,
                    &bundle.grad_src,
                    &tgt_ids,
                    &bundle.grad_tgt,
                    |enc, grads| {
                        let (table, proj) = enc.params_mut();
                        adamw_step(
                            table,
                            grads.token_table.data(),
                            &mut table_state,
                            lr,
                            &cfg.adamw,
                        )?;
                        adamw_step(
                            proj,
                            grads.projection.data(),
                            &mut proj_state,
                            lr,
                            &cfg.adamw,
                        )
                    },
                )?;

                sums[0] += bundle.total;
                sums[1] += bundle.l_row;
                sums[2] += bundle.l_col;
                sums[3] += bundle.l_cross;
                sums[4] += bundle.l_mono;
                steps_this_epoch += 1;
                step += 1;
            }
        }

        let denom = steps_this_epoch as f64;
        let val_accuracy = validation_accuracy(&student, valid)?;
        history.epochs.push(EpochRecord {
            epoch,
            mean_total: sums[0] / denom,
            mean_row: sums[1] / denom,
            mean_col: sums[2] / denom,
            mean_cross: sums[3] / denom,
            mean_mono: sums[4] / denom,
            val_accuracy,
            lr: last_lr,
        });

        if val_accuracy > history.best_val_accuracy {
            history.best_val_accuracy = val_accuracy;
            history.best_epoch = Some(epoch);
            best_encoder = student.clone();
            no_improve = 0;
        } else {
            no_improve += 1;
            if no_improve >= cfg.patience {
                history.stopped_early = true;
                break;
            }
        }
    }

    Ok((best_encoder, history))
}

/// Versioned container: everything needed to evaluate or resume a run.
/// The per-epoch PRNG is derived from (seed, epoch), so `seed` together
/// with `epochs_trained` is the resumable generator state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub encoder: StudentEncoder,
    pub config: TrainerConfig,
    pub epochs_trained: usize,
}

pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let json = serde_json::to_string_pretty(checkpoint)
        .map_err(|e| Error::Data(format!("checkpoint serialization: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)?;
    let mut checkpoint: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("checkpoint parse: {e}")))?;
    if checkpoint.version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!(
            "unsupported checkpoint version {}",
            checkpoint.version
        )));
    }
    // the vocab's lookup index is not serialized
    checkpoint.encoder = {
        let enc = checkpoint.encoder;
        let mut vocab = enc.vocab().clone();
        vocab.rebuild_index();
        StudentEncoder::from_parameters(vocab, enc.token_table().clone(), enc.projection().clone())?
    };
    Ok(checkpoint)
}
