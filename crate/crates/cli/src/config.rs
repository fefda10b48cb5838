//! Flat key=value run configuration.
//!
//! The format is line-oriented so experiment configs diff cleanly: one
//! `key = value` per line, `#` comments, repeatable keys where noted.
//! Documented keys (defaults in parentheses):
//!
//! ```text
//! corpus = SRC,TGT,PATH          # repeatable; one parallel corpus per line
//! teacher_table = PATH           # file-backed teacher, or:
//! teacher_synthetic_dim = D      # seeded synthetic teacher of dim D
//! label_mode = priority          # hard | priority | average (priority)
//! priority = en,ru,ja,fr,ko      # anchor order, highest first
//! temperature = 0.1              # tau (0.1)
//! lambda = 0.1                   # cross-lingual weight under tcm (0.1)
//! tcm = false                    # add the mono-lingual loss (false)
//! student_dim = 96               # student embedding dim (96)
//! min_count = 1                  # vocabulary count threshold (1)
//! max_epochs = 30                # (30)
//! global_batch = 32              # (32)
//! shards = 2                     # (2); must divide global_batch
//! lr0 = 0.005                    # initial learning rate (5e-3)
//! beta1 = 0.9                    # AdamW (0.9)
//! beta2 = 0.999                  # AdamW (0.999)
//! epsilon = 1e-8                 # AdamW (1e-8)
//! weight_decay = 0.01            # AdamW decoupled decay (0.01)
//! patience = 3                   # early-stopping patience (3)
//! seed = 7                       # (7)
//! n_total = N                    # pairs sampled per corpus (required)
//! n_train = N                    # train pairs per corpus (required, < n_total)
//! overlap_filter = PATH          # repeatable; TSVs whose sentences are
//!                                # removed from every train split
//! out = DIR                      # base output directory (runs)
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use softdistill::error::{Error, Result};
use softdistill::labels::{LabelMode, LanguagePriority};
use softdistill::loss::LossConfig;
use softdistill::trainer::{AdamWParams, TrainerConfig};

/// One configured corpus: language pair plus file path.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub src_lang: String,
    pub tgt_lang: String,
    pub path: PathBuf,
}

/// Where teacher embeddings come from.
#[derive(Debug, Clone)]
pub enum TeacherSource {
    Table(PathBuf),
    Synthetic { dim: usize },
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpora: Vec<CorpusEntry>,
    pub teacher: TeacherSource,
    pub label_mode: LabelMode,
    pub priority: LanguagePriority,
    pub temperature: f64,
    pub lambda: f64,
    pub tcm: bool,
    pub student_dim: usize,
    pub min_count: usize,
    pub max_epochs: usize,
    pub global_batch: usize,
    pub shards: usize,
    pub lr0: f64,
    pub adamw: AdamWParams,
    pub patience: usize,
    pub seed: u64,
    pub n_total: usize,
    pub n_train: usize,
    pub overlap_filters: Vec<PathBuf>,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn trainer_config(&self) -> TrainerConfig {
        TrainerConfig {
            max_epochs: self.max_epochs,
            global_batch: self.global_batch,
            shards: self.shards,
            lr0: self.lr0,
            adamw: self.adamw,
            patience: self.patience,
            seed: self.seed,
            loss: LossConfig {
                temperature: self.temperature,
                lambda: self.lambda,
                mode: self.label_mode,
                tcm: self.tcm,
            },
            priority: self.priority.clone(),
        }
    }

    /// Parse a config file and validate it. Referenced paths must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut corpora = Vec::new();
        let mut overlap_filters = Vec::new();
        let mut single: BTreeMap<String, String> = BTreeMap::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "corpus" => {
                    let mut parts = value.splitn(3, ',');
                    match (parts.next(), parts.next(), parts.next()) {
                        (Some(s), Some(t), Some(p)) => corpora.push(CorpusEntry {
                            src_lang: s.trim().to_string(),
                            tgt_lang: t.trim().to_string(),
                            path: base.join(p.trim()),
                        }),
                        _ => {
                            return Err(Error::Config(format!(
                                "config line {}: corpus needs SRC,TGT,PATH",
                                lineno + 1
                            )))
                        }
                    }
                }
                "overlap_filter" => overlap_filters.push(base.join(value)),
                _ => {
                    if single.insert(key.to_string(), value.to_string()).is_some() {
                        return Err(Error::Config(format!(
                            "config line {}: duplicate key '{key}'",
                            lineno + 1
                        )));
                    }
                }
            }
        }

        let known = [
            "teacher_table",
            "teacher_synthetic_dim",
            "label_mode",
            "priority",
            "temperature",
            "lambda",
            "tcm",
            "student_dim",
            "min_count",
            "max_epochs",
            "global_batch",
            "shards",
            "lr0",
            "beta1",
            "beta2",
            "epsilon",
            "weight_decay",
            "patience",
            "seed",
            "n_total",
            "n_train",
            "out",
        ];
        for key in single.keys() {
            if !known.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown config key '{key}'")));
            }
        }

        fn get<T: std::str::FromStr>(
            map: &BTreeMap<String, String>,
            key: &str,
            default: T,
        ) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            match map.get(key) {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|e| Error::Config(format!("config key '{key}': {e}"))),
            }
        }

        let teacher = match (
            single.get("teacher_table"),
            single.get("teacher_synthetic_dim"),
        ) {
            (Some(p), None) => TeacherSource::Table(base.join(p)),
            (None, Some(d)) => TeacherSource::Synthetic {
                dim: d
                    .parse()
                    .map_err(|e| Error::Config(format!("teacher_synthetic_dim: {e}")))?,
            },
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either teacher_table or teacher_synthetic_dim, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "a teacher is required: set teacher_table or teacher_synthetic_dim".into(),
                ))
            }
        };

        let label_mode: LabelMode = match single.get("label_mode") {
            None => LabelMode::Priority,
            Some(v) => v.parse()?,
        };
        let priority = match single.get("priority") {
            None => LanguagePriority::default_order(),
            Some(v) => LanguagePriority::new(
                v.split(',')
                    .map(|s| s.trim().to_string())
                    .collect::<Vec<_>>(),
            )?,
        };

        let n_total: usize = match single.get("n_total") {
            Some(v) => v
                .parse()
                .map_err(|e| Error::Config(format!("n_total: {e}")))?,
            None => return Err(Error::Config("n_total is required".into())),
        };
        let n_train: usize = match single.get("n_train") {
            Some(v) => v
                .parse()
                .map_err(|e| Error::Config(format!("n_train: {e}")))?,
            None => return Err(Error::Config("n_train is required".into())),
        };

        let cfg = Self {
            corpora,
            teacher,
            label_mode,
            priority,
            temperature: get(&single, "temperature", 0.1)?,
            lambda: get(&single, "lambda", 0.1)?,
            tcm: get(&single, "tcm", false)?,
            student_dim: get(&single, "student_dim", 96)?,
            min_count: get(&single, "min_count", 1)?,
            max_epochs: get(&single, "max_epochs", 30)?,
            global_batch: get(&single, "global_batch", 32)?,
            shards: get(&single, "shards", 2)?,
            lr0: get(&single, "lr0", 5e-3)?,
            adamw: AdamWParams {
                beta1: get(&single, "beta1", 0.9)?,
                beta2: get(&single, "beta2", 0.999)?,
                epsilon: get(&single, "epsilon", 1e-8)?,
                weight_decay: get(&single, "weight_decay", 0.01)?,
            },
            patience: get(&single, "patience", 3)?,
            seed: get(&single, "seed", 7)?,
            n_total,
            n_train,
            overlap_filters,
            out: base.join(single.get("out").map(String::as_str).unwrap_or("runs")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.corpora.is_empty() {
            return Err(Error::Config("at least one corpus is required".into()));
        }
        for entry in &self.corpora {
            if !entry.path.exists() {
                return Err(Error::Config(format!(
                    "corpus path does not exist: {}",
                    entry.path.display()
                )));
            }
        }
        if let TeacherSource::Table(p) = &self.teacher {
            if !p.exists() {
                return Err(Error::Config(format!(
                    "teacher_table path does not exist: {}",
                    p.display()
                )));
            }
        }
        for p in &self.overlap_filters {
            if !p.exists() {
                return Err(Error::Config(format!(
                    "overlap_filter path does not exist: {}",
                    p.display()
                )));
            }
        }
        if self.n_train == 0 || self.n_train >= self.n_total {
            return Err(Error::Config(format!(
                "need 1 <= n_train < n_total, got n_train={} n_total={}",
                self.n_train, self.n_total
            )));
        }
        self.trainer_config().validate()
    }

    /// Canonical key=value echo of the resolved configuration, used for the
    /// run-directory hash and written next to the run outputs.
    pub fn echo(&self) -> String {
        let mut lines = Vec::new();
        for c in &self.corpora {
            lines.push(format!(
                "corpus = {},{},{}",
                c.src_lang,
                c.tgt_lang,
                c.path.display()
            ));
        }
        match &self.teacher {
            TeacherSource::Table(p) => lines.push(format!("teacher_table = {}", p.display())),
            TeacherSource::Synthetic { dim } => {
                lines.push(format!("teacher_synthetic_dim = {dim}"))
            }
        }
        lines.push(format!("label_mode = {}", self.label_mode));
        lines.push(format!(
            "priority = {}",
            self.priority.languages().join(",")
        ));
        lines.push(format!("temperature = {}", self.temperature));
        lines.push(format!("lambda = {}", self.lambda));
        lines.push(format!("tcm = {}", self.tcm));
        lines.push(format!("student_dim = {}", self.student_dim));
        lines.push(format!("min_count = {}", self.min_count));
        lines.push(format!("max_epochs = {}", self.max_epochs));
        lines.push(format!("global_batch = {}", self.global_batch));
        lines.push(format!("shards = {}", self.shards));
        lines.push(format!("lr0 = {}", self.lr0));
        lines.push(format!("beta1 = {}", self.adamw.beta1));
        lines.push(format!("beta2 = {}", self.adamw.beta2));
        lines.push(format!("epsilon = {}", self.adamw.epsilon));
        lines.push(format!("weight_decay = {}", self.adamw.weight_decay));
        lines.push(format!("patience = {}", self.patience));
        lines.push(format!("seed = {}", self.seed));
        lines.push(format!("n_total = {}", self.n_total));
        lines.push(format!("n_train = {}", self.n_train));
        for p in &self.overlap_filters {
            lines.push(format!("overlap_filter = {}", p.display()));
        }
        lines.push(format!("out = {}", self.out.display()));
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_corpus(dir: &Path) -> PathBuf {
        let p = dir.join("c.tsv");
        std::fs::write(&p, "a\tb\nc\td\ne\tf\n").unwrap();
        p
    }

    #[test]
    fn parses_minimal_config() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path());
        let text = "corpus = aa,bb,c.tsv\nteacher_synthetic_dim = 8\nn_total = 3\nn_train = 2\n";
        let cfg = RunConfig::parse(text, dir.path()).unwrap();
        assert_eq!(cfg.corpora.len(), 1);
        assert_eq!(cfg.lr0, 5e-3);
        assert_eq!(cfg.global_batch, 32);
        assert_eq!(cfg.temperature, 0.1);
        assert_eq!(cfg.lambda, 0.1);
        assert!(!cfg.tcm);
    }

    #[test]
    fn rejects_unknown_keys_and_missing_paths() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path());
        let bad_key =
            "corpus = aa,bb,c.tsv\nteacher_synthetic_dim = 8\nn_total = 3\nn_train = 2\nbogus = 1\n";
        assert!(RunConfig::parse(bad_key, dir.path()).is_err());

        let missing =
            "corpus = aa,bb,nope.tsv\nteacher_synthetic_dim = 8\nn_total = 3\nn_train = 2\n";
        assert!(RunConfig::parse(missing, dir.path()).is_err());

        let no_teacher = "corpus = aa,bb,c.tsv\nn_total = 3\nn_train = 2\n";
        assert!(RunConfig::parse(no_teacher, dir.path()).is_err());
    }

    #[test]
    fn echo_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path());
        let text = "corpus = aa,bb,c.tsv\nteacher_synthetic_dim = 8\nn_total = 3\nn_train = 2\n";
        let a = RunConfig::parse(text, dir.path()).unwrap().echo();
        let b = RunConfig::parse(text, dir.path()).unwrap().echo();
        assert_eq!(a, b);
    }
}
