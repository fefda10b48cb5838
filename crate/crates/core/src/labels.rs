//! Target matrices for the contrastive loss.
//!
//! Three labelings are supported for a batch of N translation pairs:
//!
//! - hard: the identity matrix — pair (i, j) is positive only when i = j;
//! - priority: row softmax of the teacher's similarity matrix for the
//!   anchor language (the higher-priority language of the pair);
//! - average: row softmax of the mean of the two mono-lingual teacher
//!   similarity matrices, which requires a teacher covering both languages.
//!
//! Every label matrix is row-stochastic: entries in [0, 1], rows summing to
//! 1 within 1e-12.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{row_softmax, scaled_similarity_matrix, EmbeddingMatrix, Matrix};

/// Which labeling produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    Hard,
    Priority,
    Average,
}

impl std::fmt::Display for LabelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelMode::Hard => write!(f, "hard"),
            LabelMode::Priority => write!(f, "priority"),
            LabelMode::Average => write!(f, "average"),
        }
    }
}

impl std::str::FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hard" => Ok(LabelMode::Hard),
            "priority" => Ok(LabelMode::Priority),
            "average" => Ok(LabelMode::Average),
            other => Err(Error::Config(format!(
                "unknown label mode '{other}' (expected hard, priority, or average)"
            ))),
        }
    }
}

/// N x N row-stochastic target matrix w(i, j).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    mat: Matrix,
    mode: LabelMode,
}

impl LabelMatrix {
    /// Wrap a matrix, validating row-stochasticity.
    pub fn from_matrix(mat: Matrix, mode: LabelMode) -> Result<Self> {
        if mat.rows() != mat.cols() || mat.rows() == 0 {
            return Err(Error::Shape(format!(
                "label matrix must be square and nonempty, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        for i in 0..mat.rows() {
            let mut sum = 0.0;
            for &v in mat.row(i) {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Domain(format!(
                        "label entry {v} outside [0, 1] in row {i}"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "label row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { mat, mode })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.mat.rows()
    }

    #[inline]
    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.mat
    }
}

/// Ordered language identifiers, highest priority first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguagePriority {
    order: Vec<String>,
}

impl LanguagePriority {
    pub fn new(order: Vec<String>) -> Result<Self> {
        if order.is_empty() {
            return Err(Error::Config("priority order must be nonempty".into()));
        }
        for (i, lang) in order.iter().enumerate() {
            if order[..i].contains(lang) {
                return Err(Error::Config(format!(
                    "duplicate language '{lang}' in priority order"
                )));
            }
        }
        Ok(Self { order })
    }

    /// Default order: en, ru, ja, fr, ko (largest training corpus first).
    pub fn default_order() -> Self {
        Self {
            order: ["en", "ru", "ja", "fr", "ko"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }

    pub fn rank(&self, lang: &str) -> Option<usize> {
        self.order.iter().position(|l| l == lang)
    }

    pub fn languages(&self) -> &[String] {
        &self.order
    }
}

/// Identity labels of size n (every pair is its own sole positive).
pub fn hard_labels(n: usize) -> Result<LabelMatrix> {
    if n == 0 {
        return Err(Error::Domain("hard labels need n >= 1".into()));
    }
    let mut mat = Matrix::zeros(n, n);
    for i in 0..n {
        mat.set(i, i, 1.0);
    }
    Ok(LabelMatrix {
        mat,
        mode: LabelMode::Hard,
    })
}

/// Of two distinct languages, the one appearing earlier in `priority`.
pub fn select_anchor<'a>(
    lang_a: &'a str,
    lang_b: &'a str,
    priority: &LanguagePriority,
) -> Result<&'a str> {
    if lang_a == lang_b {
        return Err(Error::Domain(format!(
            "anchor selection needs two distinct languages, got '{lang_a}' twice"
        )));
    }
    let ra = priority
        .rank(lang_a)
        .ok_or_else(|| Error::Config(format!("language '{lang_a}' not in priority order")))?;
    let rb = priority
        .rank(lang_b)
        .ok_or_else(|| Error::Config(format!("language '{lang_b}' not in priority order")))?;
    Ok(if ra < rb { lang_a } else { lang_b })
}

/// Soft labels from the anchor language alone: row softmax of the teacher's
/// scaled self-similarity matrix.
pub fn priority_labels(anchor_teacher: &EmbeddingMatrix, tau: f64) -> Result<LabelMatrix> {
    let sim = scaled_similarity_matrix(anchor_teacher, anchor_teacher, tau)?;
    let mat = row_softmax(sim.as_matrix())?;
    Ok(LabelMatrix {
        mat,
        mode: LabelMode::Priority,
    })
}

/// Soft labels from both mono-lingual teacher spaces: row softmax of the
/// entrywise mean of the two scaled self-similarity matrices.
pub fn average_labels(
    src_teacher: &EmbeddingMatrix,
    tgt_teacher: &EmbeddingMatrix,
    tau: f64,
) -> Result<LabelMatrix> {
    if src_teacher.rows() != tgt_teacher.rows() {
        return Err(Error::Shape(format!(
            "teacher row counts differ: {} vs {}",
            src_teacher.rows(),
            tgt_teacher.rows()
        )));
    }
    let sim_s = scaled_similarity_matrix(src_teacher, src_teacher, tau)?;
    let sim_t = scaled_similarity_matrix(tgt_teacher, tgt_teacher, tau)?;
    let n = sim_s.size();
    let mut avg = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            avg.set(i, j, (sim_s.get(i, j) + sim_t.get(i, j)) / 2.0);
        }
    }
    let mat = row_softmax(&avg)?;
    Ok(LabelMatrix {
        mat,
        mode: LabelMode::Average,
    })
}
