//! The trainable student encoder and the frozen teacher oracle.
//!
//! The student is deliberately small: mean-pooled token embeddings followed
//! by a linear projection. That is the minimum trainable encoder that makes
//! the distillation losses exercise real parameter learning while keeping
//! gradient verification exact and runtimes in seconds.
//!
//! The teacher is immutable and deterministic: the same (sentence, language)
//! always yields the identical unit-norm embedding, whether it comes from a
//! file-backed table or the seeded synthetic generator.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{gaussian_vec, rng_from_seed, stable_hash64};
use crate::simcore::{EmbeddingMatrix, Matrix};

/// Lowercase + whitespace tokenization.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(|t| t.to_lowercase()).collect()
}

/// Token-to-id map with dense ids; id 0 is reserved for unknown tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocab {
    pub const UNKNOWN: &'static str = "<unk>";

    /// Build from tokens ordered by id, excluding the unknown sentinel.
    pub fn from_ordered_tokens(tokens: Vec<String>) -> Self {
        let mut all = Vec::with_capacity(tokens.len() + 1);
        all.push(Self::UNKNOWN.to_string());
        all.extend(tokens);
        let index = all
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens: all, index }
    }

    /// Rebuild the lookup index after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    /// Id of a token; unknown tokens map to 0.
    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}

/// Trainable encoder: mean of token embeddings followed by a d x d linear
/// projection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudentEncoder {
    vocab: Vocab,
    token_table: Matrix,
    projection: Matrix,
    dim: usize,
}

/// Parameter-space gradients matching the encoder's two tensors.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub token_table: Matrix,
    pub projection: Matrix,
}

impl StudentEncoder {
    /// Seeded Gaussian initialization (std 0.1) for both tensors.
    pub fn new_seeded(vocab: Vocab, dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!(
                "student dim must be >= 2, got {dim}"
            )));
        }
        let mut rng = rng_from_seed(stable_hash64(&[&seed.to_le_bytes(), b"student-init"]));
        let v = vocab.size();
        let token_table = Matrix::from_vec(v, dim, gaussian_vec(&mut rng, v * dim, 0.1))?;
        let projection = Matrix::from_vec(dim, dim, gaussian_vec(&mut rng, dim * dim, 0.1))?;
        Ok(Self {
            vocab,
            token_table,
            projection,
            dim,
        })
    }

    /// Explicit parameters (used by tests).
    pub fn from_parameters(vocab: Vocab, token_table: Matrix, projection: Matrix) -> Result<Self> {
        let dim = token_table.cols();
        if token_table.rows() != vocab.size() {
            return Err(Error::Shape(format!(
                "token table has {} rows for a vocab of {}",
                token_table.rows(),
                vocab.size()
            )));
        }
        if projection.rows() != dim || projection.cols() != dim {
            return Err(Error::Shape(format!(
                "projection must be {dim}x{dim}, got {}x{}",
                projection.rows(),
                projection.cols()
            )));
        }
        if dim < 2 {
            return Err(Error::Config(format!(
                "student dim must be >= 2, got {dim}"
            )));
        }
        if !token_table.is_finite() || !projection.is_finite() {
            return Err(Error::NonFinite("encoder parameter".into()));
        }
        Ok(Self {
            vocab,
            token_table,
            projection,
            dim,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn token_table(&self) -> &Matrix {
        &self.token_table
    }

    pub fn projection(&self) -> &Matrix {
        &self.projection
    }

    /// Mutable views of the two flat parameter vectors, for the optimizer.
    pub fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (self.token_table.data_mut(), self.projection.data_mut())
    }

    pub fn token_ids(&self, text: &str) -> Vec<usize> {
        self.vocab.ids(&tokenize(text))
    }

    /// Encode one sentence given token ids: projection x mean(token rows).
    pub fn encode_ids(&self, ids: &[usize]) -> Result<Vec<f64>> {
        if ids.is_empty() {
            return Err(Error::Domain("cannot encode an empty sentence".into()));
        }
        let d = self.dim;
        let mut mean = vec![0.0; d];
        for &id in ids {
            let row = self.token_table.row(id);
            for k in 0..d {
                mean[k] += row[k];
            }
        }
        let inv = 1.0 / ids.len() as f64;
        for v in mean.iter_mut() {
            *v *= inv;
        }
        let mut out = vec![0.0; d];
        for a in 0..d {
            let prow = self.projection.row(a);
            let mut acc = 0.0;
            for b in 0..d {
                acc += prow[b] * mean[b];
            }
            out[a] = acc;
        }
        Ok(out)
    }

    pub fn encode_text(&self, text: &str) -> Result<Vec<f64>> {
        self.encode_ids(&self.token_ids(text))
    }

    /// Row-wise encode, preserving order.
    pub fn encode_batch<S: AsRef<str>>(&self, sentences: &[S]) -> Result<EmbeddingMatrix> {
        let rows: Result<Vec<Vec<f64>>> = sentences
            .iter()
            .map(|s| self.encode_text(s.as_ref()))
            .collect();
        EmbeddingMatrix::new(Matrix::from_rows(&rows?)?)
    }

    pub fn encode_id_batch(&self, batch: &[Vec<usize>]) -> Result<EmbeddingMatrix> {
        let rows: Result<Vec<Vec<f64>>> = batch.iter().map(|ids| self.encode_ids(ids)).collect();
        EmbeddingMatrix::new(Matrix::from_rows(&rows?)?)
    }

    /// Chain embedding-space gradients back to the two parameter tensors.
    ///
    /// For sentence i with mean-pooled token vector m_i and output gradient
    /// g_i: dP += g_i m_i^T, and every occurrence of token t contributes
    /// (P^T g_i) / len_i to the token row t.
    pub fn param_gradients(&self, batches: &[(&[Vec<usize>], &Matrix)]) -> Result<ParamGrads> {
        let d = self.dim;
        let mut g_table = Matrix::zeros(self.token_table.rows(), d);
        let mut g_proj = Matrix::zeros(d, d);
        for (ids_batch, grad) in batches {
            if grad.rows() != ids_batch.len() || grad.cols() != d {
                return Err(Error::Shape(format!(
                    "gradient is {}x{} for a batch of {} sentences of dim {d}",
                    grad.rows(),
                    grad.cols(),
                    ids_batch.len()
                )));
            }
            for (i, ids) in ids_batch.iter().enumerate() {
                if ids.is_empty() {
                    return Err(Error::Domain("cannot backprop an empty sentence".into()));
                }
                let gy = grad.row(i);
                // recompute the pooled mean
                let mut mean = vec![0.0; d];
                for &id in ids {
                    let row = self.token_table.row(id);
                    for k in 0..d {
                        mean[k] += row[k];
                    }
                }
                let inv = 1.0 / ids.len() as f64;
                for v in mean.iter_mut() {
                    *v *= inv;
                }
                // dP[a][b] += gy[a] * mean[b]
                for a in 0..d {
                    let row = g_proj.row_mut(a);
                    for b in 0..d {
                        row[b] += gy[a] * mean[b];
                    }
                }
                // dmean = P^T gy, spread over token occurrences
                let mut dmean = vec![0.0; d];
                for a in 0..d {
                    let prow = self.projection.row(a);
                    for b in 0..d {
                        dmean[b] += prow[b] * gy[a];
                    }
                }
                for &id in ids.iter() {
                    let row = g_table.row_mut(id);
                    for k in 0..d {
                        row[k] += dmean[k] * inv;
                    }
                }
            }
        }
        Ok(ParamGrads {
            token_table: g_table,
            projection: g_proj,
        })
    }
}

/// One training step's parameter update: compute parameter gradients from
/// the source and target embedding gradients, then let `update` apply the
/// deltas (typically an optimizer step).
pub fn encoder_gradient_step<F>(
    enc: &mut StudentEncoder,
    src_ids: &[Vec<usize>],
    grad_src: &Matrix,
    tgt_ids: &[Vec<usize>],
    grad_tgt: &Matrix,
    update: F,
) -> Result<()>
where
    F: FnOnce(&mut StudentEncoder, &ParamGrads) -> Result<()>,
{
    let grads = enc.param_gradients(&[(src_ids, grad_src), (tgt_ids, grad_tgt)])?;
    update(enc, &grads)
}

/// Where teacher embeddings come from.
#[derive(Debug, Clone)]
enum TeacherBacking {
    /// (language, sentence) -> unit-norm embedding.
    Table(HashMap<(String, String), Vec<f64>>),
    /// Deterministic pseudo-random unit vectors keyed by (language, sentence).
    Synthetic { seed: u64 },
}

/// Frozen embedding provider for the distillation targets.
#[derive(Debug, Clone)]
pub struct TeacherOracle {
    backing: TeacherBacking,
    dim: usize,
    languages: BTreeSet<String>,
}

/// Load statistics for a file-backed teacher table.
#[derive(Debug, Clone, Default)]
pub struct TeacherLoadStats {
    pub records: usize,
    /// Vectors whose norm deviated from 1 by more than 1e-6 (renormalized).
    pub norm_warnings: usize,
}

impl TeacherOracle {
    /// Synthetic oracle: embeddings are seeded pseudo-random unit vectors,
    /// constant per (sentence, language).
    pub fn synthetic(dim: usize, seed: u64, languages: &[String]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("teacher dim must be >= 1".into()));
        }
        Ok(Self {
            backing: TeacherBacking::Synthetic { seed },
            dim,
            languages: languages.iter().cloned().collect(),
        })
    }

    /// Build from in-memory (language, sentence, embedding) records.
    /// Vectors are normalized; a norm off 1 by more than 0.5 is an error.
    pub fn from_entries(
        entries: &[(String, String, Vec<f64>)],
    ) -> Result<(Self, TeacherLoadStats)> {
        if entries.is_empty() {
            return Err(Error::Data("teacher table is empty".into()));
        }
        let dim = entries[0].2.len();
        let mut table = HashMap::new();
        let mut languages = BTreeSet::new();
        let mut stats = TeacherLoadStats::default();
        for (lang, sentence, vec) in entries {
            if vec.len() != dim {
                return Err(Error::Data(format!(
                    "teacher vector for '{sentence}' has {} dims, expected {dim}",
                    vec.len()
                )));
            }
            let norm = vec.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > 0.5 {
                return Err(Error::Data(format!(
                    "teacher vector for ({lang}, '{sentence}') has norm {norm}"
                )));
            }
            if (norm - 1.0).abs() > 1e-6 {
                stats.norm_warnings += 1;
            }
            let unit: Vec<f64> = vec.iter().map(|v| v / norm).collect();
            languages.insert(lang.clone());
            table.insert((lang.clone(), sentence.clone()), unit);
            stats.records += 1;
        }
        Ok((
            Self {
                backing: TeacherBacking::Table(table),
                dim,
                languages,
            },
            stats,
        ))
    }

    /// Parse a teacher table file: one record per line,
    /// `language <TAB> sentence <TAB> space-separated floats`;
    /// lines beginning with `#` are ignored.
    pub fn from_table_file(path: &Path) -> Result<(Self, TeacherLoadStats)> {
        let file = std::fs::File::open(path)?;
        let mut entries = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (lang, sentence, floats) = match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(s), Some(f)) => (l, s, f),
                _ => {
                    return Err(Error::Data(format!(
                        "teacher table line {}: expected 3 tab-separated fields",
                        lineno + 1
                    )))
                }
            };
            let vec: std::result::Result<Vec<f64>, _> =
                floats.split_whitespace().map(str::parse::<f64>).collect();
            let vec =
                vec.map_err(|e| Error::Data(format!("teacher table line {}: {e}", lineno + 1)))?;
            entries.push((lang.to_string(), sentence.to_string(), vec));
        }
        Self::from_entries(&entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn covers(&self, lang: &str) -> bool {
        self.languages.contains(lang)
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.languages.iter().map(String::as_str)
    }

    /// Deterministic unit-norm embedding of a sentence in a language.
    pub fn embed(&self, sentence: &str, lang: &str) -> Result<Vec<f64>> {
        if !self.covers(lang) {
            return Err(Error::Domain(format!(
                "teacher does not cover language '{lang}'"
            )));
        }
        match &self.backing {
            TeacherBacking::Table(map) => map
                .get(&(lang.to_string(), sentence.to_string()))
                .cloned()
                .ok_or_else(|| {
                    Error::Data(format!(
                        "teacher table has no entry for ({lang}, '{sentence}')"
                    ))
                }),
            TeacherBacking::Synthetic { seed } => {
                let h = stable_hash64(&[&seed.to_le_bytes(), lang.as_bytes(), sentence.as_bytes()]);
                let mut rng = rng_from_seed(h);
                let v = gaussian_vec(&mut rng, self.dim, 1.0);
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm <= 0.0 {
                    return Err(Error::Domain("degenerate synthetic embedding".into()));
                }
                Ok(v.iter().map(|x| x / norm).collect())
            }
        }
    }

    pub fn embed_batch<S: AsRef<str>>(
        &self,
        sentences: &[S],
        lang: &str,
    ) -> Result<EmbeddingMatrix> {
        let rows: Result<Vec<Vec<f64>>> = sentences
            .iter()
            .map(|s| self.embed(s.as_ref(), lang))
            .collect();
        EmbeddingMatrix::new(Matrix::from_rows(&rows?)?)
    }
}

/// Write teacher entries in the table file format. Floats use Rust's
/// shortest round-trip formatting, so rewriting the same entries is
/// byte-identical.
pub fn write_teacher_table(path: &Path, entries: &[(String, String, Vec<f64>)]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# language\tsentence\tembedding")?;
    for (lang, sentence, vec) in entries {
        let floats: Vec<String> = vec.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{lang}\t{sentence}\t{}", floats.join(" "))?;
    }
    Ok(())
}
