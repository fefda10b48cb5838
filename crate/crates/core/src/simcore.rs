//! Dense double-precision matrix primitives: cosine similarity, temperature
//! scaling, and row softmax. Everything downstream (labels, losses, metrics)
//! is built on these kernels.
//!
//! All operations are pure functions over immutable inputs. Sums and dot
//! products accumulate strictly left to right so results are identical from
//! run to run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix {}x{} needs {} values, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    r.len(),
                    cols
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: n,
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Entrywise map into a new matrix.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// N sentence embeddings as an N x d matrix, one embedding per row.
///
/// Entries are finite and N, d >= 1 by construction. Row norms are checked
/// at the point a row enters a cosine, not here: a zero-norm row signals an
/// encoder bug upstream and is reported as a domain error by the consumer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    mat: Matrix,
}

impl EmbeddingMatrix {
    pub fn new(mat: Matrix) -> Result<Self> {
        if mat.rows() == 0 || mat.cols() == 0 {
            return Err(Error::Shape(format!(
                "embedding matrix must be at least 1x1, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite("embedding matrix entry".into()));
        }
        Ok(Self { mat })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.mat.row(i)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.mat
    }

    /// New matrix with every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.mat.map(|v| c * v))
    }
}

/// N x N temperature-scaled cosine similarities; every entry lies in
/// [-1/tau, 1/tau].
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    mat: Matrix,
    temperature: f64,
}

impl SimilarityMatrix {
    /// Wrap a precomputed matrix of scaled similarities, validating the
    /// range invariant (with a small tolerance for rounding).
    pub fn from_matrix(mat: Matrix, temperature: f64) -> Result<Self> {
        if temperature <= 0.0 || !temperature.is_finite() {
            return Err(Error::Domain(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        if mat.rows() != mat.cols() {
            return Err(Error::Shape(format!(
                "similarity matrix must be square, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        let bound = 1.0 / temperature * (1.0 + 1e-9) + 1e-12;
        for &v in mat.data() {
            if !v.is_finite() {
                return Err(Error::NonFinite("similarity entry".into()));
            }
            if v.abs() > bound {
                return Err(Error::Domain(format!(
                    "similarity entry {v} outside [-1/tau, 1/tau] for tau={temperature}"
                )));
            }
        }
        Ok(Self { mat, temperature })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.mat.rows()
    }

    #[inline]
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.mat
    }
}

/// Cosine similarity of two vectors, in [-1, 1].
///
/// The dot product and the norms accumulate left to right.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if nu <= 0.0 || nv <= 0.0 {
        return Err(Error::Domain("cosine of a zero-norm vector".into()));
    }
    Ok(dot / (nu.sqrt() * nv.sqrt()))
}

/// Pairwise temperature-scaled cosines: entry (i, j) = cos(a_i, b_j) / tau.
///
/// `a` and `b` must hold the same number of rows of the same dimension, so
/// the result is square (in-batch similarities of N pairs).
pub fn scaled_similarity_matrix(
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
    tau: f64,
) -> Result<SimilarityMatrix> {
    if tau <= 0.0 || !tau.is_finite() {
        return Err(Error::Domain(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    if a.rows() != b.rows() {
        return Err(Error::Shape(format!(
            "row counts differ: {} vs {}",
            a.rows(),
            b.rows()
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "embedding dims differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let n = a.rows();
    let norm_a = row_norms(a)?;
    let norm_b = row_norms(b)?;
    let mut mat = Matrix::zeros(n, n);
    for i in 0..n {
        let ra = a.row(i);
        for j in 0..n {
            let rb = b.row(j);
            let mut dot = 0.0;
            for k in 0..ra.len() {
                dot += ra[k] * rb[k];
            }
            let sim = dot / (norm_a[i] * norm_b[j]) / tau;
            // dot products of finite rows can still overflow
            if !sim.is_finite() {
                return Err(Error::NonFinite(format!("similarity of rows {i} and {j}")));
            }
            mat.set(i, j, sim);
        }
    }
    Ok(SimilarityMatrix {
        mat,
        temperature: tau,
    })
}

/// Euclidean norm of every row; zero-norm rows are a domain error.
pub(crate) fn row_norms(e: &EmbeddingMatrix) -> Result<Vec<f64>> {
    let mut norms = Vec::with_capacity(e.rows());
    for i in 0..e.rows() {
        let mut s = 0.0;
        for &v in e.row(i) {
            s += v * v;
        }
        if s <= 0.0 {
            return Err(Error::Domain(format!("embedding row {i} has zero norm")));
        }
        norms.push(s.sqrt());
    }
    Ok(norms)
}

/// Row-wise softmax with per-row max subtraction.
///
/// Each output row is nonnegative and sums to 1 within 1e-12, even for
/// inputs of magnitude 1e3 (the subtraction keeps every exponent <= 0).
pub fn row_softmax(m: &Matrix) -> Result<Matrix> {
    if !m.is_finite() {
        return Err(Error::NonFinite("softmax input".into()));
    }
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        let row = m.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dst = out.row_mut(i);
        let mut sum = 0.0;
        for j in 0..row.len() {
            let e = (row[j] - max).exp();
            dst[j] = e;
            sum += e;
        }
        for v in dst.iter_mut() {
            *v /= sum;
        }
    }
    Ok(out)
}
