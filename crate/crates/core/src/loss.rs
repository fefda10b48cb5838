//! Distillation losses over a batch of N translation pairs, with analytic
//! gradients w.r.t. the student embeddings.
//!
//! With `sim(i, j)` the temperature-scaled student cosine between source i
//! and target j, and `w` the (hard or soft) label matrix:
//!
//! ```text
//! L_row  = -(1/N) sum_ij w(i,j) log( e^sim(i,j) / sum_n e^sim(i,n) )
//! L_col  = -(1/N) sum_ij w(i,j) log( e^sim(i,j) / sum_n e^sim(n,j) )
//! L_cross = L_row + L_col
//! L_mono = column-softmax cross-entropy of the source-source similarities
//!        + column-softmax cross-entropy of the target-target similarities
//! total  = lambda * L_cross + L_mono        (when tcm)
//!        = L_cross                          (otherwise)
//! ```
//!
//! Gradients are exact: for a row-softmax cross-entropy the derivative
//! w.r.t. the logits is (1/N)(rowsum(w)_i * p(i,j) - w(i,j)); for the
//! column variant it is (1/N)(colsum(w)_j * q(i,j) - w(i,j)). These are
//! chained through the cosine/temperature map
//! d cos(u,v)/du = (v_hat - cos * u_hat) / |u|.
//! Finite differences exist only as a test oracle, never in this path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{LabelMatrix, LabelMode};
use crate::simcore::{
    row_norms, scaled_similarity_matrix, EmbeddingMatrix, Matrix, SimilarityMatrix,
};

/// Loss hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Temperature applied to every cosine before softmax.
    pub temperature: f64,
    /// Weight of the cross-lingual term when `tcm` is on.
    pub lambda: f64,
    /// Labeling used by the trainer when constructing targets.
    pub mode: LabelMode,
    /// Train both cross-lingual and mono-lingual spaces.
    pub tcm: bool,
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature <= 0.0 || !self.temperature.is_finite() {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            lambda: 0.1,
            mode: LabelMode::Priority,
            tcm: false,
        }
    }
}

/// Scalar loss components plus gradients w.r.t. the student embeddings.
#[derive(Debug, Clone)]
pub struct LossBundle {
    pub l_row: f64,
    pub l_col: f64,
    pub l_cross: f64,
    pub l_mono: f64,
    pub total: f64,
    pub grad_src: Matrix,
    pub grad_tgt: Matrix,
}

fn check_sizes(sim: &SimilarityMatrix, w: &LabelMatrix) -> Result<usize> {
    if sim.size() != w.size() {
        return Err(Error::Shape(format!(
            "similarity is {}x{} but labels are {}x{}",
            sim.size(),
            sim.size(),
            w.size(),
            w.size()
        )));
    }
    Ok(sim.size())
}

/// Cross-entropy against the row softmax of `logits` (denominator over the
/// second index), averaged over rows.
fn row_ce(logits: &Matrix, w: &LabelMatrix) -> f64 {
    let n = logits.rows();
    let mut total = 0.0;
    for i in 0..n {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lse = 0.0;
        for &x in row {
            lse += (x - max).exp();
        }
        let lse = max + lse.ln();
        for j in 0..n {
            total -= w.get(i, j) * (row[j] - lse);
        }
    }
    total / n as f64
}

/// Cross-entropy against the column softmax of `logits` (denominator over
/// the first index), averaged over rows.
fn col_ce(logits: &Matrix, w: &LabelMatrix) -> f64 {
    let n = logits.rows();
    let mut total = 0.0;
    for j in 0..n {
        let mut max = f64::NEG_INFINITY;
        for i in 0..n {
            max = max.max(logits.get(i, j));
        }
        let mut lse = 0.0;
        for i in 0..n {
            lse += (logits.get(i, j) - max).exp();
        }
        let lse = max + lse.ln();
        for i in 0..n {
            total -= w.get(i, j) * (logits.get(i, j) - lse);
        }
    }
    total / n as f64
}

/// d(row_ce)/d(logits) = (1/N) (rowsum(w)_i * p(i,j) - w(i,j)).
fn row_ce_grad(logits: &Matrix, w: &LabelMatrix) -> Matrix {
    let n = logits.rows();
    let p = crate::simcore::row_softmax(logits).expect("finite logits");
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        let mut rowsum = 0.0;
        for j in 0..n {
            rowsum += w.get(i, j);
        }
        for j in 0..n {
            g.set(i, j, (rowsum * p.get(i, j) - w.get(i, j)) / n as f64);
        }
    }
    g
}

/// d(col_ce)/d(logits) = (1/N) (colsum(w)_j * q(i,j) - w(i,j)).
fn col_ce_grad(logits: &Matrix, w: &LabelMatrix) -> Matrix {
    let n = logits.rows();
    let mut g = Matrix::zeros(n, n);
    for j in 0..n {
        let mut max = f64::NEG_INFINITY;
        for i in 0..n {
            max = max.max(logits.get(i, j));
        }
        let mut denom = 0.0;
        for i in 0..n {
            denom += (logits.get(i, j) - max).exp();
        }
        let mut colsum = 0.0;
        for i in 0..n {
            colsum += w.get(i, j);
        }
        for i in 0..n {
            let q = (logits.get(i, j) - max).exp() / denom;
            g.set(i, j, (colsum * q - w.get(i, j)) / n as f64);
        }
    }
    g
}

/// Row-wise cross-entropy of the cross-lingual similarities: the softmax
/// denominator runs over targets for a fixed source.
pub fn l_row(sim: &SimilarityMatrix, w: &LabelMatrix) -> Result<f64> {
    check_sizes(sim, w)?;
    Ok(row_ce(sim.as_matrix(), w))
}

/// Column-wise cross-entropy of the cross-lingual similarities: the softmax
/// denominator runs over sources for a fixed target.
pub fn l_col(sim: &SimilarityMatrix, w: &LabelMatrix) -> Result<f64> {
    check_sizes(sim, w)?;
    Ok(col_ce(sim.as_matrix(), w))
}

/// Mono-lingual distillation loss: one column-softmax cross-entropy per
/// language, summed.
pub fn l_mono(
    sim_ss: &SimilarityMatrix,
    sim_tt: &SimilarityMatrix,
    w: &LabelMatrix,
) -> Result<f64> {
    check_sizes(sim_ss, w)?;
    check_sizes(sim_tt, w)?;
    Ok(col_ce(sim_ss.as_matrix(), w) + col_ce(sim_tt.as_matrix(), w))
}

/// Unit-norm rows plus the original norms, precomputed for the chain rule.
struct NormedRows {
    norms: Vec<f64>,
    units: Matrix,
}

fn normed(e: &EmbeddingMatrix) -> Result<NormedRows> {
    let norms = row_norms(e)?;
    let mut units = Matrix::zeros(e.rows(), e.dim());
    for i in 0..e.rows() {
        let src = e.row(i);
        let dst = units.row_mut(i);
        for k in 0..src.len() {
            dst[k] = src[k] / norms[i];
        }
    }
    Ok(NormedRows { norms, units })
}

/// Chain d_sim (gradient w.r.t. scaled similarities between two distinct
/// embedding sets) back to both sets.
fn add_cross_grad(
    d_sim: &Matrix,
    s: &NormedRows,
    t: &NormedRows,
    tau: f64,
    grad_s: &mut Matrix,
    grad_t: &mut Matrix,
) {
    let n = d_sim.rows();
    let d = s.units.cols();
    for i in 0..n {
        let us = s.units.row(i);
        for j in 0..n {
            let g = d_sim.get(i, j);
            if g == 0.0 {
                continue;
            }
            let ut = t.units.row(j);
            let mut cos = 0.0;
            for k in 0..d {
                cos += us[k] * ut[k];
            }
            let cs = g / (tau * s.norms[i]);
            let ct = g / (tau * t.norms[j]);
            for k in 0..d {
                grad_s.row_mut(i)[k] += cs * (ut[k] - cos * us[k]);
                grad_t.row_mut(j)[k] += ct * (us[k] - cos * ut[k]);
            }
        }
    }
}

/// Chain d_sim (gradient w.r.t. scaled self-similarities of one embedding
/// set) back to that set; rows act as both arguments.
fn add_mono_grad(d_sim: &Matrix, e: &NormedRows, tau: f64, grad: &mut Matrix) {
    let n = d_sim.rows();
    let d = e.units.cols();
    for i in 0..n {
        for j in 0..n {
            let g = d_sim.get(i, j);
            if g == 0.0 {
                continue;
            }
            let mut cos = 0.0;
            for k in 0..d {
                cos += e.units.row(i)[k] * e.units.row(j)[k];
            }
            let ci = g / (tau * e.norms[i]);
            let cj = g / (tau * e.norms[j]);
            for k in 0..d {
                let ui = e.units.row(i)[k];
                let uj = e.units.row(j)[k];
                grad.row_mut(i)[k] += ci * (uj - cos * ui);
                grad.row_mut(j)[k] += cj * (ui - cos * uj);
            }
        }
    }
}

/// Full loss over one batch: similarities from the student embeddings, all
/// scalar components, and analytic gradients.
pub fn total_loss(
    student_src: &EmbeddingMatrix,
    student_tgt: &EmbeddingMatrix,
    w: &LabelMatrix,
    cfg: &LossConfig,
) -> Result<LossBundle> {
    cfg.validate()?;
    let tau = cfg.temperature;
    let sim_cross = scaled_similarity_matrix(student_src, student_tgt, tau)?;
    let n = check_sizes(&sim_cross, w)?;

    let lr = row_ce(sim_cross.as_matrix(), w);
    let lc = col_ce(sim_cross.as_matrix(), w);
    let l_cross = lr + lc;

    let sim_ss = scaled_similarity_matrix(student_src, student_src, tau)?;
    let sim_tt = scaled_similarity_matrix(student_tgt, student_tgt, tau)?;
    let lm = col_ce(sim_ss.as_matrix(), w) + col_ce(sim_tt.as_matrix(), w);

    let total = if cfg.tcm {
        cfg.lambda * l_cross + lm
    } else {
        l_cross
    };

    let src_n = normed(student_src)?;
    let tgt_n = normed(student_tgt)?;
    let mut grad_src = Matrix::zeros(n, student_src.dim());
    let mut grad_tgt = Matrix::zeros(n, student_tgt.dim());

    let cross_scale = if cfg.tcm { cfg.lambda } else { 1.0 };
    let mut d_cross = row_ce_grad(sim_cross.as_matrix(), w);
    let d_col = col_ce_grad(sim_cross.as_matrix(), w);
    for i in 0..n {
        for j in 0..n {
            d_cross.set(i, j, cross_scale * (d_cross.get(i, j) + d_col.get(i, j)));
        }
    }
    add_cross_grad(&d_cross, &src_n, &tgt_n, tau, &mut grad_src, &mut grad_tgt);

    if cfg.tcm {
        let d_ss = col_ce_grad(sim_ss.as_matrix(), w);
        let d_tt = col_ce_grad(sim_tt.as_matrix(), w);
        add_mono_grad(&d_ss, &src_n, tau, &mut grad_src);
        add_mono_grad(&d_tt, &tgt_n, tau, &mut grad_tgt);
    }

    if !total.is_finite() || !grad_src.is_finite() || !grad_tgt.is_finite() {
        return Err(Error::NonFinite("loss or gradient".into()));
    }

    Ok(LossBundle {
        l_row: lr,
        l_col: lc,
        l_cross,
        l_mono: lm,
        total,
        grad_src,
        grad_tgt,
    })
}

/// Analytic gradient of `total_loss` w.r.t. every student embedding entry.
pub fn loss_gradients(
    student_src: &EmbeddingMatrix,
    student_tgt: &EmbeddingMatrix,
    w: &LabelMatrix,
    cfg: &LossConfig,
) -> Result<(Matrix, Matrix)> {
    let bundle = total_loss(student_src, student_tgt, w, cfg)?;
    Ok((bundle.grad_src, bundle.grad_tgt))
}

/// MSE distillation baseline: both student sides regress onto the teacher's
/// source-language embeddings. Mean over all N*d entries per side.
pub fn mse_distill_loss(
    student_src: &EmbeddingMatrix,
    student_tgt: &EmbeddingMatrix,
    teacher_src: &EmbeddingMatrix,
) -> Result<(f64, Matrix, Matrix)> {
    for (name, e) in [("student_tgt", student_tgt), ("teacher_src", teacher_src)] {
        if e.rows() != student_src.rows() || e.dim() != student_src.dim() {
            return Err(Error::Shape(format!(
                "{name} is {}x{} but student_src is {}x{}",
                e.rows(),
                e.dim(),
                student_src.rows(),
                student_src.dim()
            )));
        }
    }
    let n = student_src.rows();
    let d = student_src.dim();
    let count = (n * d) as f64;
    let mut loss = 0.0;
    let mut grad_src = Matrix::zeros(n, d);
    let mut grad_tgt = Matrix::zeros(n, d);
    for i in 0..n {
        let t = teacher_src.row(i);
        let s = student_src.row(i);
        let g = student_tgt.row(i);
        for k in 0..d {
            let ds = s[k] - t[k];
            let dg = g[k] - t[k];
            loss += (ds * ds + dg * dg) / count;
            grad_src.row_mut(i)[k] = 2.0 * ds / count;
            grad_tgt.row_mut(i)[k] = 2.0 * dg / count;
        }
    }
    Ok((loss, grad_src, grad_tgt))
}
