//! Evaluation metrics: bidirectional bitext retrieval accuracy, xSIM-style
//! margin-scored alignment error, and Spearman correlation for STS.
//!
//! Ties are always broken toward the lowest index, so every metric is
//! deterministic and testable against brute force.

use serde::Serialize;

use crate::data::StsRecord;
use crate::error::{Error, Result};
use crate::labels::LabelMatrix;
use crate::model::StudentEncoder;
use crate::simcore::{cosine, row_softmax, EmbeddingMatrix, SimilarityMatrix};

/// Metric container. Fields that a given evaluation does not produce are
/// `None` and serialize as `null`; names are stable.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    /// Number of evaluated items.
    pub counts: usize,
    pub acc_src2tgt: Option<f64>,
    pub acc_tgt2src: Option<f64>,
    pub acc_avg: Option<f64>,
    pub xsim_error: Option<f64>,
    pub spearman: Option<f64>,
}

impl EvalReport {
    pub fn empty(counts: usize) -> Self {
        Self {
            counts,
            acc_src2tgt: None,
            acc_tgt2src: None,
            acc_avg: None,
            xsim_error: None,
            spearman: None,
        }
    }
}

/// How xSIM scores candidate alignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginMode {
    /// Ratio margin: cosine divided by the mean cosine to each side's k
    /// nearest neighbors (hubness correction).
    Ratio,
    /// Plain cosine (ablation mode).
    Cosine,
}

impl std::str::FromStr for MarginMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ratio" => Ok(MarginMode::Ratio),
            "cosine" => Ok(MarginMode::Cosine),
            other => Err(Error::Config(format!(
                "unknown margin mode '{other}' (expected ratio or cosine)"
            ))),
        }
    }
}

fn check_aligned(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix) -> Result<usize> {
    if src.rows() != tgt.rows() || src.dim() != tgt.dim() {
        return Err(Error::Shape(format!(
            "source is {}x{} but target is {}x{}",
            src.rows(),
            src.dim(),
            tgt.rows(),
            tgt.dim()
        )));
    }
    Ok(src.rows())
}

fn check_gold_permutation(gold: &[usize], n: usize) -> Result<()> {
    if gold.len() != n {
        return Err(Error::Shape(format!(
            "gold has {} entries for {} rows",
            gold.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &j in gold {
        if j >= n || seen[j] {
            return Err(Error::Data(format!("gold is not a permutation of 0..{n}")));
        }
        seen[j] = true;
    }
    Ok(())
}

/// Full pairwise cosine matrix (rows: src, cols: tgt).
fn cosine_table(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>> {
    let n = src.rows();
    let mut table = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(cosine(src.row(i), tgt.row(j))?);
        }
        table.push(row);
    }
    Ok(table)
}

/// Index of the strictly largest value, first occurrence on ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Nearest-neighbor translation retrieval in both directions.
///
/// `gold[i] = j` means source i's correct target is row j; gold must be a
/// permutation so the reverse direction is well defined. Returns
/// (acc_src2tgt, acc_tgt2src, acc_avg).
pub fn retrieval_accuracy(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    gold: &[usize],
) -> Result<(f64, f64, f64)> {
    let n = check_aligned(src, tgt)?;
    check_gold_permutation(gold, n)?;
    let cos = cosine_table(src, tgt)?;
    let mut inverse = vec![0usize; n];
    for (i, &j) in gold.iter().enumerate() {
        inverse[j] = i;
    }
    let mut hits_fwd = 0usize;
    for i in 0..n {
        if argmax(&cos[i]) == gold[i] {
            hits_fwd += 1;
        }
    }
    let mut hits_rev = 0usize;
    for j in 0..n {
        let column: Vec<f64> = (0..n).map(|i| cos[i][j]).collect();
        if argmax(&column) == inverse[j] {
            hits_rev += 1;
        }
    }
    let a = hits_fwd as f64 / n as f64;
    let b = hits_rev as f64 / n as f64;
    Ok((a, b, (a + b) / 2.0))
}

/// Mean of the k largest values.
fn knn_mean(values: &[f64], k: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite cosines"));
    sorted[..k].iter().sum::<f64>() / k as f64
}

/// Fraction of sources misaligned by margin-scored nearest-neighbor search
/// over an aligned corpus.
///
/// Ratio margin: score(x, y) = cos(x, y) / (knn_k(x)/2 + knn_k(y)/2) where
/// knn_k averages the k nearest cosines of each side into the other.
/// `k` is clipped to N-1; plain cosine scoring is available as an ablation.
pub fn xsim_error_rate(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    gold: &[usize],
    k: usize,
    mode: MarginMode,
) -> Result<f64> {
    let n = check_aligned(src, tgt)?;
    if n < 2 {
        return Err(Error::Domain(format!("xsim needs N >= 2, got {n}")));
    }
    if gold.len() != n {
        return Err(Error::Shape(format!(
            "gold has {} entries for {n} rows",
            gold.len()
        )));
    }
    if gold.iter().any(|&j| j >= n) {
        return Err(Error::Data(format!("gold index out of range for n={n}")));
    }
    if k == 0 {
        return Err(Error::Domain("xsim needs k >= 1".into()));
    }
    let k = k.min(n - 1);
    let cos = cosine_table(src, tgt)?;

    let mut errors = 0usize;
    match mode {
        MarginMode::Cosine => {
            for i in 0..n {
                if argmax(&cos[i]) != gold[i] {
                    errors += 1;
                }
            }
        }
        MarginMode::Ratio => {
            let src_knn: Vec<f64> = (0..n).map(|i| knn_mean(&cos[i], k)).collect();
            let tgt_knn: Vec<f64> = (0..n)
                .map(|j| {
                    let column: Vec<f64> = (0..n).map(|i| cos[i][j]).collect();
                    knn_mean(&column, k)
                })
                .collect();
            for i in 0..n {
                let scores: Vec<f64> = (0..n)
                    .map(|j| cos[i][j] / (src_knn[i] / 2.0 + tgt_knn[j] / 2.0))
                    .collect();
                if argmax(&scores) != gold[i] {
                    errors += 1;
                }
            }
        }
    }
    Ok(errors as f64 / n as f64)
}

/// Fractional (average) ranks, 1-based.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share the average
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: average ranks of both lists, then Pearson.
pub fn spearman(pred: &[f64], gold: &[f64]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::Shape(format!(
            "length mismatch: {} vs {}",
            pred.len(),
            gold.len()
        )));
    }
    if pred.len() < 2 {
        return Err(Error::Domain("spearman needs at least 2 values".into()));
    }
    for (name, xs) in [("pred", pred), ("gold", gold)] {
        if xs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{name} value")));
        }
        if xs.iter().all(|&v| v == xs[0]) {
            return Err(Error::Domain(format!(
                "spearman is undefined for constant {name} input"
            )));
        }
    }
    let rp = average_ranks(pred);
    let rg = average_ranks(gold);
    let n = rp.len() as f64;
    let mean_p = rp.iter().sum::<f64>() / n;
    let mean_g = rg.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_g = 0.0;
    for i in 0..rp.len() {
        let dp = rp[i] - mean_p;
        let dg = rg[i] - mean_g;
        cov += dp * dg;
        var_p += dp * dp;
        var_g += dg * dg;
    }
    Ok(cov / (var_p * var_g).sqrt())
}

/// Encode both sentences of every record, score by cosine, and correlate
/// with the gold scores.
pub fn sts_eval(encoder: &StudentEncoder, records: &[StsRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Domain("sts evaluation needs records".into()));
    }
    let mut pred = Vec::with_capacity(records.len());
    let mut gold = Vec::with_capacity(records.len());
    for r in records {
        let a = encoder.encode_text(&r.sentence_a)?;
        let b = encoder.encode_text(&r.sentence_b)?;
        pred.push(cosine(&a, &b)?);
        gold.push(r.gold);
    }
    spearman(&pred, &gold)
}

/// Spearman correlation between the off-diagonal entries of the student's
/// softmaxed similarities and the teacher labels, flattened row-major.
/// Quantifies how well the teacher's similarity structure is maintained.
pub fn teacher_agreement(
    student_sim: &SimilarityMatrix,
    teacher_labels: &LabelMatrix,
) -> Result<f64> {
    let n = student_sim.size();
    if n != teacher_labels.size() {
        return Err(Error::Shape(format!(
            "similarity is {n}x{n} but labels are {}x{}",
            teacher_labels.size(),
            teacher_labels.size()
        )));
    }
    if n < 3 {
        return Err(Error::Domain(format!(
            "teacher agreement needs N >= 3, got {n}"
        )));
    }
    let p = row_softmax(student_sim.as_matrix())?;
    let mut student = Vec::with_capacity(n * (n - 1));
    let mut teacher = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                student.push(p.get(i, j));
                teacher.push(teacher_labels.get(i, j));
            }
        }
    }
    spearman(&student, &teacher)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::LabelMode;
    use crate::rng::{gaussian_vec, rng_from_seed};
    use crate::simcore::{scaled_similarity_matrix, Matrix};

    fn unit_rows(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let v = gaussian_vec(&mut rng, d, 1.0);
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / norm).collect()
            })
            .collect();
        EmbeddingMatrix::from_rows(&rows).unwrap()
    }

    fn identity_gold(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn retrieval_perfect_on_identical_sets() {
        let e = unit_rows(5, 6, 1);
        let (a, b, avg) = retrieval_accuracy(&e, &e, &identity_gold(5)).unwrap();
        assert_eq!((a, b, avg), (1.0, 1.0, 1.0));
    }

    #[test]
    fn retrieval_single_row_always_correct() {
        let e = unit_rows(1, 4, 2);
        let other = unit_rows(1, 4, 3);
        let (a, b, avg) = retrieval_accuracy(&e, &other, &identity_gold(1)).unwrap();
        assert_eq!((a, b, avg), (1.0, 1.0, 1.0));
    }

    #[test]
    fn retrieval_swapped_rows_score_one_third() {
        let e = unit_rows(3, 8, 4);
        let swapped =
            EmbeddingMatrix::from_rows(&[e.row(1).to_vec(), e.row(0).to_vec(), e.row(2).to_vec()])
                .unwrap();
        let (a, b, avg) = retrieval_accuracy(&e, &swapped, &identity_gold(3)).unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-12);
        assert!((b - 1.0 / 3.0).abs() < 1e-12);
        assert!((avg - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn retrieval_validates_gold() {
        let e = unit_rows(3, 4, 5);
        assert!(retrieval_accuracy(&e, &e, &[0, 0, 1]).is_err());
        assert!(retrieval_accuracy(&e, &e, &[0, 1]).is_err());
        assert!(retrieval_accuracy(&e, &e, &[0, 1, 3]).is_err());
    }

    #[test]
    fn retrieval_is_scale_invariant() {
        let src = unit_rows(6, 5, 6);
        let tgt = unit_rows(6, 5, 7);
        let base = retrieval_accuracy(&src, &tgt, &identity_gold(6)).unwrap();
        let scaled =
            retrieval_accuracy(&src.scaled(3.7).unwrap(), &tgt, &identity_gold(6)).unwrap();
        assert_eq!(base, scaled);
    }

    #[test]
    fn xsim_zero_on_identical_sets() {
        let e = unit_rows(6, 8, 8);
        for k in [1, 2, 4, 10] {
            let err = xsim_error_rate(&e, &e, &identity_gold(6), k, MarginMode::Ratio).unwrap();
            assert_eq!(err, 0.0, "k={k}");
        }
        let err = xsim_error_rate(&e, &e, &identity_gold(6), 4, MarginMode::Cosine).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn xsim_orthogonal_replacement_errs_one_of_three() {
        // target 1 replaced by a vector orthogonal to everything: source 1
        // aligns elsewhere, sources 0 and 2 still match.
        let src = EmbeddingMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let tgt = EmbeddingMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let err = xsim_error_rate(&src, &tgt, &identity_gold(3), 2, MarginMode::Ratio).unwrap();
        assert!((err - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn xsim_all_identical_embeddings_tie_break_to_zero() {
        // every score ties, argmax is index 0, so only source 0 is right.
        let n = 5;
        let e = EmbeddingMatrix::from_rows(&vec![vec![0.3, 0.4]; n]).unwrap();
        let err = xsim_error_rate(&e, &e, &identity_gold(n), 4, MarginMode::Ratio).unwrap();
        assert!((err - (n as f64 - 1.0) / n as f64).abs() < 1e-12);
    }

    #[test]
    fn xsim_needs_two_rows() {
        let e = unit_rows(1, 4, 9);
        assert!(xsim_error_rate(&e, &e, &[0], 4, MarginMode::Ratio).is_err());
    }

    #[test]
    fn spearman_monotone_and_reversed() {
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0
        );
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn spearman_tied_example() {
        // ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4): 4.5/sqrt(4.5 * 5)
        let got = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let expected = 4.5 / (4.5f64 * 5.0).sqrt();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.94868).abs() < 1e-5);
    }

    #[test]
    fn spearman_errors() {
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
        assert!(matches!(
            spearman(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0], &[5.0, 5.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spearman_invariant_under_monotone_transform() {
        let mut rng = rng_from_seed(10);
        let xs = gaussian_vec(&mut rng, 20, 1.0);
        let ys = gaussian_vec(&mut rng, 20, 1.0);
        let base = spearman(&xs, &ys).unwrap();
        let warped: Vec<f64> = xs.iter().map(|x| (3.0 * x).exp()).collect();
        assert!((spearman(&warped, &ys).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn teacher_agreement_perfect_when_softmax_equals_labels() {
        let teacher = unit_rows(4, 6, 11);
        let labels = crate::labels::priority_labels(&teacher, 0.1).unwrap();
        let sim = scaled_similarity_matrix(&teacher, &teacher, 0.1).unwrap();
        let a = teacher_agreement(&sim, &labels).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn teacher_agreement_uniform_labels_error() {
        let e = unit_rows(4, 6, 12);
        let sim = scaled_similarity_matrix(&e, &e, 0.1).unwrap();
        let uniform = LabelMatrix::from_matrix(
            Matrix::from_vec(4, 4, vec![0.25; 16]).unwrap(),
            LabelMode::Average,
        )
        .unwrap();
        assert!(matches!(
            teacher_agreement(&sim, &uniform),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn teacher_agreement_matches_flatten_then_spearman() {
        let student = unit_rows(5, 6, 13);
        let teacher = unit_rows(5, 4, 14);
        let labels = crate::labels::priority_labels(&teacher, 0.1).unwrap();
        let sim = scaled_similarity_matrix(&student, &student, 0.1).unwrap();
        let got = teacher_agreement(&sim, &labels).unwrap();

        let p = row_softmax(sim.as_matrix()).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    a.push(p.get(i, j));
                    b.push(labels.get(i, j));
                }
            }
        }
        assert_eq!(got, spearman(&a, &b).unwrap());

        let tiny = unit_rows(2, 4, 15);
        let sim2 = scaled_similarity_matrix(&tiny, &tiny, 0.1).unwrap();
        let lab2 = crate::labels::priority_labels(&unit_rows(2, 4, 16), 0.1).unwrap();
        assert!(teacher_agreement(&sim2, &lab2).is_err());
    }

    /// Brute-force oracles, written independently of the production code.
    mod brute_force {
        use super::*;

        pub fn retrieval(
            src: &EmbeddingMatrix,
            tgt: &EmbeddingMatrix,
            gold: &[usize],
        ) -> (f64, f64) {
            let n = src.rows();
            let mut fwd = 0;
            let mut rev = 0;
            for i in 0..n {
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for j in 0..n {
                    let c = cosine(src.row(i), tgt.row(j)).unwrap();
                    if c > best_v {
                        best_v = c;
                        best = j;
                    }
                }
                if best == gold[i] {
                    fwd += 1;
                }
            }
            for j in 0..n {
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for i in 0..n {
                    let c = cosine(src.row(i), tgt.row(j)).unwrap();
                    if c > best_v {
                        best_v = c;
                        best = i;
                    }
                }
                if gold[best] == j {
                    rev += 1;
                }
            }
            (fwd as f64 / n as f64, rev as f64 / n as f64)
        }

        pub fn xsim_ratio(
            src: &EmbeddingMatrix,
            tgt: &EmbeddingMatrix,
            gold: &[usize],
            k: usize,
        ) -> f64 {
            let n = src.rows();
            let k = k.min(n - 1);
            let cos = |i: usize, j: usize| cosine(src.row(i), tgt.row(j)).unwrap();
            let knn = |mut v: Vec<f64>| {
                v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                v[..k].iter().sum::<f64>() / k as f64
            };
            let mut errors = 0;
            for i in 0..n {
                let a = knn((0..n).map(|j| cos(i, j)).collect());
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for j in 0..n {
                    let b = knn((0..n).map(|i2| cos(i2, j)).collect());
                    let score = cos(i, j) / (a / 2.0 + b / 2.0);
                    if score > best_score {
                        best_score = score;
                        best = j;
                    }
                }
                if best != gold[i] {
                    errors += 1;
                }
            }
            errors as f64 / n as f64
        }
    }

    #[test]
    fn metrics_match_brute_force_on_random_instances() {
        for seed in 0..40u64 {
            let n = 2 + (seed as usize % 9);
            let src = unit_rows(n, 4, 1000 + seed);
            let tgt = unit_rows(n, 4, 2000 + seed);
            // a random permutation as gold
            let mut gold: Vec<usize> = (0..n).collect();
            let mut rng = rng_from_seed(3000 + seed);
            crate::rng::shuffle(&mut rng, &mut gold);

            let (a, b, _) = retrieval_accuracy(&src, &tgt, &gold).unwrap();
            let (ba, bb) = brute_force::retrieval(&src, &tgt, &gold);
            assert_eq!(a, ba);
            assert_eq!(b, bb);

            let err = xsim_error_rate(&src, &tgt, &gold, 4, MarginMode::Ratio).unwrap();
            let berr = brute_force::xsim_ratio(&src, &tgt, &gold, 4);
            assert_eq!(err, berr);
        }
    }
}
