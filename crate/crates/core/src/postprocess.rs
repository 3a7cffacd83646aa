//! Closed-form recalibration of a strong classifier's weights by the linear
//! asymmetric classifier (LAC) or Fisher LDA, computed from the class
//! moments of the weak-classifier responses.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::booster::{Recalibration, StrongClassifier};
use crate::data::{Dataset, Label, ResponseMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_SHRINKAGE: f64 = 1e-3;

/// Per-class means and (shrunk) covariances of the response vectors.
#[derive(Clone, Debug)]
pub struct ClassStats {
    pub mu1: DVector<f64>,
    pub mu2: DVector<f64>,
    pub sigma1: DMatrix<f64>,
    pub sigma2: DMatrix<f64>,
    pub m1: usize,
    pub m2: usize,
    pub shrinkage: f64,
}

/// `(1 − s) Σ + s · tr(Σ)/n · I`.
pub fn shrink(sigma: &DMatrix<f64>, shrinkage: f64) -> DMatrix<f64> {
    let n = sigma.nrows();
    let target = sigma.trace() / n as f64;
    sigma * (1.0 - shrinkage) + DMatrix::identity(n, n) * (shrinkage * target)
}

fn moments(rows: &[Vec<f64>], n: usize) -> (DVector<f64>, DMatrix<f64>) {
    let m = rows.len() as f64;
    let mut mu = DVector::zeros(n);
    for r in rows {
        for (k, v) in r.iter().enumerate() {
            mu[k] += v;
        }
    }
    mu /= m;
    let mut sigma = DMatrix::zeros(n, n);
    for r in rows {
        let d = DVector::from_iterator(n, r.iter().zip(mu.iter()).map(|(v, c)| v - c));
        sigma += &d * d.transpose();
    }
    sigma /= m - 1.0;
    (mu, sigma)
}

/// Sample means and unbiased covariances of each class's response rows,
/// with both covariances shrunk towards a scaled identity.
pub fn estimate_stats(
    responses: &ResponseMatrix,
    labels: &[Label],
    shrinkage: f64,
) -> Result<ClassStats> {
    if labels.len() != responses.rows() {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: responses.rows(),
            found: labels.len(),
        });
    }
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::invalid(format!(
            "shrinkage must lie in [0, 1], got {shrinkage}"
        )));
    }
    let n = responses.cols();
    if n == 0 {
        return Err(Error::EmptyProblem);
    }
    let row = |i: usize| (0..n).map(|j| responses.h(i, j)).collect::<Vec<f64>>();
    let pos: Vec<Vec<f64>> = (0..labels.len())
        .filter(|&i| labels[i].is_positive())
        .map(row)
        .collect();
    let neg: Vec<Vec<f64>> = (0..labels.len())
        .filter(|&i| !labels[i].is_positive())
        .map(row)
        .collect();
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::invalid(format!(
            "class statistics need at least two examples per class, got {} positives and {} negatives",
            pos.len(),
            neg.len()
        )));
    }
    let (mu1, s1) = moments(&pos, n);
    let (mu2, s2) = moments(&neg, n);
    Ok(ClassStats {
        mu1,
        mu2,
        sigma1: shrink(&s1, shrinkage),
        sigma2: shrink(&s2, shrinkage),
        m1: pos.len(),
        m2: neg.len(),
        shrinkage,
    })
}

/// A linear decision rule `sign(w'h − b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRule {
    pub w: DVector<f64>,
    pub b: f64,
    /// Set when `μ1 = μ2`, so that `w = 0` and the rule is constant.
    pub degenerate: bool,
}

fn solve_spd(matrix: &DMatrix<f64>, rhs: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let chol = Cholesky::<f64, Dyn>::new(matrix.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite(format!(
            "{what} is not positive definite after shrinkage; increase the shrinkage or add data"
        ))
    })?;
    Ok(chol.solve(rhs))
}

fn rule(w: DVector<f64>, mu2: &DVector<f64>) -> LinearRule {
    let degenerate = w.iter().all(|v| *v == 0.0);
    let b = w.dot(mu2);
    LinearRule { w, b, degenerate }
}

/// LAC: `Σ1 w = μ1 − μ2`, `b = w'μ2`.
pub fn lac_weights(stats: &ClassStats) -> Result<LinearRule> {
    let d = &stats.mu1 - &stats.mu2;
    Ok(rule(
        solve_spd(&stats.sigma1, &d, "the positive-class covariance")?,
        &stats.mu2,
    ))
}

/// Fisher LDA: `C_w w = μ1 − μ2` with `C_w = (m1/m) Σ1 + (m2/m) Σ2`;
/// `b = w'μ2` as a default offset.
pub fn lda_weights(stats: &ClassStats) -> Result<LinearRule> {
    let m = (stats.m1 + stats.m2) as f64;
    let cw = &stats.sigma1 * (stats.m1 as f64 / m) + &stats.sigma2 * (stats.m2 as f64 / m);
    let d = &stats.mu1 - &stats.mu2;
    Ok(rule(
        solve_spd(&cw, &d, "the within-class scatter")?,
        &stats.mu2,
    ))
}

/// `w'(μ1 − μ2) / √(w'Σ1 w)`, the quantity LAC maximises.
pub fn lac_ratio(stats: &ClassStats, w: &DVector<f64>) -> f64 {
    let d = &stats.mu1 - &stats.mu2;
    w.dot(&d) / (w.dot(&(&stats.sigma1 * w))).sqrt()
}

/// `w'(μ1 − μ2) / √(w' C_w w)`, the quantity LDA maximises.
pub fn lda_ratio(stats: &ClassStats, w: &DVector<f64>) -> f64 {
    let m = (stats.m1 + stats.m2) as f64;
    let cw = &stats.sigma1 * (stats.m1 as f64 / m) + &stats.sigma2 * (stats.m2 as f64 / m);
    let d = &stats.mu1 - &stats.mu2;
    w.dot(&d) / (w.dot(&(cw * w))).sqrt()
}

/// The maximal LAC ratio `√((μ1−μ2)'Σ1⁻¹(μ1−μ2))` computed from an
/// eigendecomposition of `Σ1` instead of a linear solve.
pub fn lac_ratio_eigen(stats: &ClassStats) -> Result<f64> {
    let eig = SymmetricEigen::new(stats.sigma1.clone());
    let d = &stats.mu1 - &stats.mu2;
    let mut acc = 0.0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if !(lambda > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "positive-class covariance has eigenvalue {lambda:e}"
            )));
        }
        let proj = eig.eigenvectors.column(k).dot(&d);
        acc += proj * proj / lambda;
    }
    Ok(acc.sqrt())
}

/// Replace a classifier's weights (and offset) by the LAC or LDA solution on
/// `dataset`'s responses to its stumps. The stumps are unchanged; the weights
/// are no longer constrained to the simplex.
pub fn recalibrate(
    classifier: &StrongClassifier,
    dataset: &Dataset,
    kind: Recalibration,
    shrinkage: f64,
) -> Result<StrongClassifier> {
    if classifier.is_empty() {
        return Err(Error::EmptyProblem);
    }
    let mut responses = ResponseMatrix::new(dataset.labels());
    for s in &classifier.stumps {
        responses.push_column(&s.predict_all(dataset))?;
    }
    let stats = estimate_stats(&responses, dataset.labels(), shrinkage)?;
    let r = match kind {
        Recalibration::Lac => lac_weights(&stats)?,
        Recalibration::Lda => lda_weights(&stats)?,
    };
    if r.degenerate {
        log::warn!("recalibration produced a zero direction (class means coincide)");
    }
    Ok(StrongClassifier {
        stumps: classifier.stumps.clone(),
        weights: r.w.iter().copied().collect(),
        offset: r.b,
        trainer: classifier.trainer,
        recalibration: Some(kind),
    })
}
