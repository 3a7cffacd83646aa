//! The within-class scatter matrix `Q`, the simplex QP built from it, and
//! recovery of the dual certificate from a primal solution.
//!
//! Rows are ordered positives first. Each diagonal block has the form
//! `α I + β 11'`; the exact positive block has diagonal `1/m` and
//! off-diagonal `−1/(m(m1−1))`, so every row sums to zero and
//! `ρ₊' Q₁ ρ₊ = (m1/m) · sample variance of ρ₊`. The approximate form drops
//! the off-diagonal part and keeps `(1/m) I`. In LAC mode the negative block
//! is zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{dot, ClassVector, MarginVector, ResponseMatrix};
use crate::error::{Error, Result};
use crate::simplex::SimplexQp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Both class variances penalised (Fisher LDA).
    Fisher,
    /// Only the positive-class variance penalised (LAC).
    Lac,
}

/// `α I + β 11'` of size `len`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Block {
    alpha: f64,
    beta: f64,
    len: usize,
}

impl Block {
    const fn zero(len: usize) -> Self {
        Block {
            alpha: 0.0,
            beta: 0.0,
            len,
        }
    }

    fn scatter(m: usize, size: usize, exact: bool) -> Self {
        let inv_m = 1.0 / m as f64;
        if exact {
            let beta = -1.0 / (m as f64 * (size as f64 - 1.0));
            Block {
                alpha: inv_m - beta,
                beta,
                len: size,
            }
        } else {
            Block {
                alpha: inv_m,
                beta: 0.0,
                len: size,
            }
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let s: f64 = if self.beta != 0.0 {
            v.iter().sum()
        } else {
            0.0
        };
        for (o, x) in out.iter_mut().zip(v) {
            *o = self.alpha * x + self.beta * s;
        }
    }

    /// `(B + δI)⁻¹ v` by Sherman–Morrison.
    fn solve_shifted_into(&self, delta: f64, v: &[f64], out: &mut [f64]) {
        let a = self.alpha + delta;
        let s: f64 = v.iter().sum();
        let corr = if self.beta != 0.0 {
            self.beta / (a + self.beta * self.len as f64) * s
        } else {
            0.0
        };
        for (o, x) in out.iter_mut().zip(v) {
            *o = (x - corr) / a;
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.alpha + self.beta
        } else {
            self.beta
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix {
    objective: Objective,
    exact: bool,
    delta: f64,
    pos: Block,
    neg: Block,
}

/// Build `Q` for `m1` positives followed by `m2` negatives. `delta` is the
/// ridge used whenever `Q` has to be inverted.
pub fn build_q(
    objective: Objective,
    m1: usize,
    m2: usize,
    exact: bool,
    delta: f64,
) -> Result<QMatrix> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::invalid("Q needs at least one example of each class"));
    }
    if exact && m1 < 2 {
        return Err(Error::invalid(format!("exact Q needs m1 >= 2, got {m1}")));
    }
    if exact && objective == Objective::Fisher && m2 < 2 {
        return Err(Error::invalid(format!(
            "exact Fisher Q needs m2 >= 2, got {m2}"
        )));
    }
    if !(delta >= 0.0) {
        return Err(Error::invalid("delta must be nonnegative"));
    }
    let m = m1 + m2;
    let pos = Block::scatter(m, m1, exact);
    let neg = match objective {
        Objective::Fisher => Block::scatter(m, m2, exact),
        Objective::Lac => Block::zero(m2),
    };
    Ok(QMatrix {
        objective,
        exact,
        delta,
        pos,
        neg,
    })
}

impl QMatrix {
    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.pos.len + self.neg.len
    }

    pub fn m1(&self) -> usize {
        self.pos.len
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "vector multiplied by Q",
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let mut out = vec![0.0; v.len()];
        let m1 = self.pos.len;
        self.pos.apply_into(&v[..m1], &mut out[..m1]);
        self.neg.apply_into(&v[m1..], &mut out[m1..]);
        Ok(out)
    }

    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        Ok(dot(v, &self.apply(v)?))
    }

    /// `(Q + δI)⁻¹ v`.
    pub fn solve_regularized(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        if self.delta == 0.0 {
            return Err(Error::NotPositiveDefinite(
                "Q is singular; set delta > 0".into(),
            ));
        }
        let mut out = vec![0.0; v.len()];
        let m1 = self.pos.len;
        self.pos
            .solve_shifted_into(self.delta, &v[..m1], &mut out[..m1]);
        self.neg
            .solve_shifted_into(self.delta, &v[m1..], &mut out[m1..]);
        Ok(out)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let m1 = self.pos.len;
        match (i < m1, j < m1) {
            (true, true) => self.pos.entry(i, j),
            (false, false) => self.neg.entry(i - m1, j - m1),
            _ => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }
}

/// Incrementally assembled `P = A'QA`, `c = θ A'e`.
#[derive(Clone, Debug)]
pub struct QpBuilder {
    q: QMatrix,
    theta: f64,
    e: Vec<f64>,
    a_cols: Vec<Vec<f64>>,
    qa_cols: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    c: Vec<f64>,
}

impl QpBuilder {
    pub fn new(q: QMatrix, e: &ClassVector, theta: f64) -> Result<Self> {
        if e.e.len() != q.dim() {
            return Err(Error::DimensionMismatch {
                what: "class vector",
                expected: q.dim(),
                found: e.e.len(),
            });
        }
        Ok(Self {
            q,
            theta,
            e: e.e.clone(),
            a_cols: Vec::new(),
            qa_cols: Vec::new(),
            p: Vec::new(),
            c: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn push(&mut self, a_col: &[f64]) -> Result<()> {
        let qa = self.q.apply(a_col)?;
        let row: Vec<f64> = self
            .a_cols
            .iter()
            .map(|prev| dot(prev, &qa))
            .chain([dot(a_col, &qa)])
            .collect();
        for (k, prev_row) in self.p.iter_mut().enumerate() {
            prev_row.push(row[k]);
        }
        self.p.push(row);
        self.c.push(self.theta * dot(&self.e, a_col));
        self.a_cols.push(a_col.to_vec());
        self.qa_cols.push(qa);
        Ok(())
    }

    pub fn qp(&self) -> Result<SimplexQp> {
        let n = self.dim();
        let p = DMatrix::from_fn(n, n, |i, j| self.p[i][j]);
        SimplexQp::new(p, DVector::from_column_slice(&self.c))
    }
}

/// `min ½ w'(A'QA)w − θ(e'A)w` over the simplex.
pub fn assemble_qp(
    a_matrix: &ResponseMatrix,
    q: &QMatrix,
    e: &ClassVector,
    theta: f64,
) -> Result<SimplexQp> {
    let mut b = QpBuilder::new(q.clone(), e, theta)?;
    for j in 0..a_matrix.cols() {
        b.push(a_matrix.a_column(j))?;
    }
    b.qp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate {
    pub u: Vec<f64>,
    pub r: f64,
}

impl DualCertificate {
    /// Largest `Σ_i u_i A_ij − r` over the columns of `a_matrix`.
    pub fn max_violation(&self, a_matrix: &ResponseMatrix) -> f64 {
        a_matrix
            .a_transpose_times(&self.u)
            .into_iter()
            .map(|edge| edge - self.r)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `u = −Qρ + θe`, `r = max_j Σ_i u_i A_ij`.
pub fn recover_dual(
    rho: &MarginVector,
    q: &QMatrix,
    e: &ClassVector,
    theta: f64,
    a_matrix: &ResponseMatrix,
) -> Result<DualCertificate> {
    let qrho = q.apply(rho.as_slice())?;
    let u: Vec<f64> = qrho
        .iter()
        .zip(&e.e)
        .map(|(qr, ei)| theta * ei - qr)
        .collect();
    let r = a_matrix
        .a_transpose_times(&u)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DualCertificate { u, r })
}

/// `½ ρ'Qρ − θ e'ρ`.
pub fn primal_objective(
    rho: &MarginVector,
    q: &QMatrix,
    e: &ClassVector,
    theta: f64,
) -> Result<f64> {
    Ok(0.5 * q.quad_form(rho.as_slice())? - theta * dot(&e.e, rho.as_slice()))
}

/// `−r − ½ (u − θe)'(Q + δI)⁻¹(u − θe)`.
pub fn dual_objective(
    cert: &DualCertificate,
    q: &QMatrix,
    e: &ClassVector,
    theta: f64,
) -> Result<f64> {
    let d: Vec<f64> = cert
        .u
        .iter()
        .zip(&e.e)
        .map(|(u, ei)| u - theta * ei)
        .collect();
    let solved = q.solve_regularized(&d)?;
    Ok(-cert.r - 0.5 * dot(&d, &solved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{margins, Label};
    use crate::rng::{SeededRng, Stream};

    fn labels(m1: usize, m2: usize) -> Vec<Label> {
        let mut l = vec![Label::Positive; m1];
        l.extend(vec![Label::Negative; m2]);
        l
    }

    fn random_responses(m1: usize, m2: usize, n: usize, rng: &mut SeededRng) -> ResponseMatrix {
        let mut a = ResponseMatrix::new(&labels(m1, m2));
        for _ in 0..n {
            let col: Vec<f64> = (0..m1 + m2)
                .map(|_| if rng.bernoulli(0.5) { 1.0 } else { -1.0 })
                .collect();
            a.push_column(&col).unwrap();
        }
        a
    }

    #[test]
    fn exact_fisher_blocks_for_two_and_two() {
        let q = build_q(Objective::Fisher, 2, 2, true, 0.0)
            .unwrap()
            .to_dense();
        let expect = [
            [0.25, -0.25, 0.0, 0.0],
            [-0.25, 0.25, 0.0, 0.0],
            [0.0, 0.0, 0.25, -0.25],
            [0.0, 0.0, -0.25, 0.25],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((q[(i, j)] - expect[i][j]).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn lac_zeroes_negative_block() {
        for exact in [true, false] {
            let q = build_q(Objective::Lac, 3, 4, exact, 0.0)
                .unwrap()
                .to_dense();
            for i in 3..7 {
                for j in 0..7 {
                    assert_eq!(q[(i, j)], 0.0);
                    assert_eq!(q[(j, i)], 0.0);
                }
            }
        }
    }

    #[test]
    fn exact_rows_sum_to_zero() {
        let q = build_q(Objective::Fisher, 5, 7, true, 0.0).unwrap();
        let ones = vec![1.0; 12];
        for v in q.apply(&ones).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn approximate_is_scaled_identity() {
        let q = build_q(Objective::Fisher, 5, 7, false, 0.0)
            .unwrap()
            .to_dense();
        assert_eq!(q, DMatrix::identity(12, 12) / 12.0);
        let q = build_q(Objective::Lac, 5, 7, false, 0.0)
            .unwrap()
            .to_dense();
        assert_eq!(q[(4, 4)], 1.0 / 12.0);
        assert_eq!(q[(5, 5)], 0.0);
    }

    #[test]
    fn exact_needs_two_positives() {
        assert!(build_q(Objective::Lac, 1, 5, true, 0.0).is_err());
        assert!(build_q(Objective::Lac, 1, 5, false, 0.0).is_ok());
    }

    #[test]
    fn q_is_symmetric_psd() {
        for (m1, m2) in [(2, 3), (10, 40), (60, 140)] {
            for obj in [Objective::Fisher, Objective::Lac] {
                let q = build_q(obj, m1, m2, true, 0.0).unwrap().to_dense();
                assert_eq!(q, q.transpose());
                let min = q.symmetric_eigenvalues().min();
                assert!(min >= -1e-10, "min eigenvalue {min}");
            }
        }
    }

    #[test]
    fn regularized_solve_inverts() {
        let q = build_q(Objective::Fisher, 4, 6, true, 1e-3).unwrap();
        let mut rng = SeededRng::new(41, Stream::Tests);
        let v: Vec<f64> = (0..10).map(|_| rng.normal()).collect();
        let x = q.solve_regularized(&v).unwrap();
        let back = &(q.to_dense() + DMatrix::identity(10, 10) * 1e-3) * DVector::from_vec(x);
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn single_column_qp() {
        let mut rng = SeededRng::new(42, Stream::Tests);
        let a = random_responses(3, 4, 1, &mut rng);
        let q = build_q(Objective::Fisher, 3, 4, true, 0.0).unwrap();
        let e = ClassVector::new(&labels(3, 4)).unwrap();
        let qp = assemble_qp(&a, &q, &e, 0.2).unwrap();
        assert_eq!(qp.dim(), 1);
        let col = a.a_column(0);
        assert!((qp.quadratic()[(0, 0)] - q.quad_form(col).unwrap()).abs() < 1e-15);
        assert!((qp.linear()[0] - 0.2 * dot(&e.e, col)).abs() < 1e-15);
        let zero = assemble_qp(&a, &q, &e, 0.0).unwrap();
        assert_eq!(zero.linear()[0], 0.0);
    }

    #[test]
    fn quadratic_term_matches_margin_form() {
        let mut rng = SeededRng::new(43, Stream::Tests);
        let (m1, m2, n) = (4, 6, 5);
        let a = random_responses(m1, m2, n, &mut rng);
        let q = build_q(Objective::Fisher, m1, m2, true, 0.0).unwrap();
        let e = ClassVector::new(&labels(m1, m2)).unwrap();
        let qp = assemble_qp(&a, &q, &e, 0.1).unwrap();
        let qd = q.to_dense();
        for _ in 0..100 {
            let raw: Vec<f64> = (0..n).map(|_| -rng.uniform_open().ln()).collect();
            let s: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let rho = margins(&a, &w).unwrap();
            let r = DVector::from_vec(rho.0.clone());
            let via_rho = 0.5 * r.dot(&(&qd * &r)) - 0.1 * dot(&e.e, &rho.0);
            assert!((qp.objective(&w) - via_rho).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_of_zero_margins() {
        let mut rng = SeededRng::new(44, Stream::Tests);
        let a = random_responses(3, 3, 4, &mut rng);
        let q = build_q(Objective::Fisher, 3, 3, true, 1e-6).unwrap();
        let e = ClassVector::new(&labels(3, 3)).unwrap();
        let cert = recover_dual(&MarginVector(vec![0.0; 6]), &q, &e, 0.3, &a).unwrap();
        for (u, ei) in cert.u.iter().zip(&e.e) {
            assert_eq!(*u, 0.3 * ei);
        }
        let best = a
            .a_transpose_times(&e.e)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((cert.r - 0.3 * best).abs() < 1e-15);
    }

    #[test]
    fn dual_with_zero_theta_and_identity_q() {
        let mut rng = SeededRng::new(45, Stream::Tests);
        let a = random_responses(3, 5, 2, &mut rng);
        let q = build_q(Objective::Fisher, 3, 5, false, 1e-6).unwrap();
        let e = ClassVector::new(&labels(3, 5)).unwrap();
        let rho = MarginVector((0..8).map(|_| rng.normal()).collect());
        let cert = recover_dual(&rho, &q, &e, 0.0, &a).unwrap();
        for (u, r) in cert.u.iter().zip(&rho.0) {
            assert!((u + r / 8.0).abs() < 1e-15);
        }
        assert!(cert.max_violation(&a) <= 1e-15);
    }
}
