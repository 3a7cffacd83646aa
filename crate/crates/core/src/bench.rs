//! Timing comparison of the EG solver against the dense reference solver on
//! booster-shaped simplex QPs.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::{SeededRng, Stream};
use crate::simplex::{eg_solve, reference_solve, EgConfig, ReferenceConfig, SimplexQp};

/// Random `A ∈ {±1}^{m×n}` with the first half of the rows positive;
/// `P = A'A/m` (the approximate-`Q` quadratic term) and `c = θ (e'A)'`.
pub fn bench_qp(n: usize, m: usize, theta: f64, seed: u64) -> Result<SimplexQp> {
    let mut rng = SeededRng::new(seed, Stream::SolverBench);
    let a = DMatrix::from_fn(m, n, |_, _| if rng.bernoulli(0.5) { 1.0 } else { -1.0 });
    let m1 = m / 2;
    let e = DVector::from_fn(m, |i, _| {
        if i < m1 {
            1.0 / m1 as f64
        } else {
            1.0 / (m - m1) as f64
        }
    });
    let mut p = a.transpose() * &a / m as f64;
    // Exact symmetry regardless of summation order.
    p = (&p + p.transpose()) * 0.5;
    let c = a.transpose() * e * theta;
    SimplexQp::new(p, c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n: usize,
    pub tolerance: f64,
    pub eg_seconds: f64,
    pub reference_seconds: f64,
    pub eg_objective: f64,
    pub reference_objective: f64,
    pub eg_iterations: usize,
    pub reference_iterations: usize,
    /// `|f_EG − f_ref|`.
    pub objective_gap: f64,
    /// Reference time divided by EG time.
    pub speed_ratio: f64,
}

/// Solve `qp` with both solvers, EG at objective tolerance `tolerance` and
/// the reference at stationarity tolerance `tolerance`.
pub fn bench_solvers(qp: &SimplexQp, tolerance: f64, eg: &EgConfig) -> Result<BenchReport> {
    let eg_cfg = EgConfig {
        tolerance,
        ..eg.clone()
    };
    let t0 = Instant::now();
    let eg_sol = eg_solve(qp, None, &eg_cfg)?;
    let eg_seconds = t0.elapsed().as_secs_f64();
    let ref_cfg = ReferenceConfig {
        stationarity_tol: tolerance,
        ..Default::default()
    };
    let t1 = Instant::now();
    let ref_sol = reference_solve(qp, &ref_cfg)?;
    let reference_seconds = t1.elapsed().as_secs_f64();
    Ok(BenchReport {
        n: qp.dim(),
        tolerance,
        eg_seconds,
        reference_seconds,
        eg_objective: eg_sol.objective,
        reference_objective: ref_sol.objective,
        eg_iterations: eg_sol.iterations,
        reference_iterations: ref_sol.iterations,
        objective_gap: (eg_sol.objective - ref_sol.objective).abs(),
        speed_ratio: reference_seconds / eg_seconds.max(1e-12),
    })
}
