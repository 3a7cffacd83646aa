//! Minimise `f(w) = ½ w'Pw − c'w` over the unit simplex.
//!
//! [`eg_solve`] is the production solver: entropic (exponentiated) gradient
//! descent with multiplicative updates
//!
//! ```text
//! w_j ← w_j exp(−τ_k ∂_j f(w)) / Σ_l w_l exp(−τ_k ∂_l f(w)),
//! τ_k = s · √(2 ln n) / L_f · k^(−1/2)
//! ```
//!
//! where `L_f` bounds the largest gradient component over the simplex and
//! `s` is [`EgConfig::step_multiplier`]. The best iterate seen is returned.
//!
//! [`reference_solve`] is an accelerated projected-gradient method with an
//! exact Euclidean projection onto the simplex, used as ground truth.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `½ w'Pw − c'w` restricted to the unit simplex.
#[derive(Clone, Debug)]
pub struct SimplexQp {
    p: DMatrix<f64>,
    c: DVector<f64>,
}

impl SimplexQp {
    /// `p` must be square, match `c` and be symmetric to `1e-10` relative to
    /// its largest entry.
    pub fn new(p: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::invalid(format!(
                "quadratic term must be square, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        if p.nrows() != c.len() {
            return Err(Error::DimensionMismatch {
                what: "linear term",
                expected: p.nrows(),
                found: c.len(),
            });
        }
        let scale = p.amax().max(1.0);
        let asym = (&p - p.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::invalid(format!(
                "quadratic term is not symmetric (|P - P'| = {asym:e})"
            )));
        }
        Ok(Self { p, c })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn quadratic(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let w = DVector::from_column_slice(w);
        0.5 * w.dot(&(&self.p * &w)) - self.c.dot(&w)
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let w = DVector::from_column_slice(w);
        (&self.p * &w - &self.c).as_slice().to_vec()
    }
}

/// Upper bound on `max_{w ∈ Δ} ‖∇f(w)‖_∞`: since `|(Pw)_i| ≤ max_j |P_ij|`
/// on the simplex, `max_ij |P_ij| + max_j |c_j|` suffices.
pub fn lipschitz_estimate(qp: &SimplexQp) -> f64 {
    let pmax = qp.p.amax();
    let cmax = qp.c.amax();
    pmax + cmax
}

/// Extend a simplex point by one coordinate holding mass `eps` (before
/// rescaling) and return a strictly interior point.
pub fn warm_start(previous: &[f64], eps: f64) -> Vec<f64> {
    const FLOOR: f64 = 1e-12;
    let mut w: Vec<f64> = previous.iter().copied().chain([eps]).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v = (*v / total).max(FLOOR);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

#[derive(Clone, Debug, PartialEq)]
pub struct EgConfig {
    /// Stop once the best objective improved by less than this over the last
    /// `window` iterations and the current iterate is within this of the best.
    pub tolerance: f64,
    pub window: usize,
    pub max_iters: usize,
    /// Multiplier `s` on the base step `√(2 ln n)/L_f`.
    pub step_multiplier: f64,
}

impl Default for EgConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            window: 50,
            max_iters: 10_000,
            step_multiplier: 10.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EgSolution {
    pub w: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// `false` when the iteration budget ran out before the stall test fired.
    pub converged: bool,
}

/// Iterate of the EG solver plus best-iterate bookkeeping.
#[derive(Clone, Debug)]
pub struct SolverState<'a> {
    qp: &'a SimplexQp,
    w: Vec<f64>,
    grad: Vec<f64>,
    k: usize,
    best_w: Vec<f64>,
    best_f: f64,
    current_f: f64,
    lipschitz: f64,
    base_step: f64,
    history: VecDeque<f64>,
    config: EgConfig,
}

impl<'a> SolverState<'a> {
    pub fn new(qp: &'a SimplexQp, init: Option<&[f64]>, config: &EgConfig) -> Result<Self> {
        let n = qp.dim();
        if n == 0 {
            return Err(Error::EmptyProblem);
        }
        let w = match init {
            None => vec![1.0 / n as f64; n],
            Some(w0) => {
                if w0.len() != n {
                    return Err(Error::DimensionMismatch {
                        what: "initial point",
                        expected: n,
                        found: w0.len(),
                    });
                }
                if w0.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return Err(Error::invalid("EG initial point must be strictly interior"));
                }
                let s: f64 = w0.iter().sum();
                w0.iter().map(|v| v / s).collect()
            }
        };
        let lipschitz = lipschitz_estimate(qp);
        let base_step = if lipschitz > 0.0 {
            config.step_multiplier * (2.0 * (n as f64).ln()).sqrt() / lipschitz
        } else {
            0.0
        };
        let grad = qp.gradient(&w);
        check_finite(&grad, 0)?;
        let f = objective_from_gradient(qp, &w, &grad);
        let mut history = VecDeque::with_capacity(config.window + 1);
        history.push_back(f);
        Ok(Self {
            qp,
            best_w: w.clone(),
            w,
            grad,
            k: 0,
            best_f: f,
            current_f: f,
            lipschitz,
            base_step,
            history,
            config: config.clone(),
        })
    }

    pub fn iterate(&self) -> &[f64] {
        &self.w
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn best(&self) -> (&[f64], f64) {
        (&self.best_w, self.best_f)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Step size used by iteration `k` (1-based).
    pub fn step_size(&self, k: usize) -> f64 {
        self.base_step / (k as f64).sqrt()
    }

    /// True once the stall test or the iteration budget says stop. A constant
    /// objective (`L_f = 0`) or a one-point simplex stops immediately.
    pub fn should_stop(&self) -> bool {
        self.base_step == 0.0 || self.k >= self.config.max_iters || self.stalled()
    }

    /// The best objective moved by less than the tolerance over the window
    /// and the current iterate has settled within the tolerance of it. The
    /// second condition keeps early overshooting (all iterates worse than a
    /// good warm start) from passing for convergence.
    fn stalled(&self) -> bool {
        self.k >= self.config.window
            && self.current_f - self.best_f <= self.config.tolerance
            && self
                .history
                .front()
                .is_some_and(|&old| old - self.best_f < self.config.tolerance)
    }

    pub fn step(&mut self) -> Result<()> {
        self.k += 1;
        let tau = self.step_size(self.k);
        let zmax = self
            .grad
            .iter()
            .map(|g| -tau * g)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (wj, gj) in self.w.iter_mut().zip(&self.grad) {
            *wj *= (-tau * gj - zmax).exp();
            total += *wj;
        }
        self.w.iter_mut().for_each(|wj| *wj /= total);
        self.grad = self.qp.gradient(&self.w);
        check_finite(&self.grad, self.k)?;
        let f = objective_from_gradient(self.qp, &self.w, &self.grad);
        self.current_f = f;
        if f < self.best_f {
            self.best_f = f;
            self.best_w.clone_from(&self.w);
        }
        self.history.push_back(self.best_f);
        if self.history.len() > self.config.window + 1 {
            self.history.pop_front();
        }
        Ok(())
    }

    pub fn into_solution(self) -> EgSolution {
        let converged = self.base_step == 0.0 || self.stalled();
        EgSolution {
            w: self.best_w,
            objective: self.best_f,
            iterations: self.k,
            converged,
        }
    }
}

fn check_finite(grad: &[f64], iteration: usize) -> Result<()> {
    match grad.iter().position(|g| !g.is_finite()) {
        Some(component) => Err(Error::NonFiniteGradient {
            iteration,
            component,
        }),
        None => Ok(()),
    }
}

// With g = Pw − c: ½ w'Pw − c'w = ½ w'g − ½ c'w.
fn objective_from_gradient(qp: &SimplexQp, w: &[f64], grad: &[f64]) -> f64 {
    let wg: f64 = w.iter().zip(grad).map(|(a, b)| a * b).sum();
    let wc: f64 = w.iter().zip(qp.c.iter()).map(|(a, b)| a * b).sum();
    0.5 * wg - 0.5 * wc
}

pub fn eg_solve(qp: &SimplexQp, init: Option<&[f64]>, config: &EgConfig) -> Result<EgSolution> {
    let mut state = SolverState::new(qp, init, config)?;
    while !state.should_stop() {
        state.step()?;
    }
    Ok(state.into_solution())
}

/// Euclidean projection onto the unit simplex (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            shift = t;
        } else {
            break;
        }
    }
    v.iter().map(|x| (x - shift).max(0.0)).collect()
}

#[derive(Clone, Debug)]
pub struct ReferenceConfig {
    /// Bound on `L ‖w − Π(w − ∇f(w)/L)‖_∞`, the projected-gradient residual.
    pub stationarity_tol: f64,
    pub max_iters: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            stationarity_tol: 1e-9,
            max_iters: 500_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub w: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub residual: f64,
}

pub const REFERENCE_MAX_DIM: usize = 2000;

/// Dense accelerated projected gradient (FISTA with backtracking and
/// function-value restarts).
pub fn reference_solve(qp: &SimplexQp, config: &ReferenceConfig) -> Result<ReferenceSolution> {
    let n = qp.dim();
    if n == 0 {
        return Err(Error::EmptyProblem);
    }
    if n > REFERENCE_MAX_DIM {
        return Err(Error::invalid(format!(
            "reference solver is dense; n = {n} exceeds {REFERENCE_MAX_DIM}"
        )));
    }
    if n == 1 {
        let w = vec![1.0];
        return Ok(ReferenceSolution {
            objective: qp.objective(&w),
            w,
            iterations: 0,
            residual: 0.0,
        });
    }
    let p = &qp.p;
    let c = &qp.c;
    let f_of = |x: &DVector<f64>, px: &DVector<f64>| 0.5 * x.dot(px) - c.dot(x);

    let mut lip = power_iteration_bound(p).max(1e-12);
    let lip_cap = lip * 1e8;
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut px = p * &x;
    let mut fx = f_of(&x, &px);
    let mut y = x.clone();
    let mut py = px.clone();
    let mut t = 1.0f64;
    let mut residual = f64::INFINITY;

    for iter in 1..=config.max_iters {
        let gy = &py - c;
        let fy = f_of(&y, &py);
        let (x_new, px_new, f_new) = loop {
            let step: Vec<f64> = y.iter().zip(gy.iter()).map(|(a, g)| a - g / lip).collect();
            let cand = DVector::from_vec(project_to_simplex(&step));
            let pc = p * &cand;
            let fc = f_of(&cand, &pc);
            let d = &cand - &y;
            let model = fy + gy.dot(&d) + 0.5 * lip * d.norm_squared();
            if fc <= model + 1e-14 * (1.0 + fy.abs()) || lip >= lip_cap {
                break (cand, pc, fc);
            }
            lip *= 2.0;
        };

        let g_new = &px_new - c;
        let probe: Vec<f64> = x_new
            .iter()
            .zip(g_new.iter())
            .map(|(a, g)| a - g / lip)
            .collect();
        let probe = project_to_simplex(&probe);
        residual = lip
            * x_new
                .iter()
                .zip(&probe)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);

        if f_new > fx && t > 1.0 {
            // Restart momentum; the next iteration takes a plain projected
            // gradient step from x.
            t = 1.0;
            y = x.clone();
            py = px.clone();
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        y = &x_new + (&x_new - &x) * beta;
        py = &px_new * (1.0 + beta) - &px * beta;
        x = x_new;
        px = px_new;
        fx = f_new;
        t = t_new;
        if residual <= config.stationarity_tol {
            return Ok(ReferenceSolution {
                w: x.as_slice().to_vec(),
                objective: fx,
                iterations: iter,
                residual,
            });
        }
        if residual <= 1e-5 && iter % 50 == 0 {
            if let Some((w, r)) = polish_on_support(p, c, &probe, lip) {
                if r <= config.stationarity_tol {
                    let pw = p * &w;
                    return Ok(ReferenceSolution {
                        objective: f_of(&w, &pw),
                        w: w.as_slice().to_vec(),
                        iterations: iter,
                        residual: r,
                    });
                }
            }
        }
    }
    Err(Error::NotConverged {
        iterations: config.max_iters,
        residual,
    })
}

/// Solve the KKT system restricted to the support of `guess`:
/// `P_SS w_S − c_S = λ 1`, `1'w_S = 1`, `w_i = 0` off `S`. Returns the
/// candidate and its projected-gradient residual when it is feasible.
fn polish_on_support(
    p: &DMatrix<f64>,
    c: &DVector<f64>,
    guess: &[f64],
    lip: f64,
) -> Option<(DVector<f64>, f64)> {
    let support: Vec<usize> = (0..guess.len()).filter(|&i| guess[i] > 0.0).collect();
    let k = support.len();
    if k == 0 {
        return None;
    }
    let mut kkt = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = p[(i, j)];
        }
        kkt[(a, k)] = -1.0;
        kkt[(k, a)] = 1.0;
        rhs[a] = c[i];
    }
    rhs[k] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) || sol.iter().take(k).any(|&v| v < 0.0) {
        return None;
    }
    let mut w = DVector::zeros(guess.len());
    for (a, &i) in support.iter().enumerate() {
        w[i] = sol[a];
    }
    let total = w.sum();
    w /= total;
    let g = p * &w - c;
    let probe: Vec<f64> = w.iter().zip(g.iter()).map(|(a, g)| a - g / lip).collect();
    let probe = project_to_simplex(&probe);
    let r = lip
        * w.iter()
            .zip(&probe)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
    Some((w, r))
}

/// Estimate of the largest eigenvalue of a PSD matrix, padded upward.
fn power_iteration_bound(p: &DMatrix<f64>) -> f64 {
    let n = p.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i % 7) as f64 * 0.1);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..100 {
        let pv = p * &v;
        let norm = pv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = pv / norm;
    }
    lambda * 1.01
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::{SeededRng, Stream};

    fn qp(p: &[&[f64]], c: &[f64]) -> SimplexQp {
        let n = c.len();
        let p = DMatrix::from_fn(n, n, |i, j| p[i][j]);
        SimplexQp::new(p, DVector::from_column_slice(c)).unwrap()
    }

    pub(crate) fn random_spd(n: usize, rng: &mut SeededRng) -> SimplexQp {
        let b = DMatrix::from_fn(n, n, |_, _| rng.normal());
        let p = (&b * b.transpose()) / n as f64;
        let p = (&p + p.transpose()) * 0.5;
        let c = DVector::from_fn(n, |_, _| rng.normal());
        SimplexQp::new(p, c).unwrap()
    }

    fn on_simplex(w: &[f64]) -> bool {
        w.iter().all(|&v| v >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() <= 1e-12
    }

    #[test]
    fn one_dimensional_simplex_is_a_point() {
        let q = qp(&[&[3.0]], &[0.5]);
        let s = eg_solve(&q, None, &EgConfig::default()).unwrap();
        assert_eq!(s.w, vec![1.0]);
        assert_eq!(s.objective, 1.5 - 0.5);
        let r = reference_solve(&q, &ReferenceConfig::default()).unwrap();
        assert_eq!(r.w, vec![1.0]);
    }

    #[test]
    fn linear_objective_hits_vertex() {
        let q = qp(&[&[0.0; 3], &[0.0; 3], &[0.0; 3]], &[1.0, 0.0, 0.0]);
        let s = eg_solve(&q, None, &EgConfig::default()).unwrap();
        assert!((s.objective + 1.0).abs() < 1e-6, "{}", s.objective);
        assert!(s.w[0] > 1.0 - 1e-6);
    }

    #[test]
    fn empty_problem_rejected() {
        let q = SimplexQp::new(DMatrix::zeros(0, 0), DVector::zeros(0)).unwrap();
        assert!(matches!(
            eg_solve(&q, None, &EgConfig::default()),
            Err(Error::EmptyProblem)
        ));
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let q = qp(&[&[1.0, 0.0], &[0.0, 1.0]], &[f64::NAN, 0.0]);
        assert!(matches!(
            eg_solve(&q, None, &EgConfig::default()),
            Err(Error::NonFiniteGradient { .. })
        ));
    }

    #[test]
    fn boundary_init_rejected() {
        let q = qp(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0]);
        assert!(eg_solve(&q, Some(&[1.0, 0.0]), &EgConfig::default()).is_err());
    }

    #[test]
    fn constant_objective_returns_initial_point() {
        let q = qp(&[&[0.0, 0.0], &[0.0, 0.0]], &[0.0, 0.0]);
        let s = eg_solve(&q, Some(&[0.25, 0.75]), &EgConfig::default()).unwrap();
        assert_eq!(s.w, vec![0.25, 0.75]);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn reference_midpoint_by_symmetry() {
        let q = qp(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0]);
        let r = reference_solve(&q, &ReferenceConfig::default()).unwrap();
        assert!((r.w[0] - 0.5).abs() < 1e-9 && (r.w[1] - 0.5).abs() < 1e-9);
        assert!((r.objective - 0.25).abs() < 1e-12);
    }

    /// Grid over the 2-simplex with spacing 1e-4.
    fn grid_minimum(q: &SimplexQp) -> (Vec<f64>, f64) {
        let steps = 10_000usize;
        let h = 1.0 / steps as f64;
        let mut best = (vec![], f64::INFINITY);
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let w = [i as f64 * h, j as f64 * h, (steps - i - j) as f64 * h];
                let f = 0.5 * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
                    - w[0] * q.c[0]
                    - w[1] * q.c[1]
                    - w[2] * q.c[2];
                if f < best.1 {
                    best = (w.to_vec(), f);
                }
            }
        }
        best
    }

    #[test]
    fn reference_matches_grid_search() {
        let q = qp(
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
            &[1.0, 0.0, 0.0],
        );
        let (gw, gf) = grid_minimum(&q);
        // Frozen from the grid: the vertex e1 with f = -1/2.
        assert_eq!(gw, vec![1.0, 0.0, 0.0]);
        assert_eq!(gf, -0.5);
        let r = reference_solve(&q, &ReferenceConfig::default()).unwrap();
        for (a, b) in r.w.iter().zip(&gw) {
            assert!((a - b).abs() < 1e-4);
        }
        assert!((r.objective - gf).abs() < 1e-4);
    }

    #[test]
    fn eg_matches_reference_on_small_spd() {
        let mut rng = SeededRng::new(21, Stream::Tests);
        for _ in 0..10 {
            let q = random_spd(3, &mut rng);
            let e = eg_solve(&q, None, &EgConfig::default()).unwrap();
            let r = reference_solve(&q, &ReferenceConfig::default()).unwrap();
            assert!(
                (e.objective - r.objective).abs() <= 1e-5,
                "{} vs {}",
                e.objective,
                r.objective
            );
            assert!(on_simplex(&e.w));
        }
    }

    #[test]
    fn lipschitz_examples() {
        let zero = qp(&[&[0.0, 0.0], &[0.0, 0.0]], &[0.0, 0.0]);
        assert_eq!(lipschitz_estimate(&zero), 0.0);
        let lin = qp(&[&[0.0, 0.0], &[0.0, 0.0]], &[3.0, -1.0]);
        assert_eq!(lipschitz_estimate(&lin), 3.0);
    }

    #[test]
    fn lipschitz_bounds_sampled_gradients() {
        let mut rng = SeededRng::new(22, Stream::Tests);
        for n in [2, 5, 17] {
            let q = random_spd(n, &mut rng);
            let bound = lipschitz_estimate(&q);
            for _ in 0..1000 {
                let raw: Vec<f64> = (0..n).map(|_| -rng.uniform_open().ln()).collect();
                let s: f64 = raw.iter().sum();
                let w: Vec<f64> = raw.iter().map(|v| v / s).collect();
                let gmax = q.gradient(&w).iter().fold(0.0f64, |m, g| m.max(g.abs()));
                assert!(gmax <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn warm_start_examples() {
        let w = warm_start(&[1.0], 0.01);
        assert!((w[0] - 1.0 / 1.01).abs() < 1e-15);
        assert!((w[1] - 0.01 / 1.01).abs() < 1e-15);
        let w = warm_start(&[0.5, 0.5, 0.0], 0.01);
        assert!(w.iter().all(|&v| v > 0.0));
        assert!(on_simplex(&w));
    }

    #[test]
    fn warm_start_chain_stays_feasible() {
        let mut rng = SeededRng::new(23, Stream::Tests);
        let big = random_spd(11, &mut rng);
        let mut w = vec![1.0];
        for n in 2..=11 {
            let sub = SimplexQp::new(
                big.p.view((0, 0), (n, n)).into_owned(),
                big.c.rows(0, n).into_owned(),
            )
            .unwrap();
            let init = warm_start(&w, 1e-2);
            assert!(on_simplex(&init) && init.iter().all(|&v| v > 0.0));
            let mut state = SolverState::new(&sub, Some(&init), &EgConfig::default()).unwrap();
            while !state.should_stop() {
                state.step().unwrap();
                assert!(on_simplex(state.iterate()));
            }
            w = state.into_solution().w;
        }
    }

    #[test]
    fn best_objective_is_monotone() {
        let mut rng = SeededRng::new(24, Stream::Tests);
        let q = random_spd(30, &mut rng);
        let mut state = SolverState::new(&q, None, &EgConfig::default()).unwrap();
        let mut last = state.best().1;
        while !state.should_stop() {
            state.step().unwrap();
            let now = state.best().1;
            assert!(now <= last);
            last = now;
        }
    }

    #[test]
    fn constant_shift_moves_objective_only() {
        let mut rng = SeededRng::new(25, Stream::Tests);
        let q = random_spd(8, &mut rng);
        let gamma = 0.7;
        let shifted = SimplexQp::new(q.p.clone(), q.c.add_scalar(-gamma)).unwrap();
        let cfg = ReferenceConfig {
            stationarity_tol: 1e-12,
            ..Default::default()
        };
        let (a, b) = (
            reference_solve(&q, &cfg).unwrap(),
            reference_solve(&shifted, &cfg).unwrap(),
        );
        assert!((b.objective - a.objective - gamma).abs() < 1e-10);
        for (x, y) in a.w.iter().zip(&b.w) {
            assert!((x - y).abs() < 1e-8);
        }
        let (ea, eb) = (
            eg_solve(&q, None, &EgConfig::default()).unwrap(),
            eg_solve(&shifted, None, &EgConfig::default()).unwrap(),
        );
        assert!((eb.objective - ea.objective - gamma).abs() < 1e-5);
    }

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_to_simplex(&[0.3, -2.0, 5.0, 0.1]);
        assert!(on_simplex(&p));
        assert_eq!(p, vec![0.0, 0.0, 1.0, 0.0]);
        let p = project_to_simplex(&[0.2, 0.3, 0.5]);
        assert!((p[0] - 0.2).abs() < 1e-15 && (p[2] - 0.5).abs() < 1e-15);
    }
}
