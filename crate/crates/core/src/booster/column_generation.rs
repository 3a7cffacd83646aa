use log::{debug, warn};

use super::q::{
    build_q, dual_objective, recover_dual, DualCertificate, Objective, QMatrix, QpBuilder,
};
use super::{BoostConfig, StrongClassifier, Termination, Trace, TraceRow, Trainer};
use crate::data::{dot, margins, order_by_label, ClassVector, Dataset, Label, ResponseMatrix};
use crate::error::{Error, Result};
use crate::simplex::{eg_solve, warm_start};
use crate::stump::{Stump, StumpSearch};

/// Restricted master problem over a growing set of stumps.
///
/// The dataset must already be ordered positives first. Each iteration asks
/// the stump search for the column with the largest edge under the current
/// dual weights, stops if that edge is below `r + ε`, and otherwise adds the
/// column, re-solves the primal QP by EG (warm-started from the previous
/// weights) and recovers `(u, r)` from the new margins.
pub struct ColumnGeneration<'a> {
    data: &'a Dataset,
    search: StumpSearch<'a>,
    config: BoostConfig,
    objective: Objective,
    q: QMatrix,
    e: ClassVector,
    responses: ResponseMatrix,
    builder: QpBuilder,
    stumps: Vec<Stump>,
    w: Vec<f64>,
    value: f64,
    dual: DualCertificate,
    rows: Vec<TraceRow>,
    iteration: usize,
}

impl<'a> ColumnGeneration<'a> {
    pub fn new(ordered: &'a Dataset, config: &BoostConfig, objective: Objective) -> Result<Self> {
        config.validate()?;
        ordered.validate_for_training()?;
        let m1 = ordered.num_positives();
        if ordered.labels()[..m1].iter().any(|l| *l != Label::Positive) {
            return Err(Error::invalid(
                "column generation expects positives first; use order_by_label",
            ));
        }
        let m2 = ordered.len() - m1;
        let q = build_q(objective, m1, m2, config.q_exact, config.delta)?;
        let e = ClassVector::new(ordered.labels())?;
        let builder = QpBuilder::new(q.clone(), &e, config.theta)?;
        let m = ordered.len();
        Ok(Self {
            data: ordered,
            search: StumpSearch::new(ordered),
            config: config.clone(),
            objective,
            q,
            e,
            responses: ResponseMatrix::new(ordered.labels()),
            builder,
            stumps: Vec::new(),
            w: Vec::new(),
            value: f64::INFINITY,
            dual: DualCertificate {
                u: vec![1.0 / m as f64; m],
                r: f64::NEG_INFINITY,
            },
            rows: Vec::new(),
            iteration: 0,
        })
    }

    /// Seed the master problem with existing columns and solve it once.
    pub fn with_columns(mut self, stumps: &[Stump]) -> Result<Self> {
        if stumps.is_empty() {
            return Ok(self);
        }
        for s in stumps {
            self.push_column(*s)?;
        }
        self.w.clear();
        self.iteration += 1;
        self.solve(f64::NAN)?;
        Ok(self)
    }

    pub fn stumps(&self) -> &[Stump] {
        &self.stumps
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn dual(&self) -> &DualCertificate {
        &self.dual
    }

    pub fn responses(&self) -> &ResponseMatrix {
        &self.responses
    }

    pub fn q(&self) -> &QMatrix {
        &self.q
    }

    pub fn class_vector(&self) -> &ClassVector {
        &self.e
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn objective_value(&self) -> f64 {
        self.value
    }

    /// Add up to `max_new` columns.
    pub fn run(&mut self, max_new: usize) -> Result<Termination> {
        for _ in 0..max_new {
            self.iteration += 1;
            let features = self.config.features_for(self.data, self.iteration)?;
            let choice = self.search.best(&self.dual.u, &features)?;
            if !self.stumps.is_empty() && choice.edge < self.dual.r + self.config.epsilon {
                debug!(
                    "column generation optimal at iteration {}: edge {:e} < r {:e} + eps",
                    self.iteration, choice.edge, self.dual.r
                );
                return Ok(Termination::Optimal {
                    iteration: self.iteration,
                    edge: choice.edge,
                    r: self.dual.r,
                    features,
                });
            }
            self.push_column(choice.stump)?;
            self.solve(choice.edge)?;
        }
        Ok(Termination::ColumnLimit)
    }

    /// Add the best stump under the current dual weights even if it fails
    /// the optimality test. Returns its edge.
    pub fn add_best(&mut self) -> Result<f64> {
        self.iteration += 1;
        let features = self.config.features_for(self.data, self.iteration)?;
        let choice = self.search.best(&self.dual.u, &features)?;
        self.push_column(choice.stump)?;
        self.solve(choice.edge)?;
        Ok(choice.edge)
    }

    fn push_column(&mut self, stump: Stump) -> Result<()> {
        let h = stump.predict_all(self.data);
        self.responses.push_column(&h)?;
        self.builder
            .push(self.responses.a_column(self.responses.cols() - 1))?;
        self.stumps.push(stump);
        Ok(())
    }

    fn solve(&mut self, edge: f64) -> Result<()> {
        let qp = self.builder.qp()?;
        let n = qp.dim();
        let warm = (self.w.len() + 1 == n).then(|| warm_start(&self.w, self.config.warm_start_eps));
        let sol = eg_solve(&qp, warm.as_deref(), &self.config.solver)?;
        if !sol.converged {
            debug!(
                "EG hit its iteration budget ({}) with n = {n}",
                sol.iterations
            );
        }
        // Keeping the previous solution (new weight 0) bounds the objective
        // by its previous value.
        let (w, value) = if self.w.len() + 1 == n && sol.objective > self.value {
            let mut padded = self.w.clone();
            padded.push(0.0);
            (padded, self.value)
        } else {
            (sol.w, sol.objective)
        };
        let rho = margins(&self.responses, &w)?;
        self.dual = recover_dual(&rho, &self.q, &self.e, self.config.theta, &self.responses)?;
        let mu_gap = dot(&self.e.e, rho.as_slice());
        if mu_gap < 0.0 {
            warn!(
                "iteration {}: class-mean gap mu1 - mu2 = {mu_gap:e} is negative",
                self.iteration
            );
        }
        let dual_obj = if self.config.delta > 0.0 {
            dual_objective(&self.dual, &self.q, &self.e, self.config.theta)?
        } else {
            f64::NAN
        };
        self.rows.push(TraceRow {
            iteration: self.iteration,
            primal_obj: value,
            dual_obj,
            edge,
            r: self.dual.r,
            mu_gap,
            eg_iterations: sol.iterations,
        });
        self.w = w;
        self.value = value;
        Ok(())
    }

    pub fn classifier(&self) -> StrongClassifier {
        StrongClassifier {
            stumps: self.stumps.clone(),
            weights: self.w.clone(),
            offset: 0.0,
            trainer: match self.objective {
                Objective::Fisher => Trainer::FisherBoost,
                Objective::Lac => Trainer::LacBoost,
            },
            recalibration: None,
        }
    }
}

/// FisherBoost (`Objective::Fisher`) or LACBoost (`Objective::Lac`). The
/// returned classifier has offset 0.
pub fn train_totally_corrective(
    dataset: &Dataset,
    config: &BoostConfig,
    objective: Objective,
) -> Result<(StrongClassifier, Trace)> {
    let (ordered, perm) = order_by_label(dataset);
    let mut cg = ColumnGeneration::new(&ordered, config, objective)?;
    let termination = cg.run(config.n_max)?;
    let mut final_u = vec![0.0; dataset.len()];
    for (k, &orig) in perm.iter().enumerate() {
        final_u[orig] = cg.dual().u[k];
    }
    let trace = Trace {
        rows: cg.rows().to_vec(),
        termination,
        final_u,
    };
    Ok((cg.classifier(), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::booster::q::{assemble_qp, primal_objective};
    use crate::datasets::gen_toy_2d;
    use crate::simplex::{reference_solve, ReferenceConfig};
    use crate::stump::tests::brute_force;

    fn pair() -> Dataset {
        Dataset::from_features(
            &[vec![1.0], vec![-1.0]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap()
    }

    #[test]
    fn single_column_run() {
        let cfg = BoostConfig {
            n_max: 1,
            ..Default::default()
        };
        let (clf, trace) = train_totally_corrective(&pair(), &cfg, Objective::Fisher).unwrap();
        assert_eq!(clf.len(), 1);
        assert_eq!(clf.weights, vec![1.0]);
        assert_eq!(clf.training_error(&pair()), 0.0);
        assert_eq!(trace.termination, Termination::ColumnLimit);
    }

    #[test]
    fn fisher_matches_reference_on_selected_columns() {
        let data = gen_toy_2d(16, 24, 3).unwrap();
        let cfg = BoostConfig {
            theta: 0.1,
            n_max: 30,
            ..Default::default()
        };
        let (ordered, _) = order_by_label(&data);
        let mut cg = ColumnGeneration::new(&ordered, &cfg, Objective::Fisher).unwrap();
        let termination = cg.run(cfg.n_max).unwrap();
        let rows = cg.rows();
        assert!(rows.windows(2).all(|w| w[1].primal_obj <= w[0].primal_obj));

        let qp = assemble_qp(cg.responses(), cg.q(), cg.class_vector(), cfg.theta).unwrap();
        let reference = reference_solve(&qp, &ReferenceConfig::default()).unwrap();
        assert!(
            (cg.objective_value() - reference.objective).abs() <= 1e-5,
            "{} vs {}",
            cg.objective_value(),
            reference.objective
        );
        let rho = margins(cg.responses(), cg.weights()).unwrap();
        let via_rho = primal_objective(&rho, cg.q(), cg.class_vector(), cfg.theta).unwrap();
        assert!((via_rho - cg.objective_value()).abs() < 1e-10);

        if let Termination::Optimal { r, features, .. } = termination {
            let best = brute_force(&ordered, &cg.dual().u, &features);
            assert!(best.edge < r + cfg.epsilon);
        }
    }
}
