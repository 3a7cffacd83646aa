//! Boosting: totally-corrective column generation (FisherBoost, LACBoost)
//! and the stagewise AdaBoost/AsymBoost baselines.

mod adaboost;
mod column_generation;
pub mod q;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::simplex::EgConfig;
use crate::stump::{sample_features_with, Stump};

pub(crate) use adaboost::simplex_weights;
pub use adaboost::{train_adaboost, train_asymboost, AdaBoostRun, ADABOOST_ERROR_FLOOR};
pub use column_generation::{train_totally_corrective, ColumnGeneration};
pub use q::{
    assemble_qp, build_q, dual_objective, primal_objective, recover_dual, DualCertificate,
    Objective, QMatrix, QpBuilder,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    /// Weight of the class-mean separation against the variance term.
    pub theta: f64,
    /// Column generation stops once the best new edge is below `r + epsilon`.
    pub epsilon: f64,
    pub n_max: usize,
    /// Ridge on `Q` wherever it is inverted.
    pub delta: f64,
    /// Use the exact block `Q` rather than the `(1/m) I` approximation.
    pub q_exact: bool,
    /// Fraction of features offered to each stump search.
    pub feature_fraction: f64,
    pub seed: u64,
    /// Mass given to the new coordinate when warm-starting EG.
    pub warm_start_eps: f64,
    #[serde(with = "eg_config_serde")]
    pub solver: EgConfig,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            theta: 0.1,
            epsilon: 1e-5,
            n_max: 200,
            delta: 1e-6,
            q_exact: false,
            feature_fraction: 1.0,
            seed: 0,
            warm_start_eps: 1e-2,
            solver: EgConfig::default(),
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::invalid(format!(
                "theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if self.n_max == 0 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::invalid("feature_fraction must lie in (0, 1]"));
        }
        if !(self.warm_start_eps > 0.0) {
            return Err(Error::invalid("warm_start_eps must be positive"));
        }
        Ok(())
    }

    /// Feature subset offered at boosting iteration `iteration`. Each
    /// iteration draws from its own seeded stream.
    pub(crate) fn features_for(&self, data: &Dataset, iteration: usize) -> Result<Vec<usize>> {
        const FEATURE_STREAM_BASE: u64 = 1 << 32;
        let mut rng = SeededRng::with_stream_id(self.seed, FEATURE_STREAM_BASE + iteration as u64);
        sample_features_with(data.num_features(), self.feature_fraction, &mut rng)
    }
}

mod eg_config_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::simplex::EgConfig;

    #[derive(Serialize, Deserialize)]
    #[serde(default)]
    struct Repr {
        tolerance: f64,
        window: usize,
        max_iters: usize,
        step_multiplier: f64,
    }

    impl Default for Repr {
        fn default() -> Self {
            let d = EgConfig::default();
            Repr {
                tolerance: d.tolerance,
                window: d.window,
                max_iters: d.max_iters,
                step_multiplier: d.step_multiplier,
            }
        }
    }

    pub fn serialize<S: Serializer>(c: &EgConfig, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            tolerance: c.tolerance,
            window: c.window,
            max_iters: c.max_iters,
            step_multiplier: c.step_multiplier,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<EgConfig, D::Error> {
        let r = Repr::deserialize(d)?;
        Ok(EgConfig {
            tolerance: r.tolerance,
            window: r.window,
            max_iters: r.max_iters,
            step_multiplier: r.step_multiplier,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trainer {
    FisherBoost,
    LacBoost,
    AdaBoost,
    AsymBoost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recalibration {
    Lac,
    Lda,
}

/// `F(x) = Σ_j w_j h_j(x) − b`, positive when `F(x) ≥ 0`.
///
/// Boosted classifiers carry simplex weights; after LAC/LDA recalibration
/// the weights are an arbitrary direction and `recalibration` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongClassifier {
    pub stumps: Vec<Stump>,
    pub weights: Vec<f64>,
    pub offset: f64,
    pub trainer: Trainer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recalibration: Option<Recalibration>,
}

impl StrongClassifier {
    pub fn len(&self) -> usize {
        self.stumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stumps.is_empty()
    }

    pub fn is_on_simplex(&self, tol: f64) -> bool {
        self.weights.iter().all(|&w| w >= 0.0)
            && (self.weights.iter().sum::<f64>() - 1.0).abs() <= tol
    }

    /// `Σ_j w_j h_j(x_i)` for every example, without the offset.
    pub fn raw_scores(&self, data: &Dataset) -> Vec<f64> {
        let mut s = vec![0.0; data.len()];
        for (stump, &w) in self.stumps.iter().zip(&self.weights) {
            for (acc, h) in s.iter_mut().zip(stump.predict_all(data)) {
                *acc += w * h;
            }
        }
        s
    }

    pub fn raw_score(&self, data: &Dataset, i: usize) -> f64 {
        self.stumps
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * s.predict_example(data, i))
            .sum()
    }

    pub fn decision(&self, data: &Dataset, i: usize) -> f64 {
        self.raw_score(data, i) - self.offset
    }

    pub fn predict(&self, data: &Dataset, i: usize) -> Label {
        if self.decision(data, i) >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn training_error(&self, data: &Dataset) -> f64 {
        let wrong = (0..data.len())
            .filter(|&i| self.predict(data, i) != data.label(i))
            .count();
        wrong as f64 / data.len() as f64
    }
}

/// One column-generation iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Edge of the stump added at this iteration.
    pub edge: f64,
    pub r: f64,
    /// `μ1 − μ2 = e'ρ`.
    pub mu_gap: f64,
    pub eg_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    /// The best stump's edge fell below `r + ε`.
    Optimal {
        iteration: usize,
        edge: f64,
        r: f64,
        /// Features searched at the terminating iteration.
        features: Vec<usize>,
    },
    /// Column budget exhausted.
    ColumnLimit,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub termination: Termination,
    /// Final dual weights, in the caller's example order.
    pub final_u: Vec<f64>,
}

impl Trace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,primal_obj,dual_obj,edge,r,mu_gap")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e}",
                r.iteration, r.primal_obj, r.dual_obj, r.edge, r.r, r.mu_gap
            )?;
        }
        Ok(())
    }

    /// True when the primal objective never increased between iterations.
    pub fn is_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].primal_obj <= w[0].primal_obj)
    }
}
