//! Multi-exit cascades: every exit reuses all weak classifiers selected so
//! far with its own weight vector and offset. Training proceeds exit by
//! exit, bootstrapping negatives that survive the cascade built so far.

mod metrics;

use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::booster::{
    simplex_weights, train_adaboost, train_asymboost, train_totally_corrective, AdaBoostRun,
    BoostConfig, ColumnGeneration, Objective, Recalibration, StrongClassifier, Termination, Trace,
    Trainer,
};
use crate::data::{order_by_label, Dataset, Label, Samples};
use crate::error::{Error, Result};
use crate::postprocess::{recalibrate, DEFAULT_SHRINKAGE};
use crate::rng::{SeededRng, Stream};
use crate::stump::Stump;

pub use metrics::{
    evaluate_cascade, normality_diagnostic, offset_for_fp, offset_line_search, product,
    CascadeEvaluation, NodeReport, NormalityReport, OffsetChoice, RocPoint, NORMALITY_MIN_POINTS,
};

/// Per-node learning goals: detection rate at least `d_target` with false
/// positive rate around `f_target`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NodeGoals {
    pub d_target: f64,
    pub f_target: f64,
}

impl Default for NodeGoals {
    fn default() -> Self {
        Self {
            d_target: 0.997,
            f_target: 0.5,
        }
    }
}

/// Training recipes compared in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CascadeMethod {
    #[serde(rename = "fisherboost")]
    FisherBoost,
    #[serde(rename = "lacboost")]
    LacBoost,
    #[serde(rename = "adaboost")]
    Ada,
    #[serde(rename = "ada+lac")]
    AdaLac,
    #[serde(rename = "ada+lda")]
    AdaLda,
    #[serde(rename = "asymboost")]
    Asym,
    #[serde(rename = "asym+lac")]
    AsymLac,
    #[serde(rename = "asym+lda")]
    AsymLda,
}

impl CascadeMethod {
    pub const ALL: [CascadeMethod; 8] = [
        CascadeMethod::FisherBoost,
        CascadeMethod::LacBoost,
        CascadeMethod::Ada,
        CascadeMethod::AdaLac,
        CascadeMethod::AdaLda,
        CascadeMethod::Asym,
        CascadeMethod::AsymLac,
        CascadeMethod::AsymLda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CascadeMethod::FisherBoost => "fisherboost",
            CascadeMethod::LacBoost => "lacboost",
            CascadeMethod::Ada => "adaboost",
            CascadeMethod::AdaLac => "ada+lac",
            CascadeMethod::AdaLda => "ada+lda",
            CascadeMethod::Asym => "asymboost",
            CascadeMethod::AsymLac => "asym+lac",
            CascadeMethod::AsymLda => "asym+lda",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// The totally-corrective objective, for FisherBoost and LACBoost.
    pub fn objective(self) -> Option<Objective> {
        match self {
            CascadeMethod::FisherBoost => Some(Objective::Fisher),
            CascadeMethod::LacBoost => Some(Objective::Lac),
            _ => None,
        }
    }

    pub fn is_asymmetric(self) -> bool {
        matches!(
            self,
            CascadeMethod::Asym | CascadeMethod::AsymLac | CascadeMethod::AsymLda
        )
    }

    pub fn recalibration(self) -> Option<Recalibration> {
        match self {
            CascadeMethod::AdaLac | CascadeMethod::AsymLac => Some(Recalibration::Lac),
            CascadeMethod::AdaLda | CascadeMethod::AsymLda => Some(Recalibration::Lda),
            _ => None,
        }
    }
}

impl fmt::Display for CascadeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CascadeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.name() == lower)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown method {s:?}; valid methods: {}",
                    Self::valid_names()
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CascadeConfig {
    pub boost: BoostConfig,
    /// Strictly increasing cumulative weak-classifier counts, one per exit.
    pub exit_schedule: Vec<usize>,
    pub goals: NodeGoals,
    /// Negatives used to train each exit.
    pub negatives_per_exit: usize,
    /// LAC/LDA recalibration, and LACBoost training, apply only to exits
    /// with at least this many weak classifiers; smaller LACBoost exits are
    /// trained by AdaBoost.
    pub min_weak_for_lac: usize,
    /// Cost ratio for the AsymBoost variants.
    pub k_asym: f64,
    pub shrinkage: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            boost: BoostConfig::default(),
            exit_schedule: vec![10, 20, 40, 70, 100],
            goals: NodeGoals::default(),
            negatives_per_exit: 1000,
            min_weak_for_lac: 30,
            k_asym: 4.0,
            shrinkage: DEFAULT_SHRINKAGE,
        }
    }
}

/// `count` exits with evenly growing prefixes ending at `total`.
pub fn even_schedule(count: usize, total: usize) -> Result<Vec<usize>> {
    if count == 0 || total < count {
        return Err(Error::invalid(format!(
            "cannot spread {total} weak classifiers over {count} exits"
        )));
    }
    Ok((1..=count).map(|t| (t * total).div_ceil(count)).collect())
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        self.boost.validate()?;
        if self.exit_schedule.is_empty() {
            return Err(Error::invalid("exit schedule is empty"));
        }
        if self.exit_schedule[0] == 0 || self.exit_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "exit schedule must be strictly increasing and positive, got {:?}",
                self.exit_schedule
            )));
        }
        let g = self.goals;
        if !(0.0..=1.0).contains(&g.d_target) || !(0.0..=1.0).contains(&g.f_target) {
            return Err(Error::invalid("node goals must lie in [0, 1]"));
        }
        if self.negatives_per_exit == 0 {
            return Err(Error::invalid("negatives_per_exit must be at least 1"));
        }
        if !(self.k_asym > 0.0) {
            return Err(Error::invalid("k_asym must be positive"));
        }
        Ok(())
    }
}

/// Conditions worth surfacing in reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExitFlags {
    /// The offset search returned a sentinel outside the score range.
    pub offset_sentinel: bool,
    /// The negative pool ran out before this exit's quota was filled.
    pub pool_exhausted: bool,
    /// Recalibration (or LACBoost) was skipped for a short prefix.
    pub below_min_weak: bool,
    /// Column generation met its optimality test before the scheduled
    /// prefix length.
    pub stopped_early: bool,
    /// A weak classifier was added even though no candidate improved the
    /// objective, to keep prefix lengths strictly increasing.
    pub forced_column: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeExit {
    pub prefix_length: usize,
    pub weights: Vec<f64>,
    pub offset: f64,
    pub trainer: Trainer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recalibration: Option<Recalibration>,
    #[serde(default)]
    pub flags: ExitFlags,
    /// Detection and false-positive rates on this exit's training set.
    pub train_detection_rate: f64,
    pub train_false_positive_rate: f64,
    pub train_negatives: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiExitCascade {
    pub method: CascadeMethod,
    pub goals: NodeGoals,
    pub stumps: Vec<Stump>,
    pub exits: Vec<CascadeExit>,
}

/// How far one example got through a cascade.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExampleTrace {
    /// Number of exits passed; equals the exit count when accepted.
    pub exits_passed: usize,
    /// Raw score `Σ_j w_j h_j(x)` at the final exit, when it was reached.
    pub final_score: Option<f64>,
}

impl MultiExitCascade {
    /// A one-exit cascade made from a strong classifier.
    pub fn from_strong(
        classifier: &StrongClassifier,
        method: CascadeMethod,
        goals: NodeGoals,
    ) -> Self {
        MultiExitCascade {
            method,
            goals,
            stumps: classifier.stumps.clone(),
            exits: vec![CascadeExit {
                prefix_length: classifier.len(),
                weights: classifier.weights.clone(),
                offset: classifier.offset,
                trainer: classifier.trainer,
                recalibration: classifier.recalibration,
                flags: ExitFlags::default(),
                train_detection_rate: f64::NAN,
                train_false_positive_rate: f64::NAN,
                train_negatives: 0,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.exits.is_empty() {
            return Err(Error::invalid("cascade has no exits"));
        }
        let mut prev = 0;
        for (t, e) in self.exits.iter().enumerate() {
            if e.prefix_length <= prev {
                return Err(Error::invalid(format!(
                    "exit {t}: prefix lengths must increase"
                )));
            }
            if e.weights.len() != e.prefix_length {
                return Err(Error::DimensionMismatch {
                    what: "exit weights",
                    expected: e.prefix_length,
                    found: e.weights.len(),
                });
            }
            prev = e.prefix_length;
        }
        if prev != self.stumps.len() {
            return Err(Error::invalid(format!(
                "final exit uses {prev} weak classifiers but the cascade stores {}",
                self.stumps.len()
            )));
        }
        Ok(())
    }

    pub fn check_compatible(&self, data: &Dataset) -> Result<()> {
        let nf = data.num_features();
        if let Some(s) = self.stumps.iter().find(|s| s.feature_index >= nf) {
            return Err(Error::invalid(format!(
                "cascade uses feature {} but the dataset has {nf} features",
                s.feature_index
            )));
        }
        Ok(())
    }

    /// The exit `t` classifier on its own.
    pub fn exit_classifier(&self, t: usize) -> StrongClassifier {
        let e = &self.exits[t];
        StrongClassifier {
            stumps: self.stumps[..e.prefix_length].to_vec(),
            weights: e.weights.clone(),
            offset: e.offset,
            trainer: e.trainer,
            recalibration: e.recalibration,
        }
    }

    /// Score example `i` exit by exit, stopping at the first rejection so
    /// that rejected examples are never scored by later exits.
    pub fn trace_example(&self, data: &Dataset, i: usize) -> ExampleTrace {
        let mut h: Vec<f64> = Vec::with_capacity(self.stumps.len());
        let last = self.exits.len() - 1;
        for (t, e) in self.exits.iter().enumerate() {
            while h.len() < e.prefix_length {
                h.push(self.stumps[h.len()].predict_example(data, i));
            }
            let score: f64 = e.weights.iter().zip(&h).map(|(w, v)| w * v).sum();
            let final_score = (t == last).then_some(score);
            if score - e.offset < 0.0 {
                return ExampleTrace {
                    exits_passed: t,
                    final_score,
                };
            }
            if t == last {
                return ExampleTrace {
                    exits_passed: t + 1,
                    final_score,
                };
            }
        }
        unreachable!("cascade has at least one exit")
    }

    pub fn accepts(&self, data: &Dataset, i: usize) -> bool {
        self.trace_example(data, i).exits_passed == self.exits.len()
    }

    pub fn predict(&self, data: &Dataset, i: usize) -> Label {
        if self.accepts(data, i) {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// For each exit, the raw scores (margins, since `y = +1`) of the
    /// positives in `data` that reach it.
    pub fn positive_margins_per_exit(&self, data: &Dataset) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.exits.len()];
        for i in data.indices_with(Label::Positive) {
            let mut h: Vec<f64> = Vec::new();
            for (t, e) in self.exits.iter().enumerate() {
                while h.len() < e.prefix_length {
                    h.push(self.stumps[h.len()].predict_example(data, i));
                }
                let score: f64 = e.weights.iter().zip(&h).map(|(w, v)| w * v).sum();
                out[t].push(score);
                if score - e.offset < 0.0 {
                    break;
                }
            }
        }
        out
    }
}

/// A trained cascade plus whether training stopped before the schedule
/// ended (for example because no negatives survived).
#[derive(Clone, Debug)]
pub struct CascadeTraining {
    pub cascade: MultiExitCascade,
    pub truncated: bool,
}

fn require_all(data: &Dataset, label: Label, what: &str) -> Result<()> {
    if data.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    if data.labels().iter().any(|l| *l != label) {
        return Err(Error::invalid(format!(
            "{what} must contain only {label:?} examples"
        )));
    }
    Ok(())
}

/// Train a single strong classifier on `dataset` with `method`. The
/// column-generation trace is returned for FisherBoost and LACBoost. The
/// recalibrated variants train AdaBoost/AsymBoost for `boost.n_max` rounds
/// and then replace the weights by the LAC/LDA solution.
pub fn train_strong(
    dataset: &Dataset,
    method: CascadeMethod,
    config: &CascadeConfig,
) -> Result<(StrongClassifier, Option<Trace>)> {
    if let Some(objective) = method.objective() {
        let (clf, trace) = train_totally_corrective(dataset, &config.boost, objective)?;
        return Ok((clf, Some(trace)));
    }
    let base = if method.is_asymmetric() {
        train_asymboost(dataset, &config.boost, config.k_asym)?
    } else {
        train_adaboost(dataset, &config.boost)?
    };
    let clf = match method.recalibration() {
        Some(kind) => recalibrate(&base, dataset, kind, config.shrinkage)?,
        None => base,
    };
    Ok((clf, None))
}

/// Train a multi-exit cascade on `positives` (all labelled +1) with
/// negatives bootstrapped from `neg_pool` (all labelled −1).
pub fn train_cascade(
    positives: &Dataset,
    neg_pool: &Dataset,
    method: CascadeMethod,
    config: &CascadeConfig,
) -> Result<CascadeTraining> {
    config.validate()?;
    require_all(positives, Label::Positive, "positive set")?;
    require_all(neg_pool, Label::Negative, "negative pool")?;
    if positives.num_features() != neg_pool.num_features() {
        return Err(Error::DimensionMismatch {
            what: "negative pool features",
            expected: positives.num_features(),
            found: neg_pool.num_features(),
        });
    }
    if matches!(
        (positives.samples(), neg_pool.samples()),
        (Samples::Features(_), Samples::Images(_)) | (Samples::Images(_), Samples::Features(_))
    ) {
        return Err(Error::invalid(
            "positives and negative pool must both be feature or image sets",
        ));
    }

    let mut order: Vec<usize> = (0..neg_pool.len()).collect();
    SeededRng::new(config.boost.seed, Stream::NegativePool).shuffle(&mut order);
    let quota = config.negatives_per_exit;
    let mut cursor = quota.min(order.len());
    let mut current: Vec<usize> = order[..cursor].to_vec();
    let mut exhausted = current.len() < quota;

    let mut cascade = MultiExitCascade {
        method,
        goals: config.goals,
        stumps: Vec::new(),
        exits: Vec::new(),
    };
    let mut alphas: Vec<f64> = Vec::new();
    let mut truncated = false;

    for (t, &target) in config.exit_schedule.iter().enumerate() {
        if current.len() < 2 {
            warn!(
                "exit {t}: only {} negatives survive; stopping",
                current.len()
            );
            truncated = true;
            break;
        }
        let negs = neg_pool.select(&current);
        let train = positives.concat(&negs)?;
        let prev = cascade.stumps.len();
        let want = target - prev;
        let mut flags = ExitFlags {
            pool_exhausted: exhausted,
            ..Default::default()
        };

        let lac_gated = target < config.min_weak_for_lac;
        let totally_corrective = method
            .objective()
            .filter(|o| !(*o == Objective::Lac && lac_gated));
        let (weights, trainer, recal) = if let Some(objective) = totally_corrective {
            let (ordered, _) = order_by_label(&train);
            let mut cg = ColumnGeneration::new(&ordered, &config.boost, objective)?
                .with_columns(&cascade.stumps)?;
            let termination = cg.run(want)?;
            flags.stopped_early = matches!(termination, Termination::Optimal { .. });
            if cg.stumps().len() == prev {
                cg.add_best()?;
                flags.forced_column = true;
            }
            cascade.stumps = cg.stumps().to_vec();
            let trainer = cg.classifier().trainer;
            (cg.weights().to_vec(), trainer, None)
        } else {
            if method.objective() == Some(Objective::Lac) {
                flags.below_min_weak = true;
            }
            let mut local = config.boost.clone();
            local.n_max = want;
            let mut run = AdaBoostRun::new(&train, &local)?;
            if method.is_asymmetric() {
                run = run.with_asymmetry(config.k_asym)?;
            }
            let mut run = run.resume(&cascade.stumps, &alphas)?;
            run.run(want)?;
            if run.stumps().len() == prev {
                run.push_zero_round()?;
                flags.forced_column = true;
            }
            flags.stopped_early = run.stumps().len() < target;
            cascade.stumps = run.stumps().to_vec();
            alphas = run.alphas().to_vec();
            let boosted = run.classifier();
            match method.recalibration() {
                Some(kind) if cascade.stumps.len() >= config.min_weak_for_lac => {
                    let r = recalibrate(&boosted, &train, kind, config.shrinkage)?;
                    (r.weights, boosted.trainer, Some(kind))
                }
                Some(_) => {
                    flags.below_min_weak = true;
                    (simplex_weights(&alphas), boosted.trainer, None)
                }
                None => (simplex_weights(&alphas), boosted.trainer, None),
            }
        };

        let prefix = cascade.stumps.len();
        let exit_clf = StrongClassifier {
            stumps: cascade.stumps.clone(),
            weights: weights.clone(),
            offset: 0.0,
            trainer,
            recalibration: recal,
        };
        let scores = exit_clf.raw_scores(&train);
        let choice = offset_line_search(&scores, train.labels(), config.goals.d_target)?;
        flags.offset_sentinel = choice.sentinel;
        if choice.sentinel {
            warn!(
                "exit {t}: offset search returned a sentinel ({})",
                choice.offset
            );
        }
        info!(
            "exit {t}: {prefix} weak classifiers, {} negatives, d = {:.4}, f = {:.4}",
            current.len(),
            choice.detection_rate,
            choice.false_positive_rate
        );
        cascade.exits.push(CascadeExit {
            prefix_length: prefix,
            weights,
            offset: choice.offset,
            trainer,
            recalibration: recal,
            flags,
            train_detection_rate: choice.detection_rate,
            train_false_positive_rate: choice.false_positive_rate,
            train_negatives: current.len(),
        });

        if t + 1 == config.exit_schedule.len() {
            break;
        }
        // Bootstrap: keep surviving negatives, then refill from the pool.
        let keep: Vec<bool> = current
            .par_iter()
            .map(|&i| cascade.accepts(neg_pool, i))
            .collect();
        current = current
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(i, _)| *i)
            .collect();
        while current.len() < quota && cursor < order.len() {
            let need = quota - current.len();
            let end = (cursor + need.max(256)).min(order.len());
            let block = &order[cursor..end];
            let pass: Vec<bool> = block
                .par_iter()
                .map(|&i| cascade.accepts(neg_pool, i))
                .collect();
            let mut used = 0;
            for (&i, &p) in block.iter().zip(&pass) {
                used += 1;
                if p {
                    current.push(i);
                    if current.len() == quota {
                        break;
                    }
                }
            }
            cursor += used;
        }
        exhausted = current.len() < quota;
    }

    if cascade.exits.is_empty() {
        return Err(Error::invalid("no exit could be trained"));
    }
    cascade.validate()?;
    Ok(CascadeTraining { cascade, truncated })
}

/// Candidate values for θ.
pub const DEFAULT_THETA_GRID: [f64; 8] = [
    1.0 / 10.0,
    1.0 / 12.0,
    1.0 / 15.0,
    1.0 / 20.0,
    1.0 / 25.0,
    1.0 / 30.0,
    1.0 / 40.0,
    1.0 / 50.0,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSearch {
    pub best_theta: f64,
    /// `(θ, cascade accuracy on positives ∪ pool)` per candidate.
    pub results: Vec<(f64, f64)>,
}

/// Train a cascade with `config`'s schedule for every θ in `grid` and keep
/// the one with the best training accuracy (ties go to the larger θ).
pub fn theta_grid_search(
    positives: &Dataset,
    neg_pool: &Dataset,
    method: CascadeMethod,
    config: &CascadeConfig,
    grid: &[f64],
) -> Result<ThetaSearch> {
    if grid.is_empty() {
        return Err(Error::invalid("theta grid is empty"));
    }
    let all = positives.concat(neg_pool)?;
    let results: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&theta| {
            let mut cfg = config.clone();
            cfg.boost.theta = theta;
            let trained = train_cascade(positives, neg_pool, method, &cfg)?;
            let eval = evaluate_cascade(&trained.cascade, &all)?;
            Ok((theta, eval.accuracy()))
        })
        .collect::<Result<_>>()?;
    let mut best = results[0];
    for &(theta, acc) in &results[1..] {
        if acc > best.1 || (acc == best.1 && theta > best.0) {
            best = (theta, acc);
        }
    }
    Ok(ThetaSearch {
        best_theta: best.0,
        results,
    })
}
