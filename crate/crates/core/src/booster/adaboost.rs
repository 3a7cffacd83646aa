use log::debug;

use super::{BoostConfig, StrongClassifier, Trainer};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stump::{Stump, StumpSearch};

/// Weighted errors are floored here before computing `α`, which caps a
/// single round's weight at `½ ln((1 − 1e-10)/1e-10) ≈ 11.51`.
pub const ADABOOST_ERROR_FLOOR: f64 = 1e-10;

/// Discrete AdaBoost with decision stumps, optionally with the asymmetric
/// reweighting of AsymBoost: after every round each example's weight is
/// additionally multiplied by `exp(y_i ln√k / N)` before renormalising, so
/// that over `N` rounds positives gain a factor `√k` relative to negatives.
pub struct AdaBoostRun<'a> {
    data: &'a Dataset,
    search: StumpSearch<'a>,
    config: BoostConfig,
    asym_step: Option<f64>,
    d: Vec<f64>,
    scores: Vec<f64>,
    stumps: Vec<Stump>,
    alphas: Vec<f64>,
    round: usize,
    finished: bool,
}

impl<'a> AdaBoostRun<'a> {
    pub fn new(data: &'a Dataset, config: &BoostConfig) -> Result<Self> {
        config.validate()?;
        data.validate_for_training()?;
        let m = data.len();
        Ok(Self {
            data,
            search: StumpSearch::new(data),
            config: config.clone(),
            asym_step: None,
            d: vec![1.0 / m as f64; m],
            scores: vec![0.0; m],
            stumps: Vec::new(),
            alphas: Vec::new(),
            round: 0,
            finished: false,
        })
    }

    /// Switch to AsymBoost with cost ratio `k` (false negatives cost `k`
    /// times false positives), spread over `config.n_max` rounds.
    pub fn with_asymmetry(mut self, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::invalid(format!(
                "asymmetry ratio must be positive, got {k}"
            )));
        }
        self.asym_step = Some(k.sqrt().ln() / self.config.n_max as f64);
        Ok(self)
    }

    /// Continue from an existing additive model: weights become
    /// `D_i ∝ exp(−y_i F(x_i))` with `F = Σ α_j h_j`.
    pub fn resume(mut self, stumps: &[Stump], alphas: &[f64]) -> Result<Self> {
        if stumps.len() != alphas.len() {
            return Err(Error::DimensionMismatch {
                what: "alphas",
                expected: stumps.len(),
                found: alphas.len(),
            });
        }
        for (s, &a) in stumps.iter().zip(alphas) {
            for (f, h) in self.scores.iter_mut().zip(s.predict_all(self.data)) {
                *f += a * h;
            }
        }
        self.stumps = stumps.to_vec();
        self.alphas = alphas.to_vec();
        let y: Vec<f64> = self.data.labels().iter().map(|l| l.sign()).collect();
        let logits: Vec<f64> = self.scores.iter().zip(&y).map(|(f, yi)| -yi * f).collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        self.d = logits.iter().map(|l| (l - max).exp()).collect();
        normalise(&mut self.d);
        Ok(self)
    }

    pub fn stumps(&self) -> &[Stump] {
        &self.stumps
    }

    /// Unnormalised round weights `α_j`.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn distribution(&self) -> &[f64] {
        &self.d
    }

    /// True once a round produced a perfect or useless stump.
    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Run up to `rounds` further rounds; returns how many stumps were added.
    pub fn run(&mut self, rounds: usize) -> Result<usize> {
        let mut added = 0;
        for _ in 0..rounds {
            if self.finished {
                break;
            }
            self.round += 1;
            let features = self.config.features_for(self.data, self.round)?;
            let choice = self.search.best(&self.d, &features)?;
            // A stump no better than chance gets coefficient 0 and ends the
            // run; it is kept only when the model would otherwise be empty.
            if choice.edge <= 0.0 {
                debug!("AdaBoost round {}: no stump with positive edge", self.round);
                self.finished = true;
                if self.stumps.is_empty() {
                    self.stumps.push(choice.stump);
                    self.alphas.push(0.0);
                    added += 1;
                }
                break;
            }
            let h = choice.stump.predict_all(self.data);
            let err: f64 = self
                .d
                .iter()
                .zip(&h)
                .zip(self.data.labels())
                .filter(|((_, hi), l)| **hi != l.sign())
                .map(|((di, _), _)| di)
                .sum();
            let clamped = err.clamp(ADABOOST_ERROR_FLOOR, 1.0 - ADABOOST_ERROR_FLOOR);
            let alpha = 0.5 * ((1.0 - clamped) / clamped).ln();
            self.stumps.push(choice.stump);
            self.alphas.push(alpha);
            added += 1;
            if err == 0.0 {
                self.finished = true;
                break;
            }
            for ((di, hi), (f, l)) in self
                .d
                .iter_mut()
                .zip(&h)
                .zip(self.scores.iter_mut().zip(self.data.labels()))
            {
                let y = l.sign();
                *f += alpha * hi;
                *di *= (-alpha * y * hi).exp();
                if let Some(step) = self.asym_step {
                    *di *= (y * step).exp();
                }
            }
            normalise(&mut self.d);
        }
        Ok(added)
    }

    /// Append the best stump under the current distribution with
    /// coefficient 0, leaving the distribution unchanged. Lets a caller that
    /// needs one more column proceed after the run has finished.
    pub fn push_zero_round(&mut self) -> Result<()> {
        self.round += 1;
        let features = self.config.features_for(self.data, self.round)?;
        let choice = self.search.best(&self.d, &features)?;
        self.stumps.push(choice.stump);
        self.alphas.push(0.0);
        Ok(())
    }

    /// The additive model with its weights rescaled onto the simplex (the
    /// sign of the score is unchanged).
    pub fn classifier(&self) -> StrongClassifier {
        StrongClassifier {
            stumps: self.stumps.clone(),
            weights: simplex_weights(&self.alphas),
            offset: 0.0,
            trainer: if self.asym_step.is_some() {
                Trainer::AsymBoost
            } else {
                Trainer::AdaBoost
            },
            recalibration: None,
        }
    }
}

fn normalise(d: &mut [f64]) {
    let s: f64 = d.iter().sum();
    for v in d.iter_mut() {
        *v /= s;
    }
}

pub(crate) fn simplex_weights(alphas: &[f64]) -> Vec<f64> {
    let total: f64 = alphas.iter().sum();
    if total > 0.0 {
        alphas.iter().map(|a| a / total).collect()
    } else {
        vec![1.0 / alphas.len() as f64; alphas.len()]
    }
}

pub fn train_adaboost(dataset: &Dataset, config: &BoostConfig) -> Result<StrongClassifier> {
    let mut run = AdaBoostRun::new(dataset, config)?;
    run.run(config.n_max)?;
    Ok(run.classifier())
}

/// AsymBoost with cost ratio `k_asym`.
pub fn train_asymboost(
    dataset: &Dataset,
    config: &BoostConfig,
    k_asym: f64,
) -> Result<StrongClassifier> {
    let mut run = AdaBoostRun::new(dataset, config)?.with_asymmetry(k_asym)?;
    run.run(config.n_max)?;
    Ok(run.classifier())
}
