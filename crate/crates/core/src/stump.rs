//! Decision stumps and the weighted-edge maximisation used to pick each new
//! column.
//!
//! A stump predicts `polarity · sign(x_f − threshold)` with `sign(0) = +1`.
//! Candidate thresholds for a feature are one value below its minimum, the
//! midpoints between consecutive distinct values, and one value above its
//! maximum. Among stumps whose edges agree to within a tiny relative
//! tolerance the winner is the lowest feature index, then the smallest
//! threshold, then polarity `+1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }
}

impl Serialize for Polarity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign() as i8)
    }
}

impl<'de> Deserialize<'de> for Polarity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match i8::deserialize(d)? {
            1 => Ok(Polarity::Positive),
            -1 => Ok(Polarity::Negative),
            other => Err(serde::de::Error::custom(format!(
                "polarity must be +1 or -1, got {other}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature_index: usize,
    #[serde(with = "sig17")]
    pub threshold: f64,
    pub polarity: Polarity,
}

impl Stump {
    pub fn predict_value(&self, v: f64) -> f64 {
        let s = if v >= self.threshold { 1.0 } else { -1.0 };
        self.polarity.sign() * s
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.predict_value(x[self.feature_index])
    }

    pub fn predict_example(&self, data: &Dataset, i: usize) -> f64 {
        self.predict_value(data.feature_value(i, self.feature_index))
    }

    /// Outputs on every example of `data`.
    pub fn predict_all(&self, data: &Dataset) -> Vec<f64> {
        data.feature_column(self.feature_index)
            .iter()
            .map(|&v| self.predict_value(v))
            .collect()
    }
}

/// Thresholds serialize as decimal strings with 17 significant digits.
mod sig17 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:.16e}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Threshold strictly between `lo < hi`, with `lo < t ≤ hi`.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo + 0.5 * (hi - lo);
    if t <= lo {
        hi
    } else {
        t
    }
}

pub fn below_sentinel(min: f64) -> f64 {
    min - 1.0 - min.abs()
}

pub fn above_sentinel(max: f64) -> f64 {
    max + 1.0 + max.abs()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StumpChoice {
    pub stump: Stump,
    pub edge: f64,
}

/// Edges within this fraction of `Σ|u_i|` count as ties.
pub const TIE_RELATIVE: f64 = 1e-12;

pub fn tie_tolerance(u: &[f64]) -> f64 {
    TIE_RELATIVE * u.iter().map(|v| v.abs()).sum::<f64>()
}

/// Stump search over one dataset. Sorted example orders are cached per
/// feature when the dataset is small enough, otherwise computed per call.
pub struct StumpSearch<'a> {
    data: &'a Dataset,
    signs: Vec<f64>,
    orders: Option<Vec<Vec<u32>>>,
}

/// Presort only when the cache stays under this many entries.
const PRESORT_LIMIT: usize = 64 * 1024 * 1024;

impl<'a> StumpSearch<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        let signs = data.labels().iter().map(|l| l.sign()).collect();
        let presort = matches!(data.samples(), crate::data::Samples::Features(_))
            && data.len().saturating_mul(data.num_features()) <= PRESORT_LIMIT;
        let orders = presort.then(|| {
            (0..data.num_features())
                .into_par_iter()
                .map(|j| sorted_order(&data.feature_column(j)))
                .collect()
        });
        Self {
            data,
            signs,
            orders,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        self.data
    }

    /// Maximise `Σ_i u_i y_i h(x_i)` over stumps on `features`.
    ///
    /// `u` may contain negative entries (dual weights need not be
    /// nonnegative); the edge is still maximised over both polarities.
    pub fn best(&self, u: &[f64], features: &[usize]) -> Result<StumpChoice> {
        if u.len() != self.data.len() {
            return Err(Error::DimensionMismatch {
                what: "example weights",
                expected: self.data.len(),
                found: u.len(),
            });
        }
        if features.is_empty() {
            return Err(Error::invalid("feature subset is empty"));
        }
        if let Some(&bad) = features.iter().find(|&&f| f >= self.data.num_features()) {
            return Err(Error::invalid(format!(
                "feature index {bad} out of range ({} features)",
                self.data.num_features()
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("example weights must be finite"));
        }
        let mut subset = features.to_vec();
        subset.sort_unstable();
        subset.dedup();

        let uy: Vec<f64> = u.iter().zip(&self.signs).map(|(a, b)| a * b).collect();
        let tol = tie_tolerance(u);
        let per_feature: Vec<StumpChoice> = subset
            .par_iter()
            .map(|&j| self.best_for_feature(j, &uy, tol))
            .collect();
        let mut best = per_feature[0];
        for cand in &per_feature[1..] {
            if cand.edge > best.edge + tol {
                best = *cand;
            }
        }
        Ok(best)
    }

    fn best_for_feature(&self, j: usize, uy: &[f64], tol: f64) -> StumpChoice {
        let column = self.data.feature_column(j);
        let owned;
        let order: &[u32] = match &self.orders {
            Some(orders) => &orders[j],
            None => {
                owned = sorted_order(&column);
                &owned
            }
        };
        let total: f64 = uy.iter().sum();
        let first = column[order[0] as usize];
        let last = column[*order.last().unwrap() as usize];

        // Start with the stump below the minimum: everything predicted +1.
        let mut best = StumpChoice {
            stump: Stump {
                feature_index: j,
                threshold: below_sentinel(first),
                polarity: Polarity::Positive,
            },
            edge: total,
        };
        let consider = |threshold: f64, edge_pos: f64, best: &mut StumpChoice| {
            for (polarity, edge) in [
                (Polarity::Positive, edge_pos),
                (Polarity::Negative, -edge_pos),
            ] {
                if edge > best.edge + tol {
                    *best = StumpChoice {
                        stump: Stump {
                            feature_index: j,
                            threshold,
                            polarity,
                        },
                        edge,
                    };
                }
            }
        };
        consider(below_sentinel(first), total, &mut best);

        // Sweep: `left` is the label-weighted mass strictly below the
        // threshold, which a positive-polarity stump predicts as −1.
        let mut left = 0.0;
        let mut k = 0;
        while k < order.len() {
            let v = column[order[k] as usize];
            while k < order.len() && column[order[k] as usize] == v {
                left += uy[order[k] as usize];
                k += 1;
            }
            let threshold = if k < order.len() {
                midpoint(v, column[order[k] as usize])
            } else {
                above_sentinel(last)
            };
            consider(threshold, total - 2.0 * left, &mut best);
        }
        best
    }
}

fn sorted_order(column: &[f64]) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..column.len() as u32).collect();
    idx.sort_by(|&a, &b| {
        column[a as usize]
            .total_cmp(&column[b as usize])
            .then(a.cmp(&b))
    });
    idx
}

/// One-shot search without caching.
pub fn best_stump(data: &Dataset, u: &[f64], features: &[usize]) -> Result<StumpChoice> {
    if u.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("example weights must be nonnegative"));
    }
    StumpSearch {
        data,
        signs: data.labels().iter().map(|l| l.sign()).collect(),
        orders: None,
    }
    .best(u, features)
}

/// `⌈fraction · total⌉` distinct feature indices, sorted, drawn uniformly
/// without replacement from `rng`.
pub fn sample_features_with(
    total: usize,
    fraction: f64,
    rng: &mut SeededRng,
) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "feature fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let k = ((fraction * total as f64) - 1e-9).ceil().max(0.0) as usize;
    let k = k.min(total);
    if k == total {
        return Ok((0..total).collect());
    }
    let mut pool: Vec<usize> = (0..total).collect();
    for i in 0..k {
        let j = i + rng.below((total - i) as u64) as usize;
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

pub fn sample_features(total: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    let mut rng = SeededRng::new(seed, crate::rng::Stream::FeatureSampling);
    sample_features_with(total, fraction, &mut rng)
}
