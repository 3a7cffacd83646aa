//! Offset line search, node/cascade rates, ROC tables and the margin
//! normality diagnostic.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::MultiExitCascade;
use crate::data::{Dataset, Label};
use crate::error::{Error, Result};

/// Result of choosing an offset `b` (accept when `score − b ≥ 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetChoice {
    pub offset: f64,
    pub detection_rate: f64,
    pub false_positive_rate: f64,
    /// The chosen `b` lies outside the score range: it accepts every
    /// example or rejects every example.
    pub sentinel: bool,
}

/// Candidate offsets: one below the smallest score, the midpoints between
/// consecutive distinct scores, and one above the largest, ascending.
fn candidates(sorted_distinct: &[f64]) -> Vec<f64> {
    let lo = sorted_distinct[0];
    let hi = sorted_distinct[sorted_distinct.len() - 1];
    let mut c = Vec::with_capacity(sorted_distinct.len() + 1);
    c.push(lo - 1.0);
    for w in sorted_distinct.windows(2) {
        c.push(crate::stump::midpoint(w[0], w[1]));
    }
    c.push(hi + 1.0);
    c
}

struct RateTable {
    candidates: Vec<f64>,
    /// Positives / negatives with score ≥ candidate.
    pos_at: Vec<usize>,
    neg_at: Vec<usize>,
    m1: usize,
    m2: usize,
}

fn rate_table(scores: &[f64], labels: &[Label]) -> Result<RateTable> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let m1 = labels.iter().filter(|l| l.is_positive()).count();
    if m1 == 0 {
        return Err(Error::invalid("offset search needs at least one positive"));
    }
    let m2 = labels.len() - m1;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut distinct: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
    distinct.dedup();
    let cands = candidates(&distinct);
    // Sweep candidates from the top, counting examples at or above each.
    let mut pos_at = vec![0; cands.len()];
    let mut neg_at = vec![0; cands.len()];
    let (mut p, mut n) = (0usize, 0usize);
    let mut k = order.len();
    for c in (0..cands.len()).rev() {
        while k > 0 && scores[order[k - 1]] >= cands[c] {
            k -= 1;
            if labels[order[k]].is_positive() {
                p += 1;
            } else {
                n += 1;
            }
        }
        pos_at[c] = p;
        neg_at[c] = n;
    }
    Ok(RateTable {
        candidates: cands,
        pos_at,
        neg_at,
        m1,
        m2,
    })
}

impl RateTable {
    fn choice(&self, c: usize) -> OffsetChoice {
        OffsetChoice {
            offset: self.candidates[c],
            detection_rate: self.pos_at[c] as f64 / self.m1 as f64,
            false_positive_rate: if self.m2 == 0 {
                0.0
            } else {
                self.neg_at[c] as f64 / self.m2 as f64
            },
            sentinel: c == 0 || c + 1 == self.candidates.len(),
        }
    }
}

/// Largest candidate offset whose detection rate is at least `d_target`;
/// among offsets meeting the target it has the fewest false positives.
pub fn offset_line_search(scores: &[f64], labels: &[Label], d_target: f64) -> Result<OffsetChoice> {
    if !(0.0..=1.0).contains(&d_target) {
        return Err(Error::invalid(format!(
            "detection target must lie in [0, 1], got {d_target}"
        )));
    }
    let t = rate_table(scores, labels)?;
    let c = (0..t.candidates.len())
        .rev()
        .find(|&c| t.pos_at[c] as f64 >= d_target * t.m1 as f64)
        .unwrap_or(0);
    Ok(t.choice(c))
}

/// Smallest candidate offset whose false-positive rate is at most
/// `f_target` (the most permissive operating point at that budget).
pub fn offset_for_fp(scores: &[f64], labels: &[Label], f_target: f64) -> Result<OffsetChoice> {
    if !(0.0..=1.0).contains(&f_target) {
        return Err(Error::invalid(format!(
            "false-positive target must lie in [0, 1], got {f_target}"
        )));
    }
    let t = rate_table(scores, labels)?;
    let c = (0..t.candidates.len())
        .find(|&c| t.neg_at[c] as f64 <= f_target * t.m2 as f64)
        .unwrap_or(t.candidates.len() - 1);
    Ok(t.choice(c))
}

/// Per-exit rates, conditioned on the examples that reached the exit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub exit_index: usize,
    pub prefix_length: usize,
    pub positives_in: usize,
    pub negatives_in: usize,
    pub positives_passed: usize,
    pub negatives_passed: usize,
    pub d_t: f64,
    pub f_t: f64,
    pub cumulative_f_dr: f64,
    pub cumulative_f_fp: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub false_positives: usize,
    pub detection_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeEvaluation {
    pub nodes: Vec<NodeReport>,
    pub f_dr: f64,
    pub f_fp: f64,
    pub positives: usize,
    pub negatives: usize,
    /// Operating points obtained by replacing the final exit's offset,
    /// ordered by increasing threshold.
    pub roc: Vec<RocPoint>,
}

/// Rate with an empty denominator reported as 0.
fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn product(rates: impl IntoIterator<Item = f64>) -> f64 {
    rates.into_iter().product()
}

pub fn evaluate_cascade(cascade: &MultiExitCascade, data: &Dataset) -> Result<CascadeEvaluation> {
    cascade.check_compatible(data)?;
    let outcomes: Vec<_> = (0..data.len())
        .into_par_iter()
        .map(|i| cascade.trace_example(data, i))
        .collect();
    let n_exits = cascade.exits.len();
    let mut nodes = Vec::with_capacity(n_exits);
    let (mut cum_dr, mut cum_fp) = (1.0, 1.0);
    for t in 0..n_exits {
        let (mut pi, mut ni, mut pp, mut np) = (0, 0, 0, 0);
        for (i, o) in outcomes.iter().enumerate() {
            let reached = o.exits_passed >= t;
            if !reached {
                continue;
            }
            let passed = o.exits_passed > t;
            if data.label(i).is_positive() {
                pi += 1;
                pp += passed as usize;
            } else {
                ni += 1;
                np += passed as usize;
            }
        }
        let d_t = rate(pp, pi);
        let f_t = rate(np, ni);
        cum_dr *= d_t;
        cum_fp *= f_t;
        nodes.push(NodeReport {
            exit_index: t,
            prefix_length: cascade.exits[t].prefix_length,
            positives_in: pi,
            negatives_in: ni,
            positives_passed: pp,
            negatives_passed: np,
            d_t,
            f_t,
            cumulative_f_dr: cum_dr,
            cumulative_f_fp: cum_fp,
        });
    }
    let positives = data.num_positives();
    let negatives = data.len() - positives;

    // Examples reaching the final exit, with their final raw scores.
    let mut finals: Vec<(f64, bool)> = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.exits_passed + 1 >= n_exits && o.final_score.is_some())
        .map(|(i, o)| (o.final_score.unwrap_or(0.0), data.label(i).is_positive()))
        .collect();
    finals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut roc = Vec::new();
    let total_pos_final = finals.iter().filter(|f| f.1).count();
    let total_neg_final = finals.len() - total_pos_final;
    let (mut below_pos, mut below_neg) = (0usize, 0usize);
    let mut k = 0;
    while k < finals.len() {
        let thr = finals[k].0;
        roc.push(RocPoint {
            threshold: thr,
            false_positives: total_neg_final - below_neg,
            detection_rate: rate(total_pos_final - below_pos, positives),
        });
        while k < finals.len() && finals[k].0 == thr {
            if finals[k].1 {
                below_pos += 1;
            } else {
                below_neg += 1;
            }
            k += 1;
        }
    }
    roc.push(RocPoint {
        threshold: finals.last().map_or(0.0, |f| f.0 + 1.0),
        false_positives: 0,
        detection_rate: 0.0,
    });

    Ok(CascadeEvaluation {
        f_dr: product(nodes.iter().map(|n| n.d_t)),
        f_fp: product(nodes.iter().map(|n| n.f_t)),
        nodes,
        positives,
        negatives,
        roc,
    })
}

impl CascadeEvaluation {
    pub fn write_node_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "exit_index,prefix_length,d_t,f_t,cumulative_F_dr,cumulative_F_fp"
        )?;
        for n in &self.nodes {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                n.exit_index, n.prefix_length, n.d_t, n.f_t, n.cumulative_f_dr, n.cumulative_f_fp
            )?;
        }
        Ok(())
    }

    pub fn write_roc_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "threshold,false_positives,detection_rate")?;
        for p in &self.roc {
            writeln!(
                out,
                "{},{},{}",
                p.threshold, p.false_positives, p.detection_rate
            )?;
        }
        Ok(())
    }

    /// Fraction of examples whose cascade decision matches their label.
    pub fn accuracy(&self) -> f64 {
        let detected = self.nodes.last().map_or(0, |n| n.positives_passed);
        let fp = self.nodes.last().map_or(0, |n| n.negatives_passed);
        let correct = detected + (self.negatives - fp);
        correct as f64 / (self.positives + self.negatives) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    /// `(sorted margin, standard normal quantile at (i − 0.5)/m)`.
    pub pairs: Vec<(f64, f64)>,
    /// Pearson correlation of the pairs; `None` when the margins are
    /// constant and the correlation is undefined.
    pub r_normal: Option<f64>,
}

pub const NORMALITY_MIN_POINTS: usize = 8;

/// Normal probability plot of the margins and its straightness.
pub fn normality_diagnostic(margins: &[f64]) -> Result<NormalityReport> {
    let m = margins.len();
    if m < NORMALITY_MIN_POINTS {
        return Err(Error::invalid(format!(
            "normality diagnostic needs at least {NORMALITY_MIN_POINTS} margins, got {m}"
        )));
    }
    if margins.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("margins must be finite"));
    }
    let std_normal = Normal::standard();
    let mut sorted = margins.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pairs: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (x, std_normal.inverse_cdf((i as f64 + 0.5) / m as f64)))
        .collect();
    Ok(NormalityReport {
        r_normal: pearson(&pairs),
        pairs,
    })
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
