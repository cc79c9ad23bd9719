//! B-cubed clustering scores, positive-pair accuracy, and per-stratum
//! decomposition.
//!
//! For each evaluated instance `t` with truth cluster `T(t)` and predicted
//! cluster `P(t)`:
//!
//! ```text
//! recall    = 1/N * sum_t |P(t) ∩ T(t)| / |T(t)|
//! precision = 1/N * sum_t |P(t) ∩ T(t)| / |P(t)|
//! f1        = 2 * recall * precision / (recall + precision)
//! ```
//!
//! Both sums are computed from the truth/predicted contingency table: an
//! intersection of size `c` contributes `c * c / |T|` to recall and
//! `c * c / |P|` to precision. Integer numerators are accumulated first and
//! reduced in cluster order, so results do not depend on thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Clustering, InstanceId};
use crate::error::{Error, Result};
use crate::linkage::{EvalDataset, EvalRow, PairSet};
use crate::scalar::{harmonic_mean, Scalar};

/// Stratum value used when a row lacks the selected attribute.
pub const UNKNOWN: &str = "UNKNOWN";

/// How `|P(t)|` is measured when the truth covers only part of the
/// predicted universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictedScope {
    /// Predicted clusters are intersected with the evaluated instances.
    #[default]
    Restricted,
    /// Predicted clusters keep every member, labeled or not.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct B3Options {
    /// Truth instances absent from the prediction are an error when set,
    /// otherwise they are dropped and counted.
    pub strict: bool,
    pub scope: PredictedScope,
}

impl Default for B3Options {
    fn default() -> Self {
        B3Options {
            strict: true,
            scope: PredictedScope::Restricted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct B3Scores<S = f64> {
    pub recall: S,
    pub precision: S,
    pub f1: S,
    /// Number of evaluated instances.
    pub n: usize,
    /// Truth instances dropped because the prediction lacks them.
    pub dropped: usize,
}

struct TruthRow {
    size: u64,
    sum_sq: u64,
    cells: Vec<(u32, u64)>,
}

pub fn b3_scores<S: Scalar>(
    truth: &Clustering,
    predicted: &Clustering,
    opts: B3Options,
) -> Result<B3Scores<S>> {
    if truth.is_empty() {
        return Err(Error::NothingToEvaluate("truth clustering is empty"));
    }
    let rows: Vec<(TruthRow, usize, Option<InstanceId>)> = (0..truth.len())
        .into_par_iter()
        .map(|i| {
            let mut missing = 0;
            let mut first_missing = None;
            let mut preds: Vec<u32> = Vec::with_capacity(truth.members(i).len());
            for m in truth.members(i) {
                match predicted.cluster_index(m) {
                    Some(p) => preds.push(p as u32),
                    None => {
                        missing += 1;
                        first_missing.get_or_insert(*m);
                    }
                }
            }
            preds.sort_unstable();
            let mut cells: Vec<(u32, u64)> = Vec::new();
            for p in preds.iter().copied() {
                match cells.last_mut() {
                    Some((last, c)) if *last == p => *c += 1,
                    _ => cells.push((p, 1)),
                }
            }
            let sum_sq = cells.iter().map(|(_, c)| c * c).sum();
            (
                TruthRow {
                    size: preds.len() as u64,
                    sum_sq,
                    cells,
                },
                missing,
                first_missing,
            )
        })
        .collect();

    let dropped: usize = rows.iter().map(|r| r.1).sum();
    if dropped > 0 && opts.strict {
        let first = rows
            .iter()
            .filter_map(|r| r.2)
            .min()
            .expect("missing instance");
        return Err(Error::MissingPredicted {
            count: dropped,
            first,
        });
    }
    let n: u64 = rows.iter().map(|r| r.0.size).sum();
    if n == 0 {
        return Err(Error::NothingToEvaluate("no truth instance is predicted"));
    }

    let mut pred_sum_sq = vec![0u64; predicted.len()];
    let mut pred_size = vec![0u64; predicted.len()];
    let mut recall = S::zero();
    for (row, _, _) in &rows {
        if row.size > 0 {
            recall = recall + S::from_count_u64(row.sum_sq) / S::from_count_u64(row.size);
        }
        for &(p, c) in &row.cells {
            pred_sum_sq[p as usize] += c * c;
            pred_size[p as usize] += c;
        }
    }
    if opts.scope == PredictedScope::Full {
        for (p, size) in pred_size.iter_mut().enumerate() {
            *size = predicted.members(p).len() as u64;
        }
    }
    let mut precision = S::zero();
    for (sum_sq, size) in pred_sum_sq.iter().zip(&pred_size) {
        if *sum_sq > 0 {
            precision = precision + S::from_count_u64(*sum_sq) / S::from_count_u64(*size);
        }
    }
    let total = S::from_count_u64(n);
    let recall = recall / total;
    let precision = precision / total;
    Ok(B3Scores {
        recall,
        precision,
        f1: harmonic_mean(recall, precision),
        n: n as usize,
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairAccuracy<S = f64> {
    pub accuracy: S,
    /// Pairs with both members in the prediction.
    pub evaluated: usize,
    /// Evaluated pairs whose members share a predicted cluster.
    pub matched: usize,
    pub dropped: usize,
}

/// Share of positive pairs whose members share a predicted cluster.
pub fn pair_accuracy<S: Scalar>(
    pairs: &PairSet,
    predicted: &Clustering,
) -> Result<PairAccuracy<S>> {
    pair_accuracy_of(pairs.iter().copied(), predicted)
}

fn pair_accuracy_of<S: Scalar>(
    pairs: impl Iterator<Item = (InstanceId, InstanceId)>,
    predicted: &Clustering,
) -> Result<PairAccuracy<S>> {
    let (mut evaluated, mut matched, mut dropped) = (0, 0, 0);
    for (a, b) in pairs {
        match (predicted.cluster_index(&a), predicted.cluster_index(&b)) {
            (Some(x), Some(y)) => {
                evaluated += 1;
                if x == y {
                    matched += 1;
                }
            }
            _ => dropped += 1,
        }
    }
    if evaluated == 0 {
        return Err(Error::NothingToEvaluate(
            "no pair has both members predicted",
        ));
    }
    Ok(PairAccuracy {
        accuracy: S::ratio(matched, evaluated),
        evaluated,
        matched,
        dropped,
    })
}

/// Row attribute used to stratify or profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Year,
    Gender,
    Ethnicity,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Year, Attribute::Gender, Attribute::Ethnicity];

    pub fn name(&self) -> &'static str {
        match self {
            Attribute::Year => "year",
            Attribute::Gender => "gender",
            Attribute::Ethnicity => "ethnicity",
        }
    }

    pub fn of_row(&self, row: &EvalRow) -> String {
        let v = match self {
            Attribute::Year => row.year.map(|y| y.to_string()),
            Attribute::Gender => row.gender.clone(),
            Attribute::Ethnicity => row.ethnicity.clone(),
        };
        v.unwrap_or_else(|| UNKNOWN.to_string())
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "year" => Ok(Attribute::Year),
            "gender" => Ok(Attribute::Gender),
            "ethnicity" => Ok(Attribute::Ethnicity),
            other => Err(Error::UnknownAttribute(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratifiedScores<S = f64> {
    pub all: B3Scores<S>,
    pub strata: BTreeMap<String, B3Scores<S>>,
}

/// Scores each stratum on truth and predicted clusterings restricted to the
/// stratum's rows, plus the unrestricted score.
pub fn stratified_eval<S: Scalar>(
    dataset: &EvalDataset,
    stratum: Attribute,
) -> Result<StratifiedScores<S>> {
    let opts = B3Options::default();
    let all = b3_scores(
        &dataset.truth_clustering(),
        &dataset.predicted_clustering(),
        opts,
    )?;
    let mut groups: BTreeMap<String, Vec<&EvalRow>> = BTreeMap::new();
    for r in &dataset.rows {
        groups.entry(stratum.of_row(r)).or_default().push(r);
    }
    let strata = groups
        .into_par_iter()
        .map(|(value, rows)| {
            let truth = Clustering::from_assignments(
                rows.iter().map(|r| (r.truth_label.as_str(), r.instance)),
            )?;
            let pred = Clustering::from_assignments(
                rows.iter()
                    .map(|r| (r.predicted_cluster_id.as_str(), r.instance)),
            )?;
            Ok((value, b3_scores(&truth, &pred, opts)?))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(StratifiedScores { all, strata })
}

/// Pair accuracy per stratum. A pair counts toward every distinct stratum
/// value carried by its two members.
pub fn stratified_pair_accuracy<S: Scalar>(
    pairs: &PairSet,
    predicted: &Clustering,
    value_of: impl Fn(&InstanceId) -> String,
) -> Result<BTreeMap<String, PairAccuracy<S>>> {
    let mut groups: BTreeMap<String, Vec<(InstanceId, InstanceId)>> = BTreeMap::new();
    for &(a, b) in pairs.iter() {
        let values: BTreeSet<String> = [value_of(&a), value_of(&b)].into();
        for v in values {
            groups.entry(v).or_default().push((a, b));
        }
    }
    groups
        .into_iter()
        .filter_map(
            |(v, ps)| match pair_accuracy_of(ps.into_iter(), predicted) {
                Ok(acc) => Some(Ok((v, acc))),
                Err(Error::NothingToEvaluate(_)) => None,
                Err(e) => Some(Err(e)),
            },
        )
        .collect()
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub n: usize,
    pub dropped: usize,
    pub strata: BTreeMap<String, B3Scores<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratum: Option<Attribute>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_accuracy: Option<PairAccuracy<f64>>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub pair_strata: BTreeMap<String, PairAccuracy<f64>>,
}

impl MetricsReport {
    pub fn from_scores(scores: &B3Scores<f64>) -> Self {
        MetricsReport {
            recall: Some(scores.recall),
            precision: Some(scores.precision),
            f1: Some(scores.f1),
            n: scores.n,
            dropped: scores.dropped,
            strata: BTreeMap::new(),
            stratum: None,
            pair_accuracy: None,
            pair_strata: BTreeMap::new(),
        }
    }

    pub fn empty() -> Self {
        MetricsReport {
            recall: None,
            precision: None,
            f1: None,
            n: 0,
            dropped: 0,
            strata: BTreeMap::new(),
            stratum: None,
            pair_accuracy: None,
            pair_strata: BTreeMap::new(),
        }
    }
}
