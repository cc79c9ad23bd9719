//! Representativeness profiling of labeled data: attribute distributions,
//! block-size CCDFs, reference subsamples, a typology of cross-block name
//! variants, and ethnicity-tag perturbation for sensitivity runs.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::io::write_rows;
use crate::corpus::{Annotations, Clustering, Corpus, InstanceId};
use crate::error::{Error, Result};
use crate::linkage::{EvalDataset, PairSet};
use crate::metrics::{Attribute, UNKNOWN};
use crate::normalize::{fini_key, PersonName};
use crate::scalar::Scalar;

/// Seeded generator used for every random choice in the toolkit. ChaCha8
/// output is specified independently of platform.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Percentage of values per distinct value.
pub fn distribution_of<S: Scalar>(
    values: impl IntoIterator<Item = String>,
) -> Result<BTreeMap<String, S>> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0usize;
    for v in values {
        *counts.entry(v).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::NothingToEvaluate("distribution of an empty dataset"));
    }
    let hundred = S::from_count(100);
    Ok(counts
        .into_iter()
        .map(|(k, c)| (k, S::from_count(c) * hundred / S::from_count(total)))
        .collect())
}

/// Attribute distribution over the rows of an evaluation dataset.
pub fn distribution<S: Scalar>(
    dataset: &EvalDataset,
    attr: Attribute,
) -> Result<BTreeMap<String, S>> {
    distribution_of(dataset.rows.iter().map(|r| attr.of_row(r)))
}

/// Attribute value of one instance; `UNKNOWN` when absent.
pub fn instance_value(
    id: &InstanceId,
    corpus: Option<&Corpus>,
    annotations: Option<&Annotations>,
    attr: Attribute,
) -> String {
    let v = match attr {
        Attribute::Year => corpus.and_then(|c| c.year_of(id)).map(|y| y.to_string()),
        Attribute::Gender => annotations
            .and_then(|a| a.get(id))
            .and_then(|a| a.gender.clone()),
        Attribute::Ethnicity => annotations
            .and_then(|a| a.get(id))
            .and_then(|a| a.ethnicity.clone()),
    };
    v.unwrap_or_else(|| UNKNOWN.to_string())
}

/// Distribution over an arbitrary instance set, e.g. a whole corpus or a
/// reference sample.
pub fn instance_distribution<'a, S: Scalar>(
    instances: impl IntoIterator<Item = &'a InstanceId>,
    corpus: &Corpus,
    annotations: Option<&Annotations>,
    attr: Attribute,
) -> Result<BTreeMap<String, S>> {
    distribution_of(
        instances
            .into_iter()
            .map(|id| instance_value(id, Some(corpus), annotations, attr)),
    )
}

/// Distribution over positive pairs; both members of each pair count.
pub fn pair_distribution<S: Scalar>(
    pairs: &PairSet,
    corpus: &Corpus,
    annotations: Option<&Annotations>,
    attr: Attribute,
) -> Result<BTreeMap<String, S>> {
    distribution_of(pairs.iter().flat_map(|(a, b)| {
        [
            instance_value(a, Some(corpus), annotations, attr),
            instance_value(b, Some(corpus), annotations, attr),
        ]
    }))
}

/// Writes `dist_<attr>.tsv`: one row per value, one percentage column per
/// dataset. Values absent from a dataset show 0.
pub fn write_distribution_table<W: Write>(
    sink: W,
    columns: &[(String, BTreeMap<String, f64>)],
) -> Result<()> {
    let values: BTreeSet<&String> = columns.iter().flat_map(|(_, d)| d.keys()).collect();
    let mut header = vec!["value".to_string()];
    header.extend(columns.iter().map(|(name, _)| name.clone()));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        sink,
        &header_refs,
        values.into_iter().map(|v| {
            let mut row = vec![v.clone()];
            row.extend(
                columns
                    .iter()
                    .map(|(_, d)| d.get(v).copied().unwrap_or(0.0).to_string()),
            );
            row
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CcdfPoint<S = f64> {
    pub size: usize,
    pub fraction_at_least: S,
}

/// Complementary cumulative distribution of block sizes: for each distinct
/// size `s`, the share of blocks of size `s` or larger. Always starts at
/// `(1, 1)`.
pub fn block_size_ccdf<S: Scalar>(sizes: impl IntoIterator<Item = usize>) -> Vec<CcdfPoint<S>> {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for s in sizes.into_iter().filter(|&s| s > 0) {
        *hist.entry(s).or_default() += 1;
    }
    let total: usize = hist.values().sum();
    if total == 0 {
        return Vec::new();
    }
    hist.entry(1).or_default();
    let mut remaining = total;
    let mut out = Vec::with_capacity(hist.len());
    for (size, count) in hist {
        out.push(CcdfPoint {
            size,
            fraction_at_least: S::ratio(remaining, total),
        });
        remaining -= count;
    }
    out
}

/// Evaluates a CCDF step function at `size`.
pub fn ccdf_at<S: Scalar>(points: &[CcdfPoint<S>], size: usize) -> S {
    match points.iter().find(|p| p.size >= size) {
        Some(p) => p.fraction_at_least,
        None => S::zero(),
    }
}

/// Largest absolute gap between two CCDFs over the union of their sizes.
pub fn ks_distance(a: &[CcdfPoint<f64>], b: &[CcdfPoint<f64>]) -> f64 {
    let sizes: BTreeSet<usize> = a.iter().chain(b).map(|p| p.size).collect();
    sizes
        .into_iter()
        .map(|s| (ccdf_at(a, s) - ccdf_at(b, s)).abs())
        .fold(0.0, f64::max)
}

/// Writes `ccdf.tsv`: one row per size seen in any dataset.
pub fn write_ccdf_table<W: Write>(
    sink: W,
    columns: &[(String, Vec<CcdfPoint<f64>>)],
) -> Result<()> {
    let sizes: BTreeSet<usize> = columns
        .iter()
        .flat_map(|(_, c)| c.iter().map(|p| p.size))
        .collect();
    let mut header = vec!["size".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.clone()));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        sink,
        &header_refs,
        sizes.into_iter().map(|s| {
            let mut row = vec![s.to_string()];
            row.extend(columns.iter().map(|(_, c)| ccdf_at(c, s).to_string()));
            row
        }),
    )
}

/// Chooses `k` distinct indices of `0..len` by a partial Fisher-Yates
/// shuffle, returned in draw order.
pub(crate) fn choose_indices(rng: &mut ChaCha8Rng, len: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    for i in 0..k {
        let j = rng.gen_range(i as u64..len as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

/// Uniform sample of `n` instances without replacement, sorted. The
/// population is sorted first, so the result depends only on its contents
/// and the seed.
pub fn reference_sample(population: &[InstanceId], n: usize, seed: u64) -> Result<Vec<InstanceId>> {
    let mut pop = population.to_vec();
    pop.sort_unstable();
    pop.dedup();
    if n > pop.len() {
        return Err(Error::InvalidArgument(format!(
            "sample size {n} exceeds population {}",
            pop.len()
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut out: Vec<InstanceId> = choose_indices(&mut rng, pop.len(), n)
        .into_iter()
        .map(|i| pop[i])
        .collect();
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SynonymType {
    FlippedOrder,
    SurnameVariant,
    InitialVariant,
}

impl SynonymType {
    pub fn name(&self) -> &'static str {
        match self {
            SynonymType::FlippedOrder => "flipped_order",
            SynonymType::SurnameVariant => "surname_variant",
            SynonymType::InitialVariant => "initial_variant",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TypologyCounts {
    pub surname_variant: usize,
    pub initial_variant: usize,
    pub flipped_order: usize,
    pub total_multiform_authors: usize,
}

/// Which rules an author satisfies, before precedence is applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RuleHits {
    pub flipped_order: bool,
    pub surname_differs: bool,
    pub initial_differs: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuthorTypology {
    pub cluster_id: String,
    pub synonym_type: SynonymType,
    pub rules: RuleHits,
    pub forms: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Typology {
    pub counts: TypologyCounts,
    /// Authors satisfying each rule regardless of precedence.
    pub rule_totals: TypologyCounts,
    pub authors: Vec<AuthorTypology>,
}

fn is_flipped(a: &PersonName, b: &PersonName) -> bool {
    match (a.forenames.first(), b.forenames.first()) {
        (Some(fa), Some(fb)) => a.surname == *fb && b.surname == *fa,
        _ => false,
    }
}

/// Classifies truth clusters whose names span two or more FINI keys.
/// Precedence: flipped order, then surname variant, then initial variant.
pub fn classify_synonym_types(
    truth: &Clustering,
    name_of: impl Fn(&InstanceId) -> Option<PersonName>,
) -> Typology {
    let mut out = Typology::default();
    for (cluster_id, members) in truth.iter() {
        let mut forms: BTreeMap<(String, Vec<String>), PersonName> = BTreeMap::new();
        for m in members {
            if let Some(n) = name_of(m) {
                forms
                    .entry((n.surname.clone(), n.forenames.clone()))
                    .or_insert(n);
            }
        }
        let keys: BTreeSet<_> = forms.values().map(fini_key).collect();
        if keys.len() < 2 {
            continue;
        }
        let forms: Vec<&PersonName> = forms.values().collect();
        let mut rules = RuleHits::default();
        for (i, a) in forms.iter().enumerate() {
            for b in &forms[i + 1..] {
                rules.flipped_order |= is_flipped(a, b);
            }
        }
        rules.surname_differs = forms
            .iter()
            .map(|f| &f.surname)
            .collect::<BTreeSet<_>>()
            .len()
            > 1;
        rules.initial_differs = forms
            .iter()
            .map(|f| f.first_initial())
            .collect::<BTreeSet<_>>()
            .len()
            > 1;
        let synonym_type = if rules.flipped_order {
            SynonymType::FlippedOrder
        } else if rules.surname_differs {
            SynonymType::SurnameVariant
        } else {
            SynonymType::InitialVariant
        };
        let c = &mut out.counts;
        c.total_multiform_authors += 1;
        match synonym_type {
            SynonymType::FlippedOrder => c.flipped_order += 1,
            SynonymType::SurnameVariant => c.surname_variant += 1,
            SynonymType::InitialVariant => c.initial_variant += 1,
        }
        let r = &mut out.rule_totals;
        r.total_multiform_authors += 1;
        r.flipped_order += rules.flipped_order as usize;
        r.surname_variant += rules.surname_differs as usize;
        r.initial_variant += rules.initial_differs as usize;
        out.authors.push(AuthorTypology {
            cluster_id: cluster_id.to_string(),
            synonym_type,
            rules,
            forms: forms.iter().map(|f| f.raw.clone()).collect(),
        });
    }
    out
}

pub fn write_typology<W: Write>(sink: W, typology: &Typology) -> Result<()> {
    let counts = [
        (
            "surname_variant",
            typology.counts.surname_variant,
            typology.rule_totals.surname_variant,
        ),
        (
            "initial_variant",
            typology.counts.initial_variant,
            typology.rule_totals.initial_variant,
        ),
        (
            "flipped_order",
            typology.counts.flipped_order,
            typology.rule_totals.flipped_order,
        ),
        (
            "total_multiform_authors",
            typology.counts.total_multiform_authors,
            typology.rule_totals.total_multiform_authors,
        ),
    ];
    write_rows(
        sink,
        &["type", "authors", "rule_hits"],
        counts
            .iter()
            .map(|(t, n, h)| [t.to_string(), n.to_string(), h.to_string()]),
    )
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PerturbReport {
    /// Rows retagged per original ethnicity tag.
    pub changed: BTreeMap<String, usize>,
    pub group_sizes: BTreeMap<String, usize>,
}

/// Number of rows perturbed in a group of `size` at `fraction`. The small
/// offset keeps products such as `0.29 * 100` from flooring one short.
pub fn perturbed_count(fraction: f64, size: usize) -> usize {
    ((fraction * size as f64) + 1e-9).floor() as usize
}

/// Retags `floor(fraction * group size)` uniformly chosen rows of every
/// ethnicity group with a tag drawn uniformly from the other observed tags.
/// Rows without an ethnicity tag are never touched.
pub fn perturb_tags(
    dataset: &EvalDataset,
    fraction: f64,
    seed: u64,
) -> Result<(EvalDataset, PerturbReport)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} outside [0, 1]"
        )));
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in dataset.rows.iter().enumerate() {
        if let Some(e) = &r.ethnicity {
            groups.entry(e.clone()).or_default().push(i);
        }
    }
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(
            "perturbation needs at least two distinct ethnicity tags".into(),
        ));
    }
    let tags: Vec<&String> = groups.keys().collect();
    let mut rng = seeded_rng(seed);
    let mut out = dataset.clone();
    let mut report = PerturbReport::default();
    for (g, (tag, rows)) in groups.iter().enumerate() {
        let k = perturbed_count(fraction, rows.len());
        for pick in choose_indices(&mut rng, rows.len(), k) {
            let mut t = rng.gen_range(0..tags.len() as u64 - 1) as usize;
            if t >= g {
                t += 1;
            }
            out.rows[rows[pick]].ethnicity = Some(tags[t].clone());
        }
        report.changed.insert(tag.clone(), k);
        report.group_sizes.insert(tag.clone(), rows.len());
    }
    Ok((out, report))
}
