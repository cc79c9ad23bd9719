//! Truth-label construction by record linkage.
//!
//! Authority profiles link through normalized title matches, grant PIs
//! through funded pmids, and self-citations through citation edges; in all
//! three a byline instance must share the FINI key of the linked person.
//! Ambiguous candidates are dropped and logged, never tie-broken.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::io::{for_each_row, open_input, write_rows};
use crate::corpus::{
    Annotations, AuthorityRegistry, CitationEdge, Clustering, Corpus, GrantTable, InstanceId,
};
use crate::error::{Error, Result};
use crate::normalize::{
    fini_key, normalize_title_with, parse_name, BlockKey, HyphenPolicy, PersonName,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Authority,
    Grant,
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelSource::Authority => "authority",
            LabelSource::Grant => "grant",
        })
    }
}

impl FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "authority" => Ok(LabelSource::Authority),
            "grant" => Ok(LabelSource::Grant),
            other => Err(Error::InvalidArgument(format!(
                "unknown label source {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledInstance {
    pub instance: InstanceId,
    pub name: PersonName,
    pub label_id: String,
    pub source: LabelSource,
}

/// One row of `labels.tsv`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LabelRow {
    pub instance: InstanceId,
    pub label_id: String,
    pub source: LabelSource,
}

impl From<&LabeledInstance> for LabelRow {
    fn from(l: &LabeledInstance) -> Self {
        LabelRow {
            instance: l.instance,
            label_id: l.label_id.clone(),
            source: l.source,
        }
    }
}

/// Survivor rule for titles that normalize identically on several papers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DupTitlePolicy {
    /// Every copy is removed.
    #[default]
    DropAll,
    /// The lowest pmid survives.
    KeepFirst,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkOptions {
    pub dup_titles: DupTitlePolicy,
    pub hyphens: HyphenPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConflictReason {
    DuplicateTitle,
    AmbiguousInstance,
    AmbiguousByline,
    UnparseableName,
}

impl fmt::Display for ConflictReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictReason::DuplicateTitle => "DUPLICATE_TITLE",
            ConflictReason::AmbiguousInstance => "AMBIGUOUS_INSTANCE",
            ConflictReason::AmbiguousByline => "AMBIGUOUS_BYLINE",
            ConflictReason::UnparseableName => "UNPARSEABLE_NAME",
        })
    }
}

/// A reason-coded drop record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Conflict {
    pub reason: ConflictReason,
    pub subject: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LinkStats {
    /// Corpus titles rejected by the length filter.
    pub short_titles: usize,
    /// Corpus papers removed because their normalized title repeats.
    pub duplicate_title_papers: usize,
    /// Title (or pmid) matches between the corpus and the linkage source.
    pub record_matches: usize,
    /// Linkage-source records pointing at papers absent from the corpus.
    pub unmatched_records: usize,
    /// (instance, label) candidates before conflict removal.
    pub candidates: usize,
    /// Candidates dropped as ambiguous.
    pub dropped_candidates: usize,
    pub unparseable_names: usize,
    pub labels: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LinkOutcome {
    /// Sorted by instance.
    pub labels: Vec<LabeledInstance>,
    pub conflicts: Vec<Conflict>,
    pub stats: LinkStats,
}

impl LinkOutcome {
    pub fn rows(&self) -> Vec<LabelRow> {
        self.labels.iter().map(LabelRow::from).collect()
    }
}

struct Candidate {
    instance: InstanceId,
    name: PersonName,
    label_id: String,
}

/// Byline instances of `paper` whose FINI key matches `key`.
fn matching_instances(corpus: &Corpus, pmid: u64, key: &BlockKey) -> Vec<(InstanceId, PersonName)> {
    let Some(paper) = corpus.paper(pmid) else {
        return Vec::new();
    };
    paper
        .instances()
        .filter_map(|(id, raw)| {
            let name = parse_name(raw).ok()?;
            key.matches(&fini_key(&name)).then_some((id, name))
        })
        .collect()
}

/// Applies the ambiguity rules: an instance claimed by two labels, or a
/// label claiming two instances of one paper, loses every such candidate.
fn resolve(
    mut candidates: Vec<Candidate>,
    source: LabelSource,
    conflicts: &mut Vec<Conflict>,
    stats: &mut LinkStats,
) -> Vec<LabeledInstance> {
    candidates.sort_by(|a, b| (a.instance, &a.label_id).cmp(&(b.instance, &b.label_id)));
    candidates.dedup_by(|a, b| a.instance == b.instance && a.label_id == b.label_id);
    stats.candidates = candidates.len();

    let mut by_instance: BTreeMap<InstanceId, BTreeSet<&str>> = BTreeMap::new();
    let mut by_byline: BTreeMap<(u64, &str), BTreeSet<InstanceId>> = BTreeMap::new();
    for c in &candidates {
        by_instance
            .entry(c.instance)
            .or_default()
            .insert(&c.label_id);
        by_byline
            .entry((c.instance.pmid(), &c.label_id))
            .or_default()
            .insert(c.instance);
    }
    let mut rejected: BTreeSet<(InstanceId, String)> = BTreeSet::new();
    for (instance, labels) in &by_instance {
        if labels.len() > 1 {
            conflicts.push(Conflict {
                reason: ConflictReason::AmbiguousInstance,
                subject: instance.to_string(),
                detail: labels.iter().copied().collect::<Vec<_>>().join(","),
            });
            for l in labels {
                rejected.insert((*instance, l.to_string()));
            }
        }
    }
    for ((pmid, label), instances) in &by_byline {
        if instances.len() > 1 {
            conflicts.push(Conflict {
                reason: ConflictReason::AmbiguousByline,
                subject: format!("{pmid}:{label}"),
                detail: instances
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            });
            for i in instances {
                rejected.insert((*i, label.to_string()));
            }
        }
    }
    let labels: Vec<LabeledInstance> = candidates
        .into_iter()
        .filter(|c| !rejected.contains(&(c.instance, c.label_id.clone())))
        .map(|c| LabeledInstance {
            instance: c.instance,
            name: c.name,
            label_id: c.label_id,
            source,
        })
        .collect();
    stats.dropped_candidates = stats.candidates - labels.len();
    stats.labels = labels.len();
    labels
}

fn person_key(
    id: &str,
    raw_name: &str,
    conflicts: &mut Vec<Conflict>,
    stats: &mut LinkStats,
) -> Option<BlockKey> {
    let key = parse_name(raw_name).ok().map(|n| fini_key(&n));
    match key {
        Some(k) if k.is_keyed() => Some(k),
        _ => {
            stats.unparseable_names += 1;
            conflicts.push(Conflict {
                reason: ConflictReason::UnparseableName,
                subject: id.to_string(),
                detail: raw_name.to_string(),
            });
            None
        }
    }
}

/// Labels corpus instances with authority ids via title matching.
pub fn link_authority(
    corpus: &Corpus,
    registry: &AuthorityRegistry,
    opts: LinkOptions,
) -> LinkOutcome {
    let mut stats = LinkStats::default();
    let mut conflicts = Vec::new();

    let normalized: Vec<(u64, Option<String>)> = corpus
        .papers()
        .par_iter()
        .map(|p| {
            (
                p.pmid,
                normalize_title_with(&p.raw_title, opts.hyphens).map(|t| t.text),
            )
        })
        .collect();
    let mut by_title: HashMap<String, Vec<u64>> = HashMap::new();
    for (pmid, title) in normalized {
        match title {
            Some(t) => by_title.entry(t).or_default().push(pmid),
            None => stats.short_titles += 1,
        }
    }
    let mut duplicates: Vec<(&String, &Vec<u64>)> = by_title
        .iter()
        .filter(|(_, pmids)| pmids.len() > 1)
        .collect();
    duplicates.sort();
    for (title, pmids) in &duplicates {
        let removed = match opts.dup_titles {
            DupTitlePolicy::DropAll => pmids.len(),
            DupTitlePolicy::KeepFirst => pmids.len() - 1,
        };
        stats.duplicate_title_papers += removed;
        conflicts.push(Conflict {
            reason: ConflictReason::DuplicateTitle,
            subject: title.to_string(),
            detail: pmids
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
        });
    }
    let title_index: HashMap<&str, u64> = by_title
        .iter()
        .filter_map(|(t, pmids)| match (pmids.len(), opts.dup_titles) {
            (1, _) => Some((t.as_str(), pmids[0])),
            (_, DupTitlePolicy::KeepFirst) => pmids.iter().min().map(|&p| (t.as_str(), p)),
            (_, DupTitlePolicy::DropAll) => None,
        })
        .collect();

    let mut keyed = Vec::new();
    for p in &registry.profiles {
        if let Some(k) = person_key(&p.authority_id, &p.person_name, &mut conflicts, &mut stats) {
            keyed.push((p, k));
        }
    }
    let per_profile: Vec<(usize, usize, Vec<Candidate>)> = keyed
        .par_iter()
        .map(|(profile, key)| {
            let pmids: BTreeSet<u64> = profile
                .work_titles
                .iter()
                .filter_map(|t| normalize_title_with(t, opts.hyphens))
                .filter_map(|t| title_index.get(t.text.as_str()).copied())
                .collect();
            let unmatched = profile.work_titles.len().saturating_sub(pmids.len());
            let mut out = Vec::new();
            for &pmid in &pmids {
                for (instance, name) in matching_instances(corpus, pmid, key) {
                    out.push(Candidate {
                        instance,
                        name,
                        label_id: profile.authority_id.clone(),
                    });
                }
            }
            (pmids.len(), unmatched, out)
        })
        .collect();
    let mut candidates = Vec::new();
    for (matched, unmatched, c) in per_profile {
        stats.record_matches += matched;
        stats.unmatched_records += unmatched;
        candidates.extend(c);
    }
    let labels = resolve(
        candidates,
        LabelSource::Authority,
        &mut conflicts,
        &mut stats,
    );
    conflicts.sort();
    LinkOutcome {
        labels,
        conflicts,
        stats,
    }
}

/// Labels corpus instances with PI ids via funded pmids.
pub fn link_grants(corpus: &Corpus, grants: &GrantTable) -> LinkOutcome {
    let mut stats = LinkStats::default();
    let mut conflicts = Vec::new();
    let mut keyed = Vec::new();
    for g in &grants.grants {
        if let Some(k) = person_key(&g.pi_id, &g.pi_name, &mut conflicts, &mut stats) {
            keyed.push((g, k));
        }
    }
    let per_grant: Vec<(usize, usize, Vec<Candidate>)> = keyed
        .par_iter()
        .map(|(grant, key)| {
            let mut matched = 0;
            let mut out = Vec::new();
            for &pmid in &grant.funded_pmids {
                if corpus.paper(pmid).is_none() {
                    continue;
                }
                matched += 1;
                for (instance, name) in matching_instances(corpus, pmid, key) {
                    out.push(Candidate {
                        instance,
                        name,
                        label_id: grant.pi_id.clone(),
                    });
                }
            }
            (matched, grant.funded_pmids.len() - matched, out)
        })
        .collect();
    let mut candidates = Vec::new();
    for (matched, unmatched, c) in per_grant {
        stats.record_matches += matched;
        stats.unmatched_records += unmatched;
        candidates.extend(c);
    }
    let labels = resolve(candidates, LabelSource::Grant, &mut conflicts, &mut stats);
    conflicts.sort();
    LinkOutcome {
        labels,
        conflicts,
        stats,
    }
}

/// Unordered positive pairs of instances asserted to share an author.
/// Stored as `(a, b)` with `a < b`; pairs within one paper are rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSet {
    pairs: BTreeSet<(InstanceId, InstanceId)>,
}

impl PairSet {
    pub fn new(pairs: impl IntoIterator<Item = (InstanceId, InstanceId)>) -> Result<Self> {
        let mut set = PairSet::default();
        for (a, b) in pairs {
            set.insert(a, b)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, a: InstanceId, b: InstanceId) -> Result<bool> {
        if a.pmid() == b.pmid() {
            return Err(Error::InvalidArgument(format!(
                "pair ({a}, {b}) lies within one paper"
            )));
        }
        Ok(self.pairs.insert(if a < b { (a, b) } else { (b, a) }))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(InstanceId, InstanceId)> + '_ {
        self.pairs.iter()
    }

    pub fn contains(&self, a: InstanceId, b: InstanceId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.pairs.contains(&key)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PairStats {
    pub edges: usize,
    /// Edges with at least one endpoint missing from the corpus.
    pub skipped_edges: usize,
    pub pairs: usize,
}

/// Pairs every citing-paper instance with every cited-paper instance that
/// shares its FINI key.
pub fn extract_selfcitation_pairs(
    corpus: &Corpus,
    citations: &[CitationEdge],
) -> (PairSet, PairStats) {
    let keys: HashMap<u64, Vec<Option<BlockKey>>> = corpus
        .papers()
        .par_iter()
        .map(|p| {
            let k = p
                .authors
                .iter()
                .map(|raw| parse_name(raw).ok().map(|n| fini_key(&n)))
                .collect();
            (p.pmid, k)
        })
        .collect();
    let found: Vec<Option<Vec<(InstanceId, InstanceId)>>> = citations
        .par_iter()
        .map(|e| {
            if e.citing_pmid == e.cited_pmid {
                return Some(Vec::new());
            }
            let citing = keys.get(&e.citing_pmid)?;
            let cited = keys.get(&e.cited_pmid)?;
            let mut out = Vec::new();
            for (i, ki) in citing.iter().enumerate() {
                let Some(ki) = ki else { continue };
                for (j, kj) in cited.iter().enumerate() {
                    if kj.as_ref().is_some_and(|kj| ki.matches(kj)) {
                        let a = InstanceId::new(e.citing_pmid, i as u32 + 1).expect("valid");
                        let b = InstanceId::new(e.cited_pmid, j as u32 + 1).expect("valid");
                        out.push((a, b));
                    }
                }
            }
            Some(out)
        })
        .collect();
    let mut stats = PairStats {
        edges: citations.len(),
        ..Default::default()
    };
    let mut set = PairSet::default();
    for f in found {
        match f {
            None => stats.skipped_edges += 1,
            Some(pairs) => {
                for (a, b) in pairs {
                    set.insert(a, b).expect("endpoints on distinct papers");
                }
            }
        }
    }
    stats.pairs = set.len();
    (set, stats)
}

/// One evaluable instance: a truth label joined with a predicted cluster.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EvalRow {
    pub instance: InstanceId,
    pub truth_label: String,
    pub predicted_cluster_id: String,
    pub year: Option<i32>,
    pub ethnicity: Option<String>,
    pub gender: Option<String>,
}

/// Rows sorted by instance, at most one per instance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalDataset {
    pub rows: Vec<EvalRow>,
}

impl EvalDataset {
    pub fn from_rows(mut rows: Vec<EvalRow>) -> Result<Self> {
        rows.sort();
        if let Some(w) = rows.windows(2).find(|w| w[0].instance == w[1].instance) {
            return Err(Error::InvalidArgument(format!(
                "instance {} appears twice in the dataset",
                w[0].instance
            )));
        }
        Ok(EvalDataset { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn truth_clustering(&self) -> Clustering {
        Clustering::from_assignments(
            self.rows
                .iter()
                .map(|r| (r.truth_label.as_str(), r.instance)),
        )
        .expect("one row per instance")
    }

    pub fn predicted_clustering(&self) -> Clustering {
        Clustering::from_assignments(
            self.rows
                .iter()
                .map(|r| (r.predicted_cluster_id.as_str(), r.instance)),
        )
        .expect("one row per instance")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct JoinStats {
    pub labels: usize,
    pub rows: usize,
    /// Labeled instances with no predicted cluster.
    pub unclustered: usize,
}

/// Collects label rows into a truth clustering; an instance with two labels
/// is an error (mixed sources must be filtered first).
pub fn labels_to_clustering<'a>(
    labels: impl IntoIterator<Item = &'a LabelRow>,
) -> Result<Clustering> {
    Clustering::from_assignments(
        labels
            .into_iter()
            .map(|l| (l.label_id.as_str(), l.instance)),
    )
}

/// Inner join of a truth clustering with a predicted clustering, attaching
/// year and demographic tags where available.
pub fn join_truth(
    truth: &Clustering,
    predicted: &Clustering,
    corpus: Option<&Corpus>,
    annotations: Option<&Annotations>,
) -> (EvalDataset, JoinStats) {
    let mut stats = JoinStats {
        labels: truth.n_instances(),
        ..Default::default()
    };
    let mut rows = Vec::new();
    for (label, members) in truth.iter() {
        for m in members {
            let Some(pred) = predicted.cluster_of(m) else {
                stats.unclustered += 1;
                continue;
            };
            let ann = annotations.and_then(|a| a.get(m));
            rows.push(EvalRow {
                instance: *m,
                truth_label: label.to_string(),
                predicted_cluster_id: pred.to_string(),
                year: corpus.and_then(|c| c.year_of(m)),
                ethnicity: ann.and_then(|a| a.ethnicity.clone()),
                gender: ann.and_then(|a| a.gender.clone()),
            });
        }
    }
    rows.sort();
    stats.rows = rows.len();
    (EvalDataset { rows }, stats)
}

pub fn join_labels(
    labels: &[LabelRow],
    clustering: &Clustering,
    corpus: Option<&Corpus>,
    annotations: Option<&Annotations>,
) -> Result<(EvalDataset, JoinStats)> {
    let truth = labels_to_clustering(labels)?;
    Ok(join_truth(&truth, clustering, corpus, annotations))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AgreementReport {
    pub overlap_count: usize,
    pub agree_count: usize,
    pub disagreements: Vec<(InstanceId, String, String)>,
}

/// Compares the same-author structure two label sources induce on their
/// common instances. Label namespaces may differ; labels are aligned by a
/// greedy one-to-one matching on co-occurrence counts, and instances whose
/// label pair is not aligned are reported.
pub fn label_agreement(a: &EvalDataset, b: &EvalDataset) -> AgreementReport {
    let b_labels: HashMap<InstanceId, &str> = b
        .rows
        .iter()
        .map(|r| (r.instance, r.truth_label.as_str()))
        .collect();
    let overlap: Vec<(InstanceId, &str, &str)> = a
        .rows
        .iter()
        .filter_map(|r| {
            b_labels
                .get(&r.instance)
                .map(|lb| (r.instance, r.truth_label.as_str(), *lb))
        })
        .collect();
    let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for (_, la, lb) in &overlap {
        *counts.entry((la, lb)).or_default() += 1;
    }
    let mut ranked: Vec<((&str, &str), usize)> = counts.into_iter().collect();
    ranked.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    let mut used_a = BTreeSet::new();
    let mut used_b = BTreeSet::new();
    let mut aligned = BTreeSet::new();
    for ((la, lb), _) in ranked {
        if !used_a.contains(la) && !used_b.contains(lb) {
            used_a.insert(la);
            used_b.insert(lb);
            aligned.insert((la, lb));
        }
    }
    let mut report = AgreementReport {
        overlap_count: overlap.len(),
        ..Default::default()
    };
    for (id, la, lb) in overlap {
        if aligned.contains(&(la, lb)) {
            report.agree_count += 1;
        } else {
            report
                .disagreements
                .push((id, la.to_string(), lb.to_string()));
        }
    }
    report
}

pub const LABELS_HEADER: [&str; 3] = ["instance_id", "label_id", "source"];
pub const PAIRS_HEADER: [&str; 2] = ["instance_a", "instance_b"];
pub const EVAL_HEADER: [&str; 6] = [
    "instance_id",
    "truth_label",
    "predicted_cluster_id",
    "year",
    "ethnicity",
    "gender",
];
pub const CONFLICTS_HEADER: [&str; 3] = ["reason", "subject", "detail"];
pub const AGREEMENT_HEADER: [&str; 3] = ["instance_id", "label_a", "label_b"];

pub fn write_labels<W: Write>(sink: W, labels: &[LabelRow]) -> Result<()> {
    write_rows(
        sink,
        &LABELS_HEADER,
        labels.iter().map(|l| {
            [
                l.instance.to_string(),
                l.label_id.clone(),
                l.source.to_string(),
            ]
        }),
    )
}

pub fn write_pairs<W: Write>(sink: W, pairs: &PairSet) -> Result<()> {
    write_rows(
        sink,
        &PAIRS_HEADER,
        pairs.iter().map(|(a, b)| [a.to_string(), b.to_string()]),
    )
}

pub fn write_eval_dataset<W: Write>(sink: W, dataset: &EvalDataset) -> Result<()> {
    write_rows(
        sink,
        &EVAL_HEADER,
        dataset.rows.iter().map(|r| {
            [
                r.instance.to_string(),
                r.truth_label.clone(),
                r.predicted_cluster_id.clone(),
                r.year.map(|y| y.to_string()).unwrap_or_default(),
                r.ethnicity.clone().unwrap_or_default(),
                r.gender.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn write_conflicts<W: Write>(sink: W, conflicts: &[Conflict]) -> Result<()> {
    write_rows(
        sink,
        &CONFLICTS_HEADER,
        conflicts
            .iter()
            .map(|c| [c.reason.to_string(), c.subject.clone(), c.detail.clone()]),
    )
}

pub fn write_agreement<W: Write>(sink: W, report: &AgreementReport) -> Result<()> {
    write_rows(
        sink,
        &AGREEMENT_HEADER,
        report
            .disagreements
            .iter()
            .map(|(id, a, b)| [id.to_string(), a.clone(), b.clone()]),
    )
}

fn field_instance(label: &str, line: u64, value: &str) -> Result<InstanceId> {
    value
        .trim()
        .parse()
        .map_err(|e: Error| Error::ingest(label, line, e.to_string()))
}

fn optional(value: &str) -> Option<String> {
    let v = value.trim();
    (!v.is_empty()).then(|| v.to_string())
}

pub fn read_labels<R: Read>(source: R, label: &str) -> Result<Vec<LabelRow>> {
    let mut rows = Vec::new();
    for_each_row(source, label, &LABELS_HEADER, |line, r| {
        let instance = field_instance(label, line, &r[0])?;
        let label_id =
            optional(&r[1]).ok_or_else(|| Error::ingest(label, line, "missing label_id"))?;
        let source = r[2]
            .trim()
            .parse()
            .map_err(|e: Error| Error::ingest(label, line, e.to_string()))?;
        rows.push(LabelRow {
            instance,
            label_id,
            source,
        });
        Ok(())
    })?;
    rows.sort();
    Ok(rows)
}

pub fn read_pairs<R: Read>(source: R, label: &str) -> Result<PairSet> {
    let mut set = PairSet::default();
    for_each_row(source, label, &PAIRS_HEADER, |line, r| {
        let a = field_instance(label, line, &r[0])?;
        let b = field_instance(label, line, &r[1])?;
        set.insert(a, b)
            .map_err(|e| Error::ingest(label, line, e.to_string()))?;
        Ok(())
    })?;
    Ok(set)
}

pub fn read_eval_dataset<R: Read>(source: R, label: &str) -> Result<EvalDataset> {
    let mut rows = Vec::new();
    for_each_row(source, label, &EVAL_HEADER, |line, r| {
        let year = match optional(&r[3]) {
            None => None,
            Some(y) => Some(y.parse().map_err(|_| {
                Error::ingest(label, line, format!("year {y:?} is not an integer"))
            })?),
        };
        rows.push(EvalRow {
            instance: field_instance(label, line, &r[0])?,
            truth_label: optional(&r[1])
                .ok_or_else(|| Error::ingest(label, line, "missing truth_label"))?,
            predicted_cluster_id: optional(&r[2])
                .ok_or_else(|| Error::ingest(label, line, "missing predicted_cluster_id"))?,
            year,
            ethnicity: optional(&r[4]),
            gender: optional(&r[5]),
        });
        Ok(())
    })?;
    EvalDataset::from_rows(rows).map_err(|e| Error::ingest(label, 0, e.to_string()))
}

pub fn load_labels(path: &Path) -> Result<Vec<LabelRow>> {
    read_labels(open_input(path)?, &path.display().to_string())
}

pub fn load_pairs(path: &Path) -> Result<PairSet> {
    read_pairs(open_input(path)?, &path.display().to_string())
}

pub fn load_eval_dataset(path: &Path) -> Result<EvalDataset> {
    read_eval_dataset(open_input(path)?, &path.display().to_string())
}
