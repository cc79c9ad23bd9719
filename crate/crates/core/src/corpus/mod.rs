//! Bibliographic data model and TSV ingestion.
//!
//! All inputs are tab-separated UTF-8 with one header row; a `.gz` suffix
//! switches on gzip decoding. Readers stream rows and validate each one,
//! reporting the offending line on failure.

mod clustering;
mod instance;
pub mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use clustering::{Clustering, ClusteringBuilder};
pub use instance::{parse_instance_id, InstanceId};
pub use io::{
    ingest_annotations, ingest_authority, ingest_citations, ingest_clustering, ingest_corpus,
    ingest_grants, load_annotations, load_authority, load_citations, load_clustering, load_corpus,
    load_grants,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub pmid: u64,
    pub raw_title: String,
    pub year: i32,
    /// Raw name strings in byline order; author `i` sits at position `i + 1`.
    pub authors: Vec<String>,
}

impl PaperRecord {
    pub fn instances(&self) -> impl Iterator<Item = (InstanceId, &str)> + '_ {
        self.authors.iter().enumerate().map(move |(i, name)| {
            let id = InstanceId::new(self.pmid, i as u32 + 1).expect("pmid validated at ingest");
            (id, name.as_str())
        })
    }
}

/// Papers keyed by pmid, immutable after construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    by_pmid: HashMap<u64, usize>,
}

impl Corpus {
    /// Fails on a duplicate pmid or an empty byline.
    pub fn from_papers(papers: impl IntoIterator<Item = PaperRecord>) -> Result<Self> {
        let mut papers: Vec<PaperRecord> = papers.into_iter().collect();
        papers.sort_by_key(|p| p.pmid);
        for w in papers.windows(2) {
            if w[0].pmid == w[1].pmid {
                return Err(Error::InvalidArgument(format!(
                    "duplicate pmid {}",
                    w[0].pmid
                )));
            }
        }
        if let Some(p) = papers.iter().find(|p| p.authors.is_empty() || p.pmid == 0) {
            return Err(Error::InvalidArgument(format!(
                "paper {} has no authors or a zero pmid",
                p.pmid
            )));
        }
        let by_pmid = papers
            .iter()
            .enumerate()
            .map(|(i, p)| (p.pmid, i))
            .collect();
        Ok(Corpus { papers, by_pmid })
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    /// Papers in ascending pmid order.
    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn paper(&self, pmid: u64) -> Option<&PaperRecord> {
        self.by_pmid.get(&pmid).map(|&i| &self.papers[i])
    }

    pub fn instances(&self) -> impl Iterator<Item = (InstanceId, &str)> + '_ {
        self.papers.iter().flat_map(PaperRecord::instances)
    }

    pub fn n_instances(&self) -> usize {
        self.papers.iter().map(|p| p.authors.len()).sum()
    }

    pub fn author_name(&self, id: &InstanceId) -> Option<&str> {
        self.paper(id.pmid())?
            .authors
            .get(id.position() as usize - 1)
            .map(String::as_str)
    }

    pub fn contains_instance(&self, id: &InstanceId) -> bool {
        self.author_name(id).is_some()
    }

    /// Instance years come from the paper they occur in.
    pub fn year_of(&self, id: &InstanceId) -> Option<i32> {
        self.paper(id.pmid()).map(|p| p.year)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorityProfile {
    pub authority_id: String,
    pub person_name: String,
    pub work_titles: BTreeSet<String>,
}

/// Authority profiles sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuthorityRegistry {
    pub profiles: Vec<AuthorityProfile>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrantRecord {
    pub pi_id: String,
    pub pi_name: String,
    pub funded_pmids: BTreeSet<u64>,
}

/// Grant PI records sorted by PI id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GrantTable {
    pub grants: Vec<GrantRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CitationEdge {
    pub citing_pmid: u64,
    pub cited_pmid: u64,
}

/// Demographic tags for one instance, stored verbatim. Empty cells are `None`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Annotation {
    pub ethnicity: Option<String>,
    pub gender: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Annotations {
    map: BTreeMap<InstanceId, Annotation>,
}

impl Annotations {
    /// Fails if an instance is annotated twice.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (InstanceId, Annotation)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (id, a) in entries {
            if map.insert(id, a).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "instance {id} annotated twice"
                )));
            }
        }
        Ok(Annotations { map })
    }

    pub fn get(&self, id: &InstanceId) -> Option<&Annotation> {
        self.map.get(id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&InstanceId, &Annotation)> + '_ {
        self.map.iter()
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&InstanceId) -> bool) {
        self.map.retain(|k, _| keep(k));
    }
}

/// What to do with instance references that do not resolve in the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferencePolicy {
    #[default]
    WarnAndSkip,
    Strict,
}

/// Returns the references that do not resolve against `corpus`. Under
/// [`ReferencePolicy::Strict`] any dangling reference is an error.
pub fn check_references<'a>(
    corpus: &Corpus,
    refs: impl IntoIterator<Item = &'a InstanceId>,
    what: &'static str,
    policy: ReferencePolicy,
) -> Result<Vec<InstanceId>> {
    let mut dangling: Vec<InstanceId> = refs
        .into_iter()
        .filter(|id| !corpus.contains_instance(id))
        .copied()
        .collect();
    dangling.sort_unstable();
    if let Some(&first) = dangling.first() {
        match policy {
            ReferencePolicy::Strict => {
                return Err(Error::Dangling {
                    what,
                    count: dangling.len(),
                    first,
                })
            }
            ReferencePolicy::WarnAndSkip => {
                log::warn!(
                    "{what}: skipping {} dangling reference(s), first {first}",
                    dangling.len()
                )
            }
        }
    }
    Ok(dangling)
}

/// Drops clustering members that do not resolve in `corpus`.
pub fn resolve_clustering(
    corpus: &Corpus,
    clustering: &Clustering,
    policy: ReferencePolicy,
) -> Result<(Clustering, usize)> {
    let dangling = check_references(corpus, clustering.instances(), "clustering", policy)?;
    if dangling.is_empty() {
        return Ok((clustering.clone(), 0));
    }
    Ok((
        clustering.restrict(|id| corpus.contains_instance(id)),
        dangling.len(),
    ))
}

/// Drops annotations that do not resolve in `corpus`.
pub fn resolve_annotations(
    corpus: &Corpus,
    annotations: &Annotations,
    policy: ReferencePolicy,
) -> Result<(Annotations, usize)> {
    let dangling = check_references(corpus, annotations.map.keys(), "annotations", policy)?;
    let mut out = annotations.clone();
    out.retain(|id| corpus.contains_instance(id));
    Ok((out, dangling.len()))
}
