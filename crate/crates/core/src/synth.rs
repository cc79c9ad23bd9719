//! Synthetic corpora with planted ground truth.
//!
//! Names are built from syllable pools and every FINI key is reserved in a
//! registry, so homonyms and synonyms exist only where the generator plants
//! them. All randomness comes from one seeded ChaCha8 stream consumed in a
//! fixed order, which makes the output a pure function of the config.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::io::{
    write_annotations, write_authority, write_citations, write_clustering, write_corpus,
    write_grants, write_rows,
};
use crate::corpus::{
    Annotation, Annotations, AuthorityProfile, AuthorityRegistry, CitationEdge, Clustering, Corpus,
    GrantRecord, GrantTable, InstanceId, PaperRecord,
};
use crate::error::{Error, Result};
use crate::normalize::{fini_of, fold_title_text, BlockKey, HyphenPolicy};
use crate::profile::{choose_indices, seeded_rng, SynonymType};

const SURNAME_HEADS: [&str; 24] = [
    "Bar", "Cal", "Dor", "Fen", "Gal", "Har", "Kes", "Lin", "Mor", "Nak", "Ost", "Pel", "Quin",
    "Ros", "Sal", "Tor", "Ul", "Var", "Wen", "Yor", "Zan", "Abe", "Ish", "Eck",
];
const SURNAME_MIDS: [&str; 12] = [
    "", "a", "e", "i", "o", "u", "an", "el", "or", "is", "um", "ar",
];
const SURNAME_TAILS: [&str; 24] = [
    "berg", "son", "ez", "ski", "ova", "ton", "mann", "ard", "ini", "aki", "ida", "ler", "holm",
    "wick", "ley", "ford", "ham", "sen", "ura", "ino", "escu", "ov", "ian", "elli",
];
const FORENAME_HEADS: [&str; 23] = [
    "Al", "Ben", "Car", "Dan", "El", "Fio", "Gre", "Hel", "Iv", "Jo", "Kar", "Leo", "Mar", "Nor",
    "Ol", "Pa", "Ro", "Sa", "Ta", "Vi", "Wil", "Yu", "Ze",
];
const FORENAME_TAILS: [&str; 12] = [
    "a", "o", "ina", "ert", "ian", "is", "en", "ette", "ald", "ric", "mon", "dra",
];
const PARTICLES: [&str; 5] = ["de", "van", "do", "von", "da"];
const TITLE_WORDS: [&str; 48] = [
    "analysis",
    "protein",
    "expression",
    "cell",
    "regulation",
    "signalling",
    "mouse",
    "model",
    "human",
    "receptor",
    "response",
    "clinical",
    "trial",
    "gene",
    "pathway",
    "tumor",
    "immune",
    "cohort",
    "risk",
    "factor",
    "binding",
    "structure",
    "function",
    "activity",
    "disease",
    "therapy",
    "outcome",
    "patients",
    "mechanism",
    "kinase",
    "membrane",
    "transport",
    "neuronal",
    "cortical",
    "metabolic",
    "chronic",
    "acute",
    "genome",
    "variant",
    "sequencing",
    "infection",
    "viral",
    "bacterial",
    "resistance",
    "inhibition",
    "development",
    "tissue",
    "population",
];
const TITLE_LINKS: [&str; 6] = ["of", "in", "and", "for", "with", "during"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

/// Shares of planted synonym types among multiform authors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynonymShares {
    pub surname_variant: f64,
    pub initial_variant: f64,
    pub flipped_order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_authors: usize,
    /// Papers led by each author.
    pub papers_per_author: CountRange,
    /// Co-authors added to each led paper.
    pub coauthors_per_paper: CountRange,
    /// Share of authors that share a FINI key with another author.
    pub homonym_rate: f64,
    /// Probability that a homonym pair co-authors one extra paper.
    pub homonym_coauthor_rate: f64,
    /// Share of authors writing under two FINI keys.
    pub synonym_rate: f64,
    pub synonym_types: SynonymShares,
    /// Probability that two instances of one name form disagree on their
    /// middle initials (the form keeps its FINI key).
    pub aini_variant_rate: f64,
    pub authority_coverage: f64,
    /// 0 lists every work; 1 lists works with probability rising linearly
    /// from 0 for the earliest year to 1 for the latest.
    pub registry_year_skew: f64,
    pub grant_coverage: f64,
    /// Probability that a PI's paper is grant-funded.
    pub grant_paper_rate: f64,
    pub ethnicity_shares: BTreeMap<String, f64>,
    pub gender_shares: BTreeMap<String, f64>,
    /// Probability that a paper cites an earlier paper of its lead author.
    pub selfcitation_rate: f64,
    /// Citations from each paper to uniformly chosen earlier papers.
    pub random_citations_per_paper: usize,
    /// Probability that a paper reuses the title of an earlier paper.
    pub duplicate_title_rate: f64,
    /// Probability that a paper gets a title too short to link.
    pub short_title_rate: f64,
    /// Probability that a truth cluster is split in the predicted clustering.
    pub predicted_split_rate: f64,
    /// Probability that a truth cluster is merged into a neighbour.
    pub predicted_merge_rate: f64,
    pub year_min: i32,
    pub year_max: i32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_authors: 1000,
            papers_per_author: CountRange { min: 2, max: 8 },
            coauthors_per_paper: CountRange { min: 0, max: 4 },
            homonym_rate: 0.0,
            homonym_coauthor_rate: 0.0,
            synonym_rate: 0.0,
            synonym_types: SynonymShares {
                surname_variant: 0.77,
                initial_variant: 0.15,
                flipped_order: 0.08,
            },
            aini_variant_rate: 0.0,
            authority_coverage: 0.5,
            registry_year_skew: 0.0,
            grant_coverage: 0.2,
            grant_paper_rate: 0.5,
            ethnicity_shares: [
                ("English", 0.45),
                ("Hispanic", 0.15),
                ("Chinese", 0.15),
                ("Korean", 0.1),
                ("Indian", 0.1),
                ("Japanese", 0.05),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            gender_shares: [("Male", 0.6746), ("Female", 0.3254)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            selfcitation_rate: 0.3,
            random_citations_per_paper: 1,
            duplicate_title_rate: 0.0,
            short_title_rate: 0.0,
            predicted_split_rate: 0.0,
            predicted_merge_rate: 0.0,
            year_min: 1991,
            year_max: 2016,
        }
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} is outside [0, 1]")))
    }
}

fn check_shares(name: &str, shares: &[f64]) -> Result<()> {
    for &s in shares {
        check_rate(name, s)?;
    }
    let sum: f64 = shares.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{name} shares sum to {sum}, not 1")));
    }
    Ok(())
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("homonym_rate", self.homonym_rate),
            ("homonym_coauthor_rate", self.homonym_coauthor_rate),
            ("synonym_rate", self.synonym_rate),
            ("aini_variant_rate", self.aini_variant_rate),
            ("authority_coverage", self.authority_coverage),
            ("registry_year_skew", self.registry_year_skew),
            ("grant_coverage", self.grant_coverage),
            ("grant_paper_rate", self.grant_paper_rate),
            ("selfcitation_rate", self.selfcitation_rate),
            ("duplicate_title_rate", self.duplicate_title_rate),
            ("short_title_rate", self.short_title_rate),
            ("predicted_split_rate", self.predicted_split_rate),
            ("predicted_merge_rate", self.predicted_merge_rate),
        ] {
            check_rate(name, v)?;
        }
        if self.aini_variant_rate > 0.5 {
            return Err(Error::Config("aini_variant_rate cannot exceed 0.5".into()));
        }
        let s = &self.synonym_types;
        check_shares(
            "synonym_types",
            &[s.surname_variant, s.initial_variant, s.flipped_order],
        )?;
        check_shares(
            "ethnicity",
            &self.ethnicity_shares.values().copied().collect::<Vec<_>>(),
        )?;
        check_shares(
            "gender",
            &self.gender_shares.values().copied().collect::<Vec<_>>(),
        )?;
        if self.n_authors == 0 {
            return Err(Error::Config("n_authors must be positive".into()));
        }
        for (name, r) in [
            ("papers_per_author", self.papers_per_author),
            ("coauthors_per_paper", self.coauthors_per_paper),
        ] {
            if r.min > r.max {
                return Err(Error::Config(format!(
                    "{name}: min {} exceeds max {}",
                    r.min, r.max
                )));
            }
        }
        if self.coauthors_per_paper.max >= self.n_authors {
            return Err(Error::Config(
                "coauthors_per_paper.max must be below n_authors".into(),
            ));
        }
        if self.year_min > self.year_max {
            return Err(Error::Config("year_min exceeds year_max".into()));
        }
        let (h, m) = (self.homonym_authors(), self.multiform_authors());
        if h + m > self.n_authors {
            return Err(Error::Config(format!(
                "{h} homonym and {m} multiform authors do not fit in {} authors",
                self.n_authors
            )));
        }
        Ok(())
    }

    /// Planted homonym authors, rounded down to whole pairs.
    pub fn homonym_authors(&self) -> usize {
        let n = (self.homonym_rate * self.n_authors as f64).round() as usize;
        n - n % 2
    }

    pub fn multiform_authors(&self) -> usize {
        (self.synonym_rate * self.n_authors as f64).round() as usize
    }

    /// Per-instance probability of the middle-initial toggle such that two
    /// independent instances differ with probability `aini_variant_rate`.
    pub fn aini_toggle_probability(&self) -> f64 {
        (1.0 - (1.0 - 2.0 * self.aini_variant_rate).sqrt()) / 2.0
    }
}

/// A name as surname plus forenames; forenames after the first render as
/// initials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameForm {
    pub surname: String,
    pub forenames: Vec<String>,
}

impl NameForm {
    pub fn render(&self) -> String {
        let mut s = format!("{}, {}", self.surname, self.forenames[0]);
        for f in &self.forenames[1..] {
            s.push(' ');
            s.extend(f.chars().next());
            s.push('.');
        }
        s
    }

    fn fini(&self) -> BlockKey {
        fini_of(&self.render()).expect("generated names parse")
    }

    /// Drops the last middle name, or adds `middle` when there is none.
    fn toggled(&self, middle: &str) -> NameForm {
        let mut f = self.clone();
        if f.forenames.len() > 1 {
            f.forenames.pop();
        } else {
            f.forenames.push(middle.to_string());
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantedAuthor {
    pub author_id: String,
    pub canonical: NameForm,
    /// Second FINI form of a multiform author.
    pub variant: Option<NameForm>,
    pub synonym_type: Option<SynonymType>,
    pub homonym_group: Option<usize>,
    /// Middle name used by the initial toggle.
    pub toggle_middle: String,
    pub ethnicity: String,
    pub gender: String,
    pub authority_id: Option<String>,
    pub pi_id: Option<String>,
    /// Papers listed on the author's registry profile.
    pub listed_pmids: BTreeSet<u64>,
    pub funded_pmids: BTreeSet<u64>,
    pub instances: Vec<InstanceId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RealizedRates {
    pub n_authors: usize,
    pub n_papers: usize,
    pub n_instances: usize,
    pub homonym_authors: usize,
    pub homonym_author_share: f64,
    pub homonym_coauthored_papers: usize,
    pub multiform_authors: usize,
    pub multiform_author_share: f64,
    pub multiform_instances: usize,
    pub multiform_instance_share: f64,
    /// Mean over instances of the share of same-author instances written
    /// under a different FINI key.
    pub cross_form_share: f64,
    pub synonym_types: BTreeMap<String, usize>,
    pub aini_toggled_instances: usize,
    pub authority_profiles: usize,
    pub listed_works: usize,
    pub grant_pis: usize,
    pub funded_links: usize,
    pub citation_edges: usize,
    pub selfcitation_edges: usize,
    pub duplicate_title_papers: usize,
    pub short_title_papers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub realized: RealizedRates,
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub corpus: Corpus,
    pub registry: AuthorityRegistry,
    pub grants: GrantTable,
    pub citations: Vec<CitationEdge>,
    pub annotations: Annotations,
    /// Planted authorship of every instance.
    pub truth: Clustering,
    /// Truth with planted split and merge noise, ids unrelated to truth.
    pub predicted: Clustering,
    pub authors: Vec<PlantedAuthor>,
    pub author_of: BTreeMap<InstanceId, usize>,
    pub manifest: SynthManifest,
}

impl Bundle {
    /// Labels a sound authority linkage must produce when titles are unique
    /// and no FINI key is shared.
    pub fn expected_authority_labels(&self) -> BTreeMap<InstanceId, String> {
        self.expected_labels(|a| a.authority_id.as_ref().map(|id| (id, &a.listed_pmids)))
    }

    pub fn expected_grant_labels(&self) -> BTreeMap<InstanceId, String> {
        self.expected_labels(|a| a.pi_id.as_ref().map(|id| (id, &a.funded_pmids)))
    }

    fn expected_labels<'a>(
        &'a self,
        select: impl Fn(&'a PlantedAuthor) -> Option<(&'a String, &'a BTreeSet<u64>)>,
    ) -> BTreeMap<InstanceId, String> {
        let mut out = BTreeMap::new();
        for a in &self.authors {
            let Some((label, pmids)) = select(a) else {
                continue;
            };
            let key = a.canonical.fini();
            for id in &a.instances {
                let same_key = self.corpus.author_name(id).and_then(fini_of).as_ref() == Some(&key);
                if pmids.contains(&id.pmid()) && same_key {
                    out.insert(*id, label.clone());
                }
            }
        }
        out
    }

    /// The planted label of every instance, as an authority id when the
    /// author has one.
    pub fn author_label(&self, id: &InstanceId) -> Option<&PlantedAuthor> {
        self.author_of.get(id).map(|&a| &self.authors[a])
    }
}

struct Names {
    used: HashSet<BlockKey>,
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len() as u64) as usize]
}

fn draw_categorical(rng: &mut ChaCha8Rng, shares: &BTreeMap<String, f64>) -> String {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, v) in shares {
        acc += v;
        if u < acc {
            return k.clone();
        }
    }
    shares.keys().next_back().cloned().unwrap_or_default()
}

impl Names {
    fn surname(rng: &mut ChaCha8Rng) -> String {
        format!(
            "{}{}{}",
            pick(rng, &SURNAME_HEADS),
            pick(rng, &SURNAME_MIDS),
            pick(rng, &SURNAME_TAILS)
        )
    }

    fn forename(rng: &mut ChaCha8Rng) -> String {
        format!(
            "{}{}",
            pick(rng, &FORENAME_HEADS),
            pick(rng, &FORENAME_TAILS)
        )
    }

    fn forename_with_initial(
        rng: &mut ChaCha8Rng,
        initial: char,
        other_than: &str,
    ) -> Option<String> {
        let heads: Vec<&str> = FORENAME_HEADS
            .iter()
            .copied()
            .filter(|h| h.starts_with(initial.to_ascii_uppercase()))
            .collect();
        for _ in 0..64 {
            let f = format!("{}{}", pick(rng, &heads), pick(rng, &FORENAME_TAILS));
            if f != other_than {
                return Some(f);
            }
        }
        None
    }

    fn middle_for(rng: &mut ChaCha8Rng, first: &str) -> String {
        loop {
            let m = Self::forename(rng);
            if m.chars().next() != first.chars().next() {
                return m;
            }
        }
    }

    /// Draws names until `make` yields forms whose keys are all free, then
    /// reserves them.
    fn reserve(
        &mut self,
        rng: &mut ChaCha8Rng,
        mut make: impl FnMut(&mut ChaCha8Rng) -> Vec<NameForm>,
    ) -> Result<Vec<NameForm>> {
        for _ in 0..10_000 {
            let forms = make(rng);
            let keys: Vec<BlockKey> = forms.iter().map(NameForm::fini).collect();
            let distinct: HashSet<&BlockKey> = keys.iter().collect();
            if distinct.len() == keys.len() && keys.iter().all(|k| !self.used.contains(k)) {
                self.used.extend(keys);
                return Ok(forms);
            }
        }
        Err(Error::Config(
            "name space exhausted; reduce n_authors".into(),
        ))
    }
}

fn variant_of(rng: &mut ChaCha8Rng, base: &NameForm, kind: SynonymType) -> NameForm {
    match kind {
        SynonymType::SurnameVariant => NameForm {
            surname: format!("{} {}", pick(rng, &PARTICLES), base.surname),
            forenames: base.forenames.clone(),
        },
        SynonymType::InitialVariant => {
            let mut forenames = base.forenames.clone();
            forenames.swap(0, 1);
            NameForm {
                surname: base.surname.clone(),
                forenames,
            }
        }
        SynonymType::FlippedOrder => NameForm {
            surname: base.forenames[0].clone(),
            forenames: vec![base.surname.clone()],
        },
    }
}

fn random_title(rng: &mut ChaCha8Rng, words: usize) -> String {
    let mut out: Vec<String> = Vec::with_capacity(words);
    for i in 0..words {
        let w = if i > 0 && i % 3 == 2 {
            pick(rng, &TITLE_LINKS)
        } else {
            pick(rng, &TITLE_WORDS)
        };
        out.push(w.to_string());
    }
    let mut t = out.join(" ");
    t[..1].make_ascii_uppercase();
    t.push('.');
    t
}

/// Splits `total` across `shares` by largest remainder.
fn apportion(total: usize, shares: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    let mut out: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (raw[a] - raw[a].floor(), raw[b] - raw[b].floor());
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let short = total - out.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        out[i] += 1;
    }
    out
}

struct DraftPaper {
    title: String,
    year: i32,
    byline: Vec<usize>,
    lead: usize,
    short: bool,
    duplicate: bool,
}

pub fn generate(config: &SynthConfig) -> Result<Bundle> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let n = config.n_authors;

    let order = choose_indices(&mut rng, n, n);
    let n_hom = config.homonym_authors();
    let n_multi = config.multiform_authors();
    let s = &config.synonym_types;
    let type_counts = apportion(
        n_multi,
        &[s.surname_variant, s.initial_variant, s.flipped_order],
    );
    let mut role: Vec<Option<SynonymType>> = vec![None; n];
    let mut homonym_group: Vec<Option<usize>> = vec![None; n];
    for (g, pair) in order[..n_hom].chunks(2).enumerate() {
        for &a in pair {
            homonym_group[a] = Some(g);
        }
    }
    let kinds = [
        SynonymType::SurnameVariant,
        SynonymType::InitialVariant,
        SynonymType::FlippedOrder,
    ];
    let mut slot = n_hom;
    for (kind, count) in kinds.iter().zip(&type_counts) {
        for &a in &order[slot..slot + count] {
            role[a] = Some(*kind);
        }
        slot += count;
    }

    let mut names = Names {
        used: HashSet::new(),
    };
    let mut authors: Vec<PlantedAuthor> = Vec::with_capacity(n);
    let mut leaders: BTreeMap<usize, usize> = BTreeMap::new();
    for a in 0..n {
        let kind = role[a];
        let follower_of = homonym_group[a].and_then(|g| leaders.get(&g).copied());
        let (canonical, variant) = if let Some(leader) = follower_of {
            let base: &NameForm = &authors[leader].canonical;
            let initial = base.forenames[0]
                .chars()
                .next()
                .unwrap()
                .to_ascii_lowercase();
            let first = Names::forename_with_initial(&mut rng, initial, &base.forenames[0])
                .ok_or_else(|| Error::Config("cannot build a homonym forename".into()))?;
            let mut forenames = vec![first];
            if rng.gen_bool(0.5) {
                forenames.push(Names::middle_for(&mut rng, &forenames[0]));
            }
            (
                NameForm {
                    surname: base.surname.clone(),
                    forenames,
                },
                None,
            )
        } else {
            let forms = names.reserve(&mut rng, |rng| {
                let first = Names::forename(rng);
                let mut forenames = vec![first.clone()];
                if kind == Some(SynonymType::InitialVariant) || rng.gen_bool(0.5) {
                    forenames.push(Names::middle_for(rng, &first));
                }
                let base = NameForm {
                    surname: Names::surname(rng),
                    forenames,
                };
                let mut v = vec![base.clone()];
                if let Some(k) = kind {
                    v.push(variant_of(rng, &base, k));
                }
                v
            })?;
            let mut it = forms.into_iter();
            (it.next().unwrap(), it.next())
        };
        if let Some(g) = homonym_group[a] {
            leaders.entry(g).or_insert(a);
        }
        let toggle_middle = Names::middle_for(&mut rng, &canonical.forenames[0]);
        let ethnicity = draw_categorical(&mut rng, &config.ethnicity_shares);
        let gender = draw_categorical(&mut rng, &config.gender_shares);
        authors.push(PlantedAuthor {
            author_id: format!("AU{:06}", a + 1),
            canonical,
            variant,
            synonym_type: kind,
            homonym_group: homonym_group[a],
            toggle_middle,
            ethnicity,
            gender,
            authority_id: None,
            pi_id: None,
            listed_pmids: BTreeSet::new(),
            funded_pmids: BTreeSet::new(),
            instances: Vec::new(),
        });
    }

    // Papers.
    let mut drafts: Vec<DraftPaper> = Vec::new();
    let mut titles_seen: HashSet<String> = HashSet::new();
    let mut fresh_title = |rng: &mut ChaCha8Rng| -> String {
        loop {
            let len = rng.gen_range(6..=12u64) as usize;
            let t = random_title(rng, len);
            if titles_seen.insert(fold_title_text(&t, HyphenPolicy::Delete)) {
                return t;
            }
        }
    };
    let mut new_paper =
        |rng: &mut ChaCha8Rng, lead: usize, extra: Vec<usize>, drafts: &mut Vec<DraftPaper>| {
            let year = rng.gen_range(config.year_min as i64..=config.year_max as i64) as i32;
            let mut byline = vec![lead];
            byline.extend(extra);
            for i in (1..byline.len()).rev() {
                let j = rng.gen_range(0..=i as u64) as usize;
                byline.swap(i, j);
            }
            let (title, short, duplicate) = if rng.gen_bool(config.short_title_rate) {
                (
                    format!("{} {}.", pick(rng, &TITLE_WORDS), pick(rng, &TITLE_WORDS)),
                    true,
                    false,
                )
            } else if !drafts.is_empty() && rng.gen_bool(config.duplicate_title_rate) {
                let src = rng.gen_range(0..drafts.len() as u64) as usize;
                if drafts[src].short {
                    (fresh_title(rng), false, false)
                } else {
                    (drafts[src].title.clone(), false, true)
                }
            } else {
                (fresh_title(rng), false, false)
            };
            drafts.push(DraftPaper {
                title,
                year,
                byline,
                lead,
                short,
                duplicate,
            });
        };
    for a in 0..n {
        let r = config.papers_per_author;
        let mut count = rng.gen_range(r.min as u64..=r.max as u64) as usize;
        if role[a].is_some() {
            count = count.max(2);
        }
        for _ in 0..count {
            let c = config.coauthors_per_paper;
            let k = rng.gen_range(c.min as u64..=c.max as u64) as usize;
            let mut co: Vec<usize> = Vec::with_capacity(k);
            while co.len() < k {
                let b = rng.gen_range(0..n as u64) as usize;
                let clash = b == a
                    || co.contains(&b)
                    || (homonym_group[b].is_some() && homonym_group[b] == homonym_group[a])
                    || co.iter().any(|&o| {
                        homonym_group[o].is_some() && homonym_group[o] == homonym_group[b]
                    });
                if !clash {
                    co.push(b);
                }
            }
            new_paper(&mut rng, a, co, &mut drafts);
        }
    }
    let mut homonym_coauthored = 0;
    let groups: Vec<(usize, usize)> = (0..n)
        .filter_map(|a| homonym_group[a].map(|g| (g, a)))
        .collect::<BTreeMap<_, _>>()
        .into_iter()
        .collect();
    for (g, _) in &groups {
        let members: Vec<usize> = (0..n).filter(|&a| homonym_group[a] == Some(*g)).collect();
        if rng.gen_bool(config.homonym_coauthor_rate) {
            new_paper(&mut rng, members[0], members[1..].to_vec(), &mut drafts);
            homonym_coauthored += 1;
        }
    }

    let mut paper_order: Vec<usize> = (0..drafts.len()).collect();
    paper_order.sort_by_key(|&i| (drafts[i].year, i));
    let mut pmid_of = vec![0u64; drafts.len()];
    for (rank, &i) in paper_order.iter().enumerate() {
        pmid_of[i] = rank as u64 + 1;
    }

    // Instances and name forms, in pmid order so "first" means earliest.
    let q = config.aini_toggle_probability();
    let mut seen_forms: Vec<[bool; 2]> = vec![[false; 2]; n];
    let mut papers = Vec::with_capacity(drafts.len());
    let mut author_of = BTreeMap::new();
    let mut toggled = 0usize;
    for &i in &paper_order {
        let d = &drafts[i];
        let pmid = pmid_of[i];
        let mut names_on_paper = Vec::with_capacity(d.byline.len());
        for (pos, &a) in d.byline.iter().enumerate() {
            let au = &authors[a];
            let use_variant = match &au.variant {
                None => false,
                Some(_) => match seen_forms[a] {
                    [false, _] => false,
                    [true, false] => true,
                    _ => rng.gen_bool(0.5),
                },
            };
            seen_forms[a][use_variant as usize] = true;
            let form = if use_variant {
                au.variant.as_ref().unwrap()
            } else {
                &au.canonical
            };
            let form = if q > 0.0 && rng.gen_bool(q) {
                toggled += 1;
                form.toggled(&au.toggle_middle)
            } else {
                form.clone()
            };
            names_on_paper.push(form.render());
            let id = InstanceId::new(pmid, pos as u32 + 1)?;
            author_of.insert(id, a);
            authors[a].instances.push(id);
        }
        papers.push(PaperRecord {
            pmid,
            raw_title: d.title.clone(),
            year: d.year,
            authors: names_on_paper,
        });
    }

    // Registry and grants.
    let span = (config.year_max - config.year_min).max(1) as f64;
    let mut profiles = Vec::new();
    let mut grant_records = Vec::new();
    let mut pmids_by_author: Vec<Vec<(u64, usize)>> = vec![Vec::new(); n];
    for (i, d) in drafts.iter().enumerate() {
        for &a in &d.byline {
            pmids_by_author[a].push((pmid_of[i], i));
        }
    }
    for list in &mut pmids_by_author {
        list.sort();
    }
    for a in 0..n {
        if rng.gen_bool(config.authority_coverage) {
            let id = format!("0000-0002-{:04}-{:04}", (a + 1) / 10_000, (a + 1) % 10_000);
            let mut titles = BTreeSet::new();
            for &(pmid, i) in &pmids_by_author[a] {
                let d = &drafts[i];
                let recency = (d.year - config.year_min) as f64 / span;
                let p = (1.0 - config.registry_year_skew) + config.registry_year_skew * recency;
                if rng.gen_bool(p.clamp(0.0, 1.0)) {
                    titles.insert(d.title.clone());
                    authors[a].listed_pmids.insert(pmid);
                }
            }
            if !titles.is_empty() {
                profiles.push(AuthorityProfile {
                    authority_id: id.clone(),
                    person_name: authors[a].canonical.render(),
                    work_titles: titles,
                });
                authors[a].authority_id = Some(id);
            } else {
                authors[a].listed_pmids.clear();
            }
        }
        if rng.gen_bool(config.grant_coverage) {
            let id = format!("PI{:07}", a + 1);
            let funded: BTreeSet<u64> = pmids_by_author[a]
                .iter()
                .filter(|_| rng.gen_bool(config.grant_paper_rate))
                .map(|&(p, _)| p)
                .collect();
            if !funded.is_empty() {
                grant_records.push(GrantRecord {
                    pi_id: id.clone(),
                    pi_name: authors[a].canonical.render(),
                    funded_pmids: funded.clone(),
                });
                authors[a].pi_id = Some(id);
                authors[a].funded_pmids = funded;
            }
        }
    }
    profiles.sort_by(|x, y| x.authority_id.cmp(&y.authority_id));
    grant_records.sort_by(|x, y| x.pi_id.cmp(&y.pi_id));

    // Citations.
    let mut edges = BTreeSet::new();
    let mut self_edges = 0;
    for &i in &paper_order {
        let pmid = pmid_of[i];
        let lead = drafts[i].lead;
        if rng.gen_bool(config.selfcitation_rate) {
            let earlier: Vec<u64> = pmids_by_author[lead]
                .iter()
                .map(|&(p, _)| p)
                .filter(|&p| p < pmid)
                .collect();
            if !earlier.is_empty() {
                let cited = earlier[rng.gen_range(0..earlier.len() as u64) as usize];
                if edges.insert(CitationEdge {
                    citing_pmid: pmid,
                    cited_pmid: cited,
                }) {
                    self_edges += 1;
                }
            }
        }
        if pmid > 1 {
            for _ in 0..config.random_citations_per_paper {
                let cited = rng.gen_range(1..pmid);
                edges.insert(CitationEdge {
                    citing_pmid: pmid,
                    cited_pmid: cited,
                });
            }
        }
    }

    let annotations = Annotations::from_entries(author_of.iter().map(|(id, &a)| {
        (
            *id,
            Annotation {
                ethnicity: Some(authors[a].ethnicity.clone()),
                gender: Some(authors[a].gender.clone()),
            },
        )
    }))?;
    let truth = Clustering::from_assignments(
        author_of
            .iter()
            .map(|(id, &a)| (authors[a].author_id.as_str(), *id)),
    )?;
    let predicted = noisy_prediction(&mut rng, &truth, config)?;

    let n_instances = author_of.len();
    let mut realized = RealizedRates {
        n_authors: n,
        n_papers: papers.len(),
        n_instances,
        homonym_authors: n_hom,
        homonym_author_share: n_hom as f64 / n as f64,
        homonym_coauthored_papers: homonym_coauthored,
        multiform_authors: n_multi,
        multiform_author_share: n_multi as f64 / n as f64,
        aini_toggled_instances: toggled,
        authority_profiles: profiles.len(),
        listed_works: profiles.iter().map(|p| p.work_titles.len()).sum(),
        grant_pis: grant_records.len(),
        funded_links: grant_records.iter().map(|g| g.funded_pmids.len()).sum(),
        citation_edges: edges.len(),
        selfcitation_edges: self_edges,
        duplicate_title_papers: drafts.iter().filter(|d| d.duplicate).count(),
        short_title_papers: drafts.iter().filter(|d| d.short).count(),
        ..Default::default()
    };
    let by_pmid: BTreeMap<u64, &PaperRecord> = papers.iter().map(|p| (p.pmid, p)).collect();
    let mut cross = 0.0;
    for a in &authors {
        if let Some(k) = a.synonym_type {
            realized.multiform_instances += a.instances.len();
            *realized
                .synonym_types
                .entry(k.name().to_string())
                .or_default() += 1;
        }
        let mut per_key: BTreeMap<Option<BlockKey>, usize> = BTreeMap::new();
        for id in &a.instances {
            let raw = &by_pmid[&id.pmid()].authors[id.position() as usize - 1];
            *per_key.entry(fini_of(raw)).or_default() += 1;
        }
        let total = a.instances.len() as f64;
        cross += per_key
            .values()
            .map(|&c| c as f64 * (1.0 - c as f64 / total))
            .sum::<f64>();
    }
    realized.multiform_instance_share = realized.multiform_instances as f64 / n_instances as f64;
    realized.cross_form_share = cross / n_instances as f64;

    Ok(Bundle {
        corpus: Corpus::from_papers(papers)?,
        registry: AuthorityRegistry { profiles },
        grants: GrantTable {
            grants: grant_records,
        },
        citations: edges.into_iter().collect(),
        annotations,
        truth,
        predicted,
        authors,
        author_of,
        manifest: SynthManifest {
            config: config.clone(),
            realized,
        },
    })
}

fn noisy_prediction(
    rng: &mut ChaCha8Rng,
    truth: &Clustering,
    config: &SynthConfig,
) -> Result<Clustering> {
    let mut b = Clustering::builder();
    let mut next = 0usize;
    let mut fresh = || {
        next += 1;
        format!("P{next:07}")
    };
    let mut carry: Option<String> = None;
    for (_, members) in truth.iter() {
        let id = match carry.take() {
            Some(id) => id,
            None => fresh(),
        };
        if members.len() > 1 && rng.gen_bool(config.predicted_split_rate) {
            let other = fresh();
            let cut = rng.gen_range(1..members.len() as u64) as usize;
            for (i, m) in members.iter().enumerate() {
                b.insert(if i < cut { id.as_str() } else { other.as_str() }, *m)?;
            }
        } else {
            for m in members {
                b.insert(&id, *m)?;
            }
        }
        if rng.gen_bool(config.predicted_merge_rate) {
            carry = Some(id);
        }
    }
    Ok(b.build())
}

pub const BUNDLE_FILES: [&str; 9] = [
    "papers.tsv",
    "authority.tsv",
    "grants.tsv",
    "citations.tsv",
    "annotations.tsv",
    "truth_clustering.tsv",
    "clustering.tsv",
    "planted_authors.tsv",
    "manifest.json",
];

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(&path, e))
}

/// Writes the bundle in the corpus file formats plus `planted_authors.tsv`
/// and `manifest.json`.
pub fn write_bundle(dir: &Path, bundle: &Bundle) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_corpus(create(dir, "papers.tsv")?, &bundle.corpus)?;
    write_authority(create(dir, "authority.tsv")?, &bundle.registry)?;
    write_grants(create(dir, "grants.tsv")?, &bundle.grants)?;
    write_citations(create(dir, "citations.tsv")?, &bundle.citations)?;
    write_annotations(create(dir, "annotations.tsv")?, &bundle.annotations)?;
    write_clustering(create(dir, "truth_clustering.tsv")?, &bundle.truth)?;
    write_clustering(create(dir, "clustering.tsv")?, &bundle.predicted)?;
    write_rows(
        create(dir, "planted_authors.tsv")?,
        &[
            "author_id",
            "canonical",
            "variant",
            "synonym_type",
            "homonym_group",
            "authority_id",
            "pi_id",
            "instances",
        ],
        bundle.authors.iter().map(|a| {
            [
                a.author_id.clone(),
                a.canonical.render(),
                a.variant.as_ref().map(NameForm::render).unwrap_or_default(),
                a.synonym_type
                    .map(|t| t.name().to_string())
                    .unwrap_or_default(),
                a.homonym_group.map(|g| g.to_string()).unwrap_or_default(),
                a.authority_id.clone().unwrap_or_default(),
                a.pi_id.clone().unwrap_or_default(),
                a.instances.len().to_string(),
            ]
        }),
    )?;
    let path = dir.join("manifest.json");
    let mut f = create(dir, "manifest.json")?;
    serde_json::to_writer_pretty(&mut f, &bundle.manifest)?;
    f.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    f.flush().map_err(|e| Error::io(&path, e))
}

/// One name per instance, grouped into FINI blocks whose sizes are planted:
/// exactly `round(share_multi * n_blocks)` blocks have two or more members,
/// with sizes drawn from a geometric tail.
pub fn skewed_block_population(
    n_blocks: usize,
    share_multi: f64,
    seed: u64,
) -> Vec<(InstanceId, String)> {
    let mut rng = seeded_rng(seed);
    let n_multi = (share_multi * n_blocks as f64).round() as usize;
    let mut out = Vec::new();
    let mut pmid = 0u64;
    for b in 0..n_blocks {
        let mut size = 1;
        if b < n_multi {
            size = 2;
            while size < 5000 && rng.gen_bool(0.6) {
                size += 1 + (rng.gen_range(0..3u64) as usize) * (size / 4);
            }
        }
        let mut surname = String::from("Q");
        let mut k = b;
        loop {
            surname.push((b'a' + (k % 26) as u8) as char);
            k /= 26;
            if k == 0 {
                break;
            }
        }
        let name = format!("{surname}, A");
        for _ in 0..size {
            pmid += 1;
            out.push((InstanceId::new(pmid, 1).expect("positive"), name.clone()));
        }
    }
    out
}
