//! TSV readers and writers for every file kind the toolkit consumes.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use super::{
    Annotation, Annotations, AuthorityProfile, AuthorityRegistry, CitationEdge, Clustering, Corpus,
    GrantRecord, GrantTable, InstanceId, PaperRecord,
};
use crate::error::{Error, Result};

pub const PAPERS_HEADER: [&str; 4] = ["pmid", "year", "title", "authors"];
pub const CLUSTERING_HEADER: [&str; 2] = ["cluster_id", "instance_id"];
pub const AUTHORITY_HEADER: [&str; 3] = ["authority_id", "name", "title"];
pub const GRANTS_HEADER: [&str; 3] = ["pi_id", "pi_name", "pmid"];
pub const CITATIONS_HEADER: [&str; 2] = ["citing_pmid", "cited_pmid"];
pub const ANNOTATIONS_HEADER: [&str; 3] = ["instance_id", "ethnicity", "gender"];

/// Separator between byline names in `papers.tsv`.
pub const AUTHOR_SEPARATOR: char = '|';

/// Opens `path`, decoding gzip when the name ends in `.gz`.
pub fn open_input(path: &Path) -> Result<Box<dyn Read + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let is_gz = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("gz"));
    if is_gz {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(
            BufReader::new(file),
        ))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

/// Streams the rows of a headed TSV source, checking the header first.
/// The callback receives the 1-based line number and the fields.
pub fn for_each_row<R: Read>(
    source: R,
    label: &str,
    header: &[&str],
    mut f: impl FnMut(u64, &csv::StringRecord) -> Result<()>,
) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let found = reader
        .headers()
        .map_err(|e| Error::ingest(label, 1, e.to_string()))?
        .clone();
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found != header {
        return Err(Error::ingest(
            label,
            1,
            format!(
                "expected header {:?}, found {:?}",
                header.join("\t"),
                found.join("\t")
            ),
        ));
    }
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                if record.len() != header.len() {
                    return Err(Error::ingest(
                        label,
                        line,
                        format!("expected {} fields, found {}", header.len(), record.len()),
                    ));
                }
                f(line, &record)?;
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(Error::ingest(label, line, e.to_string()));
            }
        }
    }
    Ok(())
}

fn parse_pmid(label: &str, line: u64, field: &str, value: &str) -> Result<u64> {
    match value.trim().parse::<u64>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(Error::ingest(
            label,
            line,
            format!("{field} {value:?} is not a positive integer"),
        )),
    }
}

fn parse_instance(label: &str, line: u64, value: &str) -> Result<InstanceId> {
    value
        .trim()
        .parse()
        .map_err(|e: Error| Error::ingest(label, line, e.to_string()))
}

fn non_empty<'a>(label: &str, line: u64, field: &str, value: &'a str) -> Result<&'a str> {
    let v = value.trim();
    if v.is_empty() {
        Err(Error::ingest(label, line, format!("missing {field}")))
    } else {
        Ok(v)
    }
}

pub fn ingest_corpus<R: Read>(source: R, label: &str) -> Result<Corpus> {
    let mut papers = Vec::new();
    let mut seen = HashSet::new();
    for_each_row(source, label, &PAPERS_HEADER, |line, r| {
        let pmid = parse_pmid(label, line, "pmid", &r[0])?;
        if !seen.insert(pmid) {
            return Err(Error::ingest(label, line, format!("duplicate pmid {pmid}")));
        }
        let year_text = non_empty(label, line, "year", &r[1])?;
        let year: i32 = year_text.parse().map_err(|_| {
            Error::ingest(label, line, format!("year {year_text:?} is not an integer"))
        })?;
        let title = non_empty(label, line, "title", &r[2])?;
        let authors_field = non_empty(label, line, "author list", &r[3])?;
        let mut authors = Vec::new();
        for name in authors_field.split(AUTHOR_SEPARATOR) {
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::ingest(label, line, "empty name in author list"));
            }
            authors.push(name.to_string());
        }
        papers.push(PaperRecord {
            pmid,
            raw_title: title.to_string(),
            year,
            authors,
        });
        Ok(())
    })?;
    log::info!("{label}: {} papers", papers.len());
    Corpus::from_papers(papers)
}

pub fn ingest_clustering<R: Read>(source: R, label: &str) -> Result<Clustering> {
    let mut b = Clustering::builder();
    for_each_row(source, label, &CLUSTERING_HEADER, |line, r| {
        let cluster = non_empty(label, line, "cluster_id", &r[0])?;
        let instance = parse_instance(label, line, &r[1])?;
        b.insert(cluster, instance)
            .map_err(|e| Error::ingest(label, line, e.to_string()))
    })?;
    Ok(b.build())
}

pub fn ingest_authority<R: Read>(source: R, label: &str) -> Result<AuthorityRegistry> {
    let mut profiles: BTreeMap<String, AuthorityProfile> = BTreeMap::new();
    for_each_row(source, label, &AUTHORITY_HEADER, |line, r| {
        let id = non_empty(label, line, "authority_id", &r[0])?;
        let name = non_empty(label, line, "name", &r[1])?;
        let title = non_empty(label, line, "title", &r[2])?;
        match profiles.entry(id.to_string()) {
            Entry::Vacant(e) => {
                e.insert(AuthorityProfile {
                    authority_id: id.to_string(),
                    person_name: name.to_string(),
                    work_titles: BTreeSet::from([title.to_string()]),
                });
            }
            Entry::Occupied(mut e) => {
                let p = e.get_mut();
                if p.person_name != name {
                    return Err(Error::ingest(
                        label,
                        line,
                        format!(
                            "authority {id} has conflicting names {:?} and {name:?}",
                            p.person_name
                        ),
                    ));
                }
                p.work_titles.insert(title.to_string());
            }
        }
        Ok(())
    })?;
    Ok(AuthorityRegistry {
        profiles: profiles.into_values().collect(),
    })
}

pub fn ingest_grants<R: Read>(source: R, label: &str) -> Result<GrantTable> {
    let mut grants: BTreeMap<String, GrantRecord> = BTreeMap::new();
    for_each_row(source, label, &GRANTS_HEADER, |line, r| {
        let id = non_empty(label, line, "pi_id", &r[0])?;
        let name = non_empty(label, line, "pi_name", &r[1])?;
        let pmid = parse_pmid(label, line, "pmid", &r[2])?;
        match grants.entry(id.to_string()) {
            Entry::Vacant(e) => {
                e.insert(GrantRecord {
                    pi_id: id.to_string(),
                    pi_name: name.to_string(),
                    funded_pmids: BTreeSet::from([pmid]),
                });
            }
            Entry::Occupied(mut e) => {
                let g = e.get_mut();
                if g.pi_name != name {
                    return Err(Error::ingest(
                        label,
                        line,
                        format!("PI {id} has conflicting names {:?} and {name:?}", g.pi_name),
                    ));
                }
                g.funded_pmids.insert(pmid);
            }
        }
        Ok(())
    })?;
    Ok(GrantTable {
        grants: grants.into_values().collect(),
    })
}

/// Citation edges, sorted and deduplicated. Self-loops are rejected.
pub fn ingest_citations<R: Read>(source: R, label: &str) -> Result<Vec<CitationEdge>> {
    let mut edges = BTreeSet::new();
    for_each_row(source, label, &CITATIONS_HEADER, |line, r| {
        let citing_pmid = parse_pmid(label, line, "citing_pmid", &r[0])?;
        let cited_pmid = parse_pmid(label, line, "cited_pmid", &r[1])?;
        if citing_pmid == cited_pmid {
            return Err(Error::ingest(
                label,
                line,
                format!("paper {citing_pmid} cites itself"),
            ));
        }
        edges.insert(CitationEdge {
            citing_pmid,
            cited_pmid,
        });
        Ok(())
    })?;
    Ok(edges.into_iter().collect())
}

fn optional_tag(value: &str) -> Option<String> {
    let v = value.trim();
    (!v.is_empty()).then(|| v.to_string())
}

pub fn ingest_annotations<R: Read>(source: R, label: &str) -> Result<Annotations> {
    let mut map = BTreeMap::new();
    for_each_row(source, label, &ANNOTATIONS_HEADER, |line, r| {
        let instance = parse_instance(label, line, &r[0])?;
        let a = Annotation {
            ethnicity: optional_tag(&r[1]),
            gender: optional_tag(&r[2]),
        };
        if map.insert(instance, a).is_some() {
            return Err(Error::ingest(
                label,
                line,
                format!("instance {instance} annotated twice"),
            ));
        }
        Ok(())
    })?;
    Annotations::from_entries(map)
}

macro_rules! loader {
    ($name:ident, $ingest:ident, $out:ty) => {
        pub fn $name(path: &Path) -> Result<$out> {
            $ingest(open_input(path)?, &file_label(path))
        }
    };
}

loader!(load_corpus, ingest_corpus, Corpus);
loader!(load_clustering, ingest_clustering, Clustering);
loader!(load_authority, ingest_authority, AuthorityRegistry);
loader!(load_grants, ingest_grants, GrantTable);
loader!(load_citations, ingest_citations, Vec<CitationEdge>);
loader!(load_annotations, ingest_annotations, Annotations);

/// Reads only the header row of a TSV file.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .from_reader(open_input(path)?);
    let h = reader
        .headers()
        .map_err(|e| Error::ingest(&file_label(path), 1, e.to_string()))?;
    Ok(h.iter().map(|s| s.trim().to_string()).collect())
}

/// A tab-separated writer with no quoting.
pub fn tsv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(sink)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<output>", io),
        other => Error::InvalidArgument(format!("{other:?}")),
    }
}

pub fn write_rows<W: Write, I, R>(sink: W, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = tsv_writer(sink);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

pub fn write_corpus<W: Write>(sink: W, corpus: &Corpus) -> Result<()> {
    write_rows(
        sink,
        &PAPERS_HEADER,
        corpus.papers().iter().map(|p| {
            [
                p.pmid.to_string(),
                p.year.to_string(),
                p.raw_title.clone(),
                p.authors.join(&AUTHOR_SEPARATOR.to_string()),
            ]
        }),
    )
}

pub fn write_clustering<W: Write>(sink: W, clustering: &Clustering) -> Result<()> {
    write_rows(
        sink,
        &CLUSTERING_HEADER,
        clustering
            .iter()
            .flat_map(|(id, members)| members.iter().map(move |m| [id.to_string(), m.to_string()])),
    )
}

pub fn write_authority<W: Write>(sink: W, registry: &AuthorityRegistry) -> Result<()> {
    write_rows(
        sink,
        &AUTHORITY_HEADER,
        registry.profiles.iter().flat_map(|p| {
            p.work_titles
                .iter()
                .map(move |t| [p.authority_id.clone(), p.person_name.clone(), t.clone()])
        }),
    )
}

pub fn write_grants<W: Write>(sink: W, grants: &GrantTable) -> Result<()> {
    write_rows(
        sink,
        &GRANTS_HEADER,
        grants.grants.iter().flat_map(|g| {
            g.funded_pmids
                .iter()
                .map(move |pmid| [g.pi_id.clone(), g.pi_name.clone(), pmid.to_string()])
        }),
    )
}

pub fn write_citations<W: Write>(sink: W, edges: &[CitationEdge]) -> Result<()> {
    write_rows(
        sink,
        &CITATIONS_HEADER,
        edges
            .iter()
            .map(|e| [e.citing_pmid.to_string(), e.cited_pmid.to_string()]),
    )
}

pub fn write_annotations<W: Write>(sink: W, annotations: &Annotations) -> Result<()> {
    write_rows(
        sink,
        &ANNOTATIONS_HEADER,
        annotations.iter().map(|(id, a)| {
            [
                id.to_string(),
                a.ethnicity.clone().unwrap_or_default(),
                a.gender.clone().unwrap_or_default(),
            ]
        }),
    )
}
