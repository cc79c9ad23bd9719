//! Command-line driver. Every subcommand reads its inputs, writes its
//! artifacts plus `run_manifest.json` into `--out`, and prints one summary
//! line. Exit codes are listed in [`exit`].

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::baseline::{build_blocks, cluster_by, corpus_instances, Method};
use crate::corpus::io::{open_input, read_header, write_clustering, CLUSTERING_HEADER};
use crate::corpus::{
    load_annotations, load_authority, load_citations, load_clustering, load_corpus, load_grants,
};
use crate::corpus::{Clustering, Corpus, InstanceId};
use crate::error::Error;
use crate::linkage::{
    extract_selfcitation_pairs, join_truth, label_agreement, labels_to_clustering, link_authority,
    link_grants, load_eval_dataset, load_labels, load_pairs, write_agreement, write_conflicts,
    write_eval_dataset, write_labels, write_pairs, DupTitlePolicy, EvalDataset, EvalRow, LabelRow,
    LabelSource, LinkOptions, LinkOutcome, EVAL_HEADER, LABELS_HEADER,
};
use crate::metrics::{
    b3_scores, pair_accuracy, stratified_eval, stratified_pair_accuracy, Attribute, B3Options,
    MetricsReport, PredictedScope,
};
use crate::normalize::{parse_name, HyphenPolicy};
use crate::profile::{
    block_size_ccdf, ccdf_at, classify_synonym_types, distribution, instance_distribution,
    instance_value, ks_distance, pair_distribution, perturb_tags, reference_sample,
    write_ccdf_table, write_distribution_table, write_typology, CcdfPoint,
};
use crate::synth::{generate, write_bundle, SynthConfig, BUNDLE_FILES};

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const MISSING_INPUT: i32 = 3;
    pub const FORMAT: i32 = 4;
    pub const DATA: i32 = 5;
    pub const IO: i32 = 6;
}

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "LINKLAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "linklab",
    version,
    about = "Author-name truth data: linkage, baselines, evaluation, profiling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic bundle with planted ground truth.
    Synth(SynthArgs),
    /// Label instances by title match against an authority registry.
    LinkAuthority(LinkAuthorityArgs),
    /// Label instances by pmid match against grant PI records.
    LinkGrants(LinkGrantsArgs),
    /// Extract self-citation positive pairs.
    Pairs(PairsArgs),
    /// Cluster all instances with a name-key heuristic.
    Baseline(BaselineArgs),
    /// Score a predicted clustering against truth labels and pairs.
    Evaluate(EvaluateArgs),
    /// Distributions, block-size CCDFs and synonym typology.
    Profile(ProfileArgs),
    /// Randomly retag a fraction of each ethnicity group.
    Perturb(PerturbArgs),
    /// Compare the labels of two datasets on their shared instances.
    Agree(AgreeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DupTitleArg {
    DropAll,
    KeepFirst,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyphenArg {
    Delete,
    Space,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StratumArg {
    Ethnicity,
    Gender,
    Year,
}

impl From<StratumArg> for Attribute {
    fn from(s: StratumArg) -> Self {
        match s {
            StratumArg::Ethnicity => Attribute::Ethnicity,
            StratumArg::Gender => Attribute::Gender,
            StratumArg::Year => Attribute::Year,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Fini,
    Aini,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceArg {
    Authority,
    Grant,
}

impl From<SourceArg> for LabelSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Authority => LabelSource::Authority,
            SourceArg::Grant => LabelSource::Grant,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeArg {
    Restricted,
    Full,
}

#[derive(Debug, Args, Serialize)]
pub struct OutArg {
    /// Output directory, created if absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    /// JSON config; fields left out take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_authors: Option<usize>,
    #[arg(long)]
    pub homonym_rate: Option<f64>,
    #[arg(long)]
    pub synonym_rate: Option<f64>,
    #[arg(long)]
    pub aini_variant_rate: Option<f64>,
    #[arg(long)]
    pub duplicate_title_rate: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArg,
}

#[derive(Debug, Args, Serialize)]
pub struct LinkAuthorityArgs {
    #[arg(long)]
    pub papers: PathBuf,
    #[arg(long)]
    pub authority: PathBuf,
    #[arg(long, value_enum, default_value = "drop-all")]
    pub dup_title_policy: DupTitleArg,
    #[arg(long, value_enum, default_value = "delete")]
    pub hyphen_policy: HyphenArg,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArg,
}

#[derive(Debug, Args, Serialize)]
pub struct LinkGrantsArgs {
    #[arg(long)]
    pub papers: PathBuf,
    #[arg(long)]
    pub grants: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArg,
}

#[derive(Debug, Args, Serialize)]
pub struct PairsArgs {
    #[arg(long)]
    pub papers: PathBuf,
    #[arg(long)]
    pub citations: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArg,
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    #[arg(long)]
    pub papers: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArg,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Truth as labels.tsv or clustering.tsv (detected from the header).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Predicted clustering.tsv.
    #[arg(long)]
    pub pred: PathBuf,
    /// Positive pairs scored by pair accuracy.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Keep only labels from this source.
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
    /// Papers, for instance years.
    #[arg(long)]
    pub papers: Option<PathBuf>,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub stratum: Option<StratumArg>,
    /// Fail when a truth instance is missing from the prediction (default).
    #[arg(long, conflicts_with = "lenient")]
    pub strict: bool,
    /// Drop and count truth instances missing from the prediction.
    #[arg(long)]
    pub lenient: bool,
    #[arg(long, value_enum, default_value = "restricted")]
    pub scope: ScopeArg,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArg,
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    /// Labeled evaluation dataset.
    #[arg(long)]
    pub eval: PathBuf,
    /// Population papers, for names and population columns.
    #[arg(long)]
    pub papers: PathBuf,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Size of a uniform reference sample of population instances.
    #[arg(long, requires = "seed")]
    pub sample: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArg,
}

#[derive(Debug, Args, Serialize)]
pub struct PerturbArgs {
    #[arg(long)]
    pub eval: PathBuf,
    #[arg(long)]
    pub fraction: f64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArg,
}

#[derive(Debug, Args, Serialize)]
pub struct AgreeArgs {
    /// eval_dataset.tsv or labels.tsv.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArg,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("missing input {0}")]
    MissingInput(PathBuf),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingInput(_) => exit::MISSING_INPUT,
            CliError::Usage(_) => exit::USAGE,
            CliError::Lib(e) => match e {
                Error::InstanceId { .. }
                | Error::Ingest { .. }
                | Error::Partition { .. }
                | Error::UnparseableName(_)
                | Error::Json(_) => exit::FORMAT,
                Error::UnknownAttribute(_) => exit::USAGE,
                Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                    exit::MISSING_INPUT
                }
                Error::Io { .. } => exit::IO,
                _ => exit::DATA,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Contents of `run_manifest.json`. Holds no timestamps or absolute output
/// paths, so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub flags: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: String,
    pub manifest: RunManifest,
}

fn digest(path: &Path, label: String) -> CliResult<FileDigest> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        hasher.update(&buf[..n]);
    }
    Ok(FileDigest {
        path: label,
        bytes,
        sha256: hex::encode(hasher.finalize()),
    })
}

/// Output directory plus the artifacts written so far.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> crate::Result<()>,
    ) -> CliResult<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.dir.join(name);
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok(())
        })
    }
}

fn require(paths: &[&Path]) -> CliResult<()> {
    match paths.iter().find(|p| !p.exists()) {
        Some(p) => Err(CliError::MissingInput(p.to_path_buf())),
        None => Ok(()),
    }
}

struct Plan<'a> {
    name: &'static str,
    inputs: Vec<&'a Path>,
    seed: Option<u64>,
    flags: serde_json::Value,
    out: &'a Path,
}

fn plan(command: &Command) -> CliResult<Plan<'_>> {
    fn opt(p: &Option<PathBuf>) -> Option<&Path> {
        p.as_deref()
    }
    let flags = |v: serde_json::Result<serde_json::Value>| v.map_err(Error::from);
    let p = match command {
        Command::Synth(a) => Plan {
            name: "synth",
            inputs: opt(&a.config).into_iter().collect(),
            seed: Some(a.seed),
            flags: flags(serde_json::to_value(a))?,
            out: &a.out.out,
        },
        Command::LinkAuthority(a) => Plan {
            name: "link-authority",
            inputs: vec![&a.papers, &a.authority],
            seed: None,
            flags: flags(serde_json::to_value(a))?,
            out: &a.out.out,
        },
        Command::LinkGrants(a) => Plan {
            name: "link-grants",
            inputs: vec![&a.papers, &a.grants],
            seed: None,
            flags: flags(serde_json::to_value(a))?,
            out: &a.out.out,
        },
        Command::Pairs(a) => Plan {
            name: "pairs",
            inputs: vec![&a.papers, &a.citations],
            seed: None,
            flags: flags(serde_json::to_value(a))?,
            out: &a.out.out,
        },
        Command::Baseline(a) => Plan {
            name: "baseline",
            inputs: vec![&a.papers],
            seed: None,
            flags: flags(serde_json::to_value(a))?,
            out: &a.out.out,
        },
        Command::Evaluate(a) => Plan {
            name: "evaluate",
            inputs: [
                opt(&a.truth),
                Some(a.pred.as_path()),
                opt(&a.pairs),
                opt(&a.papers),
                opt(&a.annotations),
            ]
            .into_iter()
            .flatten()
            .collect(),
            seed: None,
            flags: flags(serde_json::to_value(a))?,
            out: &a.out.out,
        },
        Command::Profile(a) => Plan {
            name: "profile",
            inputs: [
                Some(a.eval.as_path()),
                Some(a.papers.as_path()),
                opt(&a.annotations),
                opt(&a.pairs),
            ]
            .into_iter()
            .flatten()
            .collect(),
            seed: a.seed,
            flags: flags(serde_json::to_value(a))?,
            out: &a.out.out,
        },
        Command::Perturb(a) => Plan {
            name: "perturb",
            inputs: vec![&a.eval],
            seed: Some(a.seed),
            flags: flags(serde_json::to_value(a))?,
            out: &a.out.out,
        },
        Command::Agree(a) => Plan {
            name: "agree",
            inputs: vec![&a.a, &a.b],
            seed: None,
            flags: flags(serde_json::to_value(a))?,
            out: &a.out.out,
        },
    };
    Ok(p)
}

/// Runs one parsed command and writes its manifest.
pub fn execute(command: &Command) -> CliResult<RunReport> {
    let plan = plan(command)?;
    require(&plan.inputs)?;
    let inputs = plan
        .inputs
        .iter()
        .map(|p| digest(p, p.display().to_string()))
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Outputs::new(plan.out)?;
    let summary = match command {
        Command::Synth(a) => run_synth(a, &mut out)?,
        Command::LinkAuthority(a) => run_link_authority(a, &mut out)?,
        Command::LinkGrants(a) => run_link_grants(a, &mut out)?,
        Command::Pairs(a) => run_pairs(a, &mut out)?,
        Command::Baseline(a) => run_baseline(a, &mut out)?,
        Command::Evaluate(a) => run_evaluate(a, &mut out)?,
        Command::Profile(a) => run_profile(a, &mut out)?,
        Command::Perturb(a) => run_perturb(a, &mut out)?,
        Command::Agree(a) => run_agree(a, &mut out)?,
    };
    let mut files = out.files.clone();
    files.sort();
    let outputs = files
        .iter()
        .map(|f| digest(&out.dir.join(f), f.clone()))
        .collect::<CliResult<Vec<_>>>()?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand: plan.name,
        flags: plan.flags,
        seed: plan.seed,
        inputs,
        outputs,
    };
    out.json("run_manifest.json", &manifest)?;
    Ok(RunReport { summary, manifest })
}

fn thread_count() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

/// Parses arguments, runs the command inside a thread pool sized by
/// `LINKLAB_THREADS`, prints the summary or error, and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            return code;
        }
    };
    let result = thread_count().and_then(|threads| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
        pool.install(|| execute(&cli.command))
    });
    match result {
        Ok(report) => {
            println!("{}", report.summary);
            exit::OK
        }
        Err(e) => {
            eprintln!("linklab: error: {e}");
            e.exit_code()
        }
    }
}

fn run_synth(a: &SynthArgs, out: &mut Outputs) -> CliResult<String> {
    let mut config: SynthConfig = match &a.config {
        Some(p) => serde_json::from_reader(open_input(p)?).map_err(Error::from)?,
        None => SynthConfig::default(),
    };
    config.seed = a.seed;
    if let Some(n) = a.n_authors {
        config.n_authors = n;
    }
    for (slot, v) in [
        (&mut config.homonym_rate, a.homonym_rate),
        (&mut config.synonym_rate, a.synonym_rate),
        (&mut config.aini_variant_rate, a.aini_variant_rate),
        (&mut config.duplicate_title_rate, a.duplicate_title_rate),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    let bundle = generate(&config)?;
    write_bundle(&out.dir, &bundle)?;
    out.files.extend(BUNDLE_FILES.iter().map(|s| s.to_string()));
    let r = &bundle.manifest.realized;
    Ok(format!(
        "synth: seed={} authors={} papers={} instances={} profiles={} pis={} citations={}",
        a.seed,
        r.n_authors,
        r.n_papers,
        r.n_instances,
        r.authority_profiles,
        r.grant_pis,
        r.citation_edges
    ))
}

fn write_link_outputs(outcome: &LinkOutcome, out: &mut Outputs) -> CliResult<()> {
    let rows = outcome.rows();
    out.write("labels.tsv", |b| write_labels(b, &rows))?;
    out.write("conflicts.log", |b| write_conflicts(b, &outcome.conflicts))?;
    out.json("link_stats.json", &outcome.stats)
}

fn link_summary(name: &str, outcome: &LinkOutcome) -> String {
    let s = &outcome.stats;
    format!(
        "{name}: labels={} conflicts={} dropped_candidates={} record_matches={} duplicate_title_papers={}",
        s.labels,
        outcome.conflicts.len(),
        s.dropped_candidates,
        s.record_matches,
        s.duplicate_title_papers
    )
}

fn run_link_authority(a: &LinkAuthorityArgs, out: &mut Outputs) -> CliResult<String> {
    let corpus = load_corpus(&a.papers)?;
    let registry = load_authority(&a.authority)?;
    let opts = LinkOptions {
        dup_titles: match a.dup_title_policy {
            DupTitleArg::DropAll => DupTitlePolicy::DropAll,
            DupTitleArg::KeepFirst => DupTitlePolicy::KeepFirst,
        },
        hyphens: match a.hyphen_policy {
            HyphenArg::Delete => HyphenPolicy::Delete,
            HyphenArg::Space => HyphenPolicy::Space,
        },
    };
    let outcome = link_authority(&corpus, &registry, opts);
    write_link_outputs(&outcome, out)?;
    Ok(link_summary("link-authority", &outcome))
}

fn run_link_grants(a: &LinkGrantsArgs, out: &mut Outputs) -> CliResult<String> {
    let corpus = load_corpus(&a.papers)?;
    let grants = load_grants(&a.grants)?;
    let outcome = link_grants(&corpus, &grants);
    write_link_outputs(&outcome, out)?;
    Ok(link_summary("link-grants", &outcome))
}

fn run_pairs(a: &PairsArgs, out: &mut Outputs) -> CliResult<String> {
    let corpus = load_corpus(&a.papers)?;
    let citations = load_citations(&a.citations)?;
    let (pairs, stats) = extract_selfcitation_pairs(&corpus, &citations);
    out.write("pairs.tsv", |b| write_pairs(b, &pairs))?;
    out.json("pair_stats.json", &stats)?;
    Ok(format!(
        "pairs: pairs={} edges={} skipped_edges={}",
        stats.pairs, stats.edges, stats.skipped_edges
    ))
}

#[derive(Serialize)]
struct BaselineStats {
    method: Method,
    clusters: usize,
    instances: usize,
    unparseable: usize,
    max_block_size: usize,
}

fn run_baseline(a: &BaselineArgs, out: &mut Outputs) -> CliResult<String> {
    let corpus = load_corpus(&a.papers)?;
    let instances = corpus_instances(&corpus);
    let method = match a.method {
        MethodArg::Fini => Method::Fini,
        MethodArg::Aini => Method::Aini,
    };
    let outcome = cluster_by(&instances, method);
    out.write("clustering.tsv", |b| {
        write_clustering(b, &outcome.clustering)
    })?;
    let stats = BaselineStats {
        method,
        clusters: outcome.clustering.len(),
        instances: outcome.clustering.n_instances(),
        unparseable: outcome.unparseable,
        max_block_size: outcome.clustering.sizes().max().unwrap_or(0),
    };
    out.json("baseline.json", &stats)?;
    Ok(format!(
        "baseline: method={} clusters={} instances={} unparseable={}",
        match method {
            Method::Fini => "fini",
            Method::Aini => "aini",
        },
        stats.clusters,
        stats.instances,
        stats.unparseable
    ))
}

/// Loads labels.tsv, keeping one source. Several sources without a filter
/// is an error, since an instance may then carry two labels.
fn select_labels(path: &Path, source: Option<SourceArg>) -> CliResult<Vec<LabelRow>> {
    let mut labels = load_labels(path)?;
    match source {
        Some(s) => {
            let s = LabelSource::from(s);
            labels.retain(|l| l.source == s);
        }
        None => {
            let first = labels.first().map(|l| l.source);
            if labels.iter().any(|l| Some(l.source) != first) {
                return Err(CliError::Usage(format!(
                    "{} mixes label sources; pick one with --source",
                    path.display()
                )));
            }
        }
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TableKind {
    Clustering,
    Labels,
    Eval,
}

fn sniff(path: &Path) -> CliResult<TableKind> {
    let header = read_header(path)?;
    let is = |h: &[&str]| header.iter().map(String::as_str).eq(h.iter().copied());
    if is(&CLUSTERING_HEADER) {
        Ok(TableKind::Clustering)
    } else if is(&LABELS_HEADER) {
        Ok(TableKind::Labels)
    } else if is(&EVAL_HEADER) {
        Ok(TableKind::Eval)
    } else {
        Err(Error::ingest(
            &path.display().to_string(),
            1,
            format!("unrecognized header {header:?}"),
        )
        .into())
    }
}

fn load_truth(path: &Path, source: Option<SourceArg>) -> CliResult<Clustering> {
    match sniff(path)? {
        TableKind::Clustering => Ok(load_clustering(path)?),
        TableKind::Labels => Ok(labels_to_clustering(&select_labels(path, source)?)?),
        TableKind::Eval => Ok(load_eval_dataset(path)?.truth_clustering()),
    }
}

fn fmt_score(v: f64) -> String {
    format!("{v}")
}

fn run_evaluate(a: &EvaluateArgs, out: &mut Outputs) -> CliResult<String> {
    if a.truth.is_none() && a.pairs.is_none() {
        return Err(CliError::Usage(
            "evaluate needs --truth, --pairs or both".into(),
        ));
    }
    let predicted = load_clustering(&a.pred)?;
    let corpus = a.papers.as_deref().map(load_corpus).transpose()?;
    let annotations = a.annotations.as_deref().map(load_annotations).transpose()?;
    let opts = B3Options {
        strict: !a.lenient,
        scope: match a.scope {
            ScopeArg::Restricted => PredictedScope::Restricted,
            ScopeArg::Full => PredictedScope::Full,
        },
    };
    let mut report = MetricsReport::empty();
    let mut summary = vec!["evaluate:".to_string()];
    if let Some(truth_path) = &a.truth {
        let truth = load_truth(truth_path, a.source)?;
        let scores = b3_scores::<f64>(&truth, &predicted, opts)?;
        report = MetricsReport::from_scores(&scores);
        let (dataset, _) = join_truth(&truth, &predicted, corpus.as_ref(), annotations.as_ref());
        if let Some(s) = a.stratum {
            let attr = Attribute::from(s);
            report.strata = stratified_eval::<f64>(&dataset, attr)?.strata;
            report.stratum = Some(attr);
        }
        out.write("eval_dataset.tsv", |b| write_eval_dataset(b, &dataset))?;
        summary.push(format!(
            "n={} recall={} precision={} f1={} dropped={}",
            scores.n,
            fmt_score(scores.recall),
            fmt_score(scores.precision),
            fmt_score(scores.f1),
            scores.dropped
        ));
    }
    if let Some(pairs_path) = &a.pairs {
        let pairs = load_pairs(pairs_path)?;
        let acc = pair_accuracy::<f64>(&pairs, &predicted)?;
        if let Some(s) = a.stratum {
            let attr = Attribute::from(s);
            report.stratum = Some(attr);
            report.pair_strata = stratified_pair_accuracy(&pairs, &predicted, |id| {
                instance_value(id, corpus.as_ref(), annotations.as_ref(), attr)
            })?;
        }
        summary.push(format!(
            "pairs={} pair_accuracy={}",
            acc.evaluated,
            fmt_score(acc.accuracy)
        ));
        report.pair_accuracy = Some(acc);
    }
    out.json("metrics.json", &report)?;
    Ok(summary.join(" "))
}

#[derive(Serialize)]
struct ProfileSummary {
    labeled_instances: usize,
    population_instances: usize,
    sample_instances: Option<usize>,
    pairs: Option<usize>,
    /// Share of blocks with two or more instances, per dataset.
    multi_block_share: BTreeMap<String, f64>,
    /// Largest CCDF gap between each dataset and the population.
    ks_to_population: BTreeMap<String, f64>,
    typology: crate::profile::Typology,
}

fn ccdf_of(corpus: &Corpus, ids: &[InstanceId]) -> Vec<CcdfPoint<f64>> {
    let named: Vec<(InstanceId, &str)> = ids
        .iter()
        .filter_map(|id| corpus.author_name(id).map(|n| (*id, n)))
        .collect();
    block_size_ccdf(build_blocks(&named).sizes())
}

fn run_profile(a: &ProfileArgs, out: &mut Outputs) -> CliResult<String> {
    let dataset = load_eval_dataset(&a.eval)?;
    let corpus = load_corpus(&a.papers)?;
    let annotations = a.annotations.as_deref().map(load_annotations).transpose()?;
    let pairs = a.pairs.as_deref().map(load_pairs).transpose()?;
    let population: Vec<InstanceId> = corpus.instances().map(|(id, _)| id).collect();
    let sample = match a.sample {
        Some(n) => Some(reference_sample(
            &population,
            n,
            a.seed.expect("clap requires seed"),
        )?),
        None => None,
    };
    let labeled: Vec<InstanceId> = dataset.rows.iter().map(|r| r.instance).collect();

    for attr in Attribute::ALL {
        let mut columns = vec![("labeled".to_string(), distribution::<f64>(&dataset, attr)?)];
        if let Some(p) = &pairs {
            if !p.is_empty() {
                columns.push((
                    "pairs".into(),
                    pair_distribution(p, &corpus, annotations.as_ref(), attr)?,
                ));
            }
        }
        if let Some(s) = &sample {
            if !s.is_empty() {
                columns.push((
                    "sample".into(),
                    instance_distribution(s, &corpus, annotations.as_ref(), attr)?,
                ));
            }
        }
        if !population.is_empty() {
            columns.push((
                "population".into(),
                instance_distribution(&population, &corpus, annotations.as_ref(), attr)?,
            ));
        }
        out.write(&format!("dist_{}.tsv", attr.name()), |b| {
            write_distribution_table(b, &columns)
        })?;
    }

    let mut ccdfs = vec![("labeled".to_string(), ccdf_of(&corpus, &labeled))];
    if let Some(s) = &sample {
        ccdfs.push(("sample".into(), ccdf_of(&corpus, s)));
    }
    ccdfs.push(("population".into(), ccdf_of(&corpus, &population)));
    out.write("ccdf.tsv", |b| write_ccdf_table(b, &ccdfs))?;

    let typology = classify_synonym_types(&dataset.truth_clustering(), |id| {
        corpus.author_name(id).and_then(|n| parse_name(n).ok())
    });
    out.write("typology.tsv", |b| write_typology(b, &typology))?;

    let pop_ccdf = &ccdfs.last().expect("population column").1;
    let summary = ProfileSummary {
        labeled_instances: labeled.len(),
        population_instances: population.len(),
        sample_instances: sample.as_ref().map(Vec::len),
        pairs: pairs.as_ref().map(|p| p.len()),
        multi_block_share: ccdfs
            .iter()
            .map(|(n, c)| (n.clone(), ccdf_at(c, 2)))
            .collect(),
        ks_to_population: ccdfs[..ccdfs.len() - 1]
            .iter()
            .map(|(n, c)| (n.clone(), ks_distance(c, pop_ccdf)))
            .collect(),
        typology,
    };
    out.json("profile.json", &summary)?;
    let t = &summary.typology.counts;
    Ok(format!(
        "profile: labeled={} population={} multiform_authors={} surname_variant={} initial_variant={} flipped_order={}",
        summary.labeled_instances,
        summary.population_instances,
        t.total_multiform_authors,
        t.surname_variant,
        t.initial_variant,
        t.flipped_order
    ))
}

fn run_perturb(a: &PerturbArgs, out: &mut Outputs) -> CliResult<String> {
    let dataset = load_eval_dataset(&a.eval)?;
    let (perturbed, report) = perturb_tags(&dataset, a.fraction, a.seed)?;
    out.write("eval_dataset.tsv", |b| write_eval_dataset(b, &perturbed))?;
    out.json("perturb.json", &report)?;
    Ok(format!(
        "perturb: rows={} changed={} groups={}",
        perturbed.len(),
        report.changed.values().sum::<usize>(),
        report.changed.len()
    ))
}

fn load_labeled(path: &Path) -> CliResult<EvalDataset> {
    match sniff(path)? {
        TableKind::Eval => Ok(load_eval_dataset(path)?),
        TableKind::Labels => {
            let labels = select_labels(path, None)?;
            let rows = labels
                .into_iter()
                .map(|l| EvalRow {
                    instance: l.instance,
                    predicted_cluster_id: l.label_id.clone(),
                    truth_label: l.label_id,
                    year: None,
                    ethnicity: None,
                    gender: None,
                })
                .collect();
            Ok(EvalDataset::from_rows(rows)?)
        }
        TableKind::Clustering => {
            let c = load_clustering(path)?;
            let rows = c
                .iter()
                .flat_map(|(id, members)| {
                    members.iter().map(move |m| EvalRow {
                        instance: *m,
                        truth_label: id.to_string(),
                        predicted_cluster_id: id.to_string(),
                        year: None,
                        ethnicity: None,
                        gender: None,
                    })
                })
                .collect();
            Ok(EvalDataset::from_rows(rows)?)
        }
    }
}

fn run_agree(a: &AgreeArgs, out: &mut Outputs) -> CliResult<String> {
    let da = load_labeled(&a.a)?;
    let db = load_labeled(&a.b)?;
    let report = label_agreement(&da, &db);
    out.write("agreement.tsv", |b| write_agreement(b, &report))?;
    out.json("agreement.json", &report)?;
    Ok(format!(
        "agree: overlap={} agree={} disagree={}",
        report.overlap_count,
        report.agree_count,
        report.disagreements.len()
    ))
}
