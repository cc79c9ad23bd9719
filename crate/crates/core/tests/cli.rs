//! Drives the `linklab` binary end to end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use linklab::corpus::{load_clustering, load_corpus};
use linklab::linkage::load_eval_dataset;
use linklab::metrics::{b3_scores, B3Options};
use linklab::profile::{distribution, write_distribution_table};
use linklab::B3Scores;

fn linklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linklab"))
        .args(args)
        .env_remove("LINKLAB_THREADS")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Every file under `dir`, keyed by relative path.
fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_file() {
            out.insert(
                path.strip_prefix(dir).unwrap().to_path_buf(),
                fs::read(&path).unwrap(),
            );
        }
    }
    out
}

fn synth(dir: &Path, seed: &str) {
    let out = linklab(&[
        "synth",
        "--seed",
        seed,
        "--n-authors",
        "400",
        "--out",
        p(dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_is_reproducible_from_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, "7");
    synth(&b, "7");
    let (ta, tb) = (tree(&a), tree(&b));
    assert!(ta.contains_key(Path::new("run_manifest.json")));
    let strip = |mut t: BTreeMap<PathBuf, Vec<u8>>| {
        t.remove(Path::new("run_manifest.json"));
        t
    };
    assert_eq!(strip(ta), strip(tb));
}

#[test]
fn identical_partitions_score_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("bundle");
    synth(&bundle, "3");
    let truth = bundle.join("truth_clustering.tsv");
    let out = linklab(&[
        "evaluate",
        "--truth",
        p(&truth),
        "--pred",
        p(&truth),
        "--out",
        p(&tmp.path().join("ev")),
    ]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("recall=1 precision=1 f1=1"), "{stdout}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("bundle");
    synth(&bundle, "4");
    let out_dir = tmp.path().join("o");
    let o = p(&out_dir);

    assert_eq!(code(&linklab(&["no-such-command"])), 2);
    assert_eq!(code(&linklab(&["synth", "--out", o])), 2);
    assert_eq!(
        code(&linklab(&[
            "perturb",
            "--eval",
            "x",
            "--fraction",
            "0.1",
            "--out",
            o
        ])),
        2
    );
    let missing = tmp.path().join("missing.tsv");
    assert_eq!(
        code(&linklab(&[
            "baseline",
            "--papers",
            p(&missing),
            "--method",
            "fini",
            "--out",
            o
        ])),
        3
    );

    let bad = tmp.path().join("bad.tsv");
    fs::write(&bad, "not\ta\theader\n").unwrap();
    assert_eq!(
        code(&linklab(&[
            "baseline",
            "--papers",
            p(&bad),
            "--method",
            "fini",
            "--out",
            o
        ])),
        4
    );

    // Strict evaluation fails when the prediction omits a truth instance.
    let truth = fs::read_to_string(bundle.join("truth_clustering.tsv")).unwrap();
    let mut lines: Vec<&str> = truth.lines().collect();
    lines.pop();
    let partial = tmp.path().join("partial.tsv");
    fs::write(&partial, lines.join("\n") + "\n").unwrap();
    let truth_path = bundle.join("truth_clustering.tsv");
    let strict = linklab(&[
        "evaluate",
        "--truth",
        p(&truth_path),
        "--pred",
        p(&partial),
        "--out",
        o,
    ]);
    assert_eq!(code(&strict), 5);
    let lenient = linklab(&[
        "evaluate",
        "--truth",
        p(&truth_path),
        "--pred",
        p(&partial),
        "--lenient",
        "--out",
        o,
    ]);
    assert_eq!(code(&lenient), 0);
    assert!(String::from_utf8_lossy(&lenient.stdout).contains("dropped=1"));

    let threads = Command::new(env!("CARGO_BIN_EXE_linklab"))
        .args([
            "baseline",
            "--papers",
            p(&bundle.join("papers.tsv")),
            "--method",
            "fini",
            "--out",
            o,
        ])
        .env("LINKLAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&threads), 2);
}

#[test]
fn pipeline_matches_library_and_leaves_inputs_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("bundle");
    synth(&bundle, "5");
    let before = tree(&bundle);
    let [la, fini, ev, pf] = ["la", "fini", "ev", "pf"].map(|d| tmp.path().join(d));
    let papers = bundle.join("papers.tsv");
    let ann = bundle.join("annotations.tsv");

    let run = |args: &[&str]| {
        let out = linklab(args);
        assert_eq!(
            code(&out),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(&[
        "link-authority",
        "--papers",
        p(&papers),
        "--authority",
        p(&bundle.join("authority.tsv")),
        "--out",
        p(&la),
    ]);
    run(&[
        "baseline",
        "--papers",
        p(&papers),
        "--method",
        "fini",
        "--out",
        p(&fini),
    ]);
    run(&[
        "evaluate",
        "--truth",
        p(&la.join("labels.tsv")),
        "--pred",
        p(&fini.join("clustering.tsv")),
        "--papers",
        p(&papers),
        "--annotations",
        p(&ann),
        "--out",
        p(&ev),
    ]);
    run(&[
        "profile",
        "--eval",
        p(&ev.join("eval_dataset.tsv")),
        "--papers",
        p(&papers),
        "--annotations",
        p(&ann),
        "--out",
        p(&pf),
    ]);
    assert_eq!(before, tree(&bundle));

    // Library path over the same files.
    let corpus = load_corpus(&papers).unwrap();
    let registry = linklab::corpus::load_authority(&bundle.join("authority.tsv")).unwrap();
    let annotations = linklab::corpus::load_annotations(&ann).unwrap();
    let labels = linklab::linkage::link_authority(&corpus, &registry, Default::default()).rows();
    let clustering =
        linklab::baseline::cluster_fini(&linklab::baseline::corpus_instances(&corpus)).clustering;
    assert_eq!(
        load_clustering(&fini.join("clustering.tsv")).unwrap(),
        clustering
    );
    let (dataset, _) =
        linklab::linkage::join_labels(&labels, &clustering, Some(&corpus), Some(&annotations))
            .unwrap();
    assert_eq!(
        load_eval_dataset(&ev.join("eval_dataset.tsv")).unwrap(),
        dataset
    );

    let scores: B3Scores = b3_scores(
        &dataset.truth_clustering(),
        &dataset.predicted_clustering(),
        B3Options::default(),
    )
    .unwrap();
    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(ev.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["f1"].as_f64().unwrap(), scores.f1);
    assert_eq!(metrics["recall"].as_f64().unwrap(), scores.recall);

    let gender: linklab::Distribution =
        distribution(&dataset, linklab::metrics::Attribute::Gender).unwrap();
    let table = fs::read_to_string(pf.join("dist_gender.tsv")).unwrap();
    let mut expected = Vec::new();
    write_distribution_table(&mut expected, &[("labeled".to_string(), gender)]).unwrap();
    let expected = String::from_utf8(expected).unwrap();
    // The written table has a population column too; the labeled column must agree.
    let col = |text: &str, name: &str| -> Vec<(String, String)> {
        let mut rows = text
            .lines()
            .map(|l| l.split('\t').map(str::to_string).collect::<Vec<_>>());
        let header = rows.next().unwrap();
        let j = header.iter().position(|h| h == name).unwrap();
        rows.filter(|r| r[j] != "0")
            .map(|r| (r[0].clone(), r[j].clone()))
            .collect()
    };
    assert_eq!(col(&table, "labeled"), col(&expected, "labeled"));
}
