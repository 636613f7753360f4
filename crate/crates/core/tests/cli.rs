mod common;

use std::fs;
use std::path::Path;

use common::*;
use wikisubgraph::postprocess::SplitManifest;

const FILES: [&str; 6] = [
    "attributes.txt",
    "edges.txt",
    "entities.txt",
    "nodes.txt",
    "readme.txt",
    "relations.txt",
];

fn extract(out: &Path, topic_args: &[&str], extra: &[&str]) -> std::process::Output {
    let dump = fixture("sample_dump.json");
    let mut args = vec!["extract", "--dump", dump.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(topic_args);
    args.extend_from_slice(extra);
    run_cli(args)
}

#[test]
fn extract_writes_six_files_and_a_run_log() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("countries");
    let o = extract(&out, &["--preset", "countries"], &["--workers", "2"]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    let names: Vec<String> = dir_contents(&out).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, FILES);

    let log = fs::read_to_string(tmp.path().join("countries.run.log")).unwrap();
    assert_eq!(report_value(&log, "nodes_found").as_deref(), Some("7"));
    assert_eq!(report_value(&log, "label_fallbacks").as_deref(), Some("1"));
    assert_eq!(report_value(&log, "scan.lines_read").as_deref(), Some("55"));
    assert_eq!(report_value(&log, "scan.skipped.redirect").as_deref(), Some("1"));
    assert!(report_value(&log, "peak_rss_kib").is_some());
    assert!(stderr_of(&o).contains("nodes_found: 7"));
}

#[test]
fn preset_matches_explicit_topic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(extract(&a, &["--preset", "countries"], &[]).status.success());
    assert!(extract(&b, &["--topic", "Q6256"], &[]).status.success());
    // only the readme topic name differs
    for name in FILES.iter().filter(|n| **n != "readme.txt") {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let readme = fs::read_to_string(b.join("readme.txt")).unwrap();
    assert_eq!(report_value(&readme, "topic").as_deref(), Some("Q6256"));
}

#[test]
fn non_empty_output_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    let o = extract(&out, &["--preset", "films"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.join("nodes.txt").exists());
    assert!(!tmp.path().join("ds.run.log").exists());

    let o = extract(&out, &["--preset", "films"], &["--force"]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    assert!(out.join("nodes.txt").exists());
}

#[test]
fn bad_arguments_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    assert_eq!(extract(&out, &["--preset", "planets"], &[]).status.code(), Some(1));
    assert_eq!(extract(&out, &["--topic", "P31"], &[]).status.code(), Some(1));
    assert_eq!(extract(&out, &[], &[]).status.code(), Some(1));
    assert_eq!(
        extract(&out, &["--topic", "Q5", "--preset", "humans"], &[]).status.code(),
        Some(1)
    );
    assert_eq!(extract(&out, &["--topic", "Q5"], &["--workers", "0"]).status.code(), Some(1));
}

#[test]
fn missing_dump_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_cli([
        "extract",
        "--dump",
        tmp.path().join("nope.json.bz2").to_str().unwrap(),
        "--topic",
        "Q5",
        "--out",
        tmp.path().join("ds").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_of(&o).contains("nope.json.bz2"));
}

#[test]
fn closure_cache_round_trip_and_topic_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("closure.tsv");
    let a = tmp.path().join("a");
    let o = extract(&a, &["--preset", "countries"], &["--hierarchy-cache", cache.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    let text = fs::read_to_string(&cache).unwrap();
    assert_eq!(text.lines().next(), Some("topic\tQ6256"));

    let b = tmp.path().join("b");
    let from_file = ["--hierarchy-source", "file", "--hierarchy-cache", cache.to_str().unwrap()];
    let o = extract(&b, &["--preset", "countries"], &from_file);
    assert!(o.status.success(), "{}", stderr_of(&o));
    assert_eq!(report_value(&stderr_of(&o), "hierarchy.skipped").as_deref(), Some("true"));
    assert_eq!(dir_difference(&a, &b), None);

    let c = tmp.path().join("c");
    let o = extract(&c, &["--preset", "films"], &from_file);
    assert_eq!(o.status.code(), Some(1), "{}", stderr_of(&o));
    assert!(!c.join("nodes.txt").exists());

    let o = extract(&c, &["--preset", "films"], &["--hierarchy-source", "file"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fallback_any_label_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    let o = extract(&out, &["--preset", "countries"], &["--labels", "en-fallback-any"]);
    assert!(o.status.success());
    assert_eq!(report_value(&stderr_of(&o), "label_fallbacks").as_deref(), Some("0"));
    let entities = fs::read_to_string(out.join("entities.txt")).unwrap();
    // Bern has only German and French labels; "de" sorts first.
    assert!(entities.lines().any(|l| l.ends_with("\tQ70\tBern")), "{entities}");
}

#[test]
fn stats_reports_and_warns_on_edited_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    assert!(extract(&out, &["--preset", "countries"], &[]).status.success());

    let o = run_cli(["stats", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stderr.is_empty(), "{}", stderr_of(&o));
    let text = stdout_of(&o);
    assert_eq!(report_value(&text, "edges").as_deref(), Some("10"));
    assert_eq!(report_value(&text, "isolated_nodes").as_deref(), Some("1"));
    assert!(text.contains("P47\tshares border with\t9\n"), "{text}");
    assert!(text.contains("P155\tfollows\t1\n"), "{text}");

    let o = run_cli(["stats", out.to_str().unwrap(), "--top-k", "1"]);
    assert!(!stdout_of(&o).contains("P155"));

    let edges_path = out.join("edges.txt");
    let edges = fs::read_to_string(&edges_path).unwrap();
    let trimmed: Vec<&str> = edges.lines().take(edges.lines().count() - 1).collect();
    fs::write(&edges_path, trimmed.join("\n") + "\n").unwrap();
    let o = run_cli(["stats", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report_value(&stdout_of(&o), "edges").as_deref(), Some("9"));
    let warn = stderr_of(&o);
    assert!(warn.contains("warning: edges is 9"), "{warn}");
}

#[test]
fn stats_rejects_malformed_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    assert!(extract(&out, &["--preset", "countries"], &[]).status.success());
    let mut edges = fs::read_to_string(out.join("edges.txt")).unwrap();
    edges.push_str("0\t999\t0\n");
    fs::write(out.join("edges.txt"), edges).unwrap();
    let o = run_cli(["stats", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_of(&o).contains("edges.txt"), "{}", stderr_of(&o));

    fs::remove_file(out.join("nodes.txt")).unwrap();
    assert_eq!(run_cli(["stats", out.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn filter_split_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    assert!(extract(&out, &["--preset", "countries"], &[]).status.success());
    let split = tmp.path().join("split");
    let args = |seed: &str| {
        vec![
            "filter-split".to_string(),
            out.to_str().unwrap().into(),
            "--min-degree".into(),
            "2".into(),
            "--train-fraction".into(),
            "0.7".into(),
            "--seed".into(),
            seed.into(),
            "--out".into(),
            split.to_str().unwrap().into(),
        ]
    };
    let o = run_cli(args("11"));
    assert!(o.status.success(), "{}", stderr_of(&o));
    let manifest: SplitManifest =
        serde_json::from_str(&fs::read_to_string(split.join("split.json")).unwrap()).unwrap();
    assert_eq!(manifest.algorithm, "splitmix64-fisher-yates-v1");
    assert_eq!(manifest.seed, 11);
    assert_eq!(manifest.degree_mode, "incidences");
    assert_eq!(manifest.input_edges, 10);
    // USSR keeps two incidences (follows in, borders out), so nothing is dropped at 2
    assert_eq!(manifest.filtered_edges, 10);
    assert_eq!((manifest.train_edges, manifest.test_edges), (7, 3));
    let lines = |f: &str| fs::read_to_string(split.join(f)).unwrap().lines().count() - 1;
    assert_eq!((lines("train.txt"), lines("test.txt")), (7, 3));

    let first = (fs::read(split.join("train.txt")).unwrap(), fs::read(split.join("test.txt")).unwrap());
    assert!(run_cli(args("11")).status.success());
    let again = (fs::read(split.join("train.txt")).unwrap(), fs::read(split.join("test.txt")).unwrap());
    assert_eq!(first, again);

    let o = run_cli(["filter-split", out.to_str().unwrap(), "--train-fraction", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run_cli(["filter-split", out.to_str().unwrap(), "--min-degree", "100"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr_of(&o));
}

#[test]
fn synth_then_extract_matches_ground_truth_and_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let dump = tmp.path().join("synth.json.gz");
    let o = run_cli([
        "synth",
        "--out",
        dump.to_str().unwrap(),
        "--codec",
        "gz",
        "--seed",
        "9",
        "--instances",
        "300",
        "--offtopic",
        "300",
        "--shape",
        "dag-with-cycles",
    ]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    let truth: wikisubgraph::synth::GroundTruth =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("ground_truth.json")).unwrap()).unwrap();

    let oracle_path = tmp.path().join("oracle.json");
    let o = run_cli([
        "oracle",
        "--dump",
        dump.to_str().unwrap(),
        "--topic",
        "Q1",
        "--out",
        oracle_path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    let mut oracle: wikisubgraph::synth::GroundTruth =
        serde_json::from_str(&fs::read_to_string(&oracle_path).unwrap()).unwrap();
    oracle.spec = truth.spec.clone();
    assert_eq!(oracle, truth);

    let out = tmp.path().join("ds");
    let o = run_cli([
        "extract",
        "--dump",
        dump.to_str().unwrap(),
        "--topic",
        "Q1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr_of(&o));
    let loaded = wikisubgraph::dataset::read_dataset(&out).unwrap();
    assert_eq!(view_diff(&view_of_dataset(&loaded.dataset), &view_of_truth(&truth)), None);
}
