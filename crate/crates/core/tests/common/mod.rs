#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wikisubgraph::dataset::{read_dataset, sanitize_label, write_dataset, IndexedDataset, StatsReport};
use wikisubgraph::dump::{Codec, DumpSource};
use wikisubgraph::extract::LabelMode;
use wikisubgraph::pipeline::{run_extraction, ExtractConfig, ExtractOutcome, HierarchySource};
use wikisubgraph::synth::{write_dump, GroundTruth, SynthSpec};
use wikisubgraph::{EntityId, PropertyId};

pub type Triple = (EntityId, PropertyId, EntityId);

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_wikisubgraph")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn q(s: &str) -> EntityId {
    s.parse().unwrap()
}

pub fn p(s: &str) -> PropertyId {
    s.parse().unwrap()
}

/// Runs the CLI binary and captures its output.
pub fn run_cli<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(bin())
        .args(args)
        .env_remove("WIKISUBGRAPH_WORKERS")
        .env_remove("WIKISUBGRAPH_READ_WINDOW")
        .output()
        .expect("spawning the CLI")
}

pub fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// `key: value` lines of a run report or stats output.
pub fn report_value(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(": ").map(str::to_owned))
}

/// Writes a synthetic dump to `path` with the given codec.
pub fn write_synth(spec: &SynthSpec, path: &Path, codec: Codec) -> GroundTruth {
    let file = BufWriter::with_capacity(1 << 20, fs::File::create(path).unwrap());
    match codec {
        Codec::None => {
            let mut w = file;
            let gt = write_dump(spec, &mut w).unwrap();
            w.flush().unwrap();
            gt
        }
        Codec::Bzip2 => {
            let mut w = bzip2::write::BzEncoder::new(file, bzip2::Compression::fast());
            let gt = write_dump(spec, &mut w).unwrap();
            w.finish().unwrap().flush().unwrap();
            gt
        }
        Codec::Gzip => {
            let mut w = flate2::write::GzEncoder::new(file, flate2::Compression::fast());
            let gt = write_dump(spec, &mut w).unwrap();
            w.finish().unwrap().flush().unwrap();
            gt
        }
    }
}

pub fn extract_lib(path: &Path, topic: EntityId, workers: usize, labels: LabelMode) -> ExtractOutcome {
    let config = ExtractConfig {
        source: DumpSource::new(path),
        topic,
        topic_name: topic.to_string(),
        hierarchy: HierarchySource::Dump { cache: None },
        labels,
        workers,
    };
    run_extraction(&config).expect("extraction")
}

/// Dataset contents in id space, the shape ground truth is expressed in.
#[derive(Debug, Clone, PartialEq)]
pub struct IdView {
    pub nodes: Vec<EntityId>,
    pub edges: Vec<Triple>,
    pub attributes: Vec<Triple>,
    pub entity_labels: BTreeMap<EntityId, String>,
    pub relation_labels: BTreeMap<PropertyId, String>,
    pub stats: StatsReport,
}

fn triples(facts: Vec<wikisubgraph::Fact>) -> Vec<Triple> {
    let mut v: Vec<Triple> = facts.into_iter().map(|f| (f.head, f.relation, f.tail)).collect();
    v.sort();
    v
}

pub fn view_of_dataset(ds: &IndexedDataset) -> IdView {
    IdView {
        nodes: ds.nodes().to_vec(),
        edges: triples(ds.edge_facts()),
        attributes: triples(ds.attribute_facts()),
        entity_labels: ds.entities().iter().copied().zip(ds.entity_labels().iter().cloned()).collect(),
        relation_labels: ds.relations().iter().copied().zip(ds.relation_labels().iter().cloned()).collect(),
        stats: wikisubgraph::dataset::compute_stats(ds),
    }
}

/// Ground truth as it should look once written to disk.
pub fn view_of_truth(gt: &GroundTruth) -> IdView {
    let mut nodes = gt.nodes.clone();
    nodes.sort();
    let mut edges = gt.edges.clone();
    edges.sort();
    let mut attributes = gt.attributes.clone();
    attributes.sort();
    IdView {
        nodes,
        edges,
        attributes,
        entity_labels: gt.entity_labels.iter().map(|(k, v)| (*k, sanitize_label(v))).collect(),
        relation_labels: gt.relation_labels.iter().map(|(k, v)| (*k, sanitize_label(v))).collect(),
        stats: gt.stats,
    }
}

/// Writes the dataset, reads it back, and re-expands it to id space.
pub fn round_trip(ds: &IndexedDataset) -> IdView {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    write_dataset(ds, &out, false).unwrap();
    let loaded = read_dataset(&out).unwrap();
    view_of_dataset(&loaded.dataset)
}

/// First difference between two views, for failure messages.
pub fn view_diff(got: &IdView, want: &IdView) -> Option<String> {
    if got.nodes != want.nodes {
        return Some(format!("nodes: got {} want {}", got.nodes.len(), want.nodes.len()));
    }
    if got.edges != want.edges {
        return Some(format!("edges: got {} want {}", got.edges.len(), want.edges.len()));
    }
    if got.attributes != want.attributes {
        return Some(format!("attributes: got {} want {}", got.attributes.len(), want.attributes.len()));
    }
    if got.entity_labels != want.entity_labels {
        let first = want
            .entity_labels
            .iter()
            .find(|(k, v)| got.entity_labels.get(k) != Some(v))
            .map(|(k, v)| format!("{k} want {v:?} got {:?}", got.entity_labels.get(k)));
        return Some(format!("entity labels differ: {}", first.unwrap_or_else(|| "extra entities".into())));
    }
    if got.relation_labels != want.relation_labels {
        return Some("relation labels differ".into());
    }
    if got.stats != want.stats {
        return Some(format!("stats: got {:?} want {:?}", got.stats, want.stats));
    }
    None
}

/// Names and bytes of every file in `dir`, sorted by name.
pub fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// `None` when both directories hold the same files with the same bytes.
pub fn dir_difference(a: &Path, b: &Path) -> Option<String> {
    let (x, y) = (dir_contents(a), dir_contents(b));
    let names = |v: &[(String, Vec<u8>)]| v.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    if names(&x) != names(&y) {
        return Some(format!("file sets differ: {:?} vs {:?}", names(&x), names(&y)));
    }
    x.iter()
        .zip(&y)
        .find(|(l, r)| l.1 != r.1)
        .map(|(l, _)| format!("{} differs", l.0))
}
