//! End-to-end extraction: hierarchy, scan, labels, indexing.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::dataset::{build_dataset, compute_stats, BuildError, DatasetMeta, IndexedDataset};
use crate::dump::{open_dump, DumpError, DumpSource};
use crate::entity::{EntityId, SkipReason};
use crate::extract::{resolve_labels, scan_dump, LabelMode, NeededIds};
use crate::hierarchy::{
    collect_subclass_edges, compute_closure, load_closure_file, save_closure_file,
    ClosureFileError,
};
use crate::PassCounters;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HierarchySource {
    /// Derive the closure from a pass over the dump, optionally caching it.
    Dump { cache: Option<PathBuf> },
    /// Load a closure written earlier.
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub source: DumpSource,
    pub topic: EntityId,
    pub topic_name: String,
    pub hierarchy: HierarchySource,
    pub labels: LabelMode,
    pub workers: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dump(#[from] DumpError),
    #[error(transparent)]
    Closure(#[from] ClosureFileError),
    #[error("writing closure cache: {0}")]
    CacheWrite(std::io::Error),
    #[error("internal invariant violated: {0}")]
    Build(#[from] BuildError),
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub topic: Option<EntityId>,
    pub workers: usize,
    pub hierarchy_pass: Option<PassCounters>,
    pub scan_pass: PassCounters,
    pub label_pass: Option<PassCounters>,
    pub subclass_edges: Option<usize>,
    pub closure_size: usize,
    pub nodes: usize,
    pub facts: usize,
    pub edges: usize,
    pub attributes: usize,
    pub label_fallbacks: u64,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k}: {v}");
        };
        if let Some(t) = self.topic {
            line("topic", &t);
        }
        line("workers", &self.workers);
        let passes = [
            ("hierarchy", self.hierarchy_pass.as_ref()),
            ("scan", Some(&self.scan_pass)),
            ("labels", self.label_pass.as_ref()),
        ];
        for (name, pass) in passes {
            let Some(c) = pass else {
                line(&format!("{name}.skipped"), &true);
                continue;
            };
            line(&format!("{name}.lines_read"), &c.lines);
            line(&format!("{name}.entities_parsed"), &c.records);
            for reason in SkipReason::ALL {
                line(&format!("{name}.skipped.{}", reason.code()), &c.skips.get(reason));
            }
        }
        if let Some(n) = self.subclass_edges {
            line("subclass_edges", &n);
        }
        line("closure_classes", &self.closure_size);
        line("nodes_found", &self.nodes);
        line("facts_found", &self.facts);
        line("edges", &self.edges);
        line("attributes", &self.attributes);
        line("label_fallbacks", &self.label_fallbacks);
        line("elapsed_secs", &format!("{:.3}", self.elapsed.as_secs_f64()));
        out
    }
}

pub struct ExtractOutcome {
    pub dataset: IndexedDataset,
    pub report: RunReport,
}

pub fn run_extraction(config: &ExtractConfig) -> Result<ExtractOutcome, PipelineError> {
    let start = Instant::now();
    let workers = config.workers.max(1);
    let mut report = RunReport {
        topic: Some(config.topic),
        workers,
        ..RunReport::default()
    };

    let closure = match &config.hierarchy {
        HierarchySource::File(path) => load_closure_file(path, Some(config.topic))?,
        HierarchySource::Dump { cache } => {
            let (edges, counters) = collect_subclass_edges(open_dump(&config.source)?, workers)?;
            report.hierarchy_pass = Some(counters);
            report.subclass_edges = Some(edges.len());
            let closure = compute_closure(config.topic, &edges);
            if let Some(path) = cache {
                save_closure_file(&closure, path).map_err(PipelineError::CacheWrite)?;
            }
            closure
        }
    };
    report.closure_size = closure.len();

    let scan = scan_dump(open_dump(&config.source)?, &closure, workers, config.labels)?;
    report.scan_pass = scan.counters;
    report.nodes = scan.nodes.len();
    report.facts = scan.facts.len();

    let needed = NeededIds::of(&scan.nodes, &scan.facts);
    let resolution = resolve_labels(
        || open_dump(&config.source),
        &needed,
        scan.partial_labels,
        workers,
        config.labels,
    )?;
    report.label_pass = resolution.pass_ran.then_some(resolution.counters);
    report.label_fallbacks = resolution.labels.fallbacks;

    let meta = DatasetMeta {
        topic: config.topic_name.clone(),
        topic_qid: config.topic,
    };
    let dataset = build_dataset(meta, &scan.nodes, &scan.facts, &resolution.labels)?;
    let stats = compute_stats(&dataset);
    report.edges = stats.edges as usize;
    report.attributes = stats.attribute_facts as usize;
    report.elapsed = start.elapsed();
    Ok(ExtractOutcome { dataset, report })
}
