use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wikisubgraph::dataset::{
    compute_stats, dir_has_entries, edge_type_distribution, read_dataset, readme_mismatches,
    write_dataset, WriteError,
};
use wikisubgraph::dump::{open_dump, Codec, DumpSource, DEFAULT_MAX_LINE, DEFAULT_READ_WINDOW};
use wikisubgraph::extract::LabelMode;
use wikisubgraph::pipeline::{run_extraction, ExtractConfig, HierarchySource, PipelineError};
use wikisubgraph::postprocess::{
    filter_min_degree, split_edges, triples_digest, write_split, DegreeMode, SplitManifest,
    SplitSpec, SPLIT_ALGORITHM,
};
use wikisubgraph::presets::{preset_names, preset_topic};
use wikisubgraph::synth::{oracle_extract, write_dump, HierarchyShape, SynthSpec};
use wikisubgraph::EntityId;

#[derive(Parser)]
#[command(name = "wikisubgraph", version, about = "Topic subgraphs from the Wikidata entity dump")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract a topic dataset from a dump.
    Extract(ExtractArgs),
    /// Recompute statistics from a dataset directory.
    Stats(StatsArgs),
    /// Drop low-degree nodes and split the edges into train and test sets.
    FilterSplit(FilterSplitArgs),
    /// Generate a synthetic dump and its ground truth.
    Synth(SynthArgs),
    /// Run the in-memory reference extractor on a small dump.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CodecArg {
    Auto,
    None,
    Bz2,
    Gz,
}

impl CodecArg {
    fn codec(self) -> Option<Codec> {
        match self {
            CodecArg::Auto => None,
            CodecArg::None => Some(Codec::None),
            CodecArg::Bz2 => Some(Codec::Bzip2),
            CodecArg::Gz => Some(Codec::Gzip),
        }
    }
}

#[derive(Args)]
struct DumpArgs {
    /// Dump file, plain or compressed.
    #[arg(long)]
    dump: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    codec: CodecArg,
    /// Read buffer size in bytes.
    #[arg(long, env = "WIKISUBGRAPH_READ_WINDOW", default_value_t = DEFAULT_READ_WINDOW)]
    read_window: usize,
    /// Longest accepted dump line in bytes.
    #[arg(long, default_value_t = DEFAULT_MAX_LINE)]
    max_line_bytes: usize,
}

impl DumpArgs {
    fn source(&self) -> DumpSource {
        DumpSource::new(&self.dump)
            .with_codec(self.codec.codec())
            .with_read_window(self.read_window)
            .with_max_line(self.max_line_bytes)
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TopicArgs {
    /// Topic class id, e.g. Q5.
    #[arg(long)]
    topic: Option<String>,
    /// One of: animals, companies, countries, films, humans.
    #[arg(long)]
    preset: Option<String>,
}

impl TopicArgs {
    fn resolve(&self) -> Result<(EntityId, String), CliError> {
        if let Some(name) = &self.preset {
            let topic = preset_topic(name).ok_or_else(|| {
                let known: Vec<_> = preset_names().collect();
                CliError::Config(format!("unknown preset {name:?} (known: {})", known.join(", ")))
            })?;
            return Ok((topic, name.clone()));
        }
        let text = self.topic.as_deref().unwrap_or_default();
        let topic: EntityId = text.parse().map_err(|e| CliError::Config(format!("--topic: {e}")))?;
        Ok((topic, topic.to_string()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum HierarchySourceArg {
    Dump,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelsArg {
    En,
    EnFallbackAny,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    dump: DumpArgs,
    #[command(flatten)]
    topic: TopicArgs,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Write into a non-empty output directory.
    #[arg(long)]
    force: bool,
    #[arg(long, value_enum, default_value = "dump")]
    hierarchy_source: HierarchySourceArg,
    /// Closure cache: read with `--hierarchy-source file`, written otherwise.
    #[arg(long)]
    hierarchy_cache: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "en")]
    labels: LabelsArg,
    #[arg(long, env = "WIKISUBGRAPH_WORKERS", value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    /// Run report destination [default: <out>.run.log next to the output directory].
    #[arg(long)]
    run_log: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    dir: PathBuf,
    /// Number of edge types to list.
    #[arg(long, default_value_t = 20)]
    top_k: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum DegreeModeArg {
    Incidences,
    DistinctNeighbors,
}

#[derive(Args)]
struct FilterSplitArgs {
    dir: PathBuf,
    #[arg(long, default_value_t = 5)]
    min_degree: u64,
    #[arg(long, value_enum, default_value = "incidences")]
    degree_mode: DegreeModeArg,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for train.txt, test.txt and split.json [default: the dataset directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Chain,
    Tree,
    DagWithCycles,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutCodecArg {
    None,
    Bz2,
    Gz,
}

#[derive(Args)]
struct SynthArgs {
    /// Dump file to write.
    #[arg(long)]
    out: PathBuf,
    /// Ground truth file [default: ground_truth.json next to the dump].
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    codec: OutCodecArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    classes: usize,
    #[arg(long, value_enum, default_value = "tree")]
    shape: ShapeArg,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 100)]
    offtopic: usize,
    #[arg(long, default_value_t = 0)]
    facts_min: usize,
    #[arg(long, default_value_t = 6)]
    facts_max: usize,
    #[arg(long, default_value_t = 0.7)]
    english_rate: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    dump: DumpArgs,
    #[command(flatten)]
    topic: TopicArgs,
    /// JSON output file [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Input(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Input(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Build(_) => CliError::Internal(e.to_string()),
            PipelineError::Closure(wikisubgraph::hierarchy::ClosureFileError::TopicMismatch { .. }) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn io_err(context: &str) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{context}: {e}"))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Peak resident set size of this process, where the platform reports it.
fn peak_rss_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn default_run_log(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    out.with_file_name(format!("{name}.run.log"))
}

fn cmd_extract(args: ExtractArgs) -> Result<(), CliError> {
    let (topic, topic_name) = args.topic.resolve()?;
    if dir_has_entries(&args.out).map_err(io_err("output directory"))? && !args.force {
        return Err(CliError::Config(format!(
            "output directory {} is not empty (use --force to overwrite)",
            args.out.display()
        )));
    }
    let hierarchy = match (args.hierarchy_source, args.hierarchy_cache) {
        (HierarchySourceArg::File, Some(path)) => HierarchySource::File(path),
        (HierarchySourceArg::File, None) => {
            return Err(CliError::Config("--hierarchy-source file needs --hierarchy-cache".into()))
        }
        (HierarchySourceArg::Dump, cache) => HierarchySource::Dump { cache },
    };
    let config = ExtractConfig {
        source: args.dump.source(),
        topic,
        topic_name,
        hierarchy,
        labels: match args.labels {
            LabelsArg::En => LabelMode::English,
            LabelsArg::EnFallbackAny => LabelMode::EnglishFallbackAny,
        },
        workers: args.workers.map_or_else(default_workers, |w| w as usize),
    };

    let outcome = run_extraction(&config)?;
    write_dataset(&outcome.dataset, &args.out, args.force).map_err(|e| match e {
        WriteError::NotEmpty(_) => CliError::Config(e.to_string()),
        WriteError::Io(_) => CliError::Input(e.to_string()),
    })?;

    let mut report = outcome.report.render();
    report.push_str(&format!("output: {}\n", args.out.display()));
    if let Some(kib) = peak_rss_kib() {
        report.push_str(&format!("peak_rss_kib: {kib}\n"));
    }
    eprint!("{report}");
    let log = args.run_log.unwrap_or_else(|| default_run_log(&args.out));
    fs::write(&log, &report).map_err(io_err("run log"))?;
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let loaded = read_dataset(&args.dir).map_err(|e| CliError::Input(e.to_string()))?;
    let stats = compute_stats(&loaded.dataset);
    let dist = edge_type_distribution(&loaded.dataset, usize::MAX);

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut emit = || -> io::Result<()> {
        for (k, v) in stats.entries() {
            writeln!(out, "{k}: {v}")?;
        }
        writeln!(out, "edge_types:")?;
        for row in dist.iter().take(args.top_k) {
            writeln!(out, "{}\t{}\t{}", row.relation, row.label, row.count)?;
        }
        Ok(())
    };
    emit().map_err(io_err("stdout"))?;

    for (key, readme, actual) in readme_mismatches(&loaded.readme, &stats) {
        eprintln!(
            "warning: {key} is {actual} in the data files but {} in readme.txt",
            readme.as_deref().unwrap_or("missing")
        );
    }
    let total: u64 = dist.iter().map(|d| d.count).sum();
    if total != stats.edges {
        return Err(CliError::Internal(format!(
            "edge type counts sum to {total}, expected {}",
            stats.edges
        )));
    }
    Ok(())
}

fn cmd_filter_split(args: FilterSplitArgs) -> Result<(), CliError> {
    let spec = SplitSpec::new(args.train_fraction, args.seed).map_err(|e| CliError::Config(e.to_string()))?;
    let loaded = read_dataset(&args.dir).map_err(|e| CliError::Input(e.to_string()))?;
    let edges = loaded.dataset.edges();
    let mode = match args.degree_mode {
        DegreeModeArg::Incidences => DegreeMode::Incidences,
        DegreeModeArg::DistinctNeighbors => DegreeMode::DistinctNeighbors,
    };
    let filtered = filter_min_degree(edges, args.min_degree, mode);
    let (train, test) = split_edges(&filtered, &spec).map_err(|e| CliError::Input(e.to_string()))?;
    let manifest = SplitManifest {
        algorithm: SPLIT_ALGORITHM.to_string(),
        seed: args.seed,
        train_fraction: args.train_fraction,
        min_degree: args.min_degree,
        degree_mode: mode.as_str().to_string(),
        input_sha256: triples_digest(edges),
        input_edges: edges.len(),
        filtered_edges: filtered.len(),
        train_edges: train.len(),
        test_edges: test.len(),
    };
    let out = args.out.unwrap_or(args.dir);
    write_split(&out, &train, &test, &manifest).map_err(io_err("writing split"))?;
    println!(
        "edges: {} filtered: {} train: {} test: {}",
        edges.len(),
        filtered.len(),
        train.len(),
        test.len()
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.english_rate) {
        return Err(CliError::Config("--english-rate must lie in [0, 1]".into()));
    }
    if args.facts_min > args.facts_max {
        return Err(CliError::Config("--facts-min exceeds --facts-max".into()));
    }
    let spec = SynthSpec {
        seed: args.seed,
        n_classes: args.classes,
        hierarchy_shape: match args.shape {
            ShapeArg::Chain => HierarchyShape::Chain,
            ShapeArg::Tree => HierarchyShape::Tree,
            ShapeArg::DagWithCycles => HierarchyShape::DagWithCycles,
        },
        n_instances: args.instances,
        n_offtopic: args.offtopic,
        facts_per_entity: (args.facts_min, args.facts_max),
        english_label_rate: args.english_rate,
    };
    let file = fs::File::create(&args.out).map_err(io_err("dump"))?;
    let file = io::BufWriter::with_capacity(1 << 20, file);
    let truth = match args.codec {
        OutCodecArg::None => {
            let mut w = file;
            let t = write_dump(&spec, &mut w);
            w.flush().and(t)
        }
        OutCodecArg::Bz2 => {
            let mut w = bzip2::write::BzEncoder::new(file, bzip2::Compression::default());
            write_dump(&spec, &mut w).and_then(|t| w.finish().and_then(|mut f| f.flush()).map(|_| t))
        }
        OutCodecArg::Gz => {
            let mut w = flate2::write::GzEncoder::new(file, flate2::Compression::default());
            write_dump(&spec, &mut w).and_then(|t| w.finish().and_then(|mut f| f.flush()).map(|_| t))
        }
    }
    .map_err(io_err("dump"))?;

    let gt_path = args
        .ground_truth
        .unwrap_or_else(|| args.out.with_file_name("ground_truth.json"));
    let json = serde_json::to_string_pretty(&truth).map_err(|e| CliError::Internal(e.to_string()))?;
    fs::write(&gt_path, json + "\n").map_err(io_err("ground truth"))?;
    println!(
        "entity_lines: {} nodes: {} edges: {} attributes: {}",
        truth.entity_lines,
        truth.nodes.len(),
        truth.edges.len(),
        truth.attributes.len()
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let (topic, _) = args.topic.resolve()?;
    let mut bytes = Vec::new();
    for line in open_dump(&args.dump.source()).map_err(|e| CliError::Input(e.to_string()))? {
        bytes.extend(line.map_err(|e| CliError::Input(e.to_string()))?);
        bytes.push(b'\n');
    }
    let result = oracle_extract(&bytes, topic).map_err(|e| CliError::Input(e.to_string()))?;
    let json = serde_json::to_string_pretty(&result).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
    match args.out {
        Some(path) => fs::write(path, json).map_err(io_err("oracle output")),
        None => io::stdout().write_all(json.as_bytes()).map_err(io_err("stdout")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Stats(a) => cmd_stats(a),
        Command::FilterSplit(a) => cmd_filter_split(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
