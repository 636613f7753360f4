//! Indexed dataset construction, the on-disk text format, and dataset statistics.
//!
//! Files are UTF-8, tab separated, LF terminated, each with a header row:
//!
//! | file             | header                                  |
//! |------------------|-----------------------------------------|
//! | `edges.txt`      | `headEntity\ttailEntity\trelation`      |
//! | `attributes.txt` | `headEntity\ttailEntity\trelation`      |
//! | `entities.txt`   | `entityID\twikidataID\tlabel`           |
//! | `nodes.txt`      | `entityID\twikidataID\tlabel`           |
//! | `relations.txt`  | `relationID\twikidataID\tlabel`         |
//!
//! `readme.txt` holds `key: value` lines. Nodes take entity indices
//! `0..nodes`, attribute-only entities follow; both segments ascend by id.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::entity::{EntityId, Fact, PropertyId};
use crate::extract::{FactStore, LabelTable, NodeSet};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRIPLE_HEADER: &str = "headEntity\ttailEntity\trelation";
pub const ENTITY_HEADER: &str = "entityID\twikidataID\tlabel";
pub const RELATION_HEADER: &str = "relationID\twikidataID\tlabel";

pub const DATASET_FILES: [&str; 6] = [
    "edges.txt",
    "attributes.txt",
    "entities.txt",
    "nodes.txt",
    "relations.txt",
    "readme.txt",
];

/// A fact in index space. Sorts by head, relation, tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexedTriple {
    pub head: u32,
    pub relation: u32,
    pub tail: u32,
}

impl IndexedTriple {
    pub fn new(head: u32, tail: u32, relation: u32) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMeta {
    /// Human-readable topic name, e.g. a preset name.
    pub topic: String,
    pub topic_qid: EntityId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedDataset {
    pub meta: DatasetMeta,
    entities: Vec<EntityId>,
    entity_labels: Vec<String>,
    num_nodes: usize,
    relations: Vec<PropertyId>,
    relation_labels: Vec<String>,
    edges: Vec<IndexedTriple>,
    attributes: Vec<IndexedTriple>,
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("no label for entity {0}")]
    MissingEntityLabel(EntityId),
    #[error("no label for relation {0}")]
    MissingRelationLabel(PropertyId),
    #[error("fact head {0} is not a node")]
    HeadNotNode(EntityId),
    #[error("dataset exceeds the u32 index space")]
    TooLarge,
}

fn to_index(i: usize) -> Result<u32, BuildError> {
    u32::try_from(i).map_err(|_| BuildError::TooLarge)
}

/// Splits facts into edges (tail is a node) and attributes, and assigns indices.
pub fn build_dataset(
    meta: DatasetMeta,
    nodes: &NodeSet,
    facts: &FactStore,
    labels: &LabelTable,
) -> Result<IndexedDataset, BuildError> {
    let node_ids = nodes.as_slice();
    let attribute_only: BTreeSet<EntityId> = facts
        .as_slice()
        .iter()
        .map(|f| f.tail)
        .filter(|&t| !nodes.contains(t))
        .collect();
    let entities: Vec<EntityId> = node_ids.iter().copied().chain(attribute_only).collect();
    let relations: Vec<PropertyId> = facts
        .as_slice()
        .iter()
        .map(|f| f.relation)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let entity_labels = entities
        .iter()
        .map(|&id| {
            labels
                .entity(id)
                .map(str::to_owned)
                .ok_or(BuildError::MissingEntityLabel(id))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let relation_labels = relations
        .iter()
        .map(|&id| {
            labels
                .relation(id)
                .map(str::to_owned)
                .ok_or(BuildError::MissingRelationLabel(id))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let num_nodes = node_ids.len();
    to_index(entities.len())?;
    let attr_ids = &entities[num_nodes..];
    let entity_index = |id: EntityId| -> Option<usize> {
        node_ids
            .binary_search(&id)
            .ok()
            .or_else(|| attr_ids.binary_search(&id).ok().map(|i| i + num_nodes))
    };

    let mut edges = Vec::new();
    let mut attributes = Vec::new();
    for f in facts.as_slice() {
        let head = node_ids
            .binary_search(&f.head)
            .map_err(|_| BuildError::HeadNotNode(f.head))?;
        let tail = entity_index(f.tail).expect("every tail was indexed");
        let rel = relations.binary_search(&f.relation).expect("every relation was indexed");
        let triple = IndexedTriple::new(head as u32, tail as u32, rel as u32);
        if tail < num_nodes {
            edges.push(triple);
        } else {
            attributes.push(triple);
        }
    }
    edges.sort_unstable();
    attributes.sort_unstable();

    Ok(IndexedDataset {
        meta,
        entities,
        entity_labels,
        num_nodes,
        relations,
        relation_labels,
        edges,
        attributes,
    })
}

impl IndexedDataset {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn nodes(&self) -> &[EntityId] {
        &self.entities[..self.num_nodes]
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn entity_labels(&self) -> &[String] {
        &self.entity_labels
    }

    pub fn relations(&self) -> &[PropertyId] {
        &self.relations
    }

    pub fn relation_labels(&self) -> &[String] {
        &self.relation_labels
    }

    pub fn edges(&self) -> &[IndexedTriple] {
        &self.edges
    }

    pub fn attributes(&self) -> &[IndexedTriple] {
        &self.attributes
    }

    pub fn entity_index(&self, id: EntityId) -> Option<u32> {
        let (nodes, rest) = self.entities.split_at(self.num_nodes);
        nodes
            .binary_search(&id)
            .ok()
            .or_else(|| rest.binary_search(&id).ok().map(|i| i + self.num_nodes))
            .map(|i| i as u32)
    }

    pub fn relation_index(&self, id: PropertyId) -> Option<u32> {
        self.relations.binary_search(&id).ok().map(|i| i as u32)
    }

    fn expand(&self, t: &IndexedTriple) -> Fact {
        Fact::new(
            self.entities[t.head as usize],
            self.relations[t.relation as usize],
            self.entities[t.tail as usize],
        )
    }

    /// Edges mapped back to id space.
    pub fn edge_facts(&self) -> Vec<Fact> {
        self.edges.iter().map(|t| self.expand(t)).collect()
    }

    /// Attributes mapped back to id space.
    pub fn attribute_facts(&self) -> Vec<Fact> {
        self.attributes.iter().map(|t| self.expand(t)).collect()
    }
}

/// Counts reported per dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StatsReport {
    pub nodes: u64,
    pub edges: u64,
    /// Nodes incident to no edge.
    pub isolated_nodes: u64,
    /// Distinct attribute tails.
    pub distinct_attributes: u64,
    pub attribute_facts: u64,
    /// Distinct relations over edges.
    pub distinct_relations: u64,
    /// Distinct relations over attributes.
    pub distinct_attribute_relations: u64,
}

impl StatsReport {
    pub fn entries(&self) -> [(&'static str, u64); 7] {
        [
            ("nodes", self.nodes),
            ("edges", self.edges),
            ("isolated_nodes", self.isolated_nodes),
            ("distinct_attributes", self.distinct_attributes),
            ("attribute_facts", self.attribute_facts),
            ("distinct_relations", self.distinct_relations),
            ("distinct_attribute_relations", self.distinct_attribute_relations),
        ]
    }
}

pub fn compute_stats(ds: &IndexedDataset) -> StatsReport {
    let mut touched = vec![false; ds.num_nodes];
    for e in &ds.edges {
        touched[e.head as usize] = true;
        touched[e.tail as usize] = true;
    }
    let distinct = |it: &mut dyn Iterator<Item = u32>| it.collect::<HashSet<_>>().len() as u64;
    StatsReport {
        nodes: ds.num_nodes as u64,
        edges: ds.edges.len() as u64,
        isolated_nodes: touched.iter().filter(|t| !**t).count() as u64,
        distinct_attributes: distinct(&mut ds.attributes.iter().map(|a| a.tail)),
        attribute_facts: ds.attributes.len() as u64,
        distinct_relations: distinct(&mut ds.edges.iter().map(|e| e.relation)),
        distinct_attribute_relations: distinct(&mut ds.attributes.iter().map(|a| a.relation)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeTypeCount {
    pub relation: PropertyId,
    pub label: String,
    pub count: u64,
}

/// Edge counts per relation, most frequent first, ties by ascending property id.
pub fn edge_type_distribution(ds: &IndexedDataset, top_k: usize) -> Vec<EdgeTypeCount> {
    let mut counts = vec![0u64; ds.relations.len()];
    for e in &ds.edges {
        counts[e.relation as usize] += 1;
    }
    let mut rows: Vec<EdgeTypeCount> = counts
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(i, count)| EdgeTypeCount {
            relation: ds.relations[i],
            label: ds.relation_labels[i].clone(),
            count,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then(a.relation.cmp(&b.relation)));
    rows.truncate(top_k);
    rows
}

pub fn sanitize_label(label: &str) -> String {
    label.replace(['\t', '\n', '\r'], " ")
}

/// `readme.txt` contents.
pub fn render_readme(meta: &DatasetMeta, stats: &StatsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "topic: {}", sanitize_label(&meta.topic));
    let _ = writeln!(out, "topic_qid: {}", meta.topic_qid);
    for (k, v) in stats.entries() {
        let _ = writeln!(out, "{k}: {v}");
    }
    let _ = writeln!(out, "tool_version: {TOOL_VERSION}");
    out
}

#[derive(Debug, thiserror::Error)]
pub enum WriteError {
    #[error("output directory {} is not empty (use --force to overwrite)", .0.display())]
    NotEmpty(PathBuf),
    #[error("writing dataset: {0}")]
    Io(#[from] io::Error),
}

/// Whether `dir` exists and holds at least one entry.
pub fn dir_has_entries(dir: &Path) -> io::Result<bool> {
    match fs::read_dir(dir) {
        Ok(mut it) => Ok(it.next().is_some()),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(false),
        Err(e) => Err(e),
    }
}

pub fn write_triples(path: &Path, triples: &[IndexedTriple]) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{TRIPLE_HEADER}")?;
    for t in triples {
        writeln!(w, "{}\t{}\t{}", t.head, t.tail, t.relation)?;
    }
    w.flush()
}

fn write_dictionary<I: std::fmt::Display>(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = (I, String)>,
) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for (i, (id, label)) in rows.enumerate() {
        writeln!(w, "{i}\t{id}\t{}", sanitize_label(&label))?;
    }
    w.flush()
}

/// Writes the six dataset files into `dir`, creating it if needed.
pub fn write_dataset(ds: &IndexedDataset, dir: &Path, force: bool) -> Result<(), WriteError> {
    if !force && dir_has_entries(dir)? {
        return Err(WriteError::NotEmpty(dir.to_path_buf()));
    }
    fs::create_dir_all(dir)?;
    write_triples(&dir.join("edges.txt"), &ds.edges)?;
    write_triples(&dir.join("attributes.txt"), &ds.attributes)?;
    let entity_rows = || ds.entities.iter().zip(ds.entity_labels.iter().cloned());
    write_dictionary(&dir.join("entities.txt"), ENTITY_HEADER, entity_rows())?;
    write_dictionary(&dir.join("nodes.txt"), ENTITY_HEADER, entity_rows().take(ds.num_nodes))?;
    write_dictionary(
        &dir.join("relations.txt"),
        RELATION_HEADER,
        ds.relations.iter().zip(ds.relation_labels.iter().cloned()),
    )?;
    fs::write(dir.join("readme.txt"), render_readme(&ds.meta, &compute_stats(ds)))?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}: {source}")]
    Io { file: String, source: io::Error },
}

/// Key/value pairs of a `readme.txt`, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Readme(pub Vec<(String, String)>);

impl Readme {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// A dataset read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: IndexedDataset,
    pub readme: Readme,
}

struct TableFile {
    name: String,
    text: String,
}

impl TableFile {
    fn open(dir: &Path, name: &str) -> Result<Self, ReadError> {
        let text = fs::read_to_string(dir.join(name)).map_err(|source| ReadError::Io {
            file: name.to_string(),
            source,
        })?;
        Ok(Self {
            name: name.to_string(),
            text,
        })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> ReadError {
        ReadError::Format {
            file: self.name.clone(),
            line,
            message: message.into(),
        }
    }

    /// Data rows split on tabs, with 1-based line numbers, after checking the header.
    fn rows(&self, header: &str) -> Result<Vec<(usize, Vec<&str>)>, ReadError> {
        if !self.text.is_empty() && !self.text.ends_with('\n') {
            return Err(self.err(self.text.lines().count(), "missing trailing newline"));
        }
        let mut lines = self.text.split_terminator('\n');
        match lines.next() {
            Some(h) if h == header => {}
            Some(h) => return Err(self.err(1, format!("expected header {header:?}, got {h:?}"))),
            None => return Err(self.err(1, "missing header")),
        }
        Ok(lines
            .enumerate()
            .map(|(i, l)| (i + 2, l.split('\t').collect()))
            .collect())
    }

    fn triples(&self, num_entities: usize, num_relations: usize) -> Result<Vec<IndexedTriple>, ReadError> {
        self.rows(TRIPLE_HEADER)?
            .into_iter()
            .map(|(no, cols)| {
                if cols.len() != 3 {
                    return Err(self.err(no, format!("expected 3 columns, got {}", cols.len())));
                }
                let num = |s: &str| s.parse::<u32>().map_err(|e| self.err(no, format!("{s:?}: {e}")));
                let (head, tail, rel) = (num(cols[0])?, num(cols[1])?, num(cols[2])?);
                if head as usize >= num_entities || tail as usize >= num_entities {
                    return Err(self.err(no, "entity index out of range"));
                }
                if rel as usize >= num_relations {
                    return Err(self.err(no, "relation index out of range"));
                }
                Ok(IndexedTriple::new(head, tail, rel))
            })
            .collect()
    }

    fn dictionary<I: std::str::FromStr>(&self, header: &str) -> Result<(Vec<I>, Vec<String>), ReadError>
    where
        I::Err: std::fmt::Display,
    {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (no, cols) in self.rows(header)? {
            if cols.len() != 3 {
                return Err(self.err(no, format!("expected 3 columns, got {}", cols.len())));
            }
            if cols[0].parse::<usize>().ok() != Some(ids.len()) {
                return Err(self.err(no, format!("expected index {}, got {:?}", ids.len(), cols[0])));
            }
            ids.push(cols[1].parse().map_err(|e| self.err(no, format!("{e}")))?);
            labels.push(cols[2].to_string());
        }
        Ok((ids, labels))
    }
}

pub fn parse_readme(text: &str) -> Result<Readme, ReadError> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let (k, v) = line.split_once(": ").ok_or_else(|| ReadError::Format {
            file: "readme.txt".into(),
            line: i + 1,
            message: format!("expected `key: value`, got {line:?}"),
        })?;
        pairs.push((k.to_string(), v.to_string()));
    }
    Ok(Readme(pairs))
}

/// Reads a dataset directory written by [`write_dataset`].
pub fn read_dataset(dir: &Path) -> Result<LoadedDataset, ReadError> {
    let entities_file = TableFile::open(dir, "entities.txt")?;
    let (entities, entity_labels): (Vec<EntityId>, _) = entities_file.dictionary(ENTITY_HEADER)?;
    let nodes_file = TableFile::open(dir, "nodes.txt")?;
    let (nodes, node_labels): (Vec<EntityId>, Vec<String>) = nodes_file.dictionary(ENTITY_HEADER)?;
    for (i, (id, label)) in nodes.iter().zip(&node_labels).enumerate() {
        if entities.get(i) != Some(id) || entity_labels.get(i) != Some(label) {
            return Err(nodes_file.err(i + 2, "row differs from entities.txt"));
        }
    }
    let (relations, relation_labels): (Vec<PropertyId>, _) =
        TableFile::open(dir, "relations.txt")?.dictionary(RELATION_HEADER)?;
    let edges_file = TableFile::open(dir, "edges.txt")?;
    let edges = edges_file.triples(entities.len(), relations.len())?;
    let attrs_file = TableFile::open(dir, "attributes.txt")?;
    let attributes = attrs_file.triples(entities.len(), relations.len())?;
    let num_nodes = nodes.len();
    for (file, triples) in [(&edges_file, &edges), (&attrs_file, &attributes)] {
        if let Some(pos) = triples.iter().position(|t| t.head as usize >= num_nodes) {
            return Err(file.err(pos + 2, "head is not a node"));
        }
    }
    if let Some(pos) = edges.iter().position(|t| t.tail as usize >= num_nodes) {
        return Err(edges_file.err(pos + 2, "edge tail is not a node"));
    }
    if let Some(pos) = attributes.iter().position(|t| (t.tail as usize) < num_nodes) {
        return Err(attrs_file.err(pos + 2, "attribute tail is a node"));
    }

    let readme_file = TableFile::open(dir, "readme.txt")?;
    let readme = parse_readme(&readme_file.text)?;
    let topic_qid = match readme.get("topic_qid") {
        Some(q) => q.parse().map_err(|e| readme_file.err(0, format!("topic_qid: {e}")))?,
        None => return Err(readme_file.err(0, "missing topic_qid")),
    };
    let meta = DatasetMeta {
        topic: readme.get("topic").unwrap_or_default().to_string(),
        topic_qid,
    };
    Ok(LoadedDataset {
        dataset: IndexedDataset {
            meta,
            entities,
            entity_labels,
            num_nodes,
            relations,
            relation_labels,
            edges,
            attributes,
        },
        readme,
    })
}

/// Readme counts that disagree with `stats`, as `(key, readme value, recomputed)`.
pub fn readme_mismatches(readme: &Readme, stats: &StatsReport) -> Vec<(String, Option<String>, u64)> {
    stats
        .entries()
        .into_iter()
        .filter(|(k, v)| readme.get(k) != Some(v.to_string().as_str()))
        .map(|(k, v)| (k.to_string(), readme.get(k).map(str::to_owned), v))
        .collect()
}
