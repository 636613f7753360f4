//! Subclass-of edges and the transitive class closure of a topic.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::dump::{DumpError, LineReader};
use crate::entity::{props, EntityId, EntityParser, LanguageFilter, ParseOutcome, RecordId};
use crate::scan::parallel_scan;
use crate::PassCounters;

/// `(child, parent)` pairs, each meaning "child is a subclass of parent".
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubclassEdgeSet {
    edges: BTreeSet<(EntityId, EntityId)>,
}

impl SubclassEdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, child: EntityId, parent: EntityId) -> bool {
        self.edges.insert((child, parent))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, child: EntityId, parent: EntityId) -> bool {
        self.edges.contains(&(child, parent))
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityId, EntityId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn union(&mut self, other: SubclassEdgeSet) {
        if self.edges.len() < other.edges.len() {
            let mine = std::mem::replace(&mut self.edges, other.edges);
            self.edges.extend(mine);
        } else {
            self.edges.extend(other.edges);
        }
    }
}

impl FromIterator<(EntityId, EntityId)> for SubclassEdgeSet {
    fn from_iter<T: IntoIterator<Item = (EntityId, EntityId)>>(iter: T) -> Self {
        Self {
            edges: iter.into_iter().collect(),
        }
    }
}

/// The topic class and every class that is transitively a subclass of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassClosure {
    topic: EntityId,
    members: Vec<EntityId>,
}

impl ClassClosure {
    /// Builds a closure from an explicit member list; the topic is always included.
    pub fn from_members(topic: EntityId, members: impl IntoIterator<Item = EntityId>) -> Self {
        let mut members: Vec<_> = members.into_iter().chain([topic]).collect();
        members.sort_unstable();
        members.dedup();
        Self { topic, members }
    }

    pub fn topic(&self) -> EntityId {
        self.topic
    }

    /// Members in ascending id order.
    pub fn members(&self) -> &[EntityId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, class: EntityId) -> bool {
        self.members.binary_search(&class).is_ok()
    }
}

/// Gathers every non-deprecated subclass-of claim in one dump pass.
pub fn collect_subclass_edges(
    reader: LineReader,
    workers: usize,
) -> Result<(SubclassEdgeSet, PassCounters), DumpError> {
    let parser = EntityParser::new(LanguageFilter::Only(Vec::new()));
    let out = parallel_scan(
        reader,
        workers,
        || (SubclassEdgeSet::new(), PassCounters::default()),
        |(edges, counters), line| match parser.parse(line) {
            ParseOutcome::Record(rec) => {
                counters.records += 1;
                if let RecordId::Item(child) = rec.id {
                    for parent in rec.truthy_targets(props::SUBCLASS_OF) {
                        edges.insert(child, parent);
                    }
                }
            }
            other => counters.note(&other),
        },
    )?;
    let mut edges = SubclassEdgeSet::new();
    let mut counters = PassCounters {
        lines: out.lines,
        ..PassCounters::default()
    };
    for (local, c) in out.states {
        edges.union(local);
        counters.merge(&c);
    }
    Ok((edges, counters))
}

/// Breadth-first walk down reversed subclass edges from the topic. Cycles are fine.
pub fn compute_closure(topic: EntityId, edges: &SubclassEdgeSet) -> ClassClosure {
    let mut children: HashMap<EntityId, Vec<EntityId>> = HashMap::new();
    for (child, parent) in edges.iter() {
        children.entry(parent).or_default().push(child);
    }
    let mut seen = BTreeSet::from([topic]);
    let mut queue = VecDeque::from([topic]);
    while let Some(class) = queue.pop_front() {
        for &child in children.get(&class).into_iter().flatten() {
            if seen.insert(child) {
                queue.push_back(child);
            }
        }
    }
    ClassClosure {
        topic,
        members: seen.into_iter().collect(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClosureFileError {
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("closure file is for topic {found}, expected {expected}")]
    TopicMismatch { expected: EntityId, found: EntityId },
    #[error("closure file I/O: {0}")]
    Io(#[from] io::Error),
}

/// Writes `topic\t<QID>` followed by one member per line in ascending order.
pub fn save_closure_file(closure: &ClassClosure, path: &Path) -> io::Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "topic\t{}", closure.topic)?;
    for m in &closure.members {
        writeln!(out, "{m}")?;
    }
    out.flush()
}

/// Loads a cached closure. With `expected` set, a different header topic is an error.
pub fn load_closure_file(
    path: &Path,
    expected: Option<EntityId>,
) -> Result<ClassClosure, ClosureFileError> {
    let text = fs::read_to_string(path)?;
    let format_err = |line: usize, message: String| ClosureFileError::Format {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(1, "missing header".into()))?;
    let topic_text = header
        .strip_prefix("topic\t")
        .ok_or_else(|| format_err(1, format!("expected `topic\\t<QID>`, got {header:?}")))?;
    let topic: EntityId = topic_text
        .parse()
        .map_err(|e| format_err(1, format!("{e}")))?;
    if let Some(expected) = expected {
        if expected != topic {
            return Err(ClosureFileError::TopicMismatch {
                expected,
                found: topic,
            });
        }
    }
    let mut members = Vec::new();
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        members.push(line.parse().map_err(|e| format_err(no, format!("{e}")))?);
    }
    Ok(ClassClosure::from_members(topic, members))
}
