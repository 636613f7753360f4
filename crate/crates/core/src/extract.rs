//! Node selection, fact harvesting and label resolution over the dump.

use std::collections::{BTreeMap, HashMap};

use crate::dump::{DumpError, LineReader};
use crate::entity::{
    props, EntityId, EntityParser, EntityRecord, Fact, LanguageFilter, ParseOutcome, PropertyId,
    RecordId,
};
use crate::hierarchy::ClassClosure;
use crate::scan::parallel_scan;
use crate::PassCounters;

/// How a display label is picked from an entity's labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// English only; anything else falls back to the id string.
    #[default]
    English,
    /// English, else the label of the lexicographically smallest language code.
    EnglishFallbackAny,
}

impl LabelMode {
    fn parser(self) -> EntityParser {
        match self {
            LabelMode::English => EntityParser::new(LanguageFilter::Only(vec!["en".into()])),
            LabelMode::EnglishFallbackAny => EntityParser::new(LanguageFilter::All),
        }
    }

    pub fn pick(self, labels: &BTreeMap<String, String>) -> Option<String> {
        if let Some(en) = labels.get("en") {
            return Some(en.clone());
        }
        match self {
            LabelMode::English => None,
            LabelMode::EnglishFallbackAny => labels.values().next().cloned(),
        }
    }
}

/// Selected entities, ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeSet(Vec<EntityId>);

impl NodeSet {
    pub fn from_ids(ids: impl IntoIterator<Item = EntityId>) -> Self {
        let mut v: Vec<_> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn contains(&self, id: EntityId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn as_slice(&self) -> &[EntityId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Facts whose head is a node; sorted and deduplicated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactStore(Vec<Fact>);

impl FactStore {
    pub fn from_facts(facts: impl IntoIterator<Item = Fact>) -> Self {
        let mut v: Vec<_> = facts.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn as_slice(&self) -> &[Fact] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Labels seen so far. `None` records "seen, but no label usable under the mode".
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialLabels {
    pub entities: HashMap<EntityId, Option<String>>,
    pub relations: HashMap<PropertyId, Option<String>>,
}

impl PartialLabels {
    fn observe(&mut self, rec: &EntityRecord, mode: LabelMode) {
        let label = mode.pick(&rec.labels);
        match rec.id {
            RecordId::Item(id) => {
                self.entities.entry(id).or_insert(label);
            }
            RecordId::Property(id) => {
                self.relations.entry(id).or_insert(label);
            }
        }
    }

    fn merge(&mut self, other: PartialLabels) {
        for (k, v) in other.entities {
            self.entities.entry(k).or_insert(v);
        }
        for (k, v) in other.relations {
            self.relations.entry(k).or_insert(v);
        }
    }
}

/// Final label for every referenced entity and relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    pub entities: BTreeMap<EntityId, String>,
    pub relations: BTreeMap<PropertyId, String>,
    /// Ids labelled with their own id string for lack of a usable label.
    pub fallbacks: u64,
}

impl LabelTable {
    pub fn entity(&self, id: EntityId) -> Option<&str> {
        self.entities.get(&id).map(String::as_str)
    }

    pub fn relation(&self, id: PropertyId) -> Option<&str> {
        self.relations.get(&id).map(String::as_str)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanResult {
    pub nodes: NodeSet,
    pub facts: FactStore,
    pub partial_labels: PartialLabels,
    pub counters: PassCounters,
}

#[derive(Default)]
struct ScanState {
    nodes: Vec<EntityId>,
    facts: Vec<Fact>,
    labels: PartialLabels,
    counters: PassCounters,
}

/// Selects every item with a truthy instance-of claim into the closure and
/// keeps all of its truthy item-valued claims as facts.
pub fn scan_dump(
    reader: LineReader,
    closure: &ClassClosure,
    workers: usize,
    mode: LabelMode,
) -> Result<ScanResult, DumpError> {
    let parser = mode.parser();
    let out = parallel_scan(reader, workers, ScanState::default, |state, line| {
        let rec = match parser.parse(line) {
            ParseOutcome::Record(rec) => rec,
            other => return state.counters.note(&other),
        };
        state.counters.records += 1;
        let head = match rec.id {
            RecordId::Item(id) => id,
            RecordId::Property(_) => return state.labels.observe(&rec, mode),
        };
        if !rec
            .truthy_targets(props::INSTANCE_OF)
            .any(|class| closure.contains(class))
        {
            return;
        }
        state.nodes.push(head);
        state.facts.extend(
            rec.truthy_claims()
                .map(|c| Fact::new(head, c.property, c.target)),
        );
        state.labels.observe(&rec, mode);
    })?;

    let mut nodes = Vec::new();
    let mut facts = Vec::new();
    let mut partial_labels = PartialLabels::default();
    let mut counters = PassCounters {
        lines: out.lines,
        ..PassCounters::default()
    };
    for state in out.states {
        nodes.extend(state.nodes);
        facts.extend(state.facts);
        partial_labels.merge(state.labels);
        counters.merge(&state.counters);
    }
    Ok(ScanResult {
        nodes: NodeSet::from_ids(nodes),
        facts: FactStore::from_facts(facts),
        partial_labels,
        counters,
    })
}

/// Ids the dataset needs labels for.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NeededIds {
    pub entities: Vec<EntityId>,
    pub relations: Vec<PropertyId>,
}

impl NeededIds {
    pub fn of(nodes: &NodeSet, facts: &FactStore) -> Self {
        let mut entities: Vec<_> = nodes.as_slice().to_vec();
        let mut relations = Vec::new();
        for f in facts.as_slice() {
            entities.push(f.head);
            entities.push(f.tail);
            relations.push(f.relation);
        }
        entities.sort_unstable();
        entities.dedup();
        relations.sort_unstable();
        relations.dedup();
        Self {
            entities,
            relations,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LabelResolution {
    pub labels: LabelTable,
    /// Whether a second dump pass was needed.
    pub pass_ran: bool,
    pub counters: PassCounters,
}

/// Fills in labels for needed ids not covered by `partial`, with at most one
/// extra dump pass. `reader` is only opened when that pass is needed.
pub fn resolve_labels<F>(
    open_reader: F,
    needed: &NeededIds,
    partial: PartialLabels,
    workers: usize,
    mode: LabelMode,
) -> Result<LabelResolution, DumpError>
where
    F: FnOnce() -> Result<LineReader, DumpError>,
{
    let missing_entities: Vec<EntityId> = needed
        .entities
        .iter()
        .copied()
        .filter(|id| !partial.entities.contains_key(id))
        .collect();
    let missing_relations: Vec<PropertyId> = needed
        .relations
        .iter()
        .copied()
        .filter(|id| !partial.relations.contains_key(id))
        .collect();

    let mut known = partial;
    let mut counters = PassCounters::default();
    let pass_ran = !(missing_entities.is_empty() && missing_relations.is_empty());
    if pass_ran {
        let parser = mode.parser();
        let out = parallel_scan(
            open_reader()?,
            workers,
            || (PartialLabels::default(), PassCounters::default()),
            |(labels, counters), line| match parser.parse(line) {
                ParseOutcome::Record(rec) => {
                    counters.records += 1;
                    let wanted = match rec.id {
                        RecordId::Item(id) => missing_entities.binary_search(&id).is_ok(),
                        RecordId::Property(id) => missing_relations.binary_search(&id).is_ok(),
                    };
                    if wanted {
                        labels.observe(&rec, mode);
                    }
                }
                other => counters.note(&other),
            },
        )?;
        counters.lines = out.lines;
        for (labels, c) in out.states {
            known.merge(labels);
            counters.merge(&c);
        }
    }

    let mut table = LabelTable::default();
    for &id in &needed.entities {
        let label = match known.entities.get(&id) {
            Some(Some(l)) => l.clone(),
            _ => {
                table.fallbacks += 1;
                id.to_string()
            }
        };
        table.entities.insert(id, label);
    }
    for &id in &needed.relations {
        let label = match known.relations.get(&id) {
            Some(Some(l)) => l.clone(),
            _ => {
                table.fallbacks += 1;
                id.to_string()
            }
        };
        table.relations.insert(id, label);
    }
    Ok(LabelResolution {
        labels: table,
        pass_ran,
        counters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn q(n: u64) -> EntityId {
        EntityId::new(n).unwrap()
    }

    fn p(n: u64) -> PropertyId {
        PropertyId::new(n).unwrap()
    }

    fn claim(prop: &str, target: &str, rank: &str) -> String {
        format!(
            r#"{{"mainsnak":{{"snaktype":"value","property":"{prop}","datavalue":{{"value":{{"entity-type":"item","id":"{target}"}},"type":"wikibase-entityid"}}}},"type":"statement","rank":"{rank}"}}"#
        )
    }

    fn item(id: &str, labels: &[(&str, &str)], claims: &[(&str, &str, &str)]) -> String {
        let labels: Vec<String> = labels
            .iter()
            .map(|(l, v)| format!(r#""{l}":{{"language":"{l}","value":"{v}"}}"#))
            .collect();
        let mut by_prop: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (prop, target, rank) in claims {
            by_prop.entry(prop).or_default().push(claim(prop, target, rank));
        }
        let claims: Vec<String> = by_prop
            .iter()
            .map(|(prop, cs)| format!(r#""{prop}":[{}]"#, cs.join(",")))
            .collect();
        format!(
            r#"{{"type":"item","id":"{id}","labels":{{{}}},"claims":{{{}}}}}"#,
            labels.join(","),
            claims.join(",")
        )
    }

    fn dump(lines: &[String]) -> Vec<u8> {
        let mut out = b"[\n".to_vec();
        for l in lines {
            out.extend_from_slice(l.as_bytes());
            out.extend_from_slice(b",\n");
        }
        out.extend_from_slice(b"]\n");
        out
    }

    fn reader(bytes: &[u8]) -> LineReader {
        LineReader::from_reader(Cursor::new(bytes.to_vec()), 256, 1 << 20)
    }

    fn films_dump() -> Vec<u8> {
        dump(&[
            // Fast Five, The Fast and the Furious, Paul Walker
            item(
                "Q217220",
                &[("en", "Fast Five")],
                &[
                    ("P31", "Q11424", "normal"),
                    ("P155", "Q202372", "normal"),
                    ("P161", "Q172035", "normal"),
                    ("P161", "Q172035", "preferred"),
                    ("P161", "Q99", "deprecated"),
                ],
            ),
            item("Q202372", &[("en", "Fast & Furious")], &[("P31", "Q11424", "normal")]),
            item("Q172035", &[("en", "Paul Walker")], &[("P31", "Q5", "normal")]),
            item("Q1", &[("fr", "un")], &[("P31", "Q11424", "deprecated")]),
        ])
    }

    #[test]
    fn film_facts_are_harvested() {
        let closure = ClassClosure::from_members(q(11424), []);
        let res = scan_dump(reader(&films_dump()), &closure, 2, LabelMode::English).unwrap();
        assert_eq!(res.nodes.as_slice(), &[q(202372), q(217220)]);
        assert_eq!(
            res.facts.as_slice(),
            &[
                Fact::new(q(202372), p(31), q(11424)),
                Fact::new(q(217220), p(31), q(11424)),
                Fact::new(q(217220), p(155), q(202372)),
                Fact::new(q(217220), p(161), q(172035)),
            ]
        );
        assert_eq!(res.counters.records, 4);
        assert_eq!(res.counters.lines, 6);
        assert_eq!(res.counters.stream_ends, 1);
    }

    #[test]
    fn vacuous_selection() {
        let closure = ClassClosure::from_members(q(6256), []);
        let res = scan_dump(reader(&films_dump()), &closure, 1, LabelMode::English).unwrap();
        assert!(res.nodes.is_empty());
        assert!(res.facts.is_empty());
    }

    #[test]
    fn labels_resolved_with_second_pass() {
        let bytes = films_dump();
        let closure = ClassClosure::from_members(q(11424), []);
        let scan = scan_dump(reader(&bytes), &closure, 2, LabelMode::English).unwrap();
        let needed = NeededIds::of(&scan.nodes, &scan.facts);
        let res = resolve_labels(
            || Ok(reader(&bytes)),
            &needed,
            scan.partial_labels,
            3,
            LabelMode::English,
        )
        .unwrap();
        assert!(res.pass_ran);
        let labels = &res.labels;
        assert_eq!(labels.entity(q(172035)), Some("Paul Walker"));
        assert_eq!(labels.entity(q(217220)), Some("Fast Five"));
        // No record for the film class or any property in this dump.
        assert_eq!(labels.entity(q(11424)), Some("Q11424"));
        assert_eq!(labels.relation(p(155)), Some("P155"));
        assert_eq!(labels.fallbacks, 1 + 3);
        assert_eq!(labels.entities.len(), needed.entities.len());
    }

    #[test]
    fn second_pass_skipped_when_covered() {
        let mut partial = PartialLabels::default();
        partial.entities.insert(q(1), Some("one".into()));
        partial.relations.insert(p(2), None);
        let needed = NeededIds {
            entities: vec![q(1)],
            relations: vec![p(2)],
        };
        let res = resolve_labels(
            || panic!("must not open the dump"),
            &needed,
            partial,
            1,
            LabelMode::English,
        )
        .unwrap();
        assert!(!res.pass_ran);
        assert_eq!(res.labels.entity(q(1)), Some("one"));
        assert_eq!(res.labels.relation(p(2)), Some("P2"));
        assert_eq!(res.labels.fallbacks, 1);
    }

    #[test]
    fn french_only_label_depends_on_mode() {
        let bytes = dump(&[item("Q99", &[("fr", "quatre-vingt-dix-neuf"), ("it", "novantanove")], &[])]);
        let needed = NeededIds {
            entities: vec![q(99)],
            relations: vec![],
        };
        let en = resolve_labels(|| Ok(reader(&bytes)), &needed, PartialLabels::default(), 1, LabelMode::English).unwrap();
        assert_eq!(en.labels.entity(q(99)), Some("Q99"));
        assert_eq!(en.labels.fallbacks, 1);
        let any = resolve_labels(
            || Ok(reader(&bytes)),
            &needed,
            PartialLabels::default(),
            1,
            LabelMode::EnglishFallbackAny,
        )
        .unwrap();
        assert_eq!(any.labels.entity(q(99)), Some("quatre-vingt-dix-neuf"));
        assert_eq!(any.labels.fallbacks, 0);
    }

    #[test]
    fn multiple_instance_of_targets() {
        let bytes = dump(&[item(
            "Q7",
            &[],
            &[("P31", "Q100", "normal"), ("P31", "Q5", "normal"), ("P21", "Q7", "normal")],
        )]);
        let closure = ClassClosure::from_members(q(5), []);
        let res = scan_dump(reader(&bytes), &closure, 1, LabelMode::English).unwrap();
        assert_eq!(res.nodes.as_slice(), &[q(7)]);
        // Self-loops are kept.
        assert!(res.facts.as_slice().contains(&Fact::new(q(7), p(21), q(7))));
    }
}
