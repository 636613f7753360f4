//! Synthetic mini-dumps with known ground truth, and a brute-force reference
//! extractor that shares no code with the streaming pipeline.
//!
//! Id layout of a generated dump:
//!
//! * `Q1` is the topic class, `Q1..=Qc` are its subclasses (`c = n_classes`);
//! * `Q(c+1)..=Q(c+d)` are unrelated "decoy" classes;
//! * the following `n_instances + n_offtopic` items have shuffled roles;
//! * `P31`, `P279` and twelve relation properties `P1001..=P1012`;
//! * one trailing lexeme document, which readers must skip.
//!
//! Some fact targets point at "ghost" items that have no document at all.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::StatsReport;
use crate::entity::{props, Claim, EntityId, EntityRecord, PropertyId, Rank, RecordId};
use crate::postprocess::SplitMix64;

pub const RELATION_COUNT: u64 = 12;
const RELATION_BASE: u64 = 1000;
const GHOST_OFFSET: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HierarchyShape {
    Chain,
    Tree,
    DagWithCycles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    /// Topic-side classes including the topic itself; at least one is generated.
    pub n_classes: usize,
    pub hierarchy_shape: HierarchyShape,
    pub n_instances: usize,
    pub n_offtopic: usize,
    /// Inclusive range of item-valued claims per instance.
    pub facts_per_entity: (usize, usize),
    pub english_label_rate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_classes: 8,
            hierarchy_shape: HierarchyShape::Tree,
            n_instances: 50,
            n_offtopic: 50,
            facts_per_entity: (0, 6),
            english_label_rate: 0.7,
        }
    }
}

/// Expected extraction result. Also the output shape of [`oracle_extract`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spec: Option<SynthSpec>,
    pub topic: EntityId,
    /// Body lines between the opening and closing brackets.
    pub entity_lines: u64,
    pub subclass_edges: Vec<(EntityId, EntityId)>,
    pub closure: Vec<EntityId>,
    pub nodes: Vec<EntityId>,
    pub edges: Vec<(EntityId, PropertyId, EntityId)>,
    pub attributes: Vec<(EntityId, PropertyId, EntityId)>,
    pub entity_labels: BTreeMap<EntityId, String>,
    pub relation_labels: BTreeMap<PropertyId, String>,
    pub label_fallbacks: u64,
    pub stats: StatsReport,
}

type Triple = (EntityId, PropertyId, EntityId);

fn q(n: u64) -> EntityId {
    EntityId::new(n).expect("generated ids are positive")
}

fn p(n: u64) -> PropertyId {
    PropertyId::new(n).expect("generated ids are positive")
}

fn mix(seed: u64, id: u64, tag: u64) -> u64 {
    let a = SplitMix64::new(seed ^ id.rotate_left(17)).next_u64();
    SplitMix64::new(a ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15)).next_u64()
}

const TAG_LABEL_ITEM: u64 = 1;
const TAG_LABEL_PROP: u64 = 2;
const TAG_CLAIMS: u64 = 3;
const TAG_NOISE: u64 = 4;

const SYLLABLES: [&str; 16] = [
    "ka", "ro", "mi", "tel", "an", "vo", "su", "lin", "dra", "pe", "xo", "nu", "gal", "é", "ber", "to",
];

fn word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..4);
    let mut w: String = (0..n).map(|_| SYLLABLES[rng.gen_range(0..SYLLABLES.len())]).collect();
    if let Some(first) = w.chars().next() {
        let upper: String = first.to_uppercase().collect();
        w.replace_range(..first.len_utf8(), &upper);
    }
    w
}

/// Labels of one document, a pure function of the seed and the id.
fn labels_for(spec: &SynthSpec, id: u64, tag: u64) -> BTreeMap<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(spec.seed, id, tag));
    let mut labels = BTreeMap::new();
    if rng.gen_bool(spec.english_label_rate.clamp(0.0, 1.0)) {
        let mut en = format!("{} {}", word(&mut rng), word(&mut rng));
        if rng.gen_bool(0.05) {
            en.push('\t');
            en.push_str(&word(&mut rng));
        }
        labels.insert("en".to_string(), en);
        if rng.gen_bool(0.3) {
            labels.insert("de".to_string(), word(&mut rng));
        }
    } else if rng.gen_bool(0.5) {
        labels.insert("fr".to_string(), format!("le {}", word(&mut rng)));
        if rng.gen_bool(0.3) {
            labels.insert("ja".to_string(), "名前".to_string());
        }
    }
    labels
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    TopicClass,
    DecoyClass,
    Instance,
    Offtopic,
}

struct World {
    spec: SynthSpec,
    classes: u64,
    decoys: u64,
    first_entity: u64,
    roles: Vec<bool>,
    instances: Vec<u64>,
    offtopic: Vec<u64>,
    /// Truthy subclass-of parents per topic class, plus deprecated ones per decoy.
    parents: HashMap<u64, Vec<(u64, Rank)>>,
    relation_cdf: Vec<f64>,
}

impl World {
    fn new(spec: &SynthSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let classes = spec.n_classes.max(1) as u64;
        let decoys = 1 + classes / 4;
        let first_entity = classes + decoys + 1;

        let mut parents: HashMap<u64, Vec<(u64, Rank)>> = HashMap::new();
        for c in 2..=classes {
            let parent = match spec.hierarchy_shape {
                HierarchyShape::Chain => c - 1,
                HierarchyShape::Tree | HierarchyShape::DagWithCycles => rng.gen_range(1..c),
            };
            parents.entry(c).or_default().push((parent, Rank::Normal));
        }
        if spec.hierarchy_shape == HierarchyShape::DagWithCycles {
            for c in 2..=classes {
                if rng.gen_bool(0.3) {
                    let other = rng.gen_range(1..=classes);
                    if other != c {
                        parents.entry(c).or_default().push((other, Rank::Preferred));
                    }
                }
            }
            if classes >= 2 {
                // topic <-> Q2 cycle, and an upward edge to a decoy
                parents.entry(1).or_default().push((2, Rank::Normal));
            }
            parents.entry(1).or_default().push((classes + 1, Rank::Normal));
        }
        for d in classes + 1..=classes + decoys {
            if rng.gen_bool(0.5) {
                let target = rng.gen_range(1..=classes);
                parents.entry(d).or_default().push((target, Rank::Deprecated));
            }
        }

        let mut roles: Vec<bool> = std::iter::repeat_n(true, spec.n_instances)
            .chain(std::iter::repeat_n(false, spec.n_offtopic))
            .collect();
        roles.shuffle(&mut rng);
        let (mut instances, mut offtopic) = (Vec::new(), Vec::new());
        for (i, &is_instance) in roles.iter().enumerate() {
            let id = first_entity + i as u64;
            if is_instance {
                instances.push(id);
            } else {
                offtopic.push(id);
            }
        }

        let mut acc = 0.0;
        let relation_cdf = (0..RELATION_COUNT)
            .map(|i| {
                acc += 1.0 / (i + 1) as f64;
                acc
            })
            .collect();

        Self {
            spec: spec.clone(),
            classes,
            decoys,
            first_entity,
            roles,
            instances,
            offtopic,
            parents,
            relation_cdf,
        }
    }

    fn last_item(&self) -> u64 {
        self.first_entity + self.roles.len() as u64 - 1
    }

    fn role(&self, id: u64) -> Role {
        if id <= self.classes {
            Role::TopicClass
        } else if id < self.first_entity {
            Role::DecoyClass
        } else if self.roles[(id - self.first_entity) as usize] {
            Role::Instance
        } else {
            Role::Offtopic
        }
    }

    fn relation(&self, rng: &mut ChaCha8Rng) -> u64 {
        let total = *self.relation_cdf.last().unwrap();
        let x = rng.gen::<f64>() * total;
        let i = self.relation_cdf.iter().position(|&c| x < c).unwrap_or(0) as u64;
        RELATION_BASE + 1 + i
    }

    fn any_class(&self, rng: &mut ChaCha8Rng) -> u64 {
        rng.gen_range(1..=self.classes + self.decoys)
    }

    fn decoy(&self, rng: &mut ChaCha8Rng) -> u64 {
        rng.gen_range(self.classes + 1..=self.classes + self.decoys)
    }

    fn rank(rng: &mut ChaCha8Rng) -> Rank {
        match rng.gen_range(0..10) {
            0 => Rank::Deprecated,
            1 => Rank::Preferred,
            _ => Rank::Normal,
        }
    }

    fn item_claims(&self, id: u64) -> Vec<Claim> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.spec.seed, id, TAG_CLAIMS));
        let mut claims = Vec::new();
        let mut push = |prop: u64, target: u64, rank: Rank| {
            claims.push(Claim {
                property: p(prop),
                target: q(target),
                rank,
            })
        };
        let instance_of = props::INSTANCE_OF.numeric();
        match self.role(id) {
            Role::TopicClass | Role::DecoyClass => {
                for &(parent, rank) in self.parents.get(&id).into_iter().flatten() {
                    push(props::SUBCLASS_OF.numeric(), parent, rank);
                }
            }
            Role::Instance => {
                let class = rng.gen_range(1..=self.classes);
                let rank = if rng.gen_bool(0.1) { Rank::Preferred } else { Rank::Normal };
                push(instance_of, class, rank);
                if rng.gen_bool(0.2) {
                    push(instance_of, self.decoy(&mut rng), Rank::Normal);
                }
                if rng.gen_bool(0.1) {
                    push(instance_of, self.decoy(&mut rng), Rank::Deprecated);
                }
                let (lo, hi) = self.spec.facts_per_entity;
                let k = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                for _ in 0..k {
                    let prop = self.relation(&mut rng);
                    let roll = rng.gen::<f64>();
                    let target = if roll < 0.45 || (roll < 0.75 && self.offtopic.is_empty()) {
                        *self.instances.choose(&mut rng).unwrap()
                    } else if roll < 0.75 {
                        *self.offtopic.choose(&mut rng).unwrap()
                    } else if roll < 0.85 {
                        self.any_class(&mut rng)
                    } else if roll < 0.90 {
                        id
                    } else if roll < 0.95 {
                        GHOST_OFFSET + rng.gen_range(1..=50)
                    } else {
                        *self.instances.choose(&mut rng).unwrap()
                    };
                    let rank = Self::rank(&mut rng);
                    push(prop, target, rank);
                    if rng.gen_bool(0.1) {
                        let again = if rank == Rank::Normal { Rank::Preferred } else { Rank::Normal };
                        push(prop, target, again);
                    }
                }
            }
            Role::Offtopic => {
                match rng.gen_range(0..20) {
                    0 | 1 => push(instance_of, rng.gen_range(1..=self.classes), Rank::Deprecated),
                    2 => {}
                    _ => push(instance_of, self.decoy(&mut rng), Rank::Normal),
                }
                for _ in 0..rng.gen_range(0..3) {
                    let prop = self.relation(&mut rng);
                    let target = rng.gen_range(1..=self.last_item());
                    push(prop, target, Rank::Normal);
                }
            }
        }
        claims
    }

    fn item_record(&self, id: u64) -> EntityRecord {
        EntityRecord::new(
            RecordId::Item(q(id)),
            labels_for(&self.spec, id, TAG_LABEL_ITEM),
            self.item_claims(id),
        )
    }

    fn property_ids(&self) -> impl Iterator<Item = u64> {
        [props::INSTANCE_OF.numeric(), props::SUBCLASS_OF.numeric()]
            .into_iter()
            .chain(RELATION_BASE + 1..=RELATION_BASE + RELATION_COUNT)
    }

    fn property_labels(&self, id: u64) -> BTreeMap<String, String> {
        match id {
            31 => BTreeMap::from([("en".to_string(), "instance of".to_string())]),
            279 => BTreeMap::from([("en".to_string(), "subclass of".to_string())]),
            _ => labels_for(&self.spec, id, TAG_LABEL_PROP),
        }
    }

    fn property_record(&self, id: u64) -> EntityRecord {
        EntityRecord::new(RecordId::Property(p(id)), self.property_labels(id), Vec::new())
    }

    /// Every entity document in dump order.
    fn records(&self) -> impl Iterator<Item = EntityRecord> + '_ {
        (1..=self.last_item())
            .map(|id| self.item_record(id))
            .chain(self.property_ids().map(|id| self.property_record(id)))
    }

    fn english_label(&self, id: EntityId) -> Option<String> {
        let n = id.numeric();
        if n > self.last_item() {
            return None;
        }
        labels_for(&self.spec, n, TAG_LABEL_ITEM).remove("en")
    }
}

fn snak_json(property: PropertyId, target: Option<EntityId>, rng: &mut ChaCha8Rng) -> Value {
    match target {
        Some(t) => {
            let value = if rng.gen_bool(0.5) {
                json!({"entity-type": "item", "numeric-id": t.numeric(), "id": t.to_string()})
            } else {
                json!({"entity-type": "item", "numeric-id": t.numeric()})
            };
            json!({
                "snaktype": "value",
                "property": property.to_string(),
                "hash": format!("{:016x}", rng.gen::<u64>()),
                "datavalue": {"value": value, "type": "wikibase-entityid"},
                "datatype": "wikibase-item",
            })
        }
        None => json!({
            "snaktype": if rng.gen_bool(0.5) { "somevalue" } else { "novalue" },
            "property": property.to_string(),
            "datatype": "wikibase-item",
        }),
    }
}

fn statement_json(id: &str, n: usize, mainsnak: Value, rank: Rank, rng: &mut ChaCha8Rng) -> Value {
    let mut stmt = json!({
        "mainsnak": mainsnak,
        "type": "statement",
        "id": format!("{id}${n:08X}"),
        "rank": rank.as_str(),
    });
    if rng.gen_bool(0.2) {
        // Qualifiers and references carry item values that are not facts.
        let qualifier = snak_json(p(642), Some(q(1)), rng);
        stmt["qualifiers"] = json!({"P642": [qualifier]});
        stmt["qualifiers-order"] = json!(["P642"]);
    }
    if rng.gen_bool(0.2) {
        stmt["references"] = json!([{"hash": "abc", "snaks": {"P248": [snak_json(p(248), Some(q(1)), rng)]}, "snaks-order": ["P248"]}]);
    }
    stmt
}

fn literal_statement(id: &str, n: usize, rng: &mut ChaCha8Rng) -> (String, Value) {
    let (prop, datavalue) = match rng.gen_range(0..4) {
        0 => ("P569", json!({"value": {"time": "+1952-03-11T00:00:00Z", "timezone": 0, "before": 0, "after": 0, "precision": 11, "calendarmodel": "http://www.wikidata.org/entity/Q1985727"}, "type": "time"})),
        1 => ("P1476", json!({"value": {"text": "Q42", "language": "en"}, "type": "monolingualtext"})),
        2 => ("P2067", json!({"value": {"amount": "+70", "unit": "http://www.wikidata.org/entity/Q11570"}, "type": "quantity"})),
        _ => ("P213", json!({"value": "0000 0001 2144 1970", "type": "string"})),
    };
    let snak = json!({"snaktype": "value", "property": prop, "datavalue": datavalue, "datatype": "external-id"});
    (prop.to_string(), statement_json(id, n, snak, Rank::Normal, rng))
}

/// Serializes a record as one dump-style JSON document. The noise seed adds
/// parts a reader must ignore: literal values, unknown-value snaks,
/// qualifiers, references, descriptions and sitelinks.
pub fn serialize_record(rec: &EntityRecord, noise_seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let id = rec.id.to_string();
    let labels: serde_json::Map<String, Value> = rec
        .labels
        .iter()
        .map(|(lang, v)| (lang.clone(), json!({"language": lang, "value": v})))
        .collect();

    let mut grouped: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    let mut n = 0;
    for c in &rec.claims {
        n += 1;
        let snak = snak_json(c.property, Some(c.target), &mut rng);
        grouped
            .entry(c.property.to_string())
            .or_default()
            .push(statement_json(&id, n, snak, c.rank, &mut rng));
    }
    if matches!(rec.id, RecordId::Item(_)) {
        for _ in 0..rng.gen_range(0..3) {
            n += 1;
            let (prop, stmt) = literal_statement(&id, n, &mut rng);
            grouped.entry(prop).or_default().push(stmt);
        }
        if rng.gen_bool(0.2) {
            n += 1;
            let snak = snak_json(p(1001), None, &mut rng);
            grouped
                .entry("P1001".into())
                .or_default()
                .push(statement_json(&id, n, snak, Rank::Normal, &mut rng));
        }
    }
    for stmts in grouped.values_mut() {
        stmts.shuffle(&mut rng);
    }

    let empty_or = |m: serde_json::Map<String, Value>| {
        if m.is_empty() {
            json!([])
        } else {
            Value::Object(m)
        }
    };
    let claims: serde_json::Map<String, Value> =
        grouped.into_iter().map(|(k, v)| (k, Value::Array(v))).collect();
    let mut doc = serde_json::Map::new();
    match rec.id {
        RecordId::Item(_) => {
            doc.insert("type".into(), json!("item"));
            doc.insert("id".into(), json!(id));
        }
        RecordId::Property(_) => {
            doc.insert("type".into(), json!("property"));
            doc.insert("datatype".into(), json!("wikibase-item"));
            doc.insert("id".into(), json!(id));
        }
    }
    doc.insert("labels".into(), empty_or(labels));
    doc.insert("descriptions".into(), if rng.gen_bool(0.5) { json!([]) } else { json!({"en": {"language": "en", "value": "Q5 P31 something"}}) });
    doc.insert("aliases".into(), json!([]));
    doc.insert("claims".into(), empty_or(claims));
    if matches!(rec.id, RecordId::Item(_)) {
        doc.insert("sitelinks".into(), json!({}));
    }
    doc.insert("lastrevid".into(), json!(rng.gen_range(1..2_000_000_000u64)));
    serde_json::to_string(&Value::Object(doc)).expect("serializable")
}

/// All generated entity records in dump order.
pub fn records(spec: &SynthSpec) -> Vec<EntityRecord> {
    World::new(spec).records().collect()
}

fn noise_seed(spec: &SynthSpec, rec: &EntityRecord) -> u64 {
    let (id, tag) = match rec.id {
        RecordId::Item(q) => (q.numeric(), TAG_NOISE),
        RecordId::Property(p) => (p.numeric(), TAG_NOISE + 1),
    };
    mix(spec.seed, id, tag)
}

/// Streams a dump for `spec` into `out` and returns its ground truth.
pub fn write_dump<W: Write>(spec: &SynthSpec, out: &mut W) -> io::Result<GroundTruth> {
    let world = World::new(spec);
    let topic = q(1);
    let mut subclass_edges = BTreeSet::new();
    let mut facts: BTreeSet<Triple> = BTreeSet::new();
    let mut entity_lines = 0u64;

    out.write_all(b"[\n")?;
    for rec in world.records() {
        if let RecordId::Item(id) = rec.id {
            for c in rec.claims.iter().filter(|c| c.rank.is_truthy()) {
                if c.property == props::SUBCLASS_OF {
                    subclass_edges.insert((id, c.target));
                }
                if world.role(id.numeric()) == Role::Instance {
                    facts.insert((id, c.property, c.target));
                }
            }
        }
        out.write_all(serialize_record(&rec, noise_seed(spec, &rec)).as_bytes())?;
        out.write_all(b",\n")?;
        entity_lines += 1;
    }
    out.write_all(br#"{"type":"lexeme","id":"L1","lemmas":{"en":{"language":"en","value":"instance"}},"lexicalCategory":"Q1084","language":"Q1860","claims":[],"forms":[],"senses":[]}"#)?;
    out.write_all(b"\n]\n")?;
    entity_lines += 1;

    let nodes: Vec<EntityId> = world.instances.iter().map(|&n| q(n)).collect();
    let node_set: HashSet<EntityId> = nodes.iter().copied().collect();
    let (edges, attributes): (Vec<Triple>, Vec<Triple>) =
        facts.iter().copied().partition(|(_, _, t)| node_set.contains(t));

    let mut label_fallbacks = 0;
    let mut entity_labels = BTreeMap::new();
    let referenced: BTreeSet<EntityId> = nodes
        .iter()
        .copied()
        .chain(facts.iter().flat_map(|&(h, _, t)| [h, t]))
        .collect();
    for id in referenced {
        let label = world.english_label(id).unwrap_or_else(|| {
            label_fallbacks += 1;
            id.to_string()
        });
        entity_labels.insert(id, label);
    }
    let mut relation_labels = BTreeMap::new();
    for rel in facts.iter().map(|&(_, r, _)| r).collect::<BTreeSet<_>>() {
        let label = world.property_labels(rel.numeric()).remove("en").unwrap_or_else(|| {
            label_fallbacks += 1;
            rel.to_string()
        });
        relation_labels.insert(rel, label);
    }

    let stats = stats_of(&nodes, &edges, &attributes);
    Ok(GroundTruth {
        spec: Some(spec.clone()),
        topic,
        entity_lines,
        subclass_edges: subclass_edges.into_iter().collect(),
        closure: (1..=world.classes).map(q).collect(),
        nodes,
        edges,
        attributes,
        entity_labels,
        relation_labels,
        label_fallbacks,
        stats,
    })
}

/// In-memory variant of [`write_dump`].
pub fn generate_dump(spec: &SynthSpec) -> (Vec<u8>, GroundTruth) {
    let mut buf = Vec::new();
    let truth = write_dump(spec, &mut buf).expect("writing to memory");
    (buf, truth)
}

/// The seven dataset counts, computed straight from id-space sets.
pub fn stats_of(nodes: &[EntityId], edges: &[Triple], attributes: &[Triple]) -> StatsReport {
    let touched: HashSet<EntityId> = edges.iter().flat_map(|&(h, _, t)| [h, t]).collect();
    StatsReport {
        nodes: nodes.len() as u64,
        edges: edges.len() as u64,
        isolated_nodes: nodes.iter().filter(|n| !touched.contains(n)).count() as u64,
        distinct_attributes: attributes.iter().map(|a| a.2).collect::<HashSet<_>>().len() as u64,
        attribute_facts: attributes.len() as u64,
        distinct_relations: edges.iter().map(|e| e.1).collect::<HashSet<_>>().len() as u64,
        distinct_attribute_relations: attributes.iter().map(|a| a.1).collect::<HashSet<_>>().len() as u64,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Truthy item targets of `property` in a raw JSON document.
fn raw_truthy_items<'a>(doc: &'a Value, property: &str) -> impl Iterator<Item = String> + 'a {
    doc.get("claims")
        .and_then(|c| c.get(property))
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .filter(|s| s.get("rank").and_then(Value::as_str) != Some("deprecated"))
        .filter_map(|s| raw_item_value(s.get("mainsnak")?))
}

fn raw_item_value(snak: &Value) -> Option<String> {
    if snak.get("snaktype")?.as_str()? != "value" {
        return None;
    }
    let dv = snak.get("datavalue")?;
    if dv.get("type")?.as_str()? != "wikibase-entityid" {
        return None;
    }
    let v = dv.get("value")?;
    if let Some(id) = v.get("id").and_then(Value::as_str) {
        return id.starts_with('Q').then(|| id.to_string());
    }
    if v.get("entity-type")?.as_str()? == "item" {
        return Some(format!("Q{}", v.get("numeric-id")?.as_u64()?));
    }
    None
}

/// Loads the whole dump and applies the selection rules literally: closure by
/// repeated join, nodes as instances of closure classes, every truthy item
/// claim of a node as a fact, English labels with id fallback.
pub fn oracle_extract(dump: &[u8], topic: EntityId) -> Result<GroundTruth, OracleError> {
    let text = String::from_utf8_lossy(dump);
    let mut docs: Vec<Value> = Vec::new();
    let mut entity_lines = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let line = line.strip_suffix(',').unwrap_or(line);
        if line == "[" || line == "]" || line.is_empty() {
            continue;
        }
        entity_lines += 1;
        let doc: Value = serde_json::from_str(line).map_err(|e| OracleError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(doc);
    }

    let id_of = |d: &Value| d.get("id").and_then(Value::as_str).unwrap_or("").to_string();
    let items: Vec<&Value> = docs
        .iter()
        .filter(|d| d.get("type").and_then(Value::as_str) == Some("item") && d.get("redirects").is_none())
        .collect();
    let properties: Vec<&Value> = docs
        .iter()
        .filter(|d| d.get("type").and_then(Value::as_str) == Some("property"))
        .collect();

    let mut subclass: BTreeSet<(String, String)> = BTreeSet::new();
    for d in &items {
        for parent in raw_truthy_items(d, "P279") {
            subclass.insert((id_of(d), parent));
        }
    }
    let mut closure: BTreeSet<String> = BTreeSet::from([topic.to_string()]);
    loop {
        let grown: Vec<String> = subclass
            .iter()
            .filter(|(_, parent)| closure.contains(parent))
            .map(|(child, _)| child.clone())
            .filter(|c| !closure.contains(c))
            .collect();
        if grown.is_empty() {
            break;
        }
        closure.extend(grown);
    }

    let nodes: BTreeSet<String> = items
        .iter()
        .filter(|d| raw_truthy_items(d, "P31").any(|c| closure.contains(&c)))
        .map(|d| id_of(d))
        .collect();

    let mut facts: BTreeSet<(String, String, String)> = BTreeSet::new();
    for d in items.iter().filter(|d| nodes.contains(&id_of(d))) {
        let Some(claims) = d.get("claims").and_then(Value::as_object) else {
            continue;
        };
        for prop in claims.keys() {
            for tail in raw_truthy_items(d, prop) {
                facts.insert((id_of(d), prop.clone(), tail));
            }
        }
    }

    let english = |d: &Value| -> Option<String> {
        d.get("labels")?.get("en")?.get("value")?.as_str().map(str::to_owned)
    };
    let item_labels: HashMap<String, Option<String>> =
        items.iter().map(|d| (id_of(d), english(d))).collect();
    let property_labels: HashMap<String, Option<String>> =
        properties.iter().map(|d| (id_of(d), english(d))).collect();

    let parse_q = |s: &str| -> EntityId { s.parse().expect("oracle saw a malformed item id") };
    let parse_p = |s: &str| -> PropertyId { s.parse().expect("oracle saw a malformed property id") };

    let mut label_fallbacks = 0;
    let mut entity_labels = BTreeMap::new();
    let referenced: BTreeSet<&String> = nodes
        .iter()
        .chain(facts.iter().flat_map(|(h, _, t)| [h, t]))
        .collect();
    for id in referenced {
        let label = match item_labels.get(id) {
            Some(Some(l)) => l.clone(),
            _ => {
                label_fallbacks += 1;
                id.clone()
            }
        };
        entity_labels.insert(parse_q(id), label);
    }
    let mut relation_labels = BTreeMap::new();
    for rel in facts.iter().map(|(_, r, _)| r).collect::<BTreeSet<_>>() {
        let label = match property_labels.get(rel) {
            Some(Some(l)) => l.clone(),
            _ => {
                label_fallbacks += 1;
                rel.clone()
            }
        };
        relation_labels.insert(parse_p(rel), label);
    }

    let to_triple = |(h, r, t): &(String, String, String)| (parse_q(h), parse_p(r), parse_q(t));
    let mut edges: Vec<Triple> = facts.iter().filter(|f| nodes.contains(&f.2)).map(to_triple).collect();
    let mut attributes: Vec<Triple> = facts.iter().filter(|f| !nodes.contains(&f.2)).map(to_triple).collect();
    edges.sort();
    attributes.sort();
    let mut node_ids: Vec<EntityId> = nodes.iter().map(|n| parse_q(n)).collect();
    node_ids.sort();
    let mut closure_ids: Vec<EntityId> = closure.iter().map(|c| parse_q(c)).collect();
    closure_ids.sort();
    let mut subclass_edges: Vec<(EntityId, EntityId)> =
        subclass.iter().map(|(c, p)| (parse_q(c), parse_q(p))).collect();
    subclass_edges.sort();

    let stats = stats_of(&node_ids, &edges, &attributes);
    Ok(GroundTruth {
        spec: None,
        topic,
        entity_lines,
        subclass_edges,
        closure: closure_ids,
        nodes: node_ids,
        edges,
        attributes,
        entity_labels,
        relation_labels,
        label_fallbacks,
        stats,
    })
}
