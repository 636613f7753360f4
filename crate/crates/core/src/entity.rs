//! Wikidata identifiers, claims, and the per-line entity parser.
//!
//! A dump body line is one JSON entity document, optionally followed by a
//! comma. Only the parts needed to build a topic subgraph are kept: the
//! entity id, its labels, and the statements whose main value points at
//! another item.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, IgnoredAny, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;

/// An item identifier, `Q` followed by a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(u64);

/// A property identifier, `P` followed by a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropertyId(u64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid {kind} identifier {text:?}")]
pub struct IdParseError {
    kind: &'static str,
    text: String,
}

fn parse_numeric(text: &str, prefix: char) -> Option<u64> {
    let digits = text.strip_prefix(prefix)?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    digits.parse().ok()
}

macro_rules! wikidata_id {
    ($name:ident, $prefix:literal, $kind:literal) => {
        impl $name {
            /// Returns `None` for zero.
            pub fn new(numeric: u64) -> Option<Self> {
                (numeric > 0).then_some(Self(numeric))
            }

            pub fn numeric(self) -> u64 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl FromStr for $name {
            type Err = IdParseError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                parse_numeric(s, $prefix.chars().next().unwrap())
                    .map(Self)
                    .ok_or_else(|| IdParseError {
                        kind: $kind,
                        text: s.to_string(),
                    })
            }
        }

        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = Cow::<str>::deserialize(d)?;
                text.parse().map_err(de::Error::custom)
            }
        }
    };
}

wikidata_id!(EntityId, "Q", "item");
wikidata_id!(PropertyId, "P", "property");

/// Well-known properties driving node selection.
pub mod props {
    use super::PropertyId;

    pub const INSTANCE_OF: PropertyId = PropertyId(31);
    pub const SUBCLASS_OF: PropertyId = PropertyId(279);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rank {
    Preferred,
    Normal,
    Deprecated,
}

impl Rank {
    pub fn as_str(self) -> &'static str {
        match self {
            Rank::Preferred => "preferred",
            Rank::Normal => "normal",
            Rank::Deprecated => "deprecated",
        }
    }

    pub fn is_truthy(self) -> bool {
        self != Rank::Deprecated
    }
}

/// An item-valued statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Claim {
    pub property: PropertyId,
    pub target: EntityId,
    pub rank: Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RecordId {
    Item(EntityId),
    Property(PropertyId),
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordId::Item(id) => id.fmt(f),
            RecordId::Property(id) => id.fmt(f),
        }
    }
}

/// One parsed dump line. Claims are sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub id: RecordId,
    pub labels: BTreeMap<String, String>,
    pub claims: Vec<Claim>,
}

impl EntityRecord {
    pub fn new(id: RecordId, labels: BTreeMap<String, String>, mut claims: Vec<Claim>) -> Self {
        claims.sort_unstable();
        claims.dedup();
        Self { id, labels, claims }
    }

    pub fn truthy_claims(&self) -> impl Iterator<Item = &Claim> + '_ {
        self.claims.iter().filter(|c| c.rank.is_truthy())
    }

    pub fn truthy_targets(&self, property: PropertyId) -> impl Iterator<Item = EntityId> + '_ {
        self.truthy_claims()
            .filter(move |c| c.property == property)
            .map(|c| c.target)
    }
}

/// A directed `(head, relation, tail)` triple. Orders by head, then relation, then tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub head: EntityId,
    pub relation: PropertyId,
    pub tail: EntityId,
}

impl Fact {
    pub fn new(head: EntityId, relation: PropertyId, tail: EntityId) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SkipReason {
    /// The opening `[` of the dump array.
    Framing,
    Empty,
    Redirect,
    /// Lexemes, media-info and other non-item, non-property documents.
    UnsupportedType,
    Malformed,
}

impl SkipReason {
    pub const ALL: [SkipReason; 5] = [
        SkipReason::Framing,
        SkipReason::Empty,
        SkipReason::Redirect,
        SkipReason::UnsupportedType,
        SkipReason::Malformed,
    ];

    pub fn code(self) -> &'static str {
        match self {
            SkipReason::Framing => "framing",
            SkipReason::Empty => "empty",
            SkipReason::Redirect => "redirect",
            SkipReason::UnsupportedType => "unsupported_type",
            SkipReason::Malformed => "malformed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseOutcome {
    Record(EntityRecord),
    Skip(SkipReason),
    StreamEnd,
}

/// Per-reason skip tallies. Merging is addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SkipCounts([u64; 5]);

impl SkipCounts {
    pub fn record(&mut self, reason: SkipReason) {
        self.0[reason as usize] += 1;
    }

    pub fn get(&self, reason: SkipReason) -> u64 {
        self.0[reason as usize]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn merge(&mut self, other: &SkipCounts) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

/// Which label languages a parser keeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LanguageFilter {
    All,
    Only(Vec<String>),
}

impl LanguageFilter {
    fn keeps(&self, lang: &str) -> bool {
        match self {
            LanguageFilter::All => true,
            LanguageFilter::Only(langs) => langs.iter().any(|l| l == lang),
        }
    }
}

/// Line parser with a configurable label-language filter.
#[derive(Debug, Clone)]
pub struct EntityParser {
    languages: LanguageFilter,
}

impl Default for EntityParser {
    fn default() -> Self {
        Self {
            languages: LanguageFilter::All,
        }
    }
}

impl EntityParser {
    pub fn new(languages: LanguageFilter) -> Self {
        Self { languages }
    }

    pub fn parse(&self, line: &[u8]) -> ParseOutcome {
        let body = trim_line(line);
        match body {
            b"" => return ParseOutcome::Skip(SkipReason::Empty),
            b"[" => return ParseOutcome::Skip(SkipReason::Framing),
            b"]" => return ParseOutcome::StreamEnd,
            _ => {}
        }
        let raw: RawEntity<'_> = match serde_json::from_slice(body) {
            Ok(raw) => raw,
            Err(_) => return ParseOutcome::Skip(SkipReason::Malformed),
        };
        self.normalize(raw)
    }

    fn normalize(&self, raw: RawEntity<'_>) -> ParseOutcome {
        if raw.redirects.is_some() {
            return ParseOutcome::Skip(SkipReason::Redirect);
        }
        let (Some(kind), Some(id)) = (raw.kind, raw.id) else {
            return ParseOutcome::Skip(SkipReason::Malformed);
        };
        let id = match &*kind {
            "item" => id.parse().map(RecordId::Item).ok(),
            "property" => id.parse().map(RecordId::Property).ok(),
            _ => return ParseOutcome::Skip(SkipReason::UnsupportedType),
        };
        let Some(id) = id else {
            return ParseOutcome::Skip(SkipReason::Malformed);
        };

        let labels = raw
            .labels
            .0
            .into_iter()
            .filter(|(lang, _)| self.languages.keeps(lang))
            .map(|(lang, label)| (lang.into_owned(), label.value.into_owned()))
            .collect();

        let mut claims = Vec::new();
        for (key, statements) in raw.claims.0 {
            for statement in statements {
                let Some(rank) = statement.rank else {
                    return ParseOutcome::Skip(SkipReason::Malformed);
                };
                let Some(snak) = statement.mainsnak else {
                    return ParseOutcome::Skip(SkipReason::Malformed);
                };
                let property = match snak.property.as_deref().unwrap_or(&key).parse() {
                    Ok(p) => p,
                    Err(_) => return ParseOutcome::Skip(SkipReason::Malformed),
                };
                if let Some(target) = snak.item_target() {
                    claims.push(Claim {
                        property,
                        target,
                        rank,
                    });
                }
            }
        }
        ParseOutcome::Record(EntityRecord::new(id, labels, claims))
    }
}

/// Parses one dump line keeping labels in every language.
pub fn parse_entity_line(line: &[u8]) -> ParseOutcome {
    EntityParser::default().parse(line)
}

fn trim_line(line: &[u8]) -> &[u8] {
    let mut s = line.trim_ascii();
    if let Some(rest) = s.strip_suffix(b",") {
        s = rest.trim_ascii_end();
    }
    s
}

#[derive(Deserialize)]
struct RawEntity<'a> {
    #[serde(rename = "type", borrow, default)]
    kind: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    id: Option<Cow<'a, str>>,
    #[serde(default)]
    redirects: Option<IgnoredAny>,
    #[serde(borrow, default)]
    labels: MapOrEmpty<Cow<'a, str>, RawLabel<'a>>,
    #[serde(borrow, default)]
    claims: MapOrEmpty<Cow<'a, str>, Vec<RawStatement<'a>>>,
}

#[derive(Deserialize)]
struct RawLabel<'a> {
    #[serde(borrow)]
    value: Cow<'a, str>,
}

#[derive(Deserialize)]
struct RawStatement<'a> {
    #[serde(borrow, default)]
    mainsnak: Option<RawSnak<'a>>,
    #[serde(default, deserialize_with = "deserialize_rank")]
    rank: Option<Rank>,
}

#[derive(Deserialize)]
struct RawSnak<'a> {
    #[serde(borrow, default)]
    snaktype: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    property: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    datavalue: Option<RawDataValue<'a>>,
}

#[derive(Deserialize)]
struct RawDataValue<'a> {
    #[serde(rename = "type", borrow, default)]
    kind: Option<Cow<'a, str>>,
    #[serde(default)]
    value: Option<RawValue<'a>>,
}

/// Either an entity reference object or any other JSON value.
enum RawValue<'a> {
    Entity {
        entity_type: Option<Cow<'a, str>>,
        id: Option<Cow<'a, str>>,
        numeric_id: Option<u64>,
    },
    Other,
}

impl RawSnak<'_> {
    fn item_target(&self) -> Option<EntityId> {
        if self.snaktype.as_deref().is_some_and(|t| t != "value") {
            return None;
        }
        let dv = self.datavalue.as_ref()?;
        if dv.kind.as_deref() != Some("wikibase-entityid") {
            return None;
        }
        match dv.value.as_ref()? {
            RawValue::Entity {
                entity_type,
                id,
                numeric_id,
            } => {
                if let Some(id) = id {
                    return id.parse().ok();
                }
                match entity_type.as_deref() {
                    Some("item") => EntityId::new((*numeric_id)?),
                    _ => None,
                }
            }
            RawValue::Other => None,
        }
    }
}

impl<'de: 'a, 'a> Deserialize<'de> for RawValue<'a> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ValueVisitor;

        impl<'de> Visitor<'de> for ValueVisitor {
            type Value = RawValue<'de>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a datavalue payload")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut entity_type = None;
                let mut id = None;
                let mut numeric_id = None;
                while let Some(key) = map.next_key::<Cow<'de, str>>()? {
                    match &*key {
                        "entity-type" => entity_type = map.next_value()?,
                        "id" => id = map.next_value()?,
                        "numeric-id" => numeric_id = map.next_value()?,
                        _ => {
                            map.next_value::<IgnoredAny>()?;
                        }
                    }
                }
                if entity_type.is_none() && id.is_none() && numeric_id.is_none() {
                    return Ok(RawValue::Other);
                }
                Ok(RawValue::Entity {
                    entity_type,
                    id,
                    numeric_id,
                })
            }

            fn visit_str<E: de::Error>(self, _: &str) -> Result<Self::Value, E> {
                Ok(RawValue::Other)
            }
            fn visit_bool<E: de::Error>(self, _: bool) -> Result<Self::Value, E> {
                Ok(RawValue::Other)
            }
            fn visit_i64<E: de::Error>(self, _: i64) -> Result<Self::Value, E> {
                Ok(RawValue::Other)
            }
            fn visit_u64<E: de::Error>(self, _: u64) -> Result<Self::Value, E> {
                Ok(RawValue::Other)
            }
            fn visit_f64<E: de::Error>(self, _: f64) -> Result<Self::Value, E> {
                Ok(RawValue::Other)
            }
            fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(RawValue::Other)
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                while seq.next_element::<IgnoredAny>()?.is_some() {}
                Ok(RawValue::Other)
            }
        }

        d.deserialize_any(ValueVisitor)
    }
}

fn deserialize_rank<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rank>, D::Error> {
    let text = Option::<Cow<'de, str>>::deserialize(d)?;
    Ok(match text.as_deref() {
        Some("preferred") => Some(Rank::Preferred),
        Some("normal") => Some(Rank::Normal),
        Some("deprecated") => Some(Rank::Deprecated),
        _ => None,
    })
}

/// Wikidata serializes empty maps as `[]`.
struct MapOrEmpty<K, V>(HashMap<K, V>);

impl<K, V> Default for MapOrEmpty<K, V> {
    fn default() -> Self {
        Self(HashMap::new())
    }
}

impl<'de, K, V> Deserialize<'de> for MapOrEmpty<K, V>
where
    K: Deserialize<'de> + Eq + std::hash::Hash,
    V: Deserialize<'de>,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct MapVisitor<K, V>(std::marker::PhantomData<(K, V)>);

        impl<'de, K, V> Visitor<'de> for MapVisitor<K, V>
        where
            K: Deserialize<'de> + Eq + std::hash::Hash,
            V: Deserialize<'de>,
        {
            type Value = MapOrEmpty<K, V>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object or an empty array")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = HashMap::with_capacity(map.size_hint().unwrap_or(0));
                while let Some((k, v)) = map.next_entry()? {
                    out.insert(k, v);
                }
                Ok(MapOrEmpty(out))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                if seq.next_element::<IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(1, &self));
                }
                Ok(MapOrEmpty::default())
            }
        }

        d.deserialize_any(MapVisitor(std::marker::PhantomData))
    }
}
