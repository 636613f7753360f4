//! Named topics and their class ids.

use crate::entity::EntityId;

pub const PRESETS: [(&str, u64); 5] = [
    ("animals", 16521),
    ("companies", 4830453),
    ("countries", 6256),
    ("films", 11424),
    ("humans", 5),
];

pub fn preset_topic(name: &str) -> Option<EntityId> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .and_then(|&(_, q)| EntityId::new(q))
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
