//! Topic-specific knowledge subgraphs from the Wikidata JSON entity dump.
//!
//! Extraction runs in three passes over the dump:
//!
//! 1. collect subclass-of edges and close them under the topic class
//!    ([`hierarchy`]), or load a cached closure;
//! 2. select every item that is an instance of a closure class and harvest
//!    its truthy item-valued claims ([`extract::scan_dump`]);
//! 3. resolve labels for every referenced id ([`extract::resolve_labels`]).
//!
//! Facts whose tail is also a node become edges, the rest become
//! attributes, and [`dataset`] writes the indexed text files.

pub mod dataset;
pub mod dump;
pub mod entity;
pub mod extract;
pub mod hierarchy;
pub mod pipeline;
pub mod postprocess;
pub mod presets;
pub mod scan;
pub mod synth;

pub use entity::{EntityId, Fact, PropertyId};

use entity::{ParseOutcome, SkipCounts};

/// Line and record tallies for one dump pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PassCounters {
    pub lines: u64,
    pub records: u64,
    pub stream_ends: u64,
    pub skips: SkipCounts,
}

impl PassCounters {
    /// Counts a non-record parse outcome.
    pub fn note(&mut self, outcome: &ParseOutcome) {
        match outcome {
            ParseOutcome::Record(_) => self.records += 1,
            ParseOutcome::Skip(reason) => self.skips.record(*reason),
            ParseOutcome::StreamEnd => self.stream_ends += 1,
        }
    }

    /// Adds everything except `lines`, which the reader owns.
    pub fn merge(&mut self, other: &PassCounters) {
        self.records += other.records;
        self.stream_ends += other.stream_ends;
        self.skips.merge(&other.skips);
    }
}
