//! Low-degree filtering and seeded train/test splits over dataset edges.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::dataset::{write_triples, IndexedTriple, TRIPLE_HEADER};

/// Identifier written to split manifests for the permutation below.
pub const SPLIT_ALGORITHM: &str = "splitmix64-fisher-yates-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeMode {
    /// Every edge endpoint occurrence counts, multi-edges and self-loops included.
    #[default]
    Incidences,
    /// Number of distinct other nodes sharing an edge.
    DistinctNeighbors,
}

impl DegreeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DegreeMode::Incidences => "incidences",
            DegreeMode::DistinctNeighbors => "distinct-neighbors",
        }
    }
}

fn degrees(edges: &[IndexedTriple], mode: DegreeMode) -> HashMap<u32, u64> {
    let mut deg: HashMap<u32, u64> = HashMap::new();
    match mode {
        DegreeMode::Incidences => {
            for e in edges {
                *deg.entry(e.head).or_default() += 1;
                *deg.entry(e.tail).or_default() += 1;
            }
        }
        DegreeMode::DistinctNeighbors => {
            let pairs: HashSet<(u32, u32)> = edges
                .iter()
                .filter(|e| e.head != e.tail)
                .flat_map(|e| [(e.head, e.tail), (e.tail, e.head)])
                .collect();
            for e in edges {
                deg.entry(e.head).or_default();
                deg.entry(e.tail).or_default();
            }
            for (a, _) in pairs {
                *deg.entry(a).or_default() += 1;
            }
        }
    }
    deg
}

/// Drops nodes whose degree is below `min_degree`, once, and keeps the edges
/// whose endpoints both survive.
pub fn filter_min_degree(edges: &[IndexedTriple], min_degree: u64, mode: DegreeMode) -> Vec<IndexedTriple> {
    if min_degree == 0 {
        return edges.to_vec();
    }
    let deg = degrees(edges, mode);
    let keep = |n: u32| deg.get(&n).copied().unwrap_or(0) >= min_degree;
    edges
        .iter()
        .copied()
        .filter(|e| keep(e.head) && keep(e.tail))
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("cannot split an empty edge list")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    train_fraction: f64,
    seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self, SplitError> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(SplitError::InvalidFraction(train_fraction));
        }
        Ok(Self { train_fraction, seed })
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `round(train_fraction * n)`, halves away from zero.
    pub fn train_size(&self, n: usize) -> usize {
        (self.train_fraction * n as f64).round() as usize
    }
}

/// SplitMix64 (Steele, Lea & Flood), used for portable permutations.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..bound` by rejection on the top partial block.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let reject_from = u64::MAX - (u64::MAX % bound + 1) % bound;
        loop {
            let x = self.next_u64();
            if x <= reject_from {
                return x % bound;
            }
        }
    }
}

/// Permutation of `0..n`: Fisher–Yates from the last position down, `j = below(i + 1)`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = SplitMix64::new(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Sorts the edges, permutes positions with the seed, and sends the first
/// `train_size` permuted positions to train. Both halves come back sorted.
pub fn split_edges(
    edges: &[IndexedTriple],
    spec: &SplitSpec,
) -> Result<(Vec<IndexedTriple>, Vec<IndexedTriple>), SplitError> {
    if edges.is_empty() {
        return Err(SplitError::EmptyInput);
    }
    let mut sorted = edges.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let mut in_train = vec![false; n];
    for &i in &permutation(n, spec.seed)[..spec.train_size(n)] {
        in_train[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (e, t) in sorted.into_iter().zip(in_train) {
        if t {
            train.push(e);
        } else {
            test.push(e);
        }
    }
    Ok((train, test))
}

/// SHA-256 of the triples in the `edges.txt` serialization.
pub fn triples_digest(triples: &[IndexedTriple]) -> String {
    let mut h = Sha256::new();
    h.update(TRIPLE_HEADER.as_bytes());
    h.update(b"\n");
    for t in triples {
        h.update(format!("{}\t{}\t{}\n", t.head, t.tail, t.relation).as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitManifest {
    pub algorithm: String,
    pub seed: u64,
    pub train_fraction: f64,
    pub min_degree: u64,
    pub degree_mode: String,
    /// Digest of the edge list before filtering.
    pub input_sha256: String,
    pub input_edges: usize,
    pub filtered_edges: usize,
    pub train_edges: usize,
    pub test_edges: usize,
}

/// Writes `train.txt`, `test.txt` and `split.json` into `dir`.
pub fn write_split(
    dir: &Path,
    train: &[IndexedTriple],
    test: &[IndexedTriple],
    manifest: &SplitManifest,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_triples(&dir.join("train.txt"), train)?;
    write_triples(&dir.join("test.txt"), test)?;
    let mut json = serde_json::to_string_pretty(manifest).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(dir.join("split.json"), json)
}
