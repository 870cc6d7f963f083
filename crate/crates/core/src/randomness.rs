//! Random sources shared by classes of vertices.
//!
//! Bit `t` of a class stream is a pure function of the class seed and `t`,
//! so two vertices of one class read identical bits at identical draw
//! indices however their draws interleave.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{Homomorphism, SymDigraph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RandomnessError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("map is not a total projection onto the base sources: {0}")]
    NotProjection(String),
    #[error("replay diverged at draw {index} of vertex {vertex}: logged {logged}, drawn {drawn}")]
    ReplayMismatch { vertex: VertexId, index: u64, logged: bool, drawn: bool },
    #[error("invalid seed {0:?}")]
    BadSeed(String),
}

/// Bit `index` of the stream keyed by `seed`.
pub fn stream_bit(seed: u64, index: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(u128::from(index / 32));
    (rng.next_u32() >> (index % 32)) & 1 == 1
}

/// Seed for the stream named `name` under `tag`, derived from the master
/// seed. Distinct `(tag, name)` pairs give unrelated seeds.
pub fn derive_seed(master: u64, tag: &str, name: &str) -> u64 {
    let mut h = Sha256::new();
    for part in [tag.as_bytes(), &master.to_le_bytes(), name.as_bytes()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Seed of trial `index` of an experiment.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, "trial", &index.to_string())
}

/// Generator used by schedulers; disjoint from every source stream.
pub fn scheduler_rng(master: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, "scheduler", ""))
}

/// Parses a decimal or `0x`-prefixed hexadecimal seed.
pub fn parse_seed(s: &str) -> Result<u64, RandomnessError> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|_| RandomnessError::BadSeed(s.to_string()))
}

/// One drawn bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draw {
    pub vertex: VertexId,
    pub class: String,
    pub index: u64,
    pub bit: bool,
}

pub type DrawLog = Vec<Draw>;

/// Which source each vertex reads, the seed of each source, and how many
/// bits each vertex has drawn so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceAssignment {
    class_of: Vec<String>,
    seeds: BTreeMap<String, u64>,
    draw_count: Vec<u64>,
    log: DrawLog,
}

impl SourceAssignment {
    /// Sources named by `class_of`, each seeded from `master`.
    pub fn from_classes(class_of: Vec<String>, master: u64) -> Self {
        let seeds = class_of.iter().map(|c| (c.clone(), derive_seed(master, "source", c))).collect();
        Self::with_seeds(class_of, seeds)
    }

    /// Explicit seeds; every class in `class_of` must have one.
    pub fn with_seeds(class_of: Vec<String>, seeds: BTreeMap<String, u64>) -> Self {
        assert!(class_of.iter().all(|c| seeds.contains_key(c)), "every class needs a seed");
        let n = class_of.len();
        Self { class_of, seeds, draw_count: vec![0; n], log: Vec::new() }
    }

    /// Sources of a digraph read off its vertex labels; a vertex without a
    /// source class gets a class of its own.
    pub fn from_digraph(d: &SymDigraph, master: u64) -> Self {
        let classes = d
            .vertices()
            .map(|v| d.label(v).source.clone().unwrap_or_else(|| format!("#{}", d.vertex_id(v))))
            .collect();
        Self::from_classes(classes, master)
    }

    pub fn vertex_count(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_of(&self, v: VertexId) -> &str {
        &self.class_of[v]
    }

    pub fn classes(&self) -> &[String] {
        &self.class_of
    }

    pub fn class_seed(&self, class: &str) -> Option<u64> {
        self.seeds.get(class).copied()
    }

    pub fn seeds(&self) -> &BTreeMap<String, u64> {
        &self.seeds
    }

    pub fn draw_count(&self, v: VertexId) -> u64 {
        self.draw_count[v]
    }

    pub fn draw_counts(&self) -> &[u64] {
        &self.draw_count
    }

    pub fn log(&self) -> &DrawLog {
        &self.log
    }

    /// Total number of bits drawn by all vertices.
    pub fn total_draws(&self) -> u64 {
        self.draw_count.iter().sum()
    }

    /// The bit vertex `v` would read at `index`, without drawing it.
    pub fn peek(&self, v: VertexId, index: u64) -> bool {
        stream_bit(self.seeds[&self.class_of[v]], index)
    }

    /// Draws the next bit of `v`'s source and advances `v`'s counter only.
    pub fn draw_bit(&mut self, v: VertexId) -> Result<bool, RandomnessError> {
        if v >= self.class_of.len() {
            return Err(RandomnessError::UnknownVertex(v));
        }
        let index = self.draw_count[v];
        let bit = self.peek(v, index);
        self.draw_count[v] += 1;
        self.log.push(Draw { vertex: v, class: self.class_of[v].clone(), index, bit });
        Ok(bit)
    }

    /// Moves `v` to another class, seeding it if new.
    pub fn reassign(&mut self, v: VertexId, class: String, seed: u64) {
        self.seeds.entry(class.clone()).or_insert(seed);
        self.class_of[v] = class;
    }

    /// A fresh copy with all counters at zero and an empty log.
    pub fn reset(&self) -> Self {
        Self::with_seeds(self.class_of.clone(), self.seeds.clone())
    }

    /// Redraws the logged bits in order, failing at the first bit that
    /// differs from the log.
    pub fn replay(&mut self, log: &[Draw]) -> Result<(), RandomnessError> {
        for d in log {
            let drawn = self.draw_bit(d.vertex)?;
            if drawn != d.bit || self.draw_count[d.vertex] != d.index + 1 {
                return Err(RandomnessError::ReplayMismatch { vertex: d.vertex, index: d.index, logged: d.bit, drawn });
            }
        }
        Ok(())
    }
}

/// Gives every vertex of the total digraph the source of its image, with the
/// base seeds. Under this assignment a covering cannot be told apart from its
/// base.
pub fn fiber_shared_assignment(
    total: &SymDigraph,
    base: &SymDigraph,
    phi: &Homomorphism,
    base_sources: &SourceAssignment,
) -> Result<SourceAssignment, RandomnessError> {
    crate::coverings::is_symmetric_covering(total, base, phi).map_err(|e| RandomnessError::NotProjection(e.to_string()))?;
    if base_sources.vertex_count() != base.vertex_count() {
        return Err(RandomnessError::NotProjection("base assignment size differs from the base".into()));
    }
    let class_of = total.vertices().map(|v| base_sources.class_of(phi.vertex(v).expect("covering is total")).to_string()).collect();
    Ok(SourceAssignment::with_seeds(class_of, base_sources.seeds.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_seed_accepts_decimal_and_hex() {
        assert_eq!(parse_seed("42").unwrap(), 42);
        assert_eq!(parse_seed("0x2a").unwrap(), 42);
        assert!(parse_seed("x").is_err());
    }

    #[test]
    fn derived_seeds_differ_by_name_and_tag() {
        assert_ne!(derive_seed(1, "source", "a"), derive_seed(1, "source", "b"));
        assert_ne!(derive_seed(1, "source", "a"), derive_seed(1, "trial", "a"));
        assert_ne!(derive_seed(1, "ab", ""), derive_seed(1, "a", "b"));
    }
}
