//! Labeled graphs, their symmetric-digraph encodings, balls, truncated views
//! and digraph isomorphism.
//!
//! A network is a [`LabeledGraph`]: a simple connected graph whose vertices
//! carry a label and a random-source class, and whose incident edges are
//! numbered locally by ports. All structural reasoning happens on the
//! [`SymDigraph`] obtained with [`build_dir`]: each edge becomes a pair of
//! opposite arcs exchanged by the involution `sym`, and each arc is labeled
//! by the pair of port numbers `(p, q)` read at its source and target.

mod ball;
mod digraph;
mod iso;
mod json;
mod labeled;
mod view;

pub use ball::{ball, Ball};
pub use digraph::{build_dir, Arc, Homomorphism, SymDigraph, Violation};
pub use iso::{canonical_form, find_isomorphism, is_isomorphic, CanonicalForm};
pub use json::{DigraphFile, GraphFile, HomomorphismFile};
pub use labeled::{Edge, GraphVertex, LabeledGraph};
pub use view::{truncated_view, ViewNode, ViewTree};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Index of a vertex inside a graph or digraph.
pub type VertexId = usize;
/// Index of an arc inside a [`SymDigraph`].
pub type ArcId = usize;
/// A port number; ports of a vertex of degree `d` are exactly `1..=d`.
pub type Port = u32;

/// Label of a vertex: an element of the ordered label set, optionally paired
/// with the random-source class of the vertex.
///
/// Ordering is lexicographic on `(label, source)` with an absent source
/// ordered first, so labels without sources compare exactly like strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexLabel {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl VertexLabel {
    pub fn plain(label: impl Into<String>) -> Self {
        Self { label: label.into(), source: None }
    }

    pub fn with_source(label: impl Into<String>, source: impl Into<String>) -> Self {
        Self { label: label.into(), source: Some(source.into()) }
    }

    /// The same label with the source class dropped.
    pub fn without_source(&self) -> Self {
        Self { label: self.label.clone(), source: None }
    }
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Some(s) => write!(f, "{}@{}", self.label, s),
            None => f.write_str(&self.label),
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("invalid graph: {0}")]
    Structure(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("cannot read {0}")]
    Io(String),
    #[error("digraph is not a valid port-labeled symmetric digraph: {0}")]
    NotPortLabeled(String),
}
