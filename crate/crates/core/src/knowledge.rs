//! What nodes know in advance about the network, the family of networks
//! that knowledge allows, and the stability radius after which a node may
//! stop.

use std::fmt;
use std::path::Path;

use crate::coverings::{is_b_minimal, CoveringError};
use crate::graph::{build_dir, is_isomorphic, GraphError, GraphFile, LabeledGraph, SymDigraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KnowledgeError {
    #[error("bad knowledge descriptor {0:?}: expected none, bound:S, two-approx:T, exact-size:N, topology:FILE or bk:K")]
    Parse(String),
    #[error("no stopping radius exists without knowledge about the network")]
    NoThreshold,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Covering(#[from] CoveringError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Knowledge {
    None,
    /// At most this many nodes.
    SizeBound(u32),
    /// Size in `(T/2, T]`.
    TwoApprox(u32),
    ExactSize(u32),
    /// The network itself, up to isomorphism.
    Topology(Box<SymDigraph>),
    /// Source classes are part of the labels, and at most `K` nodes share
    /// their source with another node.
    BoundedSharing(u32),
}

impl Knowledge {
    /// Parses a descriptor; `topology:FILE` reads a graph file, relative
    /// paths resolved against `base_dir`.
    pub fn parse(s: &str, base_dir: &Path) -> Result<Self, KnowledgeError> {
        let bad = || KnowledgeError::Parse(s.to_string());
        if s.trim() == "none" {
            return Ok(Knowledge::None);
        }
        let (kind, arg) = s.trim().split_once(':').ok_or_else(bad)?;
        let num = || arg.parse::<u32>().map_err(|_| bad());
        Ok(match kind {
            "bound" => Knowledge::SizeBound(num()?),
            "two-approx" => Knowledge::TwoApprox(num()?),
            "exact-size" => Knowledge::ExactSize(num()?),
            "bk" => Knowledge::BoundedSharing(num()?),
            "topology" => Knowledge::Topology(Box::new(build_dir(&GraphFile::load(&base_dir.join(arg))?))),
            _ => return Err(bad()),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Knowledge::None => "none",
            Knowledge::SizeBound(_) => "bound",
            Knowledge::TwoApprox(_) => "two-approx",
            Knowledge::ExactSize(_) => "exact-size",
            Knowledge::Topology(_) => "topology",
            Knowledge::BoundedSharing(_) => "bk",
        }
    }

    /// Whether nodes know their source class, so that it belongs in labels.
    pub fn sources_in_labels(&self) -> bool {
        matches!(self, Knowledge::BoundedSharing(_))
    }

    /// The digraph the nodes of `g` run on: sources are kept in the labels
    /// only when the knowledge includes them.
    pub fn network(&self, g: &LabeledGraph) -> SymDigraph {
        let d = build_dir(g);
        if self.sources_in_labels() {
            d
        } else {
            d.forget_sources()
        }
    }
}

impl fmt::Display for Knowledge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Knowledge::None => write!(f, "none"),
            Knowledge::SizeBound(s) => write!(f, "bound:{s}"),
            Knowledge::TwoApprox(t) => write!(f, "two-approx:{t}"),
            Knowledge::ExactSize(n) => write!(f, "exact-size:{n}"),
            Knowledge::Topology(d) => write!(f, "topology:<{} vertices>", d.vertex_count()),
            Knowledge::BoundedSharing(k) => write!(f, "bk:{k}"),
        }
    }
}

/// Number of vertices whose source class contains another vertex, or `None`
/// if some vertex carries no source.
pub fn shared_vertex_count(d: &SymDigraph) -> Option<usize> {
    let mut sizes = std::collections::BTreeMap::new();
    for v in d.vertices() {
        *sizes.entry(d.label(v).source.as_ref()?).or_insert(0usize) += 1;
    }
    Some(sizes.values().filter(|&&n| n > 1).sum())
}

/// Whether `d` belongs to the family the knowledge describes.
pub fn family_contains(k: &Knowledge, d: &SymDigraph) -> bool {
    let n = d.vertex_count() as u64;
    match k {
        Knowledge::None => true,
        Knowledge::SizeBound(s) => n <= u64::from(*s),
        Knowledge::TwoApprox(t) => 2 * n > u64::from(*t) && n <= u64::from(*t),
        Knowledge::ExactSize(s) => n == u64::from(*s),
        Knowledge::Topology(t) => {
            let has_sources = d.vertices().any(|v| d.label(v).source.is_some());
            let reference = if has_sources { (**t).clone() } else { t.forget_sources() };
            is_isomorphic(&reference, d).unwrap_or(false)
        }
        Knowledge::BoundedSharing(k) => shared_vertex_count(d).is_some_and(|c| c as u64 <= u64::from(*k)),
    }
}

/// Radius of stability after which a node whose reconstructed digraph is `d`
/// may decide.
pub fn tau_of(k: &Knowledge, d: &SymDigraph) -> Result<u64, KnowledgeError> {
    let n = d.vertex_count() as u64;
    match k {
        Knowledge::None => Err(KnowledgeError::NoThreshold),
        Knowledge::SizeBound(s) => Ok(2 * u64::from(*s)),
        Knowledge::TwoApprox(_) | Knowledge::ExactSize(_) | Knowledge::Topology(_) => Ok(2 * n),
        Knowledge::BoundedSharing(k) => Ok((u64::from(*k) + 1) * n),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    /// Terminates with probability 1 and is always right.
    LasVegas,
    /// Always terminates, right with positive probability.
    MonteCarlo,
    Refuse(String),
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::LasVegas => "las-vegas",
            Mode::MonteCarlo => "monte-carlo",
            Mode::Refuse(_) => "refuse",
        }
    }
}

/// Which guarantee the election can give on `corpus` with knowledge `k`.
///
/// Knowing the size, a 2-approximation or the topology excludes every
/// quasi-covering beyond the stopping radius, so every member being
/// minimal with its sources yields an always-correct election. A size bound
/// or bounded sharing only excludes proper quasi-coverings.
pub fn decide_mode(k: &Knowledge, corpus: &[LabeledGraph]) -> Result<Mode, KnowledgeError> {
    if *k == Knowledge::None {
        return Ok(Mode::Refuse("election is impossible when nothing is known about the network".into()));
    }
    for (i, g) in corpus.iter().enumerate() {
        if !family_contains(k, &k.network(g)) {
            return Ok(Mode::Refuse(format!("network {i} ({} vertices) is outside the family {k}", g.vertex_count())));
        }
    }
    Ok(match k {
        Knowledge::TwoApprox(_) | Knowledge::ExactSize(_) | Knowledge::Topology(_) => {
            let mut all_minimal = true;
            for g in corpus {
                all_minimal &= is_b_minimal(g)?;
            }
            if all_minimal {
                Mode::LasVegas
            } else {
                Mode::MonteCarlo
            }
        }
        _ => Mode::MonteCarlo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{generate, GeneratorSpec};

    fn dir(spec: &str) -> SymDigraph {
        build_dir(&generate(&spec.parse::<GeneratorSpec>().unwrap()).unwrap())
    }

    #[test]
    fn two_approx_membership() {
        let k = Knowledge::TwoApprox(8);
        assert!(family_contains(&k, &dir("ring:5")));
        assert!(!family_contains(&k, &dir("ring:4")));
        assert!(!family_contains(&k, &dir("ring:9")));
    }

    #[test]
    fn bounded_sharing_counts_shared_vertices() {
        let k = Knowledge::BoundedSharing(2);
        assert!(family_contains(&k, &dir("ring:6,unshared")));
        assert!(family_contains(&k, &dir("ring:4,classes=aabc")));
        assert!(!family_contains(&k, &dir("ring:4,classes=aaab")));
        assert!(!family_contains(&k, &dir("ring:4").forget_sources()));
    }

    #[test]
    fn thresholds() {
        let d5 = dir("ring:5");
        assert_eq!(tau_of(&Knowledge::BoundedSharing(2), &d5).unwrap(), 15);
        assert_eq!(tau_of(&Knowledge::TwoApprox(8), &d5).unwrap(), 10);
        assert_eq!(tau_of(&Knowledge::ExactSize(4), &dir("ring:4")).unwrap(), 8);
        assert_eq!(tau_of(&Knowledge::SizeBound(7), &d5).unwrap(), 14);
        assert_eq!(tau_of(&Knowledge::None, &d5), Err(KnowledgeError::NoThreshold));
    }

    #[test]
    fn modes() {
        let minimal = generate(&"ring:5,anon,one-unshared".parse().unwrap()).unwrap();
        let symmetric = generate(&"ring:6,anon,classes=ababab".parse().unwrap()).unwrap();
        assert_eq!(decide_mode(&Knowledge::ExactSize(5), &[minimal.clone()]).unwrap(), Mode::LasVegas);
        assert_eq!(decide_mode(&Knowledge::ExactSize(6), &[symmetric]).unwrap(), Mode::MonteCarlo);
        assert_eq!(decide_mode(&Knowledge::SizeBound(5), &[minimal.clone()]).unwrap(), Mode::MonteCarlo);
        assert!(matches!(decide_mode(&Knowledge::None, &[minimal.clone()]).unwrap(), Mode::Refuse(_)));
        assert!(matches!(decide_mode(&Knowledge::ExactSize(4), &[minimal]).unwrap(), Mode::Refuse(_)));
    }

    #[test]
    fn parse_descriptors() {
        let here = Path::new(".");
        assert_eq!(Knowledge::parse("bk:2", here).unwrap(), Knowledge::BoundedSharing(2));
        assert_eq!(Knowledge::parse("two-approx:8", here).unwrap(), Knowledge::TwoApprox(8));
        assert_eq!(Knowledge::parse("none", here).unwrap(), Knowledge::None);
        assert!(Knowledge::parse("size", here).is_err());
    }
}
