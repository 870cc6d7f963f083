//! Generators for networks, covering pairs and quasi-covering fixtures.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coverings::{check_quasi_covering, is_symmetric_covering, QuasiCoveringWitness};
use crate::graph::{build_dir, Edge, GraphError, GraphVertex, Homomorphism, LabeledGraph, Port, SymDigraph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error("bad generator spec {spec:?}: {reason}")]
    Parse { spec: String, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    /// Ports: 1 to the successor, 2 to the predecessor.
    Ring(usize),
    /// Ports: 1 toward the next vertex, 2 toward the previous one; the last
    /// vertex reaches its only neighbor through port 1.
    Path(usize),
    /// Vertex `i` reaches `j` through port `(j - i) mod n`.
    Clique(usize),
    /// Rectangular grid; ports numbered in the order east, west, south, north
    /// among the neighbors present.
    Grid(usize, usize),
    /// Wrap-around grid with ports east 1, west 2, south 3, north 4.
    Torus(usize, usize),
    /// Connected random graph: a random spanning tree plus random edges up
    /// to about the requested average degree, with shuffled ports.
    Random { n: usize, degree: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Labeling {
    Anonymous,
    Distinct,
    Pattern(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sources {
    /// A source of its own for each vertex.
    Unshared,
    /// One source for all vertices.
    Shared,
    Classes(Vec<String>),
    /// Vertex 0 alone, all others share one source.
    OneUnshared,
}

/// A network description such as `ring:6,anon,classes=ababab`.
///
/// The first item is the shape (`ring:N`, `path:N`, `clique:N`, `grid:WxH`,
/// `torus:WxH`, `random:N`), followed by options: `anon`, `distinct`,
/// `labels=PATTERN`, `unshared`, `shared`, `one-unshared`,
/// `classes=PATTERN`, and for random shapes `degree=D` and `seed=S`.
/// Patterns list one item per character, or `/`-separated items; a pattern
/// shorter than the graph repeats if its length divides the size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub shape: Shape,
    pub labeling: Labeling,
    pub sources: Sources,
}

/// Label given to every vertex of an anonymous network.
pub const ANONYMOUS_LABEL: &str = "_";

impl GeneratorSpec {
    pub fn new(shape: Shape, labeling: Labeling, sources: Sources) -> Self {
        Self { shape, labeling, sources }
    }

    pub fn size(&self) -> usize {
        match self.shape {
            Shape::Ring(n) | Shape::Path(n) | Shape::Clique(n) | Shape::Random { n, .. } => n,
            Shape::Grid(w, h) | Shape::Torus(w, h) => w * h,
        }
    }
}

fn split_pattern(p: &str) -> Vec<String> {
    if p.contains('/') {
        p.split('/').map(str::to_string).collect()
    } else {
        p.chars().map(|c| c.to_string()).collect()
    }
}

fn join_pattern(items: &[String]) -> String {
    if items.iter().all(|s| s.chars().count() == 1 && s != "/") {
        items.concat()
    } else {
        items.join("/")
    }
}

impl FromStr for GeneratorSpec {
    type Err = FamilyError;

    fn from_str(spec: &str) -> Result<Self, FamilyError> {
        let fail = |reason: String| FamilyError::Parse { spec: spec.to_string(), reason };
        let mut items = spec.split(',').map(str::trim);
        let head = items.next().unwrap_or_default();
        let (kind, arg) = head.split_once(':').ok_or_else(|| fail("expected SHAPE:SIZE first".into()))?;
        let int = |s: &str| s.parse::<usize>().map_err(|_| fail(format!("not a size: {s:?}")));
        let dims = |s: &str| -> Result<(usize, usize), FamilyError> {
            let (w, h) = s.split_once('x').ok_or_else(|| fail(format!("expected WxH, got {s:?}")))?;
            Ok((int(w)?, int(h)?))
        };
        let mut labeling = Labeling::Anonymous;
        let mut sources = Sources::Unshared;
        let (mut degree, mut seed) = (3usize, 0u64);
        for item in items {
            match item.split_once('=') {
                None => match item {
                    "anon" | "anonymous" => labeling = Labeling::Anonymous,
                    "distinct" => labeling = Labeling::Distinct,
                    "unshared" => sources = Sources::Unshared,
                    "shared" => sources = Sources::Shared,
                    "one-unshared" => sources = Sources::OneUnshared,
                    other => return Err(fail(format!("unknown option {other:?}"))),
                },
                Some(("labels", p)) => labeling = Labeling::Pattern(split_pattern(p)),
                Some(("classes", p)) => sources = Sources::Classes(split_pattern(p)),
                Some(("degree", d)) => degree = int(d)?,
                Some(("seed", s)) => seed = s.parse().map_err(|_| fail(format!("not a seed: {s:?}")))?,
                Some((k, _)) => return Err(fail(format!("unknown option {k:?}"))),
            }
        }
        let shape = match kind {
            "ring" => Shape::Ring(int(arg)?),
            "path" => Shape::Path(int(arg)?),
            "clique" => Shape::Clique(int(arg)?),
            "grid" => {
                let (w, h) = dims(arg)?;
                Shape::Grid(w, h)
            }
            "torus" => {
                let (w, h) = dims(arg)?;
                Shape::Torus(w, h)
            }
            "random" => Shape::Random { n: int(arg)?, degree, seed },
            other => return Err(fail(format!("unknown shape {other:?}"))),
        };
        Ok(GeneratorSpec { shape, labeling, sources })
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Ring(n) => write!(f, "ring:{n}")?,
            Shape::Path(n) => write!(f, "path:{n}")?,
            Shape::Clique(n) => write!(f, "clique:{n}")?,
            Shape::Grid(w, h) => write!(f, "grid:{w}x{h}")?,
            Shape::Torus(w, h) => write!(f, "torus:{w}x{h}")?,
            Shape::Random { n, .. } => write!(f, "random:{n}")?,
        }
        match &self.labeling {
            Labeling::Anonymous => write!(f, ",anon")?,
            Labeling::Distinct => write!(f, ",distinct")?,
            Labeling::Pattern(p) => write!(f, ",labels={}", join_pattern(p))?,
        }
        match &self.sources {
            Sources::Unshared => write!(f, ",unshared")?,
            Sources::Shared => write!(f, ",shared")?,
            Sources::OneUnshared => write!(f, ",one-unshared")?,
            Sources::Classes(p) => write!(f, ",classes={}", join_pattern(p))?,
        }
        if let Shape::Random { degree, seed, .. } = self.shape {
            write!(f, ",degree={degree},seed={seed}")?;
        }
        Ok(())
    }
}

fn expand(pattern: &[String], n: usize, what: &str) -> Result<Vec<String>, FamilyError> {
    if pattern.is_empty() || !n.is_multiple_of(pattern.len()) {
        return Err(FamilyError::Unsupported(format!("{what} pattern of length {} does not fit {n} vertices", pattern.len())));
    }
    Ok((0..n).map(|i| pattern[i % pattern.len()].clone()).collect())
}

/// Edges as `(u, v, port at u, port at v)`.
type RawEdges = Vec<(usize, usize, Port, Port)>;

fn shape_edges(shape: &Shape) -> Result<RawEdges, FamilyError> {
    let too_small = |what: &str| Err(FamilyError::Unsupported(what.to_string()));
    Ok(match *shape {
        Shape::Ring(n) => {
            if n < 3 {
                return too_small("rings need at least 3 vertices");
            }
            (0..n).map(|i| (i, (i + 1) % n, 1, 2)).collect()
        }
        Shape::Path(n) => {
            if n == 0 {
                return too_small("paths need at least 1 vertex");
            }
            (0..n.saturating_sub(1)).map(|i| (i, i + 1, 1, if i + 1 == n - 1 { 1 } else { 2 })).collect()
        }
        Shape::Clique(n) => {
            if n == 0 {
                return too_small("cliques need at least 1 vertex");
            }
            let mut e = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    e.push((i, j, (j - i) as Port, (n + i - j) as Port));
                }
            }
            e
        }
        Shape::Grid(w, h) => {
            if w == 0 || h == 0 {
                return too_small("grids need positive dimensions");
            }
            let id = |x: usize, y: usize| y * w + x;
            let neighbors = |x: usize, y: usize| {
                let mut out = Vec::new();
                if x + 1 < w {
                    out.push(id(x + 1, y));
                }
                if x > 0 {
                    out.push(id(x - 1, y));
                }
                if y + 1 < h {
                    out.push(id(x, y + 1));
                }
                if y > 0 {
                    out.push(id(x, y - 1));
                }
                out
            };
            let port = |u: usize, v: usize| neighbors(u % w, u / w).iter().position(|&z| z == v).expect("adjacent") as Port + 1;
            let mut e = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    for v in neighbors(x, y) {
                        let u = id(x, y);
                        if u < v {
                            e.push((u, v, port(u, v), port(v, u)));
                        }
                    }
                }
            }
            e
        }
        Shape::Torus(w, h) => {
            if w < 3 || h < 3 {
                return too_small("tori need both dimensions at least 3");
            }
            let id = |x: usize, y: usize| (y % h) * w + (x % w);
            let mut e = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    e.push((id(x, y), id(x + 1, y), 1, 2));
                    e.push((id(x, y), id(x, y + 1), 3, 4));
                }
            }
            e
        }
        Shape::Random { n, degree, seed } => random_edges(n, degree, seed)?,
    })
}

fn random_edges(n: usize, degree: usize, seed: u64) -> Result<RawEdges, FamilyError> {
    if n == 0 {
        return Err(FamilyError::Unsupported("random graphs need at least 1 vertex".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = std::collections::BTreeSet::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (a, b) = (order[i], order[j]);
        pairs.insert((a.min(b), a.max(b)));
    }
    let target = (n * degree / 2).min(n * (n - 1) / 2);
    let mut attempts = 0;
    while pairs.len() < target && attempts < 100 * n * n {
        attempts += 1;
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &pairs {
        incident[a].push(b);
        incident[b].push(a);
    }
    for list in &mut incident {
        list.shuffle(&mut rng);
    }
    let port = |u: usize, v: usize| incident[u].iter().position(|&z| z == v).expect("adjacent") as Port + 1;
    Ok(pairs.iter().map(|&(a, b)| (a, b, port(a, b), port(b, a))).collect())
}

/// Builds the network a spec describes. Deterministic in the spec.
pub fn generate(spec: &GeneratorSpec) -> Result<LabeledGraph, FamilyError> {
    let edges = shape_edges(&spec.shape)?;
    let n = spec.size();
    let labels = match &spec.labeling {
        Labeling::Anonymous => vec![ANONYMOUS_LABEL.to_string(); n],
        Labeling::Distinct => (0..n).map(|i| format!("l{i:03}")).collect(),
        Labeling::Pattern(p) => expand(p, n, "label")?,
    };
    let sources = match &spec.sources {
        Sources::Unshared => (0..n).map(|i| format!("s{i}")).collect(),
        Sources::Shared => vec!["s".to_string(); n],
        Sources::OneUnshared => (0..n).map(|i| if i == 0 { "u".to_string() } else { "s".to_string() }).collect(),
        Sources::Classes(p) => expand(p, n, "class")?,
    };
    assemble(&labels, &sources, &edges, |i| format!("v{i}"))
}

fn assemble(labels: &[String], sources: &[String], edges: &RawEdges, id: impl Fn(usize) -> String) -> Result<LabeledGraph, FamilyError> {
    let vertices = (0..labels.len())
        .map(|i| GraphVertex { id: id(i), label: labels[i].clone(), source: sources[i].clone() })
        .collect();
    let edges = edges.iter().map(|&(u, v, pu, pv)| Edge { u, v, pu, pv }).collect();
    Ok(LabeledGraph::new(vertices, edges)?)
}

/// A network, a smaller network it covers, and the projection between their
/// digraphs. Every vertex of the total network shares the source class of
/// its image.
#[derive(Debug, Clone)]
pub struct CoveringPair {
    pub total: LabeledGraph,
    pub base: LabeledGraph,
    pub phi: Homomorphism,
    pub sheets: usize,
}

impl CoveringPair {
    pub fn total_dir(&self) -> SymDigraph {
        build_dir(&self.total)
    }

    pub fn base_dir(&self) -> SymDigraph {
        build_dir(&self.base)
    }
}

/// A `sheets`-fold covering of the network described by `base_spec`. Rings
/// are covered by longer rings; other shapes by a cyclic voltage lift drawn
/// from `seed` and redrawn until connected. Trees have no connected
/// coverings and are refused.
pub fn generate_covering_pair(base_spec: &GeneratorSpec, sheets: usize, seed: u64) -> Result<CoveringPair, FamilyError> {
    if sheets == 0 {
        return Err(FamilyError::Unsupported("a covering needs at least one sheet".into()));
    }
    let base = generate(base_spec)?;
    let n = base.vertex_count();
    if base.edges().len() + 1 == n && sheets > 1 {
        return Err(FamilyError::Unsupported("trees have no connected covering with more than one sheet".into()));
    }
    let fiber_of = |v: usize, k: usize| k * n + v;
    let labels: Vec<String> = (0..n * sheets).map(|i| base.vertices()[i % n].label.clone()).collect();
    let sources: Vec<String> = (0..n * sheets).map(|i| base.vertices()[i % n].source.clone()).collect();
    let ring = matches!(base_spec.shape, Shape::Ring(_));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = (0..1000)
        .find_map(|_| {
            // Ring edges are listed in order, so voltage 1 on the closing edge
            // yields the single long ring.
            let voltages: Vec<usize> = (0..base.edges().len())
                .map(|i| if ring { usize::from(i + 1 == n) } else { rng.gen_range(0..sheets) })
                .collect();
            let mut edges = Vec::new();
            for (e, g) in base.edges().iter().zip(&voltages) {
                for k in 0..sheets {
                    edges.push((fiber_of(e.u, k), fiber_of(e.v, (k + g) % sheets), e.pu, e.pv));
                }
            }
            let id = |i: usize| if sheets == 1 { base.vertices()[i].id.clone() } else { format!("{}.{}", base.vertices()[i % n].id, i / n) };
            assemble(&labels, &sources, &edges, id).ok()
        })
        .ok_or_else(|| FamilyError::Unsupported("no connected lift found".into()))?;
    let (td, bd) = (build_dir(&total), build_dir(&base));
    let phi = Homomorphism::from_vertex_map(&td, &bd, (0..total.vertex_count()).map(|i| Some(i % n)).collect());
    let w = is_symmetric_covering(&td, &bd, &phi).map_err(|e| FamilyError::Unsupported(format!("generated lift is not a covering: {e}")))?;
    Ok(CoveringPair { total, base, phi, sheets: w.sheets })
}

/// A quasi-covering together with the digraphs it relates.
#[derive(Debug, Clone)]
pub struct QuasiFixture {
    pub name: String,
    pub d1: SymDigraph,
    pub d0: SymDigraph,
    pub witness: QuasiCoveringWitness,
}

/// Largest radius for which `gamma` passes the quasi-covering check around
/// `center`, capped at `cap`.
pub fn max_quasi_radius(d1: &SymDigraph, d0: &SymDigraph, center: VertexId, gamma: &Homomorphism, cap: usize) -> Option<QuasiCoveringWitness> {
    let mut best = None;
    for r in 0..=cap {
        match check_quasi_covering(d1, d0, center, r, gamma) {
            Ok(Some(w)) => best = Some(w),
            _ => break,
        }
    }
    best
}

/// The graph `g` wrapped onto a ring of `n` vertices by `i -> i mod n`,
/// around the middle vertex, at the largest radius that works. Vertex
/// labels and sources of `g` must follow the ring's pattern.
fn wrap_onto_ring(name: String, g: &LabeledGraph, ring: &LabeledGraph) -> Result<QuasiFixture, FamilyError> {
    let (d1, d0) = (build_dir(g), build_dir(ring));
    let n = ring.vertex_count();
    let gamma = Homomorphism::from_vertex_map(&d1, &d0, (0..g.vertex_count()).map(|i| Some(i % n)).collect());
    let center = g.vertex_count() / 2;
    let witness = max_quasi_radius(&d1, &d0, center, &gamma, d1.vertex_count() + 1)
        .ok_or_else(|| FamilyError::Unsupported(format!("{name}: no quasi-covering at radius 0")))?;
    Ok(QuasiFixture { name, d1, d0, witness })
}

/// A path of `m` vertices over a ring of `n`, both with the repeated label
/// and source patterns given.
pub fn path_over_ring(m: usize, n: usize, labels: &[String], classes: &[String]) -> Result<QuasiFixture, FamilyError> {
    let ring_spec = GeneratorSpec::new(Shape::Ring(n), Labeling::Pattern(expand(labels, n, "label")?), Sources::Classes(expand(classes, n, "class")?));
    let ring = generate(&ring_spec)?;
    let cyc = |p: &[String]| (0..m).map(|i| p[i % p.len()].clone()).collect::<Vec<_>>();
    let (ls, cs) = (cyc(&expand(labels, n, "label")?), cyc(&expand(classes, n, "class")?));
    let path = generate(&GeneratorSpec::new(Shape::Path(m), Labeling::Pattern(ls), Sources::Classes(cs)))?;
    wrap_onto_ring(format!("path:{m} over ring:{n}"), &path, &ring)
}

/// A ring of `m` vertices over a ring of `n`; a covering when `n` divides
/// `m`, a proper quasi-covering otherwise.
pub fn ring_over_ring(m: usize, n: usize, labels: &[String], classes: &[String]) -> Result<QuasiFixture, FamilyError> {
    let ring_spec = GeneratorSpec::new(Shape::Ring(n), Labeling::Pattern(expand(labels, n, "label")?), Sources::Classes(expand(classes, n, "class")?));
    let ring = generate(&ring_spec)?;
    let cyc = |p: &[String]| (0..m).map(|i| p[i % p.len()].clone()).collect::<Vec<_>>();
    let (ls, cs) = (cyc(&expand(labels, n, "label")?), cyc(&expand(classes, n, "class")?));
    let big = generate(&GeneratorSpec::new(Shape::Ring(m), Labeling::Pattern(ls), Sources::Classes(cs)))?;
    wrap_onto_ring(format!("ring:{m} over ring:{n}"), &big, &ring)
}

/// The ring of `n * sheets` vertices over the ring of `n`, as digraphs, for
/// any `n >= 1`: the 2-vertex ring has a double edge and the 1-vertex ring
/// two loops, so neither is a simple graph. Labels and source classes
/// repeat cyclically.
pub fn ring_covering_digraphs(n: usize, sheets: usize, labels: &[String], classes: &[String]) -> Result<(SymDigraph, SymDigraph, Homomorphism), FamilyError> {
    if n == 0 || sheets == 0 {
        return Err(FamilyError::Unsupported("rings need at least one vertex and one sheet".into()));
    }
    let (ls, cs) = (expand(labels, n, "label")?, expand(classes, n, "class")?);
    let ring = |m: usize| {
        let vertex_labels = (0..m).map(|i| crate::graph::VertexLabel::with_source(ls[i % n].clone(), cs[i % n].clone())).collect();
        let mut d = SymDigraph::new((0..m).map(|i| format!("v{i}")).collect(), vertex_labels);
        for i in 0..m {
            d.add_arc_pair(i, (i + 1) % m, 1, 2);
        }
        d
    };
    let (total, base) = (ring(n * sheets), ring(n));
    let phi = Homomorphism::from_vertex_map(&total, &base, (0..n * sheets).map(|i| Some(i % n)).collect());
    is_symmetric_covering(&total, &base, &phi).map_err(|e| FamilyError::Unsupported(format!("ring lift is not a covering: {e}")))?;
    Ok((total, base, phi))
}
