use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use super::{ArcId, Edge, GraphError, GraphVertex, LabeledGraph, Port, VertexId, VertexLabel};

/// An arc `source -> target` labeled by the port pair `(p, q)`: `p` is the
/// port at the source, `q` the port at the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Arc {
    pub source: VertexId,
    pub target: VertexId,
    pub ports: (Port, Port),
}

/// A labeled digraph whose arcs come in pairs exchanged by the involution
/// `sym`. Loops and multi-arcs are allowed.
///
/// Construction does not validate: fixtures with broken invariants must be
/// representable so that [`SymDigraph::validate`] can report them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymDigraph {
    vertex_ids: Vec<String>,
    labels: Vec<VertexLabel>,
    arcs: Vec<Arc>,
    arc_ids: Vec<String>,
    sym: Vec<Option<ArcId>>,
    out: Vec<Vec<ArcId>>,
    inc: Vec<Vec<ArcId>>,
}

/// One violated invariant of a symmetric port-labeled digraph.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("digraph has no vertices")]
    Empty,
    #[error("sym undefined on arc {0}")]
    SymUndefined(String),
    #[error("sym is not an involution on arc {0}")]
    SymNotInvolution(String),
    #[error("arc {0} does not start where its sym partner ends")]
    SymEndpoints(String),
    #[error("label of sym({arc}) is not the reversed label")]
    LabelNotReversed { arc: String },
    #[error("out-ports of {vertex} are {found:?}, expected 1..={degree}")]
    PortSet { vertex: String, degree: usize, found: Vec<Port> },
    #[error("digraph is not strongly connected: {0} is unreachable")]
    Disconnected(String),
}

impl SymDigraph {
    /// A digraph with the given vertices and no arcs.
    pub fn new(vertex_ids: Vec<String>, labels: Vec<VertexLabel>) -> Self {
        assert_eq!(vertex_ids.len(), labels.len(), "one label per vertex");
        let n = vertex_ids.len();
        Self {
            vertex_ids,
            labels,
            arcs: Vec::new(),
            arc_ids: Vec::new(),
            sym: Vec::new(),
            out: vec![Vec::new(); n],
            inc: vec![Vec::new(); n],
        }
    }

    /// A digraph on vertices named `v0, v1, ...`.
    pub fn with_labels(labels: Vec<VertexLabel>) -> Self {
        let ids = (0..labels.len()).map(|i| format!("v{i}")).collect();
        Self::new(ids, labels)
    }

    /// Adds a single arc without a sym partner.
    pub fn add_arc(&mut self, id: impl Into<String>, source: VertexId, target: VertexId, ports: (Port, Port)) -> ArcId {
        let a = self.arcs.len();
        self.arcs.push(Arc { source, target, ports });
        self.arc_ids.push(id.into());
        self.sym.push(None);
        self.out[source].push(a);
        self.inc[target].push(a);
        a
    }

    /// Sets `sym(a) = b` and `sym(b) = a`.
    pub fn pair(&mut self, a: ArcId, b: ArcId) {
        self.sym[a] = Some(b);
        self.sym[b] = Some(a);
    }

    /// Sets `sym(a) = b` only.
    pub fn set_sym(&mut self, a: ArcId, b: Option<ArcId>) {
        self.sym[a] = b;
    }

    /// Adds `u -> v` labeled `(p, q)` and `v -> u` labeled `(q, p)`, paired by
    /// sym. With `u == v` and `p == q` a single self-paired loop is added and
    /// returned twice.
    pub fn add_arc_pair(&mut self, u: VertexId, v: VertexId, p: Port, q: Port) -> (ArcId, ArcId) {
        if u == v && p == q {
            let a = self.add_arc(format!("{}~{}", self.vertex_ids[u], p), u, u, (p, p));
            self.pair(a, a);
            return (a, a);
        }
        let a = self.add_arc(format!("{}:{}->{}", self.vertex_ids[u], p, self.vertex_ids[v]), u, v, (p, q));
        let b = self.add_arc(format!("{}:{}->{}", self.vertex_ids[v], q, self.vertex_ids[u]), v, u, (q, p));
        self.pair(a, b);
        (a, b)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.labels.len()
    }

    pub fn vertex_id(&self, v: VertexId) -> &str {
        &self.vertex_ids[v]
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn vertex_index(&self, id: &str) -> Option<VertexId> {
        self.vertex_ids.iter().position(|x| x == id)
    }

    pub fn arc_id(&self, a: ArcId) -> &str {
        &self.arc_ids[a]
    }

    pub fn arc_index(&self, id: &str) -> Option<ArcId> {
        self.arc_ids.iter().position(|x| x == id)
    }

    pub fn label(&self, v: VertexId) -> &VertexLabel {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[VertexLabel] {
        &self.labels
    }

    pub fn arc(&self, a: ArcId) -> &Arc {
        &self.arcs[a]
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn sym(&self, a: ArcId) -> Option<ArcId> {
        self.sym[a]
    }

    /// Arcs leaving `v`, in insertion order.
    pub fn out_arcs(&self, v: VertexId) -> &[ArcId] {
        &self.out[v]
    }

    /// Arcs entering `v`, in insertion order.
    pub fn in_arcs(&self, v: VertexId) -> &[ArcId] {
        &self.inc[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.out[v].len()
    }

    /// The arc leaving `v` through port `p`.
    pub fn out_arc_at(&self, v: VertexId, p: Port) -> Option<ArcId> {
        self.out[v].iter().copied().find(|&a| self.arcs[a].ports.0 == p)
    }

    /// Out-arcs of `v` sorted by their port at `v`.
    pub fn out_arcs_by_port(&self, v: VertexId) -> Vec<ArcId> {
        let mut arcs = self.out[v].clone();
        arcs.sort_by_key(|&a| self.arcs[a].ports);
        arcs
    }

    /// Every violated invariant; empty iff the digraph is a strongly
    /// connected member of the port-labeled class.
    pub fn validate(&self) -> Vec<Violation> {
        let mut report = Vec::new();
        if self.labels.is_empty() {
            report.push(Violation::Empty);
            return report;
        }
        for (a, arc) in self.arcs.iter().enumerate() {
            let name = || self.arc_ids[a].clone();
            let Some(b) = self.sym[a] else {
                report.push(Violation::SymUndefined(name()));
                continue;
            };
            if self.sym[b] != Some(a) {
                report.push(Violation::SymNotInvolution(name()));
            }
            let partner = &self.arcs[b];
            if arc.source != partner.target || arc.target != partner.source {
                report.push(Violation::SymEndpoints(name()));
            }
            if partner.ports != (arc.ports.1, arc.ports.0) {
                report.push(Violation::LabelNotReversed { arc: name() });
            }
        }
        for v in self.vertices() {
            let mut found: Vec<Port> = self.out[v].iter().map(|&a| self.arcs[a].ports.0).collect();
            found.sort_unstable();
            let degree = found.len();
            if !found.iter().copied().eq(1..=degree as Port) {
                report.push(Violation::PortSet { vertex: self.vertex_ids[v].clone(), degree, found });
            }
        }
        let forward = self.reach(0, |a| self.arcs[a].target, &self.out);
        let backward = self.reach(0, |a| self.arcs[a].source, &self.inc);
        if let Some(v) = self.vertices().find(|&v| !forward[v] || !backward[v]) {
            report.push(Violation::Disconnected(self.vertex_ids[v].clone()));
        }
        report
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Fails with the first violation, if any.
    pub fn ensure_valid(&self) -> Result<(), GraphError> {
        match self.validate().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(GraphError::NotPortLabeled(v.to_string())),
        }
    }

    fn reach(&self, start: VertexId, step: impl Fn(ArcId) -> VertexId, adj: &[Vec<ArcId>]) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count()];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &a in &adj[x] {
                let y = step(a);
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    }

    /// Hop distances from `v`, ignoring arc direction. `None` for
    /// unreachable vertices.
    pub fn distances_from(&self, v: VertexId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        dist[v] = Some(0);
        let mut queue = VecDeque::from([v]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap_or(0);
            let next = self.out[x].iter().map(|&a| self.arcs[a].target).chain(self.inc[x].iter().map(|&a| self.arcs[a].source));
            for y in next {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> usize {
        self.vertices()
            .map(|v| self.distances_from(v).into_iter().flatten().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// The same digraph with every vertex label replaced.
    pub fn relabeled(&self, labels: Vec<VertexLabel>) -> Self {
        assert_eq!(labels.len(), self.vertex_count());
        Self { labels, ..self.clone() }
    }

    /// The same digraph with source classes dropped from all vertex labels.
    pub fn forget_sources(&self) -> Self {
        self.relabeled(self.labels.iter().map(VertexLabel::without_source).collect())
    }

    /// Recovers the port-numbered graph of a digraph built by [`build_dir`].
    pub fn to_graph(&self) -> Result<LabeledGraph, GraphError> {
        self.ensure_valid()?;
        let vertices = self
            .vertices()
            .map(|v| GraphVertex {
                id: self.vertex_ids[v].clone(),
                label: self.labels[v].label.clone(),
                source: self.labels[v].source.clone().unwrap_or_default(),
            })
            .collect();
        let mut edges = Vec::new();
        for (a, arc) in self.arcs.iter().enumerate() {
            if arc.source == arc.target {
                return Err(GraphError::Structure(format!("loop {} has no graph counterpart", self.arc_ids[a])));
            }
            if arc.source < arc.target {
                edges.push(Edge { u: arc.source, v: arc.target, pu: arc.ports.0, pv: arc.ports.1 });
            }
        }
        LabeledGraph::new(vertices, edges)
    }
}

/// The symmetric digraph of a port-numbered graph: one pair of opposite arcs
/// per edge, labeled by the ports read at each end. Vertex labels keep their
/// source classes.
pub fn build_dir(g: &LabeledGraph) -> SymDigraph {
    let ids = g.vertices().iter().map(|v| v.id.clone()).collect();
    let labels = (0..g.vertex_count()).map(|v| g.vertex_label(v)).collect();
    let mut d = SymDigraph::new(ids, labels);
    for e in g.edges() {
        let a = d.add_arc(format!("{}->{}", g.vertices()[e.u].id, g.vertices()[e.v].id), e.u, e.v, (e.pu, e.pv));
        let b = d.add_arc(format!("{}->{}", g.vertices()[e.v].id, g.vertices()[e.u].id), e.v, e.u, (e.pv, e.pu));
        d.pair(a, b);
    }
    d
}

/// A possibly partial map between two digraphs. Which digraphs it relates is
/// left to the caller; checks take both explicitly.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Homomorphism {
    pub vertex_map: Vec<Option<VertexId>>,
    pub arc_map: Vec<Option<ArcId>>,
}

impl Homomorphism {
    pub fn identity(d: &SymDigraph) -> Self {
        Self { vertex_map: d.vertices().map(Some).collect(), arc_map: (0..d.arc_count()).map(Some).collect() }
    }

    /// Extends a vertex map to arcs by following ports: the image of an arc
    /// leaving `u` through port `p` is the arc leaving `image(u)` through `p`.
    /// Nothing is checked here; the result may fail [`Homomorphism::check`].
    pub fn from_vertex_map(dom: &SymDigraph, cod: &SymDigraph, vertex_map: Vec<Option<VertexId>>) -> Self {
        let arc_map = dom
            .arcs()
            .iter()
            .map(|arc| vertex_map[arc.source].and_then(|s| cod.out_arc_at(s, arc.ports.0)))
            .collect();
        Self { vertex_map, arc_map }
    }

    pub fn is_total(&self) -> bool {
        self.vertex_map.iter().all(Option::is_some) && self.arc_map.iter().all(Option::is_some)
    }

    pub fn vertex(&self, v: VertexId) -> Option<VertexId> {
        self.vertex_map.get(v).copied().flatten()
    }

    pub fn arc(&self, a: ArcId) -> Option<ArcId> {
        self.arc_map.get(a).copied().flatten()
    }

    /// Preimages of each codomain vertex.
    pub fn fibers(&self, codomain_size: usize) -> Vec<Vec<VertexId>> {
        let mut fibers = vec![Vec::new(); codomain_size];
        for (v, img) in self.vertex_map.iter().enumerate() {
            if let Some(w) = img {
                fibers[*w].push(v);
            }
        }
        fibers
    }

    /// `next ∘ self`, defined where both steps are.
    pub fn then(&self, next: &Homomorphism) -> Homomorphism {
        Homomorphism {
            vertex_map: self.vertex_map.iter().map(|v| v.and_then(|v| next.vertex(v))).collect(),
            arc_map: self.arc_map.iter().map(|a| a.and_then(|a| next.arc(a))).collect(),
        }
    }

    /// Checks, on the part where the map is defined, that incidence and
    /// labels are preserved. Returns the first problem found.
    pub fn check(&self, dom: &SymDigraph, cod: &SymDigraph) -> Result<(), String> {
        if self.vertex_map.len() != dom.vertex_count() || self.arc_map.len() != dom.arc_count() {
            return Err("map sizes do not match the domain".into());
        }
        for (v, img) in self.vertex_map.iter().enumerate() {
            if let Some(w) = *img {
                if w >= cod.vertex_count() {
                    return Err(format!("vertex {} maps outside the codomain", dom.vertex_id(v)));
                }
                if dom.label(v) != cod.label(w) {
                    return Err(format!(
                        "vertex {} labeled {} maps to {} labeled {}",
                        dom.vertex_id(v),
                        dom.label(v),
                        cod.vertex_id(w),
                        cod.label(w)
                    ));
                }
            }
        }
        for (a, img) in self.arc_map.iter().enumerate() {
            let Some(b) = *img else { continue };
            if b >= cod.arc_count() {
                return Err(format!("arc {} maps outside the codomain", dom.arc_id(a)));
            }
            let (x, y) = (dom.arc(a), cod.arc(b));
            if x.ports != y.ports {
                return Err(format!("arc {} label {:?} maps to label {:?}", dom.arc_id(a), x.ports, y.ports));
            }
            for (end, mine, theirs) in [("source", x.source, y.source), ("target", x.target, y.target)] {
                if self.vertex(mine) != Some(theirs) {
                    return Err(format!("arc {} does not preserve its {end}", dom.arc_id(a)));
                }
            }
        }
        Ok(())
    }

    /// Human-readable map keyed by domain vertex ids.
    pub fn describe_vertices(&self, dom: &SymDigraph, cod: &SymDigraph) -> BTreeMap<String, String> {
        self.vertex_map
            .iter()
            .enumerate()
            .filter_map(|(v, w)| w.map(|w| (dom.vertex_id(v).to_string(), cod.vertex_id(w).to_string())))
            .collect()
    }
}

impl fmt::Display for SymDigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} vertices, {} arcs", self.vertex_count(), self.arc_count())?;
        for v in self.vertices() {
            write!(f, "  {} [{}]:", self.vertex_ids[v], self.labels[v])?;
            for a in self.out_arcs_by_port(v) {
                let arc = &self.arcs[a];
                write!(f, " ({},{})->{}", arc.ports.0, arc.ports.1, self.vertex_ids[arc.target])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
