use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{GraphError, Port, VertexId, VertexLabel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphVertex {
    pub id: String,
    pub label: String,
    pub source: String,
}

/// An undirected edge `{u, v}` with `pu = port_u(v)` and `pv = port_v(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub pu: Port,
    pub pv: Port,
}

/// A simple connected graph with vertex labels, source classes and a port
/// numbering. Construction always validates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    vertices: Vec<GraphVertex>,
    edges: Vec<Edge>,
    index: HashMap<String, VertexId>,
}

impl LabeledGraph {
    /// Builds and validates a graph.
    pub fn new(vertices: Vec<GraphVertex>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        Self::with_lines(vertices, edges, &[], &[])
    }

    /// Like [`LabeledGraph::new`], reporting violations against the given
    /// source lines of each vertex and edge.
    pub(crate) fn with_lines(
        vertices: Vec<GraphVertex>,
        edges: Vec<Edge>,
        vertex_lines: &[usize],
        edge_lines: &[usize],
    ) -> Result<Self, GraphError> {
        let vline = |i: usize| vertex_lines.get(i).copied().unwrap_or(0);
        let eline = |i: usize| edge_lines.get(i).copied().unwrap_or(0);
        let fail = |line: usize, message: String| Err(GraphError::Invalid { line, message });

        if vertices.is_empty() {
            return fail(0, "graph has no vertices".into());
        }
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.id.clone(), i).is_some() {
                return fail(vline(i), format!("duplicate vertex id {:?}", v.id));
            }
        }
        let n = vertices.len();
        let mut seen_pairs = BTreeSet::new();
        let mut ports: Vec<BTreeMap<Port, VertexId>> = vec![BTreeMap::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return fail(eline(i), "edge references an unknown vertex".into());
            }
            if e.u == e.v {
                return fail(eline(i), format!("self-loop on {:?}", vertices[e.u].id));
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if !seen_pairs.insert(key) {
                return fail(
                    eline(i),
                    format!("multiple edges between {:?} and {:?}", vertices[e.u].id, vertices[e.v].id),
                );
            }
            for (x, p, y) in [(e.u, e.pu, e.v), (e.v, e.pv, e.u)] {
                if ports[x].insert(p, y).is_some() {
                    return fail(eline(i), format!("port {} used twice at {:?}", p, vertices[x].id));
                }
            }
        }
        for (x, map) in ports.iter().enumerate() {
            let deg = map.len() as Port;
            if let Some((&p, _)) = map.iter().find(|(&p, _)| p == 0 || p > deg) {
                return fail(
                    vline(x),
                    format!("ports of {:?} are not exactly 1..={} (found port {})", vertices[x].id, deg, p),
                );
            }
        }
        // Connectivity.
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in ports[x].values() {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            return fail(vline(x), format!("graph is disconnected: {:?} is unreachable", vertices[x].id));
        }
        Ok(Self { vertices, edges, index })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[GraphVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_index(&self, id: &str) -> Option<VertexId> {
        self.index.get(id).copied()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.edges.iter().filter(|e| e.u == v || e.v == v).count()
    }

    /// Vertex label with its source class attached.
    pub fn vertex_label(&self, v: VertexId) -> VertexLabel {
        let gv = &self.vertices[v];
        VertexLabel::with_source(gv.label.clone(), gv.source.clone())
    }

    pub fn source_classes(&self) -> Vec<String> {
        self.vertices.iter().map(|v| v.source.clone()).collect()
    }
}
