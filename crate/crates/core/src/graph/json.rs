//! JSON file formats for graphs, digraphs and homomorphisms.
//!
//! Validation errors point at the line where the offending vertex, edge or
//! arc object starts.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, GraphError, GraphVertex, Homomorphism, LabeledGraph, Port, SymDigraph, VertexLabel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: String,
    pub label: String,
    /// Absent in graph files means an unshared source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub u: String,
    pub v: String,
    pub pu: Port,
    pub pv: Port,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcRecord {
    pub id: String,
    pub source: String,
    pub target: String,
    pub p: Port,
    pub q: Port,
}

/// `{"vertices": [{"id", "label", "source"}], "edges": [{"u", "v", "pu", "pv"}]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

/// `{"vertices": [...], "arcs": [{"id", "source", "target", "p", "q"}], "sym": [["a", "b"], ...]}`
/// where each `sym` pair lists two arcs exchanged by the involution (an arc
/// paired with itself is a self-paired loop).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigraphFile {
    pub vertices: Vec<VertexRecord>,
    pub arcs: Vec<ArcRecord>,
    #[serde(default)]
    pub sym: Vec<(String, String)>,
}

/// `{"vertex_map": {id: id}, "arc_map": {id: id}}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomomorphismFile {
    pub vertex_map: BTreeMap<String, String>,
    #[serde(default)]
    pub arc_map: BTreeMap<String, String>,
}

fn syntax(e: serde_json::Error) -> GraphError {
    GraphError::Invalid { line: e.line(), message: e.to_string() }
}

fn read(path: &Path) -> Result<String, GraphError> {
    std::fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))
}

/// Line numbers at which the elements of the top-level array `key` start.
fn element_lines(text: &str, key: &str) -> Vec<usize> {
    let mut lines = Vec::new();
    let (mut depth, mut line) = (0usize, 1usize);
    let (mut in_str, mut escaped) = (false, false);
    let mut current = String::new();
    let mut last_string: Option<String> = None;
    let mut array_depth = None;
    for ch in text.chars() {
        if ch == '\n' {
            line += 1;
        }
        if in_str {
            if escaped {
                escaped = false;
                current.push(ch);
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_str = false;
                if depth == 1 {
                    last_string = Some(std::mem::take(&mut current));
                }
            } else {
                current.push(ch);
            }
            continue;
        }
        match ch {
            '"' => {
                in_str = true;
                current.clear();
            }
            '{' | '[' => {
                if Some(depth) == array_depth {
                    lines.push(line);
                }
                if ch == '[' && depth == 1 && last_string.as_deref() == Some(key) {
                    array_depth = Some(depth + 1);
                }
                depth += 1;
            }
            '}' | ']' => {
                depth = depth.saturating_sub(1);
                if ch == ']' && Some(depth + 1) == array_depth {
                    array_depth = None;
                }
            }
            ',' if depth == 1 => last_string = None,
            _ => {}
        }
    }
    lines
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<LabeledGraph, GraphError> {
        let file: GraphFile = serde_json::from_str(text).map_err(syntax)?;
        let vertex_lines = element_lines(text, "vertices");
        let edge_lines = element_lines(text, "edges");
        file.into_graph(&vertex_lines, &edge_lines)
    }

    pub fn load(path: &Path) -> Result<LabeledGraph, GraphError> {
        Self::parse(&read(path)?)
    }

    fn into_graph(self, vertex_lines: &[usize], edge_lines: &[usize]) -> Result<LabeledGraph, GraphError> {
        let index: HashMap<&str, usize> = self.vertices.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            let lookup = |id: &str| {
                index.get(id).copied().ok_or_else(|| GraphError::Invalid {
                    line: edge_lines.get(i).copied().unwrap_or(0),
                    message: format!("edge references unknown vertex {id:?}"),
                })
            };
            edges.push(Edge { u: lookup(&e.u)?, v: lookup(&e.v)?, pu: e.pu, pv: e.pv });
        }
        let vertices = self
            .vertices
            .into_iter()
            .map(|v| GraphVertex { source: v.source.unwrap_or_else(|| v.id.clone()), id: v.id, label: v.label })
            .collect();
        LabeledGraph::with_lines(vertices, edges, vertex_lines, edge_lines)
    }

    pub fn from_graph(g: &LabeledGraph) -> Self {
        let ids: Vec<&str> = g.vertices().iter().map(|v| v.id.as_str()).collect();
        GraphFile {
            vertices: g
                .vertices()
                .iter()
                .map(|v| VertexRecord { id: v.id.clone(), label: v.label.clone(), source: Some(v.source.clone()) })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeRecord { u: ids[e.u].to_string(), v: ids[e.v].to_string(), pu: e.pu, pv: e.pv })
                .collect(),
        }
    }

    pub fn to_json(g: &LabeledGraph) -> String {
        serde_json::to_string_pretty(&Self::from_graph(g)).expect("graph serializes")
    }
}

impl DigraphFile {
    /// Parses a digraph without validating it, so that broken fixtures can
    /// be reported by [`SymDigraph::validate`].
    pub fn parse(text: &str) -> Result<SymDigraph, GraphError> {
        let file: DigraphFile = serde_json::from_str(text).map_err(syntax)?;
        let vertex_lines = element_lines(text, "vertices");
        let arc_lines = element_lines(text, "arcs");
        let sym_lines = element_lines(text, "sym");
        let at = |lines: &[usize], i: usize| lines.get(i).copied().unwrap_or(0);

        let mut index = HashMap::new();
        for (i, v) in file.vertices.iter().enumerate() {
            if index.insert(v.id.clone(), i).is_some() {
                return Err(GraphError::Invalid { line: at(&vertex_lines, i), message: format!("duplicate vertex id {:?}", v.id) });
            }
        }
        let ids = file.vertices.iter().map(|v| v.id.clone()).collect();
        let labels = file
            .vertices
            .iter()
            .map(|v| VertexLabel { label: v.label.clone(), source: v.source.clone() })
            .collect();
        let mut d = SymDigraph::new(ids, labels);
        let mut arc_index = HashMap::new();
        for (i, a) in file.arcs.iter().enumerate() {
            let line = at(&arc_lines, i);
            let lookup = |id: &str| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| GraphError::Invalid { line, message: format!("arc {:?} references unknown vertex {id:?}", a.id) })
            };
            let (s, t) = (lookup(&a.source)?, lookup(&a.target)?);
            if arc_index.insert(a.id.clone(), i).is_some() {
                return Err(GraphError::Invalid { line, message: format!("duplicate arc id {:?}", a.id) });
            }
            d.add_arc(a.id.clone(), s, t, (a.p, a.q));
        }
        for (i, (x, y)) in file.sym.iter().enumerate() {
            let line = at(&sym_lines, i);
            let lookup = |id: &str| {
                arc_index
                    .get(id)
                    .copied()
                    .ok_or_else(|| GraphError::Invalid { line, message: format!("sym pair references unknown arc {id:?}") })
            };
            let (a, b) = (lookup(x)?, lookup(y)?);
            d.set_sym(a, Some(b));
            d.set_sym(b, Some(a));
        }
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<SymDigraph, GraphError> {
        Self::parse(&read(path)?)
    }

    pub fn from_digraph(d: &SymDigraph) -> Self {
        let vertices = d
            .vertices()
            .map(|v| VertexRecord { id: d.vertex_id(v).to_string(), label: d.label(v).label.clone(), source: d.label(v).source.clone() })
            .collect();
        let arcs = d
            .arcs()
            .iter()
            .enumerate()
            .map(|(a, arc)| ArcRecord {
                id: d.arc_id(a).to_string(),
                source: d.vertex_id(arc.source).to_string(),
                target: d.vertex_id(arc.target).to_string(),
                p: arc.ports.0,
                q: arc.ports.1,
            })
            .collect();
        let sym = (0..d.arc_count())
            .filter_map(|a| d.sym(a).filter(|&b| a <= b).map(|b| (d.arc_id(a).to_string(), d.arc_id(b).to_string())))
            .collect();
        DigraphFile { vertices, arcs, sym }
    }

    pub fn to_json(d: &SymDigraph) -> String {
        serde_json::to_string_pretty(&Self::from_digraph(d)).expect("digraph serializes")
    }
}

impl HomomorphismFile {
    pub fn parse(text: &str, dom: &SymDigraph, cod: &SymDigraph) -> Result<Homomorphism, GraphError> {
        let file: HomomorphismFile = serde_json::from_str(text).map_err(syntax)?;
        file.resolve(dom, cod)
    }

    pub fn resolve(&self, dom: &SymDigraph, cod: &SymDigraph) -> Result<Homomorphism, GraphError> {
        let mut h = Homomorphism { vertex_map: vec![None; dom.vertex_count()], arc_map: vec![None; dom.arc_count()] };
        for (x, y) in &self.vertex_map {
            let v = dom.vertex_index(x).ok_or_else(|| GraphError::UnknownVertex(x.clone()))?;
            h.vertex_map[v] = Some(cod.vertex_index(y).ok_or_else(|| GraphError::UnknownVertex(y.clone()))?);
        }
        if self.arc_map.is_empty() {
            return Ok(Homomorphism::from_vertex_map(dom, cod, h.vertex_map));
        }
        for (x, y) in &self.arc_map {
            let a = dom.arc_index(x).ok_or_else(|| GraphError::Structure(format!("unknown arc {x:?}")))?;
            h.arc_map[a] = Some(cod.arc_index(y).ok_or_else(|| GraphError::Structure(format!("unknown arc {y:?}")))?);
        }
        Ok(h)
    }

    pub fn from_homomorphism(h: &Homomorphism, dom: &SymDigraph, cod: &SymDigraph) -> Self {
        let arc_map = h
            .arc_map
            .iter()
            .enumerate()
            .filter_map(|(a, b)| b.map(|b| (dom.arc_id(a).to_string(), cod.arc_id(b).to_string())))
            .collect();
        HomomorphismFile { vertex_map: h.describe_vertices(dom, cod), arc_map }
    }
}
