use super::{ArcId, GraphError, Port, SymDigraph, VertexId, VertexLabel};

/// A node of a truncated view: a non-stuttering path from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewNode {
    pub path: Vec<ArcId>,
    /// Label of the path's endpoint.
    pub label: VertexLabel,
    /// Label of the last arc of the path; `None` at the root.
    pub arc_label: Option<(Port, Port)>,
    pub children: Vec<usize>,
}

/// The tree of non-stuttering paths of length at most `depth` starting at a
/// vertex. Node 0 is the root; children are listed in port order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewTree {
    pub root: VertexId,
    pub depth: usize,
    pub nodes: Vec<ViewNode>,
}

pub fn truncated_view(d: &SymDigraph, v: VertexId, depth: usize) -> Result<ViewTree, GraphError> {
    if v >= d.vertex_count() {
        return Err(GraphError::UnknownVertex(v.to_string()));
    }
    let mut nodes = vec![ViewNode { path: Vec::new(), label: d.label(v).clone(), arc_label: None, children: Vec::new() }];
    let mut frontier = vec![(0usize, v)];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (node, end) in frontier {
            let back = nodes[node].path.last().and_then(|&a| d.sym(a));
            for a in d.out_arcs_by_port(end) {
                if Some(a) == back {
                    continue;
                }
                let arc = d.arc(a);
                let mut path = nodes[node].path.clone();
                path.push(a);
                let id = nodes.len();
                nodes.push(ViewNode { path, label: d.label(arc.target).clone(), arc_label: Some(arc.ports), children: Vec::new() });
                nodes[node].children.push(id);
                next.push((id, arc.target));
            }
        }
        frontier = next;
    }
    Ok(ViewTree { root: v, depth, nodes })
}

impl ViewTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A string that is equal for two trees iff they are isomorphic as
    /// rooted trees with vertex and arc labels.
    pub fn canonical(&self) -> String {
        self.encode(0)
    }

    fn encode(&self, node: usize) -> String {
        let n = &self.nodes[node];
        let mut parts: Vec<String> = n
            .children
            .iter()
            .map(|&c| {
                let (p, q) = self.nodes[c].arc_label.unwrap_or((0, 0));
                format!("{p},{q}:{}", self.encode(c))
            })
            .collect();
        parts.sort();
        format!("{:?}[{}]", n.label, parts.join(";"))
    }

    pub fn is_isomorphic(&self, other: &ViewTree) -> bool {
        self.canonical() == other.canonical()
    }
}
