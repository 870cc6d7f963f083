//! Isomorphism of connected port-labeled digraphs.
//!
//! Out-ports are unique at each vertex, so an isomorphism is determined by
//! the image of a single vertex: walking the digraph port by port from a
//! start vertex yields a numbering that depends only on the start. The
//! canonical form is the smallest such walk encoding over all starts.

use std::collections::VecDeque;

use super::{GraphError, Homomorphism, Port, SymDigraph, VertexId, VertexLabel};

/// Vertices in canonical order, each with its label and its out-arcs as
/// `(p, q, canonical index of target)` sorted by `p`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm(pub Vec<(VertexLabel, Vec<(Port, Port, usize)>)>);

/// Numbering of the vertices reached from `start` in port-ordered BFS.
fn walk(d: &SymDigraph, start: VertexId) -> Vec<Option<usize>> {
    let mut order = vec![None; d.vertex_count()];
    order[start] = Some(0);
    let mut next = 1;
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for a in d.out_arcs_by_port(x) {
            let y = d.arc(a).target;
            if order[y].is_none() {
                order[y] = Some(next);
                next += 1;
                queue.push_back(y);
            }
        }
    }
    order
}

fn encode(d: &SymDigraph, start: VertexId) -> CanonicalForm {
    let order = walk(d, start);
    let mut rows = vec![None; d.vertex_count()];
    for v in d.vertices() {
        let arcs = d
            .out_arcs_by_port(v)
            .into_iter()
            .map(|a| {
                let arc = d.arc(a);
                (arc.ports.0, arc.ports.1, order[arc.target].unwrap_or(usize::MAX))
            })
            .collect();
        if let Some(i) = order[v] {
            rows[i] = Some((d.label(v).clone(), arcs));
        }
    }
    CanonicalForm(rows.into_iter().flatten().collect())
}

pub fn canonical_form(d: &SymDigraph) -> Result<CanonicalForm, GraphError> {
    d.ensure_valid()?;
    let min_label = d.labels().iter().min().cloned();
    let best = d
        .vertices()
        .filter(|&v| Some(d.label(v)) == min_label.as_ref())
        .map(|v| encode(d, v))
        .min();
    Ok(best.unwrap_or(CanonicalForm(Vec::new())))
}

/// An isomorphism `a -> b` preserving vertex labels, arc labels and
/// incidence, if one exists.
pub fn find_isomorphism(a: &SymDigraph, b: &SymDigraph) -> Result<Option<Homomorphism>, GraphError> {
    a.ensure_valid()?;
    b.ensure_valid()?;
    if a.vertex_count() != b.vertex_count() || a.arc_count() != b.arc_count() {
        return Ok(None);
    }
    for w in b.vertices().filter(|&w| b.label(w) == a.label(0)) {
        if let Some(map) = extend_from(a, b, w) {
            let h = Homomorphism::from_vertex_map(a, b, map.into_iter().map(Some).collect());
            if h.is_total() && h.check(a, b).is_ok() {
                return Ok(Some(h));
            }
        }
    }
    Ok(None)
}

fn extend_from(a: &SymDigraph, b: &SymDigraph, w: VertexId) -> Option<Vec<VertexId>> {
    let mut map = vec![None; a.vertex_count()];
    let mut used = vec![false; b.vertex_count()];
    map[0] = Some(w);
    used[w] = true;
    let mut queue = VecDeque::from([0]);
    while let Some(x) = queue.pop_front() {
        let fx = map[x]?;
        if a.degree(x) != b.degree(fx) || a.label(x) != b.label(fx) {
            return None;
        }
        for arc_id in a.out_arcs(x) {
            let arc = a.arc(*arc_id);
            let image = b.arc(b.out_arc_at(fx, arc.ports.0)?);
            if image.ports != arc.ports {
                return None;
            }
            match map[arc.target] {
                Some(y) if y != image.target => return None,
                Some(_) => {}
                None => {
                    if used[image.target] {
                        return None;
                    }
                    used[image.target] = true;
                    map[arc.target] = Some(image.target);
                    queue.push_back(arc.target);
                }
            }
        }
    }
    map.into_iter().collect()
}

pub fn is_isomorphic(a: &SymDigraph, b: &SymDigraph) -> Result<bool, GraphError> {
    Ok(find_isomorphism(a, b)?.is_some())
}
