use std::collections::BTreeSet;

use super::{ArcId, GraphError, SymDigraph, VertexId};

/// The labeled ball of a given radius around a center: every vertex within
/// `radius` hops, and every arc with an endpoint within `radius - 1` hops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    pub center: VertexId,
    pub radius: usize,
    pub vertices: BTreeSet<VertexId>,
    pub arcs: BTreeSet<ArcId>,
    /// Hop distance of each vertex of the ball from the center.
    pub distance: Vec<Option<usize>>,
}

impl Ball {
    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn contains_arc(&self, a: ArcId) -> bool {
        self.arcs.contains(&a)
    }

    /// Whether the ball is the whole digraph.
    pub fn is_whole(&self, d: &SymDigraph) -> bool {
        self.vertices.len() == d.vertex_count() && self.arcs.len() == d.arc_count()
    }

    pub fn is_subset(&self, other: &Ball) -> bool {
        self.vertices.is_subset(&other.vertices) && self.arcs.is_subset(&other.arcs)
    }
}

pub fn ball(d: &SymDigraph, center: VertexId, radius: usize) -> Result<Ball, GraphError> {
    if center >= d.vertex_count() {
        return Err(GraphError::UnknownVertex(center.to_string()));
    }
    let all = d.distances_from(center);
    let distance: Vec<Option<usize>> = all.into_iter().map(|x| x.filter(|&x| x <= radius)).collect();
    let vertices = d.vertices().filter(|&v| distance[v].is_some()).collect();
    let inner = |v: VertexId| radius > 0 && distance[v].is_some_and(|x| x < radius);
    let arcs = (0..d.arc_count()).filter(|&a| inner(d.arc(a).source) || inner(d.arc(a).target)).collect();
    Ok(Ball { center, radius, vertices, arcs, distance })
}
