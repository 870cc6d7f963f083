//! Symmetric coverings, minimal bases and quasi-coverings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::graph::{ball, build_dir, canonical_form, ArcId, GraphError, Homomorphism, LabeledGraph, Port, SymDigraph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoveringError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("map does not match the digraphs: {0}")]
    Mismatch(String),
    #[error("not a symmetric covering: {0}")]
    Rejected(String),
    #[error("map is not defined on {0}")]
    Undefined(String),
    #[error("quotient failed covering verification: {0}")]
    QuotientInvalid(String),
    #[error("digraph has {size} vertices, above the limit of {limit}")]
    TooLarge { size: usize, limit: usize },
}

/// An accepted covering projection and its number of sheets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringWitness {
    pub phi: Homomorphism,
    pub sheets: usize,
}

fn mismatch(phi: &Homomorphism, total: &SymDigraph, base: &SymDigraph) -> Option<String> {
    if phi.vertex_map.len() != total.vertex_count() || phi.arc_map.len() != total.arc_count() {
        return Some("map sizes differ from the total digraph".into());
    }
    let vertex_out = phi.vertex_map.iter().flatten().any(|&w| w >= base.vertex_count());
    let arc_out = phi.arc_map.iter().flatten().any(|&b| b >= base.arc_count());
    (vertex_out || arc_out).then(|| "map leaves the base digraph".into())
}

/// Whether `images` (the images of the arcs in `arcs`) is a bijection onto
/// `target`.
fn bijective(images: &[Option<ArcId>], target: &[ArcId]) -> bool {
    let mut hit: Vec<ArcId> = images.iter().flatten().copied().collect();
    if hit.len() != images.len() {
        return false;
    }
    hit.sort_unstable();
    let mut expected = target.to_vec();
    expected.sort_unstable();
    hit == expected
}

/// Accepts `phi` iff it is a label-preserving homomorphism that is bijective
/// on the in-arcs and on the out-arcs of every vertex, commutes with sym and
/// is surjective.
pub fn is_symmetric_covering(total: &SymDigraph, base: &SymDigraph, phi: &Homomorphism) -> Result<CoveringWitness, CoveringError> {
    if let Some(m) = mismatch(phi, total, base) {
        return Err(CoveringError::Mismatch(m));
    }
    let reject = |m: String| Err(CoveringError::Rejected(m));
    if !phi.is_total() {
        return reject("map is partial".into());
    }
    if let Err(m) = phi.check(total, base) {
        return reject(m);
    }
    for v in total.vertices() {
        let w = phi.vertex(v).expect("total");
        let outs: Vec<_> = total.out_arcs(v).iter().map(|&a| phi.arc(a)).collect();
        if !bijective(&outs, base.out_arcs(w)) {
            return reject(format!("not bijective on the out-arcs of {}", total.vertex_id(v)));
        }
        let ins: Vec<_> = total.in_arcs(v).iter().map(|&a| phi.arc(a)).collect();
        if !bijective(&ins, base.in_arcs(w)) {
            return reject(format!("not bijective on the in-arcs of {}", total.vertex_id(v)));
        }
    }
    for a in 0..total.arc_count() {
        let lhs = total.sym(a).and_then(|b| phi.arc(b));
        let rhs = phi.arc(a).and_then(|b| base.sym(b));
        if lhs.is_none() || lhs != rhs {
            return reject(format!("does not commute with sym on arc {}", total.arc_id(a)));
        }
    }
    let fibers = phi.fibers(base.vertex_count());
    if let Some(w) = fibers.iter().position(Vec::is_empty) {
        return reject(format!("base vertex {} has no preimage", base.vertex_id(w)));
    }
    let sheets = fibers[0].len();
    if let Some(w) = fibers.iter().position(|f| f.len() != sheets) {
        return reject(format!("fiber of {} has {} vertices, expected {sheets}", base.vertex_id(w), fibers[w].len()));
    }
    Ok(CoveringWitness { phi: phi.clone(), sheets })
}

pub fn is_covering(total: &SymDigraph, base: &SymDigraph, phi: &Homomorphism) -> bool {
    is_symmetric_covering(total, base, phi).is_ok()
}

/// Coarsest partition of the vertices that refines the vertex labels and in
/// which equivalent vertices see, port by port, the same arc labels leading
/// into the same classes. Classes are numbered in a canonical order.
pub fn stable_partition(d: &SymDigraph) -> Vec<usize> {
    let ranks: BTreeMap<_, usize> = d.labels().iter().collect::<BTreeSet<_>>().into_iter().zip(0..).collect();
    let mut class: Vec<usize> = d.labels().iter().map(|l| ranks[l]).collect();
    let mut count = ranks.len();
    loop {
        let signatures: Vec<(usize, Vec<(Port, Port, usize)>)> = d
            .vertices()
            .map(|v| {
                let arcs = d
                    .out_arcs_by_port(v)
                    .into_iter()
                    .map(|a| {
                        let arc = d.arc(a);
                        (arc.ports.0, arc.ports.1, class[arc.target])
                    })
                    .collect();
                (class[v], arcs)
            })
            .collect();
        let ids: BTreeMap<_, usize> = signatures.iter().collect::<BTreeSet<_>>().into_iter().zip(0..).collect();
        let next: Vec<usize> = signatures.iter().map(|s| ids[s]).collect();
        let done = ids.len() == count;
        count = ids.len();
        class = next;
        if done {
            return class;
        }
    }
}

/// The quotient of `d` by a partition whose classes are stable (every member
/// of a class has the same label and the same port-by-port arc labels into
/// the same classes). Arcs are read off the first member of each class.
fn quotient(d: &SymDigraph, class: &[usize]) -> (SymDigraph, Homomorphism) {
    let count = class.iter().max().map_or(0, |m| m + 1);
    let mut reps = vec![usize::MAX; count];
    for v in d.vertices().rev() {
        reps[class[v]] = v;
    }
    let ids = reps.iter().map(|&r| d.vertex_id(r).to_string()).collect();
    let labels = reps.iter().map(|&r| d.label(r).clone()).collect();
    let mut base = SymDigraph::new(ids, labels);
    let mut at_port: HashMap<(usize, Port), ArcId> = HashMap::new();
    for (c, &r) in reps.iter().enumerate() {
        for a in d.out_arcs_by_port(r) {
            let arc = d.arc(a);
            let id = format!("{}:{}", d.vertex_id(r), arc.ports.0);
            let b = base.add_arc(id, c, class[arc.target], arc.ports);
            at_port.insert((c, arc.ports.0), b);
        }
    }
    for b in 0..base.arc_count() {
        let arc = *base.arc(b);
        base.set_sym(b, at_port.get(&(arc.target, arc.ports.1)).copied());
    }
    let phi = Homomorphism::from_vertex_map(d, &base, class.iter().map(|&c| Some(c)).collect());
    (base, phi)
}

/// The minimal base of `d` and the projection onto it. The projection is
/// verified to be a symmetric covering before it is returned.
pub fn minimal_base(d: &SymDigraph) -> Result<(SymDigraph, Homomorphism), CoveringError> {
    d.ensure_valid()?;
    let class = stable_partition(d);
    let (base, phi) = quotient(d, &class);
    match is_symmetric_covering(d, &base, &phi) {
        Ok(_) => Ok((base, phi)),
        Err(e) => Err(CoveringError::QuotientInvalid(e.to_string())),
    }
}

pub fn is_minimal(d: &SymDigraph) -> Result<bool, CoveringError> {
    Ok(minimal_base(d)?.0.vertex_count() == d.vertex_count())
}

/// Whether the network, with source classes made part of the vertex labels,
/// admits no covering onto a smaller digraph.
pub fn is_b_minimal(g: &LabeledGraph) -> Result<bool, CoveringError> {
    is_minimal(&build_dir(g))
}

/// Largest digraph [`brute_force_base_oracle`] accepts.
pub const ORACLE_LIMIT: usize = 8;

/// Every base `d` covers with at most `max_base_size` vertices, up to
/// isomorphism, found by trying all set partitions of the vertices. Bases
/// are sorted by size and each comes with its projection.
pub fn brute_force_base_oracle(d: &SymDigraph, max_base_size: usize) -> Result<Vec<(SymDigraph, Homomorphism)>, CoveringError> {
    d.ensure_valid()?;
    let n = d.vertex_count();
    if n > ORACLE_LIMIT {
        return Err(CoveringError::TooLarge { size: n, limit: ORACLE_LIMIT });
    }
    let mut found = BTreeMap::new();
    let mut rgs = vec![0usize; n];
    loop {
        let blocks = rgs.iter().max().map_or(0, |m| m + 1);
        if blocks <= max_base_size {
            if let Some((base, phi)) = candidate_quotient(d, &rgs, blocks) {
                if is_covering(d, &base, &phi) {
                    let key = (base.vertex_count(), canonical_form(&base)?);
                    found.entry(key).or_insert((base, phi));
                }
            }
        }
        if !next_rgs(&mut rgs) {
            break;
        }
    }
    Ok(found.into_values().collect())
}

/// Advances a restricted growth string; false after the last one.
fn next_rgs(rgs: &mut [usize]) -> bool {
    for i in (1..rgs.len()).rev() {
        let bound = rgs[..i].iter().max().copied().unwrap_or(0) + 1;
        if rgs[i] < bound {
            rgs[i] += 1;
            for x in &mut rgs[i + 1..] {
                *x = 0;
            }
            return true;
        }
    }
    false
}

/// Projects every arc of `d` onto the blocks of `part` and keeps the distinct
/// projections. Returns `None` when the projections cannot form a
/// port-labeled digraph (two labels or two targets for one block and port).
fn candidate_quotient(d: &SymDigraph, part: &[usize], blocks: usize) -> Option<(SymDigraph, Homomorphism)> {
    let mut labels = vec![None; blocks];
    for v in d.vertices() {
        match &labels[part[v]] {
            None => labels[part[v]] = Some(d.label(v).clone()),
            Some(l) if l != d.label(v) => return None,
            Some(_) => {}
        }
    }
    let mut projected: BTreeMap<(usize, Port), (Port, usize)> = BTreeMap::new();
    for arc in d.arcs() {
        let key = (part[arc.source], arc.ports.0);
        let value = (arc.ports.1, part[arc.target]);
        if *projected.entry(key).or_insert(value) != value {
            return None;
        }
    }
    let ids = (0..blocks).map(|b| format!("b{b}")).collect();
    let mut base = SymDigraph::new(ids, labels.into_iter().map(|l| l.expect("blocks are non-empty")).collect());
    let mut index = BTreeMap::new();
    for (&(s, p), &(q, t)) in &projected {
        index.insert((s, p), base.add_arc(format!("b{s}:{p}"), s, t, (p, q)));
    }
    for (&(s, p), &(q, t)) in &projected {
        let partner = *index.get(&(t, q))?;
        base.set_sym(index[&(s, p)], Some(partner));
    }
    let arc_map = d.arcs().iter().map(|arc| index.get(&(part[arc.source], arc.ports.0)).copied()).collect();
    let phi = Homomorphism { vertex_map: part.iter().map(|&b| Some(b)).collect(), arc_map };
    Some((base, phi))
}

/// A map that behaves like a covering on the ball of radius `radius` around
/// `center`. Only [`check_quasi_covering`] constructs it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiCoveringWitness {
    center: VertexId,
    radius: usize,
    gamma: Homomorphism,
    proper: bool,
    sheets: usize,
}

impl QuasiCoveringWitness {
    pub fn center(&self) -> VertexId {
        self.center
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn gamma(&self) -> &Homomorphism {
        &self.gamma
    }

    /// Whether the ball of radius `radius - 1` misses part of the digraph.
    pub fn proper(&self) -> bool {
        self.proper
    }
}

/// Number of sheets of a verified quasi-covering.
pub fn sheets(w: &QuasiCoveringWitness) -> usize {
    w.sheets
}

fn injective(images: impl Iterator<Item = ArcId>) -> bool {
    let mut seen = BTreeSet::new();
    images.into_iter().all(|b| seen.insert(b))
}

/// Checks the local quasi-covering criterion: on the ball of radius `r`
/// around `v1`, `gamma` is a label-preserving homomorphism that commutes
/// with sym and is injective on the in- and out-arcs of every ball vertex,
/// and it is surjective on the in- and out-arcs of every vertex at distance
/// at most `r - 1`.
///
/// `Ok(None)` means the criterion fails; an error means `gamma` is not
/// defined on the whole ball.
pub fn check_quasi_covering(
    d1: &SymDigraph,
    d0: &SymDigraph,
    v1: VertexId,
    r: usize,
    gamma: &Homomorphism,
) -> Result<Option<QuasiCoveringWitness>, CoveringError> {
    if let Some(m) = mismatch(gamma, d1, d0) {
        return Err(CoveringError::Mismatch(m));
    }
    let b = ball(d1, v1, r)?;
    if let Some(&v) = b.vertices.iter().find(|&&v| gamma.vertex(v).is_none()) {
        return Err(CoveringError::Undefined(format!("ball vertex {}", d1.vertex_id(v))));
    }
    if let Some(&a) = b.arcs.iter().find(|&&a| gamma.arc(a).is_none()) {
        return Err(CoveringError::Undefined(format!("ball arc {}", d1.arc_id(a))));
    }
    let g = |v: VertexId| gamma.vertex(v).expect("defined on the ball");
    let ga = |a: ArcId| gamma.arc(a).expect("defined on the ball");
    // Homomorphism on the ball.
    if b.vertices.iter().any(|&v| d1.label(v) != d0.label(g(v))) {
        return Ok(None);
    }
    for &a in &b.arcs {
        let (x, y) = (d1.arc(a), d0.arc(ga(a)));
        if x.ports != y.ports || g(x.source) != y.source || g(x.target) != y.target {
            return Ok(None);
        }
        // Sym-compatibility.
        match d1.sym(a) {
            Some(s) if b.contains_arc(s) && d0.sym(ga(a)) == Some(ga(s)) => {}
            _ => return Ok(None),
        }
    }
    for &v in &b.vertices {
        let outs = d1.out_arcs(v).iter().copied().filter(|a| b.contains_arc(*a));
        let ins = d1.in_arcs(v).iter().copied().filter(|a| b.contains_arc(*a));
        if !injective(outs.map(ga)) || !injective(ins.map(ga)) {
            return Ok(None);
        }
        if b.distance[v].is_some_and(|x| x < r) {
            // Every arc at v lies in the ball here, and is mapped injectively.
            if d1.out_arcs(v).len() != d0.out_arcs(g(v)).len() || d1.in_arcs(v).len() != d0.in_arcs(g(v)).len() {
                return Ok(None);
            }
        }
    }
    let proper = r == 0 || !ball(d1, v1, r - 1)?.is_whole(d1);
    let mut interior = vec![0usize; d0.vertex_count()];
    for v in d1.vertices() {
        if let Some(w) = gamma.vertex(v) {
            if ball(d1, v, 1)?.is_subset(&b) {
                interior[w] += 1;
            }
        }
    }
    let sheets = interior.into_iter().min().unwrap_or(0);
    Ok(Some(QuasiCoveringWitness { center: v1, radius: r, gamma: gamma.clone(), proper, sheets }))
}

pub fn is_quasi_covering(d1: &SymDigraph, d0: &SymDigraph, v1: VertexId, r: usize, gamma: &Homomorphism) -> Result<bool, CoveringError> {
    Ok(check_quasi_covering(d1, d0, v1, r, gamma)?.is_some())
}
