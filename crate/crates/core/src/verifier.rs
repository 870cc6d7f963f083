//! Checks run on concrete executions: lifting along coverings, quasi-lifting
//! along quasi-coverings, the impossibility of election on coverings, and
//! per-step invariants of both election algorithms.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::coverings::{check_quasi_covering, is_quasi_covering, is_symmetric_covering, CoveringError};
use crate::election_m::{evaluate_decisions, MState, Outcome};
use crate::election_mtau::{AlgorithmMTau, MTState};
use crate::enumeration::{compare_views, Enumeration, Mailbox};
use crate::families::QuasiFixture;
use crate::graph::{ball, Homomorphism, SymDigraph, VertexId, VertexLabel};
use crate::randomness::{derive_seed, fiber_shared_assignment, RandomnessError, SourceAssignment};
use crate::runtime::{run, Event, ExecutionTrace, NodeAlgorithm, Policy, RunOptions, RuntimeError, Simulator, StepObserver};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifierError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Covering(#[from] CoveringError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Randomness(#[from] RandomnessError),
}

/// Where a check first went wrong.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    /// Seed of the failing run.
    pub seed: u64,
    /// Number of events (or rounds, for round-based checks) applied.
    pub step: usize,
    pub vertex: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub instance: String,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
    pub seeds: Vec<u64>,
    pub stats: BTreeMap<String, u64>,
}

impl CheckReport {
    fn new(check: &str, instance: impl Into<String>) -> Self {
        Self { check: check.into(), instance: instance.into(), passed: true, counterexample: None, seeds: Vec::new(), stats: BTreeMap::new() }
    }

    fn fail(&mut self, c: Counterexample) {
        self.passed = false;
        self.counterexample.get_or_insert(c);
    }

    fn count(&mut self, key: &str, n: u64) {
        *self.stats.entry(key.into()).or_insert(0) += n;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn json<S: Serialize>(s: &S) -> String {
    serde_json::to_string(s).expect("state serializes")
}

/// Sources of `d` read off its labels, seeded from `seed`.
pub fn sources_from_labels(d: &SymDigraph, seed: u64) -> SourceAssignment {
    SourceAssignment::from_digraph(d, seed)
}

/// A copy of `sources` in which vertex `v` reads a private stream instead
/// of its class's.
pub fn corrupt_sources(sources: &SourceAssignment, v: VertexId, seed: u64) -> SourceAssignment {
    let mut s = sources.clone();
    s.reassign(v, "corrupted".into(), derive_seed(seed, "corrupt", &v.to_string()));
    s
}

/// Result of replaying a base execution on a covering.
pub struct Lifted<S> {
    pub states: Vec<S>,
    pub steps: usize,
    pub divergence: Option<Counterexample>,
}

/// Replays every base event at each preimage of its vertex, comparing each
/// preimage's state with its image after every event. Stops at the first
/// event that is not enabled or the first differing state.
#[allow(clippy::too_many_arguments)]
pub fn lift_in_lockstep<A: NodeAlgorithm>(
    total: &SymDigraph,
    base: &SymDigraph,
    phi: &Homomorphism,
    alg: &A,
    base_trace: &ExecutionTrace<A::State>,
    lifted_sources: SourceAssignment,
    seed: u64,
    observers: &mut [&mut dyn StepObserver<A::State>],
) -> Result<Lifted<A::State>, VerifierError>
where
    A::State: Serialize,
{
    let mut base_sim = Simulator::new(base, alg, base_trace.sources.reset())?;
    let mut sim = Simulator::new(total, alg, lifted_sources)?;
    let fibers = phi.fibers(base.vertex_count());
    for (i, e) in base_trace.events.iter().enumerate() {
        base_sim.step(e)?;
        let image = &base_sim.states()[e.vertex()];
        for &v in &fibers[e.vertex()] {
            let ev = e.at(v);
            let diverged = |actual: String| Counterexample {
                seed,
                step: i + 1,
                vertex: total.vertex_id(v).to_string(),
                expected: json(image),
                actual,
            };
            if !sim.is_enabled(&ev) {
                return Ok(Lifted { states: sim.states().to_vec(), steps: i, divergence: Some(diverged(format!("{ev:?} not enabled"))) });
            }
            let before = (!observers.is_empty()).then(|| sim.states()[v].clone());
            sim.step(&ev)?;
            if let Some(before) = before {
                let n = sim.events().len();
                for o in observers.iter_mut() {
                    o.observe(n, &ev, &before, sim.states(), sim.sources());
                }
            }
            if sim.states()[v] != *image {
                return Ok(Lifted { states: sim.states().to_vec(), steps: i + 1, divergence: Some(diverged(json(&sim.states()[v]))) });
            }
        }
    }
    let states = sim.states().to_vec();
    let mismatch = total.vertices().find(|&v| states[v] != base_sim.states()[phi.vertex(v).expect("covering is total")]);
    let divergence = mismatch.map(|v| Counterexample {
        seed,
        step: base_trace.events.len(),
        vertex: total.vertex_id(v).to_string(),
        expected: json(&base_sim.states()[phi.vertex(v).expect("covering is total")]),
        actual: json(&states[v]),
    });
    Ok(Lifted { states, steps: base_trace.events.len(), divergence })
}

/// The last member of the first fiber with several members.
fn spare_vertex(phi: &Homomorphism, base: &SymDigraph) -> VertexId {
    let fibers = phi.fibers(base.vertex_count());
    *fibers.iter().find(|f| f.len() > 1).or(fibers.first()).and_then(|f| f.last()).expect("non-empty total")
}

/// Runs `rounds` synchronous rounds on the base and replays them on the
/// covering, with every vertex reading its image's source (one vertex reads
/// a private source instead when `corrupt` is set). Passes iff every vertex
/// stays in its image's state after every event.
#[allow(clippy::too_many_arguments)]
pub fn check_lifting<A: NodeAlgorithm>(
    total: &SymDigraph,
    base: &SymDigraph,
    phi: &Homomorphism,
    alg: &A,
    rounds: u64,
    seed: u64,
    corrupt: bool,
) -> Result<CheckReport, VerifierError>
where
    A::State: Serialize,
{
    let w = is_symmetric_covering(total, base, phi)?;
    let base_sources = sources_from_labels(base, seed);
    let mut lifted = fiber_shared_assignment(total, base, phi, &base_sources)?;
    if corrupt {
        lifted = corrupt_sources(&lifted, spare_vertex(phi, base), seed);
    }
    let mut report = CheckReport::new("lifting", format!("{} vertices over {} ({} sheets)", total.vertex_count(), base.vertex_count(), w.sheets));
    report.seeds.push(seed);
    let base_trace = run(base, alg, base_sources, Policy::Synchronous, &RunOptions::rounds(rounds))?;
    let lifted = lift_in_lockstep(total, base, phi, alg, &base_trace, lifted, seed, &mut [])?;
    report.count("base_events", base_trace.events.len() as u64);
    report.count("rounds", base_trace.rounds);
    report.count("compared_steps", lifted.steps as u64);
    if let Some(c) = lifted.divergence {
        report.fail(c);
    }
    Ok(report)
}

/// State after `k` synchronous rounds of a trace recorded with one snapshot
/// per round.
fn after_round<S: Clone>(trace: &ExecutionTrace<S>, k: usize) -> Vec<S> {
    if k == 0 {
        return trace.initial.clone();
    }
    if (k as u64) <= trace.rounds {
        trace.snapshots[k - 1].states.clone()
    } else {
        trace.final_states.clone()
    }
}

fn with_states<S: Serialize>(d: &SymDigraph, states: &[S]) -> SymDigraph {
    let labels = d
        .vertices()
        .map(|v| {
            let l = d.label(v);
            VertexLabel { label: format!("{}|{}", l.label, json(&states[v])), source: l.source.clone() }
        })
        .collect();
    d.relabeled(labels)
}

/// Runs synchronous rounds on both digraphs of a quasi-covering, every
/// vertex of the larger one reading the source of its image (the center
/// reads a private source instead when `corrupt` is set). After each `k`
/// listed, the digraphs labeled with the states must still form a
/// quasi-covering around the same center with radius `r - k`, and the
/// center must be in its image's state.
pub fn check_quasi_lifting<A: NodeAlgorithm>(
    fixture: &QuasiFixture,
    alg: &A,
    ks: &[usize],
    seed: u64,
    corrupt: bool,
) -> Result<CheckReport, VerifierError>
where
    A::State: Serialize,
{
    let w = &fixture.witness;
    let (r, center, gamma) = (w.radius(), w.center(), w.gamma());
    if let Some(&k) = ks.iter().find(|&&k| k >= r.max(1)) {
        return Err(VerifierError::Precondition(format!("round count {k} is not below the radius {r}")));
    }
    let (d0, d1) = (&fixture.d0, &fixture.d1);
    let base_sources = sources_from_labels(d0, seed);
    let mut seeds = base_sources.seeds().clone();
    let classes: Vec<String> = d1
        .vertices()
        .map(|v| match gamma.vertex(v) {
            Some(image) => base_sources.class_of(image).to_string(),
            None => {
                let c = format!("#{}", d1.vertex_id(v));
                seeds.insert(c.clone(), derive_seed(seed, "source", &c));
                c
            }
        })
        .collect();
    let mut lifted_sources = SourceAssignment::with_seeds(classes, seeds);
    if corrupt {
        lifted_sources = corrupt_sources(&lifted_sources, center, seed);
    }
    let kmax = ks.iter().copied().max().unwrap_or(0) as u64;
    let t0 = run(d0, alg, base_sources, Policy::Synchronous, &RunOptions::rounds(kmax))?;
    let t1 = run(d1, alg, lifted_sources, Policy::Synchronous, &RunOptions::rounds(kmax))?;
    let mut report = CheckReport::new("quasi-lifting", format!("{} (radius {r})", fixture.name));
    report.seeds.push(seed);
    for &k in ks {
        let (s0, s1) = (after_round(&t0, k), after_round(&t1, k));
        let (l0, l1) = (with_states(d0, &s0), with_states(d1, &s1));
        let residual = is_quasi_covering(&l1, &l0, center, r - k, gamma).unwrap_or(false);
        let image = gamma.vertex(center).expect("center is mapped");
        let center_equal = s1[center] == s0[image];
        report.count("checked_rounds", 1);
        if !residual || !center_equal {
            let inner = ball(d1, center, r - k).expect("center exists");
            let v = inner
                .vertices
                .iter()
                .copied()
                .find(|&v| gamma.vertex(v).is_none_or(|i| s1[v] != s0[i]))
                .unwrap_or(center);
            let expected = gamma.vertex(v).map_or("unmapped".into(), |i| json(&s0[i]));
            report.fail(Counterexample { seed, step: k, vertex: d1.vertex_id(v).to_string(), expected, actual: json(&s1[v]) });
        }
    }
    Ok(report)
}

/// Runs synchronous executions on the base of a covering with at least two
/// sheets and replays them on the covering for each seed. Every vertex must
/// track its image; no replayed run may elect exactly one node, and every
/// run in which all nodes decide must elect several. With `corrupt`, one
/// vertex reads a private source.
#[allow(clippy::too_many_arguments)]
pub fn impossibility_witness<A: NodeAlgorithm>(
    total: &SymDigraph,
    base: &SymDigraph,
    phi: &Homomorphism,
    alg: &A,
    budget: u64,
    seeds: &[u64],
    corrupt: bool,
    observers: &mut [&mut dyn StepObserver<A::State>],
) -> Result<CheckReport, VerifierError>
where
    A::State: Serialize,
{
    let w = is_symmetric_covering(total, base, phi)?;
    if w.sheets < 2 {
        return Err(VerifierError::Precondition(format!("the covering has {} sheet; at least 2 are needed", w.sheets)));
    }
    let mut report = CheckReport::new("impossibility", format!("{} vertices over {} ({} sheets)", total.vertex_count(), base.vertex_count(), w.sheets));
    let opts = RunOptions { budget, ..RunOptions::default() };
    for &seed in seeds {
        report.seeds.push(seed);
        let base_sources = sources_from_labels(base, seed);
        let mut lifted_sources = fiber_shared_assignment(total, base, phi, &base_sources)?;
        if corrupt {
            lifted_sources = corrupt_sources(&lifted_sources, spare_vertex(phi, base), seed);
        }
        let base_trace = run(base, alg, base_sources, Policy::Synchronous, &opts)?;
        let lifted = lift_in_lockstep(total, base, phi, alg, &base_trace, lifted_sources, seed, observers)?;
        let outcome = evaluate_decisions(lifted.states.iter().map(|s| alg.decision(s)));
        report.count(outcome.name(), 1);
        report.count("steps", lifted.steps as u64);
        if let Some(c) = lifted.divergence {
            report.fail(c);
            continue;
        }
        if matches!(outcome, Outcome::Correct(_) | Outcome::NoneElected) {
            report.fail(Counterexample {
                seed,
                step: lifted.steps,
                vertex: String::new(),
                expected: "several elected nodes or no decision".into(),
                actual: outcome.name().into(),
            });
        }
    }
    Ok(report)
}

/// Access to the enumeration part of a node state.
pub trait EnumerationState {
    fn enumeration(&self) -> &Enumeration;
}

impl EnumerationState for MState {
    fn enumeration(&self) -> &Enumeration {
        &self.core
    }
}

impl EnumerationState for MTState {
    fn enumeration(&self) -> &Enumeration {
        &self.core
    }
}

/// A violated per-step property.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepViolation {
    pub step: usize,
    pub vertex: VertexId,
    pub property: &'static str,
    pub detail: String,
}

/// Checks, at each step of the active node: the number does not decrease,
/// the bit sequence only grows, the local view does not decrease, no
/// record of the mailbox is lost, the node's own record is not outranked,
/// and every number below a known number is known and currently held by
/// some node.
#[derive(Debug, Default)]
pub struct MonotonicityObserver {
    pub violations: Vec<StepViolation>,
    pub steps: usize,
}

impl MonotonicityObserver {
    pub fn new() -> Self {
        Self::default()
    }
}

impl<S: EnumerationState> StepObserver<S> for MonotonicityObserver {
    fn observe(&mut self, step: usize, event: &Event, before: &S, states: &[S], _sources: &SourceAssignment) {
        self.steps += 1;
        let v = event.vertex();
        let (b, a) = (before.enumeration(), states[v].enumeration());
        let mut flag = |property: &'static str, detail: String| self.violations.push(StepViolation { step, vertex: v, property, detail });
        if a.number < b.number {
            flag("number", format!("{} -> {}", b.number, a.number));
        }
        if !b.bits.is_prefix_of(&a.bits) {
            flag("bits", format!("{} -> {}", b.bits, a.bits));
        }
        if compare_views(&b.view, &a.view) == Ordering::Greater {
            flag("view", "local view decreased".into());
        }
        if !a.mailbox.covers(&b.mailbox) {
            flag("mailbox", "a record was lost".into());
        }
        if a.number != 0 && a.outranked() {
            flag("self-maximality", format!("number {} is held by a stronger record", a.number));
        }
        let held: std::collections::BTreeSet<u32> = states.iter().map(|s| s.enumeration().number).collect();
        let top = a.mailbox.max_number();
        if let Some(m) = (1..=top).find(|&m| !a.mailbox.contains_number(m)) {
            flag("density", format!("number {m} missing below {top}"));
        }
        if let Some(m) = (1..=top).find(|m| !held.contains(m)) {
            flag("density", format!("number {m} known but held by no node"));
        }
    }
}

/// Checks the stability counters of the second algorithm at each step:
/// with an unchanged mailbox shape the counter grows by at most one and is
/// at least the smallest neighbor counter whenever the reconstructed
/// digraph is usable; a counter `c >= 1` requires every
/// neighbor to have held the same shape with a counter of at least `c - 1`.
pub struct CounterObserver<'a> {
    alg: &'a AlgorithmMTau,
    neighbors: Vec<Vec<VertexId>>,
    /// Per node, the shapes it held and the largest counter with each.
    history: Vec<Vec<(Arc<Mailbox>, i64)>>,
    pub violations: Vec<StepViolation>,
    pub steps: usize,
}

impl<'a> CounterObserver<'a> {
    pub fn new(d: &SymDigraph, alg: &'a AlgorithmMTau) -> Self {
        let neighbors = d.vertices().map(|v| d.out_arcs(v).iter().map(|&a| d.arc(a).target).collect()).collect();
        Self { alg, neighbors, history: vec![Vec::new(); d.vertex_count()], violations: Vec::new(), steps: 0 }
    }

    fn record(&mut self, v: VertexId, s: &MTState) {
        let h = &mut self.history[v];
        match h.last_mut() {
            Some((m, c)) if m.same_shape(&s.core.mailbox) => *c = (*c).max(s.counter),
            _ => h.push((Arc::clone(&s.core.mailbox), s.counter)),
        }
    }
}

impl StepObserver<MTState> for CounterObserver<'_> {
    fn observe(&mut self, step: usize, event: &Event, before: &MTState, states: &[MTState], _sources: &SourceAssignment) {
        self.steps += 1;
        let v = event.vertex();
        if self.history[v].is_empty() {
            self.record(v, before);
        }
        let a = &states[v];
        self.record(v, a);
        let mut flag = |property: &'static str, detail: String| self.violations.push(StepViolation { step, vertex: v, property, detail });
        if before.core.number != 0 && before.core.mailbox.same_shape(&a.core.mailbox) {
            if a.counter < before.counter || a.counter > before.counter + 1 {
                flag("counter-step", format!("{} -> {}", before.counter, a.counter));
            }
            // The rule only raises the counter while the reconstruction is
            // usable, so the floor is owed only then.
            let usable = self.alg.reconstruct(a).is_some_and(|r| r.in_family && a.counter <= r.tau);
            if let Some(&min) = a.neighbor_counters.values().min().filter(|_| usable) {
                if a.counter < min {
                    flag("counter-floor", format!("counter {} below neighbor minimum {min}", a.counter));
                }
            }
        }
        if a.counter >= 1 {
            for &w in &self.neighbors[v] {
                let ok = self.history[w].iter().any(|(m, c)| *c >= a.counter - 1 && m.same_shape(&a.core.mailbox));
                if !ok {
                    self.violations.push(StepViolation {
                        step,
                        vertex: v,
                        property: "counter-propagation",
                        detail: format!("neighbor {w} never held this shape with counter >= {}", a.counter - 1),
                    });
                }
            }
        }
    }
}

/// Checks after each step that the network is a quasi-covering of the
/// digraph the active node reconstructs, around that node, with radius its
/// counter. Each vertex maps to the number it held when its mailbox had the
/// active node's shape.
pub struct QuasiCoveringObserver<'a> {
    network: &'a SymDigraph,
    alg: &'a AlgorithmMTau,
    /// Per node, the shapes it held and its number with each.
    history: Vec<Vec<(Arc<Mailbox>, u32)>>,
    pub violations: Vec<StepViolation>,
    pub checked: usize,
}

impl<'a> QuasiCoveringObserver<'a> {
    pub fn new(network: &'a SymDigraph, alg: &'a AlgorithmMTau) -> Self {
        Self { network, alg, history: vec![Vec::new(); network.vertex_count()], violations: Vec::new(), checked: 0 }
    }

    fn number_with_shape(&self, w: VertexId, m: &Mailbox) -> Option<u32> {
        self.history[w].iter().rev().find(|(x, _)| x.same_shape(m)).map(|&(_, n)| n)
    }
}

impl StepObserver<MTState> for QuasiCoveringObserver<'_> {
    fn observe(&mut self, step: usize, event: &Event, _before: &MTState, states: &[MTState], _sources: &SourceAssignment) {
        let v = event.vertex();
        let s = &states[v];
        let h = &mut self.history[v];
        if !h.last().is_some_and(|(m, n)| *n == s.core.number && m.same_shape(&s.core.mailbox)) {
            h.push((Arc::clone(&s.core.mailbox), s.core.number));
        }
        if s.counter < 0 {
            return;
        }
        let Some(rec) = self.alg.reconstruct(s) else { return };
        self.checked += 1;
        let r = s.counter as usize;
        let d = self.network;
        let region = ball(d, v, r).expect("vertex exists");
        let map: Vec<Option<VertexId>> = d
            .vertices()
            .map(|w| {
                if !region.contains_vertex(w) {
                    return None;
                }
                self.number_with_shape(w, &s.core.mailbox).and_then(|n| rec.digraph.vertex_index(&n.to_string()))
            })
            .collect();
        let gamma = Homomorphism::from_vertex_map(d, &rec.digraph, map);
        let verdict = match check_quasi_covering(d, &rec.digraph, v, r, &gamma) {
            Ok(Some(_)) => return,
            Ok(None) => "the map is not a quasi-covering".to_string(),
            Err(e) => e.to_string(),
        };
        self.violations.push(StepViolation { step, vertex: v, property: "quasi-covering", detail: format!("radius {r}: {verdict}") });
    }
}
