//! Deterministic message-passing simulator.
//!
//! Every arc of the digraph is a FIFO channel. A message sent by `u` through
//! port `p` travels along the out-arc of `u` labeled `(p, q)` and is received
//! by its target on port `q`. One event is one rule application at one node.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Debug;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{ArcId, Homomorphism, Port, SymDigraph, VertexId, VertexLabel};
use crate::randomness::{scheduler_rng, DrawLog, RandomnessError, SourceAssignment};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Wakeup { vertex: VertexId },
    Deliver { vertex: VertexId, port: Port },
    Spontaneous { vertex: VertexId, rule: char },
}

impl Event {
    pub fn vertex(&self) -> VertexId {
        match *self {
            Event::Wakeup { vertex } | Event::Deliver { vertex, .. } | Event::Spontaneous { vertex, .. } => vertex,
        }
    }

    /// The same event at another vertex.
    pub fn at(&self, vertex: VertexId) -> Event {
        match *self {
            Event::Wakeup { .. } => Event::Wakeup { vertex },
            Event::Deliver { port, .. } => Event::Deliver { vertex, port },
            Event::Spontaneous { rule, .. } => Event::Spontaneous { vertex, rule },
        }
    }
}

/// A message as received: the payload and the port it was sent through.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message<P> {
    pub payload: P,
    pub via_port: Port,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Undecided,
    Elected,
    NonElected,
}

/// What a node knows about itself at start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub label: VertexLabel,
    pub degree: usize,
}

/// Capabilities offered to a rule while it runs: random bits from the
/// node's source and outgoing messages.
pub struct StepContext<'s, P> {
    degree: usize,
    draw: &'s mut dyn FnMut() -> bool,
    outbox: Vec<(Port, P)>,
}

impl<'s, P: Clone> StepContext<'s, P> {
    pub fn new(degree: usize, draw: &'s mut dyn FnMut() -> bool) -> Self {
        Self { degree, draw, outbox: Vec::new() }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn draw_bit(&mut self) -> bool {
        (self.draw)()
    }

    pub fn send(&mut self, port: Port, payload: P) {
        self.outbox.push((port, payload));
    }

    /// Sends `payload` on every port in increasing order.
    pub fn broadcast(&mut self, payload: P) {
        for p in 1..=self.degree as Port {
            self.outbox.push((p, payload.clone()));
        }
    }

    /// Messages sent so far, as `(port, payload)`.
    pub fn into_outbox(self) -> Vec<(Port, P)> {
        self.outbox
    }
}

/// A distributed algorithm given by guarded rules. Steps must depend only on
/// the state, the event and the bits drawn through the context.
pub trait NodeAlgorithm {
    type State: Clone + PartialEq + Debug;
    type Payload: Clone + Debug;

    fn initial_state(&self, info: &NodeInfo) -> Self::State;
    fn wakeup_enabled(&self, state: &Self::State) -> bool;
    fn on_wakeup(&self, state: &mut Self::State, ctx: &mut StepContext<'_, Self::Payload>);
    fn on_receive(&self, state: &mut Self::State, port: Port, msg: &Message<Self::Payload>, ctx: &mut StepContext<'_, Self::Payload>);

    /// Tags of the spontaneous rules, in priority order.
    fn spontaneous_rules(&self) -> &[char] {
        &[]
    }

    fn spontaneous_enabled(&self, _state: &Self::State, _rule: char) -> bool {
        false
    }

    fn on_spontaneous(&self, _state: &mut Self::State, _rule: char, _ctx: &mut StepContext<'_, Self::Payload>) {}

    fn decision(&self, _state: &Self::State) -> Decision {
        Decision::Undecided
    }
}

/// Chooses among enabled events; may read states and bits drawn so far.
pub trait Adversary<S> {
    fn choose(&mut self, candidates: &[Event], states: &[S], draws: &DrawLog) -> usize;
}

/// Always activates a node that has drawn the fewest bits so far, trying to
/// starve symmetry breaking where it is slowest.
#[derive(Debug, Default)]
pub struct LaggardFirst;

impl<S> Adversary<S> for LaggardFirst {
    fn choose(&mut self, candidates: &[Event], states: &[S], draws: &DrawLog) -> usize {
        let mut counts = vec![0usize; states.len()];
        for d in draws {
            counts[d.vertex] += 1;
        }
        (0..candidates.len()).min_by_key(|&i| counts[candidates[i].vertex()]).unwrap_or(0)
    }
}

pub enum Policy<'p, S> {
    /// Rounds in which every node receives the messages pending at the start
    /// of the round, then takes at most one spontaneous step.
    Synchronous,
    /// Uniform choice among enabled (node, event) pairs, from a scheduler
    /// stream keyed by the seed.
    SeededRandom(u64),
    /// Exactly these events, which must all be enabled when reached.
    Scripted(&'p [Event]),
    Adaptive(&'p mut dyn Adversary<S>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SnapshotPolicy {
    /// After every `k`-th event.
    Every(usize),
    /// After the events whose 1-based counts are listed.
    At(BTreeSet<usize>),
    /// After each synchronous round.
    Rounds,
    FinalOnly,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub budget: u64,
    pub max_rounds: Option<u64>,
    pub snapshots: SnapshotPolicy,
    /// Stop as soon as every node has decided.
    pub stop_when_decided: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { budget: 1_000_000, max_rounds: None, snapshots: SnapshotPolicy::FinalOnly, stop_when_decided: true }
    }
}

impl RunOptions {
    pub fn rounds(k: u64) -> Self {
        Self { max_rounds: Some(k), snapshots: SnapshotPolicy::Rounds, stop_when_decided: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    AllDecided,
    Quiescent,
    BudgetExhausted,
    RoundLimit,
    ScriptEnd,
}

impl RunStatus {
    pub fn is_terminated(self) -> bool {
        matches!(self, RunStatus::AllDecided | RunStatus::Quiescent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot<S> {
    /// Number of events applied when the snapshot was taken.
    pub after_event: usize,
    pub states: Vec<S>,
    pub draw_counts: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct ExecutionTrace<S> {
    pub initial: Vec<S>,
    pub events: Vec<Event>,
    pub snapshots: Vec<Snapshot<S>>,
    pub final_states: Vec<S>,
    /// Sources with final counters and the log of every bit drawn.
    pub sources: SourceAssignment,
    pub status: RunStatus,
    pub rounds: u64,
}

impl<S> ExecutionTrace<S> {
    pub fn draws(&self) -> &DrawLog {
        self.sources.log()
    }
}

#[derive(Serialize)]
struct TraceExport<'t, S> {
    status: RunStatus,
    rounds: u64,
    events: &'t [Event],
    snapshots: &'t [Snapshot<S>],
    draws: &'t DrawLog,
}

impl<S: Serialize> ExecutionTrace<S> {
    pub fn to_json(&self) -> String {
        let export = TraceExport {
            status: self.status,
            rounds: self.rounds,
            events: &self.events,
            snapshots: &self.snapshots,
            draws: self.sources.log(),
        };
        serde_json::to_string_pretty(&export).expect("trace serializes")
    }
}

/// Loads a schedule: a JSON list of events.
pub fn parse_schedule(text: &str) -> Result<Vec<Event>, RuntimeError> {
    serde_json::from_str(text).map_err(|e| RuntimeError::Schedule(e.to_string()))
}

/// Checks run on the global configuration after every event.
pub trait StepObserver<S> {
    /// `step` is the 1-based event count, `before` the active node's state
    /// before the event.
    fn observe(&mut self, step: usize, event: &Event, before: &S, states: &[S], sources: &SourceAssignment);
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("event {0:?} is not enabled in this state")]
pub struct NotEnabled(pub Event);

/// Applies one event to one node state outside the simulator. `Deliver`
/// events need the received message; `draw` supplies random bits.
pub fn node_step<A: NodeAlgorithm>(
    alg: &A,
    state: &A::State,
    event: &Event,
    message: Option<&Message<A::Payload>>,
    degree: usize,
    draw: &mut dyn FnMut() -> bool,
) -> Result<(A::State, Vec<(Port, A::Payload)>), NotEnabled> {
    let mut next = state.clone();
    let mut ctx = StepContext::new(degree, draw);
    match (event, message) {
        (Event::Wakeup { .. }, _) if alg.wakeup_enabled(state) => alg.on_wakeup(&mut next, &mut ctx),
        (Event::Deliver { port, .. }, Some(m)) => alg.on_receive(&mut next, *port, m, &mut ctx),
        (Event::Spontaneous { rule, .. }, _) if alg.spontaneous_enabled(state, *rule) => alg.on_spontaneous(&mut next, *rule, &mut ctx),
        _ => return Err(NotEnabled(event.clone())),
    }
    Ok((next, ctx.into_outbox()))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("digraph is invalid: {0}")]
    InvalidDigraph(String),
    #[error("source assignment covers {sources} vertices, digraph has {vertices}")]
    SourceSize { sources: usize, vertices: usize },
    #[error("event {index} ({event:?}) is not enabled")]
    ImpossibleEvent { index: usize, event: Event },
    #[error("malformed schedule: {0}")]
    Schedule(String),
    #[error("cannot lift: {0}")]
    Lift(String),
    #[error(transparent)]
    Randomness(#[from] RandomnessError),
}

#[derive(Debug, Clone, Default)]
struct Guards {
    wakeup: bool,
    rules: Vec<char>,
}

/// A configuration of the network under an algorithm, advanced one event at
/// a time.
pub struct Simulator<'a, A: NodeAlgorithm> {
    alg: &'a A,
    degree: Vec<usize>,
    /// `out_arc[v][p - 1]` is the arc leaving `v` through port `p`.
    out_arc: Vec<Vec<ArcId>>,
    /// `in_arc[v][q - 1]` is the arc entering `v` on port `q`.
    in_arc: Vec<Vec<ArcId>>,
    states: Vec<A::State>,
    channels: Vec<VecDeque<Message<A::Payload>>>,
    sources: SourceAssignment,
    guards: Vec<Guards>,
    events: Vec<Event>,
}

impl<'a, A: NodeAlgorithm> Simulator<'a, A> {
    pub fn new(d: &SymDigraph, alg: &'a A, sources: SourceAssignment) -> Result<Self, RuntimeError> {
        if let Some(v) = d.validate().into_iter().next() {
            return Err(RuntimeError::InvalidDigraph(v.to_string()));
        }
        if sources.vertex_count() != d.vertex_count() {
            return Err(RuntimeError::SourceSize { sources: sources.vertex_count(), vertices: d.vertex_count() });
        }
        let degree: Vec<usize> = d.vertices().map(|v| d.degree(v)).collect();
        let out_arc = d.vertices().map(|v| d.out_arcs_by_port(v)).collect();
        let in_arc = d
            .vertices()
            .map(|v| {
                let mut arcs = d.in_arcs(v).to_vec();
                arcs.sort_by_key(|&a| d.arc(a).ports.1);
                arcs
            })
            .collect();
        let states: Vec<A::State> = d
            .vertices()
            .map(|v| alg.initial_state(&NodeInfo { label: d.label(v).clone(), degree: degree[v] }))
            .collect();
        let mut sim = Self {
            alg,
            degree,
            out_arc,
            in_arc,
            channels: vec![VecDeque::new(); d.arc_count()],
            guards: vec![Guards::default(); states.len()],
            states,
            sources,
            events: Vec::new(),
        };
        for v in 0..sim.states.len() {
            sim.refresh_guards(v);
        }
        Ok(sim)
    }

    fn refresh_guards(&mut self, v: VertexId) {
        let s = &self.states[v];
        self.guards[v] = Guards {
            wakeup: self.alg.wakeup_enabled(s),
            rules: self.alg.spontaneous_rules().iter().copied().filter(|&r| self.alg.spontaneous_enabled(s, r)).collect(),
        };
    }

    pub fn states(&self) -> &[A::State] {
        &self.states
    }

    pub fn sources(&self) -> &SourceAssignment {
        &self.sources
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    fn pending(&self, v: VertexId, port: Port) -> usize {
        port.checked_sub(1)
            .and_then(|i| self.in_arc[v].get(i as usize))
            .map_or(0, |&a| self.channels[a].len())
    }

    pub fn is_enabled(&self, e: &Event) -> bool {
        match *e {
            Event::Wakeup { vertex } => vertex < self.states.len() && self.guards[vertex].wakeup,
            Event::Deliver { vertex, port } => vertex < self.states.len() && self.pending(vertex, port) > 0,
            Event::Spontaneous { vertex, rule } => vertex < self.states.len() && self.guards[vertex].rules.contains(&rule),
        }
    }

    /// Every enabled event, grouped by node in index order.
    pub fn enabled_events(&self) -> Vec<Event> {
        let mut out = Vec::new();
        for v in 0..self.states.len() {
            if self.guards[v].wakeup {
                out.push(Event::Wakeup { vertex: v });
            }
            for &rule in &self.guards[v].rules {
                out.push(Event::Spontaneous { vertex: v, rule });
            }
            for (i, &a) in self.in_arc[v].iter().enumerate() {
                if !self.channels[a].is_empty() {
                    out.push(Event::Deliver { vertex: v, port: i as Port + 1 });
                }
            }
        }
        out
    }

    pub fn all_decided(&self) -> bool {
        self.states.iter().all(|s| self.alg.decision(s) != Decision::Undecided)
    }

    /// Applies one event, which must be enabled.
    pub fn step(&mut self, e: &Event) -> Result<(), RuntimeError> {
        if !self.is_enabled(e) {
            return Err(RuntimeError::ImpossibleEvent { index: self.events.len(), event: e.clone() });
        }
        let v = e.vertex();
        let sources = &mut self.sources;
        let mut draw = || sources.draw_bit(v).expect("simulated vertex has a source");
        let mut ctx = StepContext::new(self.degree[v], &mut draw);
        let state = &mut self.states[v];
        match *e {
            Event::Wakeup { .. } => self.alg.on_wakeup(state, &mut ctx),
            Event::Deliver { port, .. } => {
                let arc = self.in_arc[v][port as usize - 1];
                let msg = self.channels[arc].pop_front().expect("channel is non-empty");
                self.alg.on_receive(state, port, &msg, &mut ctx);
            }
            Event::Spontaneous { rule, .. } => self.alg.on_spontaneous(state, rule, &mut ctx),
        }
        for (p, payload) in ctx.into_outbox() {
            let arc = self.out_arc[v][p as usize - 1];
            self.channels[arc].push_back(Message { payload, via_port: p });
        }
        self.refresh_guards(v);
        self.events.push(e.clone());
        Ok(())
    }

    /// Number of messages waiting on every in-port of every node.
    fn pending_counts(&self) -> Vec<Vec<usize>> {
        self.in_arc.iter().map(|arcs| arcs.iter().map(|&a| self.channels[a].len()).collect()).collect()
    }
}

struct Recorder<'o, S> {
    policy: SnapshotPolicy,
    snapshots: Vec<Snapshot<S>>,
    observers: &'o mut [&'o mut dyn StepObserver<S>],
}

impl<S: Clone> Recorder<'_, S> {
    fn take(&mut self, after_event: usize, states: &[S], sources: &SourceAssignment) {
        if self.snapshots.last().is_some_and(|s| s.after_event == after_event) {
            return;
        }
        self.snapshots.push(Snapshot { after_event, states: states.to_vec(), draw_counts: sources.draw_counts().to_vec() });
    }
}

/// Runs `alg` on `d` until every node has decided, no event is enabled, the
/// budget of events is spent or the round limit is reached.
pub fn run<A: NodeAlgorithm>(
    d: &SymDigraph,
    alg: &A,
    sources: SourceAssignment,
    policy: Policy<'_, A::State>,
    opts: &RunOptions,
) -> Result<ExecutionTrace<A::State>, RuntimeError> {
    run_observed(d, alg, sources, policy, opts, &mut [])
}

pub fn run_observed<'o, A: NodeAlgorithm>(
    d: &SymDigraph,
    alg: &A,
    sources: SourceAssignment,
    policy: Policy<'_, A::State>,
    opts: &RunOptions,
    observers: &'o mut [&'o mut dyn StepObserver<A::State>],
) -> Result<ExecutionTrace<A::State>, RuntimeError> {
    if opts.budget == 0 {
        return Err(RuntimeError::ZeroBudget);
    }
    let mut sim = Simulator::new(d, alg, sources)?;
    let initial = sim.states.clone();
    let mut rec = Recorder { policy: opts.snapshots.clone(), snapshots: Vec::new(), observers };
    let mut rounds = 0;
    let status = match policy {
        Policy::Synchronous => run_synchronous(&mut sim, opts, &mut rec, &mut rounds)?,
        Policy::SeededRandom(seed) => {
            let mut rng = scheduler_rng(seed);
            run_choosing(&mut sim, opts, &mut rec, |c, _, _| rng.gen_range(0..c.len()))?
        }
        Policy::Adaptive(adv) => run_choosing(&mut sim, opts, &mut rec, |c, s, l| adv.choose(c, s, l))?,
        Policy::Scripted(script) => {
            let mut status = RunStatus::ScriptEnd;
            for e in script {
                if sim.events.len() as u64 >= opts.budget {
                    status = RunStatus::BudgetExhausted;
                    break;
                }
                apply(&mut sim, e, &mut rec)?;
            }
            if status == RunStatus::ScriptEnd {
                if sim.all_decided() {
                    status = RunStatus::AllDecided;
                } else if sim.enabled_events().is_empty() {
                    status = RunStatus::Quiescent;
                }
            }
            status
        }
    };
    let n = sim.events.len();
    if !matches!(rec.policy, SnapshotPolicy::At(_)) {
        rec.take(n, &sim.states, &sim.sources);
    }
    Ok(ExecutionTrace {
        initial,
        events: sim.events,
        snapshots: rec.snapshots,
        final_states: sim.states,
        sources: sim.sources,
        status,
        rounds,
    })
}

fn apply<A: NodeAlgorithm>(sim: &mut Simulator<'_, A>, e: &Event, rec: &mut Recorder<'_, A::State>) -> Result<(), RuntimeError> {
    let before = (!rec.observers.is_empty()).then(|| sim.states[e.vertex()].clone());
    sim.step(e)?;
    let n = sim.events.len();
    if let Some(before) = before {
        for o in rec.observers.iter_mut() {
            o.observe(n, e, &before, &sim.states, &sim.sources);
        }
    }
    let wanted = match &rec.policy {
        SnapshotPolicy::Every(k) => *k > 0 && n.is_multiple_of(*k),
        SnapshotPolicy::At(set) => set.contains(&n),
        SnapshotPolicy::Rounds | SnapshotPolicy::FinalOnly => false,
    };
    if wanted {
        rec.take(n, &sim.states, &sim.sources);
    }
    Ok(())
}

fn run_synchronous<A: NodeAlgorithm>(
    sim: &mut Simulator<'_, A>,
    opts: &RunOptions,
    rec: &mut Recorder<'_, A::State>,
    rounds: &mut u64,
) -> Result<RunStatus, RuntimeError> {
    loop {
        if opts.max_rounds.is_some_and(|k| *rounds >= k) {
            return Ok(RunStatus::RoundLimit);
        }
        let pending = sim.pending_counts();
        let start = sim.events.len();
        for v in 0..sim.states.len() {
            for (i, &count) in pending[v].iter().enumerate() {
                for _ in 0..count {
                    if sim.events.len() as u64 >= opts.budget {
                        return Ok(RunStatus::BudgetExhausted);
                    }
                    apply(sim, &Event::Deliver { vertex: v, port: i as Port + 1 }, rec)?;
                }
            }
            let spontaneous = if sim.guards[v].wakeup {
                Some(Event::Wakeup { vertex: v })
            } else {
                sim.guards[v].rules.first().map(|&rule| Event::Spontaneous { vertex: v, rule })
            };
            if let Some(e) = spontaneous {
                if sim.events.len() as u64 >= opts.budget {
                    return Ok(RunStatus::BudgetExhausted);
                }
                apply(sim, &e, rec)?;
            }
        }
        if sim.events.len() == start {
            return Ok(RunStatus::Quiescent);
        }
        *rounds += 1;
        if rec.policy == SnapshotPolicy::Rounds {
            rec.take(sim.events.len(), &sim.states, &sim.sources);
        }
        if opts.stop_when_decided && sim.all_decided() {
            return Ok(RunStatus::AllDecided);
        }
    }
}

fn run_choosing<A: NodeAlgorithm>(
    sim: &mut Simulator<'_, A>,
    opts: &RunOptions,
    rec: &mut Recorder<'_, A::State>,
    mut choose: impl FnMut(&[Event], &[A::State], &DrawLog) -> usize,
) -> Result<RunStatus, RuntimeError> {
    loop {
        if opts.stop_when_decided && sim.all_decided() {
            return Ok(RunStatus::AllDecided);
        }
        let candidates = sim.enabled_events();
        if candidates.is_empty() {
            return Ok(RunStatus::Quiescent);
        }
        if sim.events.len() as u64 >= opts.budget {
            return Ok(RunStatus::BudgetExhausted);
        }
        let i = choose(&candidates, &sim.states, sim.sources.log()).min(candidates.len() - 1);
        apply(sim, &candidates[i], rec)?;
    }
}

/// Replays a recorded event sequence from scratch.
pub fn replay<A: NodeAlgorithm>(
    d: &SymDigraph,
    alg: &A,
    trace: &ExecutionTrace<A::State>,
    snapshots: SnapshotPolicy,
) -> Result<ExecutionTrace<A::State>, RuntimeError> {
    let opts = RunOptions { budget: trace.events.len().max(1) as u64, snapshots, ..RunOptions::default() };
    run(d, alg, trace.sources.reset(), Policy::Scripted(&trace.events), &opts)
}

/// Replays a base execution on a covering: each base event at `v'` becomes
/// the same event at every preimage of `v'`, in index order. Snapshots are
/// taken at the end of the groups matching the base snapshots.
pub fn lift_execution<A: NodeAlgorithm>(
    base_trace: &ExecutionTrace<A::State>,
    total: &SymDigraph,
    base: &SymDigraph,
    phi: &Homomorphism,
    lifted_sources: SourceAssignment,
    alg: &A,
) -> Result<ExecutionTrace<A::State>, RuntimeError> {
    let w = crate::coverings::is_symmetric_covering(total, base, phi).map_err(|e| RuntimeError::Lift(e.to_string()))?;
    let base_sources = &base_trace.sources;
    for v in total.vertices() {
        let image = phi.vertex(v).expect("covering is total");
        let (mine, theirs) = (lifted_sources.class_of(v), base_sources.class_of(image));
        if mine != theirs || lifted_sources.class_seed(mine) != base_sources.class_seed(theirs) {
            return Err(RuntimeError::Lift(format!("vertex {} does not share the source of its image", total.vertex_id(v))));
        }
    }
    let fibers = phi.fibers(base.vertex_count());
    let events: Vec<Event> = base_trace.events.iter().flat_map(|e| fibers[e.vertex()].iter().map(move |&v| e.at(v))).collect();
    let at = base_trace.snapshots.iter().map(|s| s.after_event * w.sheets).collect();
    let opts = RunOptions { budget: events.len().max(1) as u64, snapshots: SnapshotPolicy::At(at), ..RunOptions::default() };
    let mut trace = run(total, alg, lifted_sources, Policy::Scripted(&events), &opts)?;
    if base_trace.snapshots.first().is_some_and(|s| s.after_event == 0) {
        trace.snapshots.insert(0, Snapshot { after_event: 0, states: trace.initial.clone(), draw_counts: vec![0; total.vertex_count()] });
    }
    trace.rounds = base_trace.rounds;
    Ok(trace)
}
