//! Election with structural knowledge: enumeration plus a stability counter
//! per node. A node decides once its mailbox has been stable over a radius
//! large enough that no other network of the family could look the same.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::enumeration::{build_dm, Announcement, Enumeration};
use crate::graph::{Port, SymDigraph};
use crate::knowledge::{family_contains, tau_of, Knowledge, KnowledgeError};
use crate::runtime::{node_step, Decision, Event, Message, NodeAlgorithm, NodeInfo, NotEnabled, StepContext};

pub use crate::election_m::RULE_C;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MTState {
    #[serde(flatten)]
    pub core: Enumeration,
    /// Radius up to which every node is known to hold the same mailbox
    /// shape; -1 when unknown.
    pub counter: i64,
    /// Last counter heard on each port from a neighbor with the same
    /// mailbox shape.
    pub neighbor_counters: BTreeMap<Port, i64>,
    pub decision: Decision,
}

/// An announcement together with the sender's counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MTMessage {
    pub core: Announcement,
    pub counter: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmMTau {
    knowledge: Knowledge,
}

/// What a node currently reconstructs from its mailbox.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub digraph: SymDigraph,
    pub in_family: bool,
    pub tau: i64,
    pub max_number: u32,
}

fn reset_counters(degree: usize) -> BTreeMap<Port, i64> {
    (1..=degree as Port).map(|q| (q, -1)).collect()
}

impl AlgorithmMTau {
    /// Fails when the knowledge gives no stopping radius.
    pub fn new(knowledge: Knowledge) -> Result<Self, KnowledgeError> {
        let probe = SymDigraph::with_labels(Vec::new());
        tau_of(&knowledge, &probe)?;
        Ok(Self { knowledge })
    }

    pub fn knowledge(&self) -> &Knowledge {
        &self.knowledge
    }

    /// The digraph described by the mailbox, if its maximal records are
    /// coherent.
    pub fn reconstruct(&self, s: &MTState) -> Option<Reconstruction> {
        let top = s.core.mailbox.maximal();
        let digraph = build_dm(&top).ok()?;
        let tau = tau_of(&self.knowledge, &digraph).expect("checked at construction") as i64;
        let in_family = family_contains(&self.knowledge, &digraph);
        let max_number = *top.keys().next_back().expect("coherent records are non-empty");
        Some(Reconstruction { digraph, in_family, tau, max_number })
    }

    fn message(s: &MTState) -> MTMessage {
        MTMessage { core: s.core.announcement(), counter: s.counter }
    }

    fn try_decide(&self, s: &mut MTState, r: Option<&Reconstruction>) {
        if s.decision != Decision::Undecided {
            return;
        }
        if let Some(r) = r.filter(|r| r.in_family && s.counter >= r.tau) {
            s.decision = if s.core.number == r.max_number { Decision::Elected } else { Decision::NonElected };
        }
    }
}

impl NodeAlgorithm for AlgorithmMTau {
    type State = MTState;
    type Payload = MTMessage;

    fn initial_state(&self, info: &NodeInfo) -> MTState {
        MTState {
            core: Enumeration::new(info.label.clone(), info.degree),
            counter: -1,
            neighbor_counters: reset_counters(info.degree),
            decision: Decision::Undecided,
        }
    }

    fn wakeup_enabled(&self, s: &MTState) -> bool {
        s.core.number == 0
    }

    fn on_wakeup(&self, s: &mut MTState, ctx: &mut StepContext<'_, MTMessage>) {
        let bit = ctx.draw_bit();
        s.core.wake(bit);
        s.counter = -1;
        ctx.broadcast(Self::message(s));
        let r = self.reconstruct(s);
        self.try_decide(s, r.as_ref());
    }

    fn on_receive(&self, s: &mut MTState, port: Port, msg: &Message<MTMessage>, ctx: &mut StepContext<'_, MTMessage>) {
        let c_old = s.counter;
        let absorbed = s.core.absorb(&msg.payload.core, msg.via_port, port);
        if absorbed.new_shape {
            s.counter = -1;
            s.neighbor_counters = reset_counters(ctx.degree());
        }
        if s.core.mailbox.same_shape(&msg.payload.core.mailbox) {
            s.neighbor_counters.insert(port, msg.payload.counter);
        }
        let r = self.reconstruct(s);
        let qc = r.as_ref().is_some_and(|r| r.in_family && s.counter <= r.tau);
        if qc && s.neighbor_counters.values().all(|&a| s.counter <= a) {
            s.counter += 1;
        }
        // Counters track shapes only, but refreshed bits must still spread
        // or neighbors keep stale, incoherent records.
        if absorbed.changed || s.counter != c_old {
            ctx.broadcast(Self::message(s));
        }
        self.try_decide(s, r.as_ref());
    }

    fn spontaneous_rules(&self) -> &[char] {
        &[RULE_C]
    }

    fn spontaneous_enabled(&self, s: &MTState, rule: char) -> bool {
        rule == RULE_C
            && s.core.number != 0
            && s.decision == Decision::Undecided
            && self.reconstruct(s).is_some_and(|r| s.counter < r.tau)
    }

    fn on_spontaneous(&self, s: &mut MTState, _rule: char, ctx: &mut StepContext<'_, MTMessage>) {
        let bit = ctx.draw_bit();
        s.core.bits.push(bit);
        ctx.broadcast(Self::message(s));
        let r = self.reconstruct(s);
        self.try_decide(s, r.as_ref());
    }

    fn decision(&self, s: &MTState) -> Decision {
        s.decision
    }
}

/// Applies one event to one node state outside the simulator.
pub fn mtau_step(
    alg: &AlgorithmMTau,
    state: &MTState,
    event: &Event,
    message: Option<&Message<MTMessage>>,
    degree: usize,
    draw: &mut dyn FnMut() -> bool,
) -> Result<(MTState, Vec<(Port, MTMessage)>), NotEnabled> {
    node_step(alg, state, event, message, degree, draw)
}
