//! Randomized enumeration with known size, used as an election algorithm:
//! the node that takes the number equal to the size is elected.

use serde::Serialize;

use crate::enumeration::{Announcement, Enumeration};
use crate::graph::{Port, VertexId};
use crate::runtime::{node_step, Decision, Event, ExecutionTrace, Message, NodeAlgorithm, NodeInfo, NotEnabled, StepContext};

/// Tag of the spontaneous rule extending the bit sequence.
pub const RULE_C: char = 'C';

/// Election knowing the number of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgorithmM {
    pub n_total: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MState {
    #[serde(flatten)]
    pub core: Enumeration,
    pub decision: Decision,
}

impl AlgorithmM {
    pub fn new(n_total: u32) -> Self {
        Self { n_total }
    }

    /// Decisions are final once taken.
    fn latch(&self, s: &mut MState) {
        if s.decision != Decision::Undecided {
            return;
        }
        if s.core.number == self.n_total {
            s.decision = Decision::Elected;
        } else if s.core.mailbox.contains_number(self.n_total) {
            s.decision = Decision::NonElected;
        }
    }
}

impl NodeAlgorithm for AlgorithmM {
    type State = MState;
    type Payload = Announcement;

    fn initial_state(&self, info: &NodeInfo) -> MState {
        MState { core: Enumeration::new(info.label.clone(), info.degree), decision: Decision::Undecided }
    }

    fn wakeup_enabled(&self, s: &MState) -> bool {
        s.core.number == 0
    }

    fn on_wakeup(&self, s: &mut MState, ctx: &mut StepContext<'_, Announcement>) {
        let bit = ctx.draw_bit();
        s.core.wake(bit);
        ctx.broadcast(s.core.announcement());
        self.latch(s);
    }

    fn on_receive(&self, s: &mut MState, port: Port, msg: &Message<Announcement>, ctx: &mut StepContext<'_, Announcement>) {
        if s.core.absorb(&msg.payload, msg.via_port, port).changed {
            ctx.broadcast(s.core.announcement());
        }
        self.latch(s);
    }

    fn spontaneous_rules(&self) -> &[char] {
        &[RULE_C]
    }

    fn spontaneous_enabled(&self, s: &MState, rule: char) -> bool {
        rule == RULE_C && !s.core.mailbox.contains_number(self.n_total) && s.core.mailbox.maximal_coherent().1
    }

    fn on_spontaneous(&self, s: &mut MState, _rule: char, ctx: &mut StepContext<'_, Announcement>) {
        let bit = ctx.draw_bit();
        s.core.bits.push(bit);
        ctx.broadcast(s.core.announcement());
        self.latch(s);
    }

    fn decision(&self, s: &MState) -> Decision {
        s.decision
    }
}

/// Applies one event to one node state outside the simulator. `Deliver`
/// events need the received message; `draw` supplies random bits.
pub fn m_step(
    alg: &AlgorithmM,
    state: &MState,
    event: &Event,
    message: Option<&Message<Announcement>>,
    degree: usize,
    draw: &mut dyn FnMut() -> bool,
) -> Result<(MState, Vec<(Port, Announcement)>), NotEnabled> {
    node_step(alg, state, event, message, degree, draw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Correct(VertexId),
    MultipleElected,
    NoneElected,
    Undecided,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Correct(_) => "correct",
            Outcome::MultipleElected => "multiple_elected",
            Outcome::NoneElected => "none_elected",
            Outcome::Undecided => "undecided",
        }
    }
}

/// Classifies final decisions: undecided if any node has not decided,
/// otherwise by the number of elected nodes.
pub fn evaluate_decisions(decisions: impl IntoIterator<Item = Decision>) -> Outcome {
    let mut elected = Vec::new();
    for (v, d) in decisions.into_iter().enumerate() {
        match d {
            Decision::Undecided => return Outcome::Undecided,
            Decision::Elected => elected.push(v),
            Decision::NonElected => {}
        }
    }
    match elected.as_slice() {
        [] => Outcome::NoneElected,
        [v] => Outcome::Correct(*v),
        _ => Outcome::MultipleElected,
    }
}

pub fn evaluate_outcome<A: NodeAlgorithm>(alg: &A, trace: &ExecutionTrace<A::State>) -> Outcome {
    evaluate_decisions(trace.final_states.iter().map(|s| alg.decision(s)))
}
