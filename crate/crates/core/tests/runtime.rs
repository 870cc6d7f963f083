use std::collections::BTreeMap;

use anonelect::election_m::AlgorithmM;
use anonelect::families::{generate, ring_covering_digraphs, GeneratorSpec};
use anonelect::graph::{build_dir, Homomorphism, Port, SymDigraph};
use anonelect::randomness::{fiber_shared_assignment, SourceAssignment};
use anonelect::runtime::{
    lift_execution, parse_schedule, replay, run, Decision, Event, LaggardFirst, Message, NodeAlgorithm, NodeInfo, Policy, RunOptions,
    RunStatus, RuntimeError, SnapshotPolicy, StepContext,
};
use proptest::prelude::*;

fn dir(spec: &str) -> SymDigraph {
    build_dir(&generate(&spec.parse::<GeneratorSpec>().unwrap()).unwrap())
}

/// Wakes once, sends one message on every port, ignores receipts.
struct Echo;

impl NodeAlgorithm for Echo {
    type State = (bool, usize);
    type Payload = ();

    fn initial_state(&self, _: &NodeInfo) -> (bool, usize) {
        (false, 0)
    }
    fn wakeup_enabled(&self, s: &(bool, usize)) -> bool {
        !s.0
    }
    fn on_wakeup(&self, s: &mut (bool, usize), ctx: &mut StepContext<'_, ()>) {
        s.0 = true;
        ctx.broadcast(());
    }
    fn on_receive(&self, s: &mut (bool, usize), _: Port, _: &Message<()>, _: &mut StepContext<'_, ()>) {
        s.1 += 1;
    }
    fn decision(&self, s: &(bool, usize)) -> Decision {
        if s.0 && s.1 > 0 {
            Decision::NonElected
        } else {
            Decision::Undecided
        }
    }
}

/// Never enabled.
struct Idle;

impl NodeAlgorithm for Idle {
    type State = ();
    type Payload = ();

    fn initial_state(&self, _: &NodeInfo) {}
    fn wakeup_enabled(&self, _: &()) -> bool {
        false
    }
    fn on_wakeup(&self, _: &mut (), _: &mut StepContext<'_, ()>) {}
    fn on_receive(&self, _: &mut (), _: Port, _: &Message<()>, _: &mut StepContext<'_, ()>) {}
}

/// Sends `0, 1, …, LIMIT-1` on every port and records what arrives.
struct Counter;

const LIMIT: u32 = 6;

#[derive(Debug, Clone, PartialEq, Default)]
struct CounterState {
    sent: u32,
    received: BTreeMap<Port, Vec<(Port, u32)>>,
}

impl NodeAlgorithm for Counter {
    type State = CounterState;
    type Payload = u32;

    fn initial_state(&self, _: &NodeInfo) -> CounterState {
        CounterState::default()
    }
    fn wakeup_enabled(&self, _: &CounterState) -> bool {
        false
    }
    fn on_wakeup(&self, _: &mut CounterState, _: &mut StepContext<'_, u32>) {}
    fn on_receive(&self, s: &mut CounterState, port: Port, msg: &Message<u32>, _: &mut StepContext<'_, u32>) {
        s.received.entry(port).or_default().push((msg.via_port, msg.payload));
    }
    fn spontaneous_rules(&self) -> &[char] {
        &['S']
    }
    fn spontaneous_enabled(&self, s: &CounterState, _: char) -> bool {
        s.sent < LIMIT
    }
    fn on_spontaneous(&self, s: &mut CounterState, _: char, ctx: &mut StepContext<'_, u32>) {
        ctx.broadcast(s.sent);
        s.sent += 1;
    }
}

fn no_stop() -> RunOptions {
    RunOptions { stop_when_decided: false, ..RunOptions::default() }
}

#[test]
fn echo_on_an_edge_takes_four_events() {
    let d = dir("path:2");
    let trace = run(&d, &Echo, SourceAssignment::from_digraph(&d, 0), Policy::Synchronous, &no_stop()).unwrap();
    assert_eq!(trace.events.len(), 4);
    assert_eq!(trace.status, RunStatus::Quiescent);
    assert!(trace.final_states.iter().all(|s| *s == (true, 1)));
}

#[test]
fn idle_algorithm_does_nothing() {
    let d = dir("ring:4");
    let trace = run(&d, &Idle, SourceAssignment::from_digraph(&d, 0), Policy::SeededRandom(1), &RunOptions::default()).unwrap();
    assert!(trace.events.is_empty());
    assert_eq!(trace.status, RunStatus::Quiescent);
}

#[test]
fn zero_budget_is_an_error() {
    let d = dir("ring:4");
    let opts = RunOptions { budget: 0, ..RunOptions::default() };
    assert_eq!(run(&d, &Idle, SourceAssignment::from_digraph(&d, 0), Policy::Synchronous, &opts).unwrap_err(), RuntimeError::ZeroBudget);
}

#[test]
fn budget_exhaustion_is_a_status() {
    let d = dir("ring:5,anon,shared");
    let alg = AlgorithmM::new(5);
    let opts = RunOptions { budget: 3, ..RunOptions::default() };
    let trace = run(&d, &alg, SourceAssignment::from_digraph(&d, 0), Policy::SeededRandom(0), &opts).unwrap();
    assert_eq!(trace.status, RunStatus::BudgetExhausted);
    assert_eq!(trace.events.len(), 3);
}

#[test]
fn scripted_event_must_be_enabled() {
    let d = dir("path:2");
    let script = [Event::Deliver { vertex: 0, port: 1 }];
    let err = run(&d, &Echo, SourceAssignment::from_digraph(&d, 0), Policy::Scripted(&script), &RunOptions::default()).unwrap_err();
    assert!(matches!(err, RuntimeError::ImpossibleEvent { index: 0, .. }));
}

#[test]
fn schedules_parse_from_json() {
    let events = parse_schedule(r#"[{"kind":"wakeup","vertex":0},{"kind":"deliver","vertex":1,"port":1}]"#).unwrap();
    assert_eq!(events, vec![Event::Wakeup { vertex: 0 }, Event::Deliver { vertex: 1, port: 1 }]);
    assert!(parse_schedule("[{}]").is_err());
}

#[test]
fn synchronous_rounds_deliver_everything_sent_before() {
    let d = dir("ring:5");
    let trace = run(&d, &Counter, SourceAssignment::from_digraph(&d, 0), Policy::Synchronous, &RunOptions::rounds(4)).unwrap();
    // In round k every node sends k-1 and receives what was sent in round k-1.
    for (k, snap) in trace.snapshots.iter().enumerate() {
        for s in &snap.states {
            assert_eq!(s.sent as usize, k + 1);
            for got in s.received.values() {
                assert_eq!(got.len(), k);
            }
        }
    }
}

#[test]
fn messages_carry_the_sending_port() {
    let d = dir("ring:3");
    let trace = run(&d, &Counter, SourceAssignment::from_digraph(&d, 0), Policy::Synchronous, &RunOptions::rounds(3)).unwrap();
    for s in &trace.final_states {
        // Arriving on port 1 means sent by the successor through its port 2.
        assert!(s.received[&1].iter().all(|&(p, _)| p == 2));
        assert!(s.received[&2].iter().all(|&(p, _)| p == 1));
    }
}

#[test]
fn adaptive_adversary_runs() {
    let d = dir("ring:4,anon,one-unshared");
    let alg = AlgorithmM::new(4);
    let mut adv = LaggardFirst;
    // This adversary may starve the election forever, so only a short run.
    let opts = RunOptions { budget: 500, ..RunOptions::default() };
    let trace = run(&d, &alg, SourceAssignment::from_digraph(&d, 3), Policy::Adaptive(&mut adv), &opts).unwrap();
    assert!(trace.events.len() <= 500);
    assert!(matches!(trace.status, RunStatus::AllDecided | RunStatus::BudgetExhausted));
    // Wakeups draw one bit each, so all nodes wake before anyone draws twice.
    let first: Vec<_> = trace.events.iter().take(4).map(|e| matches!(e, Event::Wakeup { .. })).collect();
    assert_eq!(first, vec![true; 4]);
}

#[test]
fn draw_logs_are_per_class() {
    let d = dir("ring:4,anon,classes=aabb");
    let alg = AlgorithmM::new(4);
    let trace = run(&d, &alg, SourceAssignment::from_digraph(&d, 2), Policy::Synchronous, &RunOptions::rounds(6)).unwrap();
    for draw in trace.draws() {
        assert_eq!(draw.class, trace.sources.class_of(draw.vertex));
    }
    let total: u64 = trace.sources.draw_counts().iter().sum();
    assert_eq!(total as usize, trace.draws().len());
}

#[test]
fn lifting_along_identity_keeps_the_trace() {
    let d = dir("ring:5,anon,one-unshared");
    let alg = AlgorithmM::new(5);
    let opts = RunOptions { snapshots: SnapshotPolicy::Every(1), ..RunOptions::default() };
    let base = run(&d, &alg, SourceAssignment::from_digraph(&d, 9), Policy::SeededRandom(4), &opts).unwrap();
    let lifted = lift_execution(&base, &d, &d, &Homomorphism::identity(&d), base.sources.reset(), &alg).unwrap();
    assert_eq!(lifted.events, base.events);
    assert_eq!(lifted.final_states, base.final_states);
    assert_eq!(lifted.draws(), base.draws());
}

#[test]
fn lifting_six_ring_over_triangle() {
    let (total, base, phi) = ring_covering_digraphs(3, 2, &["a".into()], &["x".into(), "y".into(), "z".into()]).unwrap();
    let alg = AlgorithmM::new(6);
    let base_sources = SourceAssignment::from_digraph(&base, 1);
    let trace = run(&base, &alg, base_sources.clone(), Policy::Synchronous, &RunOptions::rounds(10)).unwrap();
    let lifted_sources = fiber_shared_assignment(&total, &base, &phi, &base_sources).unwrap();
    let lifted = lift_execution(&trace, &total, &base, &phi, lifted_sources, &alg).unwrap();
    assert_eq!(lifted.snapshots.len(), trace.snapshots.len());
    for (b, t) in trace.snapshots.iter().zip(&lifted.snapshots) {
        for v in total.vertices() {
            assert_eq!(t.states[v], b.states[v % 3]);
        }
    }
    // Each class draws the same bits in both runs, once per fiber member.
    for class in ["x", "y", "z"] {
        let bits = |log: &[anonelect::randomness::Draw]| log.iter().filter(|d| d.class == class && d.vertex < 3).map(|d| d.bit).collect::<Vec<_>>();
        assert_eq!(bits(lifted.draws()), bits(trace.draws()));
    }
}

#[test]
fn lifting_refuses_private_sources() {
    let (total, base, phi) = ring_covering_digraphs(3, 2, &["a".into()], &["s".into()]).unwrap();
    let alg = AlgorithmM::new(6);
    let trace = run(&base, &alg, SourceAssignment::from_digraph(&base, 1), Policy::Synchronous, &RunOptions::rounds(2)).unwrap();
    let private = SourceAssignment::from_classes((0..6).map(|i| format!("p{i}")).collect(), 1);
    assert!(matches!(lift_execution(&trace, &total, &base, &phi, private, &alg), Err(RuntimeError::Lift(_))));
}

#[test]
fn unbounded_rounds_leave_decisions() {
    let d = dir("path:2");
    let trace = run(&d, &Echo, SourceAssignment::from_digraph(&d, 0), Policy::Synchronous, &RunOptions::default()).unwrap();
    assert_eq!(trace.status, RunStatus::AllDecided);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn channels_are_fifo(n in 3usize..6, seed in any::<u64>()) {
        let d = dir(&format!("ring:{n}"));
        let trace = run(&d, &Counter, SourceAssignment::from_digraph(&d, 0), Policy::SeededRandom(seed), &no_stop()).unwrap();
        prop_assert_eq!(trace.status, RunStatus::Quiescent);
        for s in &trace.final_states {
            for got in s.received.values() {
                let values: Vec<u32> = got.iter().map(|&(_, x)| x).collect();
                prop_assert_eq!(values, (0..LIMIT).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn runs_are_reproducible(n in 3usize..7, master in any::<u64>(), sched in any::<u64>()) {
        let d = dir(&format!("ring:{n},anon,one-unshared"));
        let alg = AlgorithmM::new(n as u32);
        let opts = RunOptions { snapshots: SnapshotPolicy::Every(5), ..RunOptions::default() };
        let go = || run(&d, &alg, SourceAssignment::from_digraph(&d, master), Policy::SeededRandom(sched), &opts).unwrap();
        let (a, b) = (go(), go());
        prop_assert_eq!(&a.events, &b.events);
        prop_assert_eq!(&a.snapshots, &b.snapshots);
        prop_assert_eq!(a.draws(), b.draws());
        let again = replay(&d, &alg, &a, SnapshotPolicy::Every(5)).unwrap();
        prop_assert_eq!(&again.snapshots, &a.snapshots);
        prop_assert_eq!(&again.final_states, &a.final_states);
    }
}
