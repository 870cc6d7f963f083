//! Verifier batteries over generated corpora.

use anonelect::election_m::AlgorithmM;
use anonelect::election_mtau::AlgorithmMTau;
use anonelect::families::{generate, generate_covering_pair, path_over_ring, ring_covering_digraphs, ring_over_ring, CoveringPair, GeneratorSpec, QuasiFixture};
use anonelect::graph::{SymDigraph, VertexLabel};
use anonelect::knowledge::Knowledge;
use anonelect::randomness::{derive_seed, SourceAssignment};
use anonelect::runtime::{run_observed, Policy, RunOptions, StepObserver};
use anonelect::verifier::{check_lifting, check_quasi_lifting, impossibility_witness, CheckReport, Counterexample, CounterObserver, MonotonicityObserver, QuasiCoveringObserver};
use rayon::prelude::*;

use crate::CliError;

pub const BATTERIES: [&str; 4] = ["lifting", "quasi-lifting", "counters", "impossibility"];

/// Synchronous rounds replayed by the lifting battery.
pub const LIFTING_ROUNDS: u64 = 30;

fn pat(s: &str) -> Vec<String> {
    s.chars().map(String::from).collect()
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// Bases of at most 6 vertices with 2 or 3 sheets each, named by their
/// base spec.
pub fn covering_corpus() -> Vec<(String, CoveringPair)> {
    let bases = [
        "ring:3,anon,unshared",
        "ring:3,anon,shared",
        "ring:3,labels=abc,unshared",
        "ring:4,anon,classes=aabb",
        "ring:4,anon,one-unshared",
        "ring:5,anon,unshared",
        "ring:5,labels=aabab,shared",
        "ring:6,anon,classes=abcabc",
        "ring:6,distinct,shared",
        "clique:3,anon,unshared",
        "clique:4,anon,classes=aaab",
        "clique:4,distinct,shared",
        "clique:5,anon,one-unshared",
        "grid:2x3,anon,unshared",
        "random:6,anon,unshared,degree=3,seed=9",
        "random:5,anon,unshared,degree=3,seed=1",
        "random:6,anon,one-unshared,degree=3,seed=2",
        "random:6,distinct,shared,degree=4,seed=3",
        "random:4,anon,classes=abab,degree=3,seed=4",
        "ring:4,labels=abcd,unshared",
        "ring:5,anon,classes=aabbc",
        "ring:6,anon,one-unshared",
        "clique:5,anon,unshared",
        "grid:2x3,distinct,shared",
        "random:4,anon,unshared,degree=3,seed=8",
        "clique:3,labels=aab,shared",
        "clique:6,anon,unshared",
        "grid:2x2,anon,classes=abba",
        "random:5,distinct,unshared,degree=3,seed=5",
        "random:6,anon,classes=aabbcc,degree=3,seed=6",
        "random:5,anon,one-unshared,degree=4,seed=7",
    ];
    let mut out = Vec::new();
    for (i, spec) in bases.iter().enumerate() {
        let parsed: GeneratorSpec = spec.parse().expect("corpus specs parse");
        for sheets in [2, 3] {
            let pair = generate_covering_pair(&parsed, sheets, i as u64 * 10 + sheets as u64).expect("corpus bases have coverings");
            out.push((spec.to_string(), pair));
        }
    }
    out
}

/// Paths and rings wrapped onto smaller rings.
pub fn quasi_corpus() -> Vec<QuasiFixture> {
    let mut out = Vec::new();
    for (n, labels, classes) in [(3, "_", "abc"), (3, "a", "s"), (4, "_", "abcd"), (4, "ab", "s"), (5, "_", "abcde"), (3, "xyz", "st")] {
        let classes = if n % classes.len() == 0 { classes } else { "s" };
        for m in [4 * n + 1, 5 * n + 2, 6 * n + 1] {
            out.push(path_over_ring(m, n, &pat(labels), &pat(classes)).expect("path fixture"));
        }
        for m in [3 * n + 1, 4 * n - 1] {
            out.push(ring_over_ring(m, n, &pat(labels), &pat(classes)).expect("ring fixture"));
        }
    }
    out
}

/// Networks and knowledge used for the counter and quasi-covering checks.
pub fn mtau_corpus() -> Vec<(String, Knowledge)> {
    [
        ("ring:5,anon,one-unshared", Knowledge::TwoApprox(8)),
        ("ring:4,anon,unshared", Knowledge::TwoApprox(6)),
        ("path:4,anon,unshared", Knowledge::TwoApprox(6)),
        ("clique:4,anon,classes=aaab", Knowledge::ExactSize(4)),
        ("ring:6,labels=aabbab,shared", Knowledge::TwoApprox(10)),
        ("grid:2x3,anon,one-unshared", Knowledge::TwoApprox(10)),
        ("ring:5,anon,unshared", Knowledge::BoundedSharing(2)),
        ("ring:4,anon,classes=aabc", Knowledge::BoundedSharing(2)),
        ("path:2,anon,shared", Knowledge::BoundedSharing(2)),
        ("ring:5,anon,one-unshared", Knowledge::SizeBound(6)),
    ]
    .into_iter()
    .map(|(s, k)| (s.to_string(), k))
    .collect()
}

pub fn lifting_battery(seed: u64, corrupt: bool) -> Result<Vec<CheckReport>, CliError> {
    covering_corpus()
        .par_iter()
        .enumerate()
        .map(|(i, (name, pair))| {
            let (total, base) = (pair.total_dir(), pair.base_dir());
            let alg = AlgorithmM::new(total.vertex_count() as u32);
            let mut r = check_lifting(&total, &base, &pair.phi, &alg, LIFTING_ROUNDS, derive_seed(seed, "lifting", &i.to_string()), corrupt).map_err(failed)?;
            r.instance = format!("{name}: {}", r.instance);
            Ok(r)
        })
        .collect()
}

pub fn quasi_lifting_battery(seed: u64, corrupt: bool) -> Result<Vec<CheckReport>, CliError> {
    quasi_corpus()
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let r = f.witness.radius();
            let ks: Vec<usize> = (1..r).collect();
            let alg = AlgorithmM::new(f.d1.vertex_count() as u32);
            check_quasi_lifting(f, &alg, &ks, derive_seed(seed, "quasi", &i.to_string()), corrupt).map_err(failed)
        })
        .collect()
}

/// Runs trials of the counter algorithm with the counter, quasi-covering and monotonicity
/// observers. With `corrupt`, the quasi-covering observer is handed a
/// network with one label changed, which it must notice.
pub fn mtau_invariant_battery(seed: u64, trials: u64, corrupt: bool) -> Result<Vec<CheckReport>, CliError> {
    let jobs: Vec<(usize, u64)> = (0..mtau_corpus().len()).flat_map(|i| (0..trials).map(move |t| (i, t))).collect();
    let corpus = mtau_corpus();
    let runs: Vec<(usize, u64, Vec<anonelect::verifier::StepViolation>, usize, u64)> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let (spec, k) = &corpus[i];
            let g = generate(&spec.parse().map_err(failed)?).map_err(failed)?;
            let d = k.network(&g);
            let watched = if corrupt { mislabeled(&d) } else { d.clone() };
            let alg = AlgorithmMTau::new(k.clone()).map_err(failed)?;
            let s = derive_seed(seed, "counters", &format!("{i}/{t}"));
            let mut mono = MonotonicityObserver::new();
            let mut ctr = CounterObserver::new(&d, &alg);
            let mut qc = QuasiCoveringObserver::new(&watched, &alg);
            let steps = {
                let mut obs: Vec<&mut dyn StepObserver<_>> = vec![&mut mono, &mut ctr, &mut qc];
                let trace = run_observed(&d, &alg, SourceAssignment::from_classes(g.source_classes(), s), Policy::SeededRandom(s), &RunOptions::default(), &mut obs)
                    .map_err(failed)?;
                trace.events.len()
            };
            let mut v = mono.violations;
            v.extend(ctr.violations);
            v.extend(qc.violations);
            Ok((i, s, v, qc.checked, steps as u64))
        })
        .collect::<Result<_, CliError>>()?;
    let mut reports = Vec::new();
    for (i, (spec, k)) in corpus.iter().enumerate() {
        let mut report = CheckReport {
            check: "counters".into(),
            instance: format!("{spec} with {k}"),
            passed: true,
            counterexample: None,
            seeds: Vec::new(),
            stats: Default::default(),
        };
        for (_, s, violations, checked, steps) in runs.iter().filter(|r| r.0 == i) {
            report.seeds.push(*s);
            *report.stats.entry("trials".into()).or_default() += 1;
            *report.stats.entry("checked_steps".into()).or_default() += *checked as u64;
            *report.stats.entry("events".into()).or_default() += steps;
            *report.stats.entry("violations".into()).or_default() += violations.len() as u64;
            if let Some(v) = violations.first() {
                report.passed = false;
                report.counterexample.get_or_insert(Counterexample {
                    seed: *s,
                    step: v.step,
                    vertex: v.vertex.to_string(),
                    expected: v.property.to_string(),
                    actual: v.detail.clone(),
                });
            }
        }
        reports.push(report);
    }
    Ok(reports)
}

fn mislabeled(d: &SymDigraph) -> SymDigraph {
    let mut labels = d.labels().to_vec();
    let l = &labels[0];
    labels[0] = VertexLabel { label: format!("{}*", l.label), source: l.source.clone() };
    d.relabeled(labels)
}

/// The two ring coverings with fiber-shared sources, under two size
/// beliefs: the base size, where copies elect together, and the true size,
/// which no node can reach.
pub fn impossibility_battery(seed: u64, seeds: u64, corrupt: bool) -> Result<Vec<CheckReport>, CliError> {
    let cases: Vec<(usize, &str, u32, u64)> = vec![(3, "abc", 3, 100_000), (2, "ab", 2, 100_000), (3, "abc", 6, 2_000), (2, "ab", 4, 2_000)];
    cases
        .par_iter()
        .map(|&(n, classes, belief, budget)| {
            let (t, d, phi) = ring_covering_digraphs(n, 2, &pat("_"), &pat(classes)).map_err(failed)?;
            let run_seeds: Vec<u64> = (0..seeds).map(|i| derive_seed(seed, "impossibility", &format!("{n}/{belief}/{i}"))).collect();
            let mut mono = MonotonicityObserver::new();
            let mut r = impossibility_witness(&t, &d, &phi, &AlgorithmM::new(belief), budget, &run_seeds, corrupt, &mut [&mut mono]).map_err(failed)?;
            r.instance = format!("{} believing size {belief}", r.instance);
            r.stats.insert("monotonicity_violations".into(), mono.violations.len() as u64);
            if let Some(v) = mono.violations.first() {
                r.passed = false;
                r.counterexample.get_or_insert(Counterexample {
                    seed: 0,
                    step: v.step,
                    vertex: v.vertex.to_string(),
                    expected: v.property.to_string(),
                    actual: v.detail.clone(),
                });
            }
            Ok(r)
        })
        .collect()
}

/// Runs the named battery, or all of them for `all`.
pub fn run_battery(name: &str, seed: u64, corrupt: bool) -> Result<Vec<CheckReport>, CliError> {
    match name {
        "lifting" => lifting_battery(seed, corrupt),
        "quasi-lifting" => quasi_lifting_battery(seed, corrupt),
        "counters" => mtau_invariant_battery(seed, 5, corrupt),
        "impossibility" => impossibility_battery(seed, 100, corrupt),
        "all" => {
            let mut all = Vec::new();
            for b in BATTERIES {
                all.extend(run_battery(b, seed, corrupt)?);
            }
            Ok(all)
        }
        other => Err(CliError::Usage(format!("unknown battery {other:?}; expected one of {} or all", BATTERIES.join(", ")))),
    }
}
