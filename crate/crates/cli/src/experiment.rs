//! Repeated election trials over a corpus of networks, and their summaries.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anonelect::coverings::is_b_minimal;
use anonelect::election_m::{evaluate_outcome, AlgorithmM, Outcome};
use anonelect::election_mtau::AlgorithmMTau;
use anonelect::families::{generate, GeneratorSpec};
use anonelect::graph::{GraphFile, LabeledGraph, SymDigraph};
use anonelect::knowledge::{decide_mode, Knowledge, Mode};
use anonelect::randomness::{derive_seed, SourceAssignment};
use anonelect::runtime::{run_observed, Decision, ExecutionTrace, NodeAlgorithm, Policy, RunOptions, RunStatus, SnapshotPolicy, StepObserver};
use anonelect::verifier::{CounterObserver, EnumerationState, MonotonicityObserver, QuasiCoveringObserver};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AlgorithmChoice, ExperimentConfig, GraphSource, ModeRequest, SchedulerChoice};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub graph: LabeledGraph,
}

/// Loads every network named by the config; files are resolved against
/// `base_dir`.
pub fn load_corpus(graphs: &[GraphSource], base_dir: &Path) -> Result<Vec<CorpusEntry>, CliError> {
    graphs
        .iter()
        .map(|src| {
            let graph = match src {
                GraphSource::File(p) => GraphFile::load(&base_dir.join(p)).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
                GraphSource::Generate(s) => {
                    let spec: GeneratorSpec = s.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
                    generate(&spec).map_err(|e| CliError::Usage(format!("{s}: {e}")))?
                }
            };
            Ok(CorpusEntry { name: src.to_string(), graph })
        })
        .collect()
}

/// A config checked against its corpus and knowledge, ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub corpus: Vec<CorpusEntry>,
    pub knowledge: Knowledge,
    pub mode: Mode,
}

/// Resolves the corpus and knowledge, and refuses experiments the knowledge
/// cannot support.
pub fn prepare(config: ExperimentConfig, base_dir: &Path) -> Result<Prepared, CliError> {
    if config.graphs.is_empty() {
        return Err(CliError::Usage("no networks given".into()));
    }
    if config.trials == 0 || config.budget == 0 {
        return Err(CliError::Usage("trials and budget must be positive".into()));
    }
    let corpus = load_corpus(&config.graphs, base_dir)?;
    let knowledge = Knowledge::parse(&config.knowledge, base_dir).map_err(|e| CliError::Usage(e.to_string()))?;
    let graphs: Vec<LabeledGraph> = corpus.iter().map(|c| c.graph.clone()).collect();
    let mode = decide_mode(&knowledge, &graphs).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Mode::Refuse(why) = &mode {
        return Err(CliError::Refused(why.clone()));
    }
    if config.algorithm == AlgorithmChoice::M && !matches!(knowledge, Knowledge::ExactSize(_)) {
        return Err(CliError::Usage(format!("algorithm m needs exact-size knowledge, got {knowledge}")));
    }
    if config.mode == ModeRequest::LasVegas && mode != Mode::LasVegas {
        return Err(CliError::Refused(format!(
            "las-vegas mode is unavailable with knowledge {knowledge} on this corpus: it cannot exclude every quasi-covering \
             beyond the stopping radius; run monte-carlo instead"
        )));
    }
    Ok(Prepared { config, corpus, knowledge, mode })
}

/// One election run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub graph: usize,
    pub seed: u64,
    pub outcome: &'static str,
    pub status: RunStatus,
    pub steps: u64,
    pub bits: u64,
    pub elected_vertex: Option<String>,
    pub decisions: Vec<Decision>,
    pub numbers: Vec<u32>,
    /// Invariant violations seen, when checking was requested.
    pub violations: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OutcomeCounts {
    pub correct: u64,
    pub multiple_elected: u64,
    pub none_elected: u64,
    pub undecided: u64,
}

impl OutcomeCounts {
    fn add(&mut self, outcome: &str) {
        match outcome {
            "correct" => self.correct += 1,
            "multiple_elected" => self.multiple_elected += 1,
            "none_elected" => self.none_elected += 1,
            _ => self.undecided += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.correct + self.multiple_elected + self.none_elected + self.undecided
    }

    pub fn wrong(&self) -> u64 {
        self.multiple_elected + self.none_elected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub name: String,
    pub vertices: usize,
    pub b_minimal: bool,
    pub first_trial: u64,
    pub counts: OutcomeCounts,
    /// Correct trials over all trials.
    pub success_rate: f64,
    /// Trials ending with several or no elected nodes, over all trials.
    pub error_rate: f64,
    pub steps: u64,
    pub bits: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub config: ExperimentConfig,
    pub knowledge: String,
    pub mode: &'static str,
    pub totals: OutcomeCounts,
    pub success_rate: f64,
    pub violations: u64,
    pub graphs: Vec<GraphSummary>,
    pub trials: Vec<TrialRecord>,
}

impl TrialSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trial", "outcome", "steps", "bits", "elected_vertex"]).expect("in-memory write");
        for t in &self.trials {
            let (trial, steps, bits) = (t.trial.to_string(), t.steps.to_string(), t.bits.to_string());
            w.write_record([trial.as_str(), t.outcome, &steps, &bits, t.elected_vertex.as_deref().unwrap_or("")]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// Writes `summary.json` and `trials.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let (json, csv) = (dir.join("summary.json"), dir.join("trials.csv"));
        std::fs::write(&json, self.to_json() + "\n").map_err(|e| CliError::Io(format!("{}: {e}", json.display())))?;
        std::fs::write(&csv, self.to_csv()).map_err(|e| CliError::Io(format!("{}: {e}", csv.display())))?;
        Ok((json, csv))
    }
}

fn rate(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

struct TrialRun<S> {
    trace: ExecutionTrace<S>,
    outcome: Outcome,
    violations: u64,
}

fn options(p: &Prepared, first: bool) -> RunOptions {
    let snapshots = if first && p.config.snapshot_stride > 0 { SnapshotPolicy::Every(p.config.snapshot_stride) } else { SnapshotPolicy::FinalOnly };
    RunOptions { budget: p.config.budget, snapshots, ..RunOptions::default() }
}

fn policy<'p, S>(p: &Prepared, seed: u64) -> Policy<'p, S> {
    match p.config.scheduler {
        SchedulerChoice::Synchronous => Policy::Synchronous,
        SchedulerChoice::SeededRandom => Policy::SeededRandom(seed),
    }
}

fn run_m(p: &Prepared, n: u32, d: &SymDigraph, sources: SourceAssignment, seed: u64, first: bool) -> Result<TrialRun<anonelect::election_m::MState>, CliError> {
    let alg = AlgorithmM::new(n);
    let mut mono = MonotonicityObserver::new();
    let trace = {
        let mut observers: Vec<&mut dyn StepObserver<_>> = Vec::new();
        if p.config.verify {
            observers.push(&mut mono);
        }
        run_observed(d, &alg, sources, policy(p, seed), &options(p, first), &mut observers).map_err(|e| CliError::Io(e.to_string()))?
    };
    Ok(TrialRun { outcome: evaluate_outcome(&alg, &trace), trace, violations: mono.violations.len() as u64 })
}

fn run_mtau(p: &Prepared, d: &SymDigraph, sources: SourceAssignment, seed: u64, first: bool) -> Result<TrialRun<anonelect::election_mtau::MTState>, CliError> {
    let alg = AlgorithmMTau::new(p.knowledge.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut mono = MonotonicityObserver::new();
    let mut counters = CounterObserver::new(d, &alg);
    let mut quasi = QuasiCoveringObserver::new(d, &alg);
    let trace = {
        let mut observers: Vec<&mut dyn StepObserver<_>> = Vec::new();
        if p.config.verify {
            observers.push(&mut mono);
            observers.push(&mut counters);
            observers.push(&mut quasi);
        }
        run_observed(d, &alg, sources, policy(p, seed), &options(p, first), &mut observers).map_err(|e| CliError::Io(e.to_string()))?
    };
    let violations = (mono.violations.len() + counters.violations.len() + quasi.violations.len()) as u64;
    Ok(TrialRun { outcome: evaluate_outcome(&alg, &trace), trace, violations })
}

fn record<S: EnumerationState + Serialize>(
    decision: impl Fn(&S) -> Decision,
    run: TrialRun<S>,
    d: &SymDigraph,
    (trial, graph, seed): (u64, usize, u64),
    trace_path: Option<PathBuf>,
) -> Result<TrialRecord, CliError> {
    if let Some(path) = trace_path {
        std::fs::write(&path, run.trace.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let states = &run.trace.final_states;
    Ok(TrialRecord {
        trial,
        graph,
        seed,
        outcome: run.outcome.name(),
        status: run.trace.status,
        steps: run.trace.events.len() as u64,
        bits: run.trace.sources.total_draws(),
        elected_vertex: match run.outcome {
            Outcome::Correct(v) => Some(d.vertex_id(v).to_string()),
            _ => None,
        },
        decisions: states.iter().map(decision).collect(),
        numbers: states.iter().map(|s| s.enumeration().number).collect(),
        violations: run.violations,
    })
}

/// Seed of trial `t` on network `g`.
pub fn trial_seed(master: u64, g: usize, t: u64) -> u64 {
    derive_seed(master, "trial", &format!("{g}/{t}"))
}

fn one_trial(p: &Prepared, networks: &[SymDigraph], g: usize, t: u64) -> Result<TrialRecord, CliError> {
    let entry = &p.corpus[g];
    let d = &networks[g];
    let seed = trial_seed(p.config.seed, g, t);
    let sources = SourceAssignment::from_classes(entry.graph.source_classes(), seed);
    let index = g as u64 * p.config.trials + t;
    let first = t == 0;
    let trace_path = match (&p.config.output, first && p.config.snapshot_stride > 0) {
        (Some(dir), true) => Some(dir.join(format!("trace-{g}.json"))),
        _ => None,
    };
    match p.config.algorithm {
        AlgorithmChoice::M => {
            let Knowledge::ExactSize(n) = p.knowledge else { unreachable!("checked in prepare") };
            let alg = AlgorithmM::new(n);
            let run = run_m(p, n, d, sources, seed, first)?;
            record(|s| alg.decision(s), run, d, (index, g, seed), trace_path)
        }
        AlgorithmChoice::Mtau => {
            let alg = AlgorithmMTau::new(p.knowledge.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
            let run = run_mtau(p, d, sources, seed, first)?;
            record(|s| alg.decision(s), run, d, (index, g, seed), trace_path)
        }
    }
}

/// Runs every trial on up to `workers` threads. Each trial draws from seeds
/// derived from the master seed and its index, so the summary does not
/// depend on the worker count.
pub fn run_experiment(p: &Prepared, workers: usize) -> Result<TrialSummary, CliError> {
    if let Some(dir) = &p.config.output {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let networks: Vec<SymDigraph> = p.corpus.iter().map(|c| p.knowledge.network(&c.graph)).collect();
    let jobs: Vec<(usize, u64)> = (0..p.corpus.len()).flat_map(|g| (0..p.config.trials).map(move |t| (g, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().map_err(|e| CliError::Io(e.to_string()))?;
    let trials: Vec<TrialRecord> = pool.install(|| jobs.par_iter().map(|&(g, t)| one_trial(p, &networks, g, t)).collect::<Result<_, _>>())?;
    Ok(summarize(p, trials))
}

fn summarize(p: &Prepared, trials: Vec<TrialRecord>) -> TrialSummary {
    let mut totals = OutcomeCounts::default();
    let mut per_graph: BTreeMap<usize, (OutcomeCounts, u64, u64, u64)> = BTreeMap::new();
    for t in &trials {
        totals.add(t.outcome);
        let e = per_graph.entry(t.graph).or_default();
        e.0.add(t.outcome);
        e.1 += t.steps;
        e.2 += t.bits;
        e.3 += t.violations;
    }
    let graphs = p
        .corpus
        .iter()
        .enumerate()
        .map(|(g, c)| {
            let (counts, steps, bits, violations) = per_graph.remove(&g).unwrap_or_default();
            GraphSummary {
                name: c.name.clone(),
                vertices: c.graph.vertex_count(),
                b_minimal: is_b_minimal(&c.graph).unwrap_or(false),
                first_trial: g as u64 * p.config.trials,
                success_rate: rate(counts.correct, counts.total()),
                error_rate: rate(counts.wrong(), counts.total()),
                counts,
                steps,
                bits,
                violations,
            }
        })
        .collect();
    TrialSummary {
        config: p.config.clone(),
        knowledge: p.knowledge.to_string(),
        mode: p.mode.name(),
        success_rate: rate(totals.correct, totals.total()),
        violations: trials.iter().map(|t| t.violations).sum(),
        totals,
        graphs,
        trials,
    }
}
