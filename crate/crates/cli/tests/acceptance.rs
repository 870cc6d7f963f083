//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use anonelect::coverings::{brute_force_base_oracle, minimal_base, sheets};
use anonelect::families::{generate, path_over_ring, ring_over_ring, GeneratorSpec, QuasiFixture};
use anonelect::graph::{build_dir, is_isomorphic, SymDigraph};
use anonelect::runtime::RunStatus;
use anonelect::verifier::CheckReport;
use anonelect_cli::checks::{covering_corpus, impossibility_battery, lifting_battery, mtau_invariant_battery, quasi_lifting_battery, LIFTING_ROUNDS};
use anonelect_cli::{main_with, prepare, run_experiment, AlgorithmChoice, ExperimentConfig, GraphSource, ModeRequest, SchedulerChoice, TrialSummary};

const SEED: u64 = 20_240_601;
const WORKERS: usize = 4;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn pat(s: &str) -> Vec<String> {
    s.chars().map(String::from).collect()
}

fn first_failure(reports: &[CheckReport]) -> String {
    reports.iter().find(|r| !r.passed).map_or_else(String::new, |r| format!("; first failure {} {}: {:?}", r.check, r.instance, r.counterexample))
}

fn experiment(specs: &[&str], algorithm: AlgorithmChoice, knowledge: &str, mode: ModeRequest, trials: u64, verify: bool) -> Result<TrialSummary, String> {
    let mut c = ExperimentConfig::new(specs.iter().map(|s| GraphSource::Generate(s.to_string())).collect(), algorithm, knowledge, trials);
    c.mode = mode;
    c.scheduler = SchedulerChoice::SeededRandom;
    c.seed = SEED;
    c.budget = 1_000_000;
    c.verify = verify;
    let p = prepare(c, std::path::Path::new(".")).map_err(|e| e.to_string())?;
    run_experiment(&p, WORKERS).map_err(|e| e.to_string())
}

fn lifting() -> Verdict {
    let pairs = covering_corpus();
    let small = pairs.iter().all(|(_, p)| p.base.vertex_count() <= 6 && (2..=3).contains(&p.sheets));
    let reports = match lifting_battery(SEED, false) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let failed = reports.iter().filter(|r| !r.passed).count();
    verdict(
        pairs.len() >= 50 && small && failed == 0,
        format!("{} covering pairs, {LIFTING_ROUNDS} synchronous rounds, {failed} with diverging states{}", pairs.len(), first_failure(&reports)),
    )
}

fn oracle_corpus() -> Vec<(String, SymDigraph)> {
    let mut shapes: Vec<(String, usize)> = Vec::new();
    for n in 3..=7 {
        shapes.push((format!("ring:{n}"), n));
    }
    for n in 2..=7 {
        shapes.push((format!("path:{n}"), n));
    }
    for n in 3..=5 {
        shapes.push((format!("clique:{n}"), n));
    }
    for n in 4..=7 {
        for seed in 1..=3 {
            shapes.push((format!("random:{n},degree=3,seed={seed}"), n));
        }
    }
    let cyclic = |p: &str, n: usize| p.chars().cycle().take(n).collect::<String>();
    let mut out = Vec::new();
    for (shape, n) in shapes {
        let (head, tail) = shape.split_once(',').map_or((shape.as_str(), String::new()), |(h, t)| (h, format!(",{t}")));
        let layouts = [
            "anon,shared".to_string(),
            "anon,unshared".to_string(),
            "anon,one-unshared".to_string(),
            format!("anon,classes={}", cyclic("ab", n)),
            format!("labels={},shared", cyclic("ab", n)),
            format!("labels={},classes={}", cyclic("aab", n), cyclic("abc", n)),
        ];
        for layout in layouts {
            let spec = format!("{head},{layout}{tail}");
            let Ok(parsed) = spec.parse::<GeneratorSpec>() else { continue };
            let Ok(g) = generate(&parsed) else { continue };
            let d = build_dir(&g);
            out.push((format!("{spec} without sources"), d.forget_sources()));
            out.push((spec, d));
        }
    }
    out
}

fn oracle_equivalence() -> Verdict {
    let corpus = oracle_corpus();
    let mut mismatches = Vec::new();
    for (name, d) in &corpus {
        let agree = (|| -> Result<bool, String> {
            let (base, _) = minimal_base(d).map_err(|e| e.to_string())?;
            let bases = brute_force_base_oracle(d, d.vertex_count()).map_err(|e| e.to_string())?;
            let smallest = &bases.first().ok_or("oracle found no base")?.0;
            Ok(smallest.vertex_count() == base.vertex_count() && is_isomorphic(smallest, &base).map_err(|e| e.to_string())?)
        })();
        if agree != Ok(true) {
            mismatches.push(format!("{name}: {agree:?}"));
        }
    }
    let max = corpus.iter().map(|(_, d)| d.vertex_count()).max().unwrap_or(0);
    verdict(
        corpus.len() >= 200 && max <= 7 && mismatches.is_empty(),
        format!("{} digraphs of at most {max} vertices, {} disagreements {:?}", corpus.len(), mismatches.len(), mismatches.first()),
    )
}

const M_FIXTURES: [&str; 11] = [
    "ring:5,anon,one-unshared",
    "ring:7,anon,one-unshared",
    "ring:10,anon,one-unshared",
    "ring:6,distinct",
    "grid:2x3,distinct",
    "random:7,distinct,degree=3,seed=1",
    "path:4,distinct",
    "clique:3,anon,classes=aab",
    "clique:4,anon,classes=aaab",
    "clique:5,anon,classes=aaabb",
    "clique:6,anon,classes=aaaaab",
];

/// Runs the exact-size experiments and returns the verdict with the total
/// monotonicity violations seen.
fn m_sufficiency() -> (Verdict, u64) {
    let mut problems = Vec::new();
    let (mut trials, mut violations) = (0u64, 0u64);
    for spec in M_FIXTURES {
        let n = generate(&spec.parse().unwrap()).unwrap().vertex_count();
        let s = match experiment(&[spec], AlgorithmChoice::M, &format!("exact-size:{n}"), ModeRequest::LasVegas, 200, true) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("{spec}: {e}"));
                continue;
            }
        };
        let expected: Vec<u32> = (1..=n as u32).collect();
        for t in &s.trials {
            trials += 1;
            violations += t.violations;
            let mut numbers = t.numbers.clone();
            numbers.sort_unstable();
            if !t.status.is_terminated() || t.outcome != "correct" || numbers != expected {
                problems.push(format!("{spec} trial {}: {:?} {} {:?}", t.trial, t.status, t.outcome, t.numbers));
            }
        }
    }
    let v = verdict(
        problems.is_empty(),
        format!("{} fixtures, {trials} trials, {} not correct with numbers 1..n {:?}", M_FIXTURES.len(), problems.len(), problems.first()),
    );
    (v, violations)
}

fn m_necessity() -> (Verdict, u64) {
    let reports = match impossibility_battery(SEED, 100, false) {
        Ok(r) => r,
        Err(e) => return (verdict(false, e.to_string()), 0),
    };
    let mut stats: BTreeMap<String, u64> = BTreeMap::new();
    for r in &reports {
        for (k, v) in &r.stats {
            *stats.entry(k.clone()).or_default() += v;
        }
    }
    let seeds = reports.iter().map(|r| r.seeds.len()).min().unwrap_or(0);
    let get = |k: &str| stats.get(k).copied().unwrap_or(0);
    let passed = reports.iter().all(|r| r.passed) && seeds >= 100 && get("correct") == 0 && get("none_elected") == 0 && get("multiple_elected") > 0;
    let detail = format!(
        "{} coverings x {seeds} seeds: {} multiple elected, {} undecided, {} correct{}",
        reports.len(),
        get("multiple_elected"),
        get("undecided"),
        get("correct"),
        first_failure(&reports)
    );
    (verdict(passed, detail), get("monotonicity_violations"))
}

fn counter_invariants() -> (Verdict, Verdict) {
    let reports = match mtau_invariant_battery(SEED, 5, false) {
        Ok(r) => r,
        Err(e) => return (verdict(false, e.to_string()), verdict(false, e.to_string())),
    };
    let total = |k: &str| reports.iter().map(|r| r.stats.get(k).copied().unwrap_or(0)).sum::<u64>();
    let (trials, checked) = (total("trials"), total("checked_steps"));
    let by_property = |names: &[&str]| {
        reports
            .iter()
            .filter_map(|r| r.counterexample.as_ref())
            .filter(|c| names.iter().any(|n| c.expected.contains(n)))
            .count()
    };
    let qc_bad = by_property(&["quasi"]);
    let ctr_bad = by_property(&["counter", "neighbor"]);
    let all_pass = reports.iter().all(|r| r.passed);
    (
        verdict(trials >= 50 && checked > 0 && qc_bad == 0 && all_pass, format!("{trials} trials, {checked} (step, vertex) pairs checked, {qc_bad} failing{}", first_failure(&reports))),
        verdict(trials >= 50 && ctr_bad == 0 && all_pass, format!("{trials} trials, {} total violations{}", total("violations"), first_failure(&reports))),
    )
}

fn quasi_fixtures() -> Vec<(QuasiFixture, usize)> {
    let mut out = Vec::new();
    for n in 3..=6 {
        let layouts = [("_", "abcdef"), ("ab", "a"), ("abc", "aab")];
        for (labels, classes) in layouts {
            let (ls, cs) = (pat(&labels[..labels.len().min(n)]), pat(&classes[..classes.len().min(n)]));
            for q in [2, 3] {
                for extra in 0..4 {
                    let m = 2 * q * n + 3 + extra;
                    let fixtures = [path_over_ring(m, n, &ls, &cs), ring_over_ring(m + 1 - (m + 1) % n + n / 2, n, &ls, &cs)];
                    for f in fixtures.into_iter().flatten() {
                        out.push((f, q));
                    }
                }
            }
        }
    }
    out
}

fn sheet_bound() -> Verdict {
    let mut eligible = 0;
    let mut counts = BTreeMap::new();
    let mut bad = Vec::new();
    for (f, q) in quasi_fixtures() {
        let w = &f.witness;
        if !w.proper() || w.radius() < q * f.d0.vertex_count() {
            continue;
        }
        eligible += 1;
        *counts.entry(q).or_insert(0) += 1;
        let s = sheets(w);
        if s < q {
            bad.push(format!("{} radius {}: {s} sheets < {q}", f.name, w.radius()));
        }
    }
    verdict(eligible >= 100 && counts.len() == 2 && bad.is_empty(), format!("{eligible} proper quasi-coverings {counts:?} by q, {} below the bound {:?}", bad.len(), bad.first()))
}

fn quasi_lifting() -> Verdict {
    match quasi_lifting_battery(SEED, false) {
        Ok(reports) => {
            let failed = reports.iter().filter(|r| !r.passed).count();
            verdict(reports.len() >= 30 && failed == 0, format!("{} fixtures, every k in 1..r, {failed} failing{}", reports.len(), first_failure(&reports)))
        }
        Err(e) => verdict(false, e.to_string()),
    }
}

fn two_approx() -> Verdict {
    let cases: [(u32, [&str; 2]); 3] = [
        (6, ["ring:4,anon,one-unshared", "clique:4,anon,classes=aaab"]),
        (8, ["ring:5,anon,one-unshared", "path:6,anon,one-unshared"]),
        (10, ["ring:6,distinct", "ring:7,anon,one-unshared"]),
    ];
    let mut problems = Vec::new();
    let mut trials = 0;
    for (t, specs) in cases {
        for spec in specs {
            match experiment(&[spec], AlgorithmChoice::Mtau, &format!("two-approx:{t}"), ModeRequest::LasVegas, 200, false) {
                Ok(s) => {
                    trials += s.trials.len();
                    problems.extend(s.trials.iter().filter(|r| r.status != RunStatus::AllDecided || r.outcome != "correct").map(|r| format!("T={t} {spec} trial {}: {:?} {}", r.trial, r.status, r.outcome)));
                }
                Err(e) => problems.push(format!("T={t} {spec}: {e}")),
            }
        }
    }
    verdict(problems.is_empty(), format!("T in 6, 8, 10 on 6 fixtures, {trials} trials, {} not correct {:?}", problems.len(), problems.first()))
}

const BK_CORPUS: [&str; 6] = [
    "ring:4,anon,classes=aabc",
    "ring:5,anon,classes=aabcd",
    "ring:6,anon,unshared",
    "clique:4,anon,classes=aabc",
    "path:3,anon,unshared",
    "path:2,anon,shared",
];

/// Error-rate ceiling on B-minimal members; an artifact default.
const MONTE_CARLO_ERROR_CEILING: f64 = 0.05;

fn bounded_sharing() -> (Verdict, Option<String>) {
    let s = match experiment(&BK_CORPUS, AlgorithmChoice::Mtau, "bk:2", ModeRequest::Auto, 200, false) {
        Ok(s) => s,
        Err(e) => return (verdict(false, e), None),
    };
    let undecided = s.trials.iter().filter(|t| t.status != RunStatus::AllDecided).count();
    let has_non_minimal = s.graphs.iter().any(|g| !g.b_minimal);
    let worst = s.graphs.iter().filter(|g| g.b_minimal).map(|g| g.error_rate).fold(0.0, f64::max);
    let rates: Vec<String> = s.graphs.iter().map(|g| format!("{}{} {:.3}", g.name, if g.b_minimal { "" } else { " (not B-minimal)" }, g.error_rate)).collect();
    let passed = s.mode == "monte-carlo" && has_non_minimal && undecided == 0 && worst <= MONTE_CARLO_ERROR_CEILING;
    (verdict(passed, format!("{} trials, {undecided} unterminated, error rates: {}", s.trials.len(), rates.join(", "))), Some(s.to_json()))
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let args: Vec<String> = std::iter::once("anonelect").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with(&args, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}

fn refusals() -> Verdict {
    let base = ["elect", "--generate", "ring:5,anon,one-unshared", "--algorithm", "mtau", "--trials", "3"];
    let with = |extra: &[&str]| run_cli(&[&base[..], extra].concat());
    let (none_code, _, none_err) = with(&["--knowledge", "none"]);
    let (lv_code, _, lv_err) = with(&["--knowledge", "bound:6", "--mode", "las-vegas"]);
    let (mc_code, mc_out, mc_err) = with(&["--knowledge", "bound:6"]);
    let mc_mode = serde_json::from_str::<serde_json::Value>(&mc_out).ok().and_then(|v| v["mode"].as_str().map(String::from));
    let passed = none_code == 2
        && none_err.contains("refused")
        && none_err.contains("nothing is known")
        && lv_code == 2
        && lv_err.contains("las-vegas mode is unavailable")
        && mc_code == 0
        && mc_mode.as_deref() == Some("monte-carlo");
    verdict(
        passed,
        format!("none exits {none_code}, bound:6 las-vegas exits {lv_code}, bound:6 auto exits {mc_code} in mode {mc_mode:?}{}", if mc_err.is_empty() { String::new() } else { format!(" ({})", mc_err.trim()) }),
    )
}

fn reproducibility(bk_first: Option<String>) -> Verdict {
    let mut notes = Vec::new();
    let run = |workers: usize| -> Result<(String, String), String> {
        let mut c = ExperimentConfig::new(vec![GraphSource::Generate(M_FIXTURES[0].into())], AlgorithmChoice::M, "exact-size:5", 50);
        c.seed = SEED;
        c.verify = true;
        let p = prepare(c, std::path::Path::new(".")).map_err(|e| e.to_string())?;
        let s = run_experiment(&p, workers).map_err(|e| e.to_string())?;
        Ok((s.to_json(), s.to_csv()))
    };
    let (a, b) = (run(1), run(WORKERS));
    let m_same = a.is_ok() && a == b;
    notes.push(format!("exact-size summaries with 1 and {WORKERS} workers identical: {m_same}"));
    let bk_same = match (&bk_first, bounded_sharing().1) {
        (Some(x), Some(y)) => x == &y,
        _ => false,
    };
    notes.push(format!("bounded-sharing summary rerun identical: {bk_same}"));
    let checks = |s| impossibility_battery(s, 10, false).map(|r| serde_json::to_string(&r).unwrap()).ok();
    let check_same = checks(SEED).is_some() && checks(SEED) == checks(SEED);
    notes.push(format!("impossibility reports identical: {check_same}"));
    verdict(m_same && bk_same && check_same, notes.join("; "))
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut report = |n: u32, name: &'static str, v: Verdict| {
        let line = format!("criterion {n:>2} {} {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        let mut out = std::io::stdout();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
        results.push((n, name, v));
    };
    report(1, "lifting along coverings", lifting());
    report(2, "minimal base matches brute force", oracle_equivalence());
    let (c3, mono_m) = m_sufficiency();
    report(3, "exact-size election on B-minimal networks", c3);
    let (c4, mono_cover) = m_necessity();
    report(4, "covering copies never elect alone", c4);
    report(5, "monotonicity on every step", verdict(mono_m + mono_cover == 0, format!("{mono_m} violations in exact-size traces, {mono_cover} in covering traces")));
    let (c6, c7) = counter_invariants();
    report(6, "reconstruction is a quasi-covering at counter radius", c6);
    report(7, "counter discipline", c7);
    report(8, "radius forces sheets", sheet_bound());
    report(9, "quasi-lifting", quasi_lifting());
    report(10, "las-vegas with a two-approximation", two_approx());
    let (c11, bk_json) = bounded_sharing();
    report(11, "monte-carlo with bounded sharing", c11);
    report(12, "refusal contract", refusals());
    report(13, "byte-identical reruns", reproducibility(bk_json));
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria passed in {:.0?}", results.len() - failed.len(), results.len(), start.elapsed());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
