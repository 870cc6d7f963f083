use std::fs;
use std::path::Path;

use anonelect_cli::{main_with, AlgorithmChoice, ExperimentConfig, GraphSource, ModeRequest, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};

fn cli(args: &[&str]) -> (i32, String, String) {
    let args: Vec<String> = std::iter::once("anonelect").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with(&args, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const TRIANGLE: &str = r#"{"vertices": [{"id": "a", "label": "x"}, {"id": "b", "label": "x"}, {"id": "c", "label": "x"}],
 "edges": [{"u": "a", "v": "b", "pu": 1, "pv": 2}, {"u": "b", "v": "c", "pu": 1, "pv": 2}, {"u": "c", "v": "a", "pu": 1, "pv": 2}]}"#;

#[test]
fn config_round_trips() {
    let mut c = ExperimentConfig::new(vec![GraphSource::Generate("ring:5,anon,one-unshared".into()), GraphSource::File("g.json".into())], AlgorithmChoice::Mtau, "bk:2", 7);
    c.mode = ModeRequest::MonteCarlo;
    c.seed = 99;
    c.snapshot_stride = 10;
    let back: ExperimentConfig = c.to_json().parse().unwrap();
    assert_eq!(back, c);
    assert!("{\"graphs\": [], \"algorithm\": \"m\", \"knowledge\": \"none\", \"trials\": 1, \"colour\": 1}".parse::<ExperimentConfig>().is_err());
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "ring.json", TRIANGLE);
    assert_eq!(cli(&["validate", &good]).0, EXIT_OK);
    let bad_ports = write(dir.path(), "ports.json", &TRIANGLE.replace(r#""pu": 1, "pv": 2}, {"u": "b""#, r#""pu": 3, "pv": 2}, {"u": "b""#));
    let (code, _, err) = cli(&["validate", &bad_ports]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("port"), "{err}");
    let split = r#"{"vertices": [{"id": "a", "label": "x"}, {"id": "b", "label": "x"}, {"id": "c", "label": "x"}, {"id": "d", "label": "x"}],
      "edges": [{"u": "a", "v": "b", "pu": 1, "pv": 1}, {"u": "c", "v": "d", "pu": 1, "pv": 1}]}"#;
    let (code, _, err) = cli(&["validate", &write(dir.path(), "split.json", split)]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("connected"), "{err}");
    assert_eq!(cli(&["validate", "/nonexistent/file.json"]).0, EXIT_USAGE);
}

#[test]
fn analyze_reports_base() {
    let dir = tempfile::tempdir().unwrap();
    let (_, text, _) = cli(&["generate", "ring:6,anon,classes=ababab"]);
    let p = write(dir.path(), "c6.json", &text);
    let (code, out, _) = cli(&["analyze", &p, "--with-sources"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("B-minimal: false, base size 2"), "{out}");
    let (_, text, _) = cli(&["generate", "ring:6,anon,unshared"]);
    let (_, out, _) = cli(&["analyze", &write(dir.path(), "u6.json", &text), "--with-sources"]);
    assert!(out.contains("B-minimal: true"), "{out}");
}

#[test]
fn generate_covering_has_more_vertices() {
    let (code, out, _) = cli(&["generate", "ring:3,anon,unshared", "--sheets", "3", "--seed", "4"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["vertices"].as_array().unwrap().len(), 9);
    assert_eq!(cli(&["generate", "ring:2"]).0, EXIT_USAGE);
}

#[test]
fn elect_refusals_exit_two() {
    let base = ["elect", "--generate", "ring:5,anon,one-unshared", "--trials", "2"];
    let (code, _, err) = cli(&[&base[..], &["--algorithm", "mtau", "--knowledge", "none"]].concat());
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("refused"), "{err}");
    let (code, _, err) = cli(&[&base[..], &["--algorithm", "m", "--knowledge", "bound:6"]].concat());
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("exact-size"), "{err}");
    assert_eq!(cli(&[&base[..], &["--algorithm", "mtau", "--knowledge", "exact-size:4"]].concat()).0, EXIT_USAGE);
    assert_eq!(cli(&["elect", "--knowledge", "bk:2"]).0, EXIT_USAGE);
}

#[test]
fn elect_writes_summaries_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out_dir = dir.path().join(format!("w{workers}"));
        let args = [
            "elect", "--generate", "ring:4,anon,one-unshared", "--generate", "clique:3,anon,classes=aab", "--algorithm", "mtau", "--knowledge", "two-approx:4",
            "--trials", "6", "--seed", "7", "--workers", workers, "--output", out_dir.to_str().unwrap(),
        ];
        let (code, out, err) = cli(&args);
        assert_eq!(code, EXIT_OK, "{err}");
        assert!(out.contains("mode: las-vegas"), "{out}");
        let summary = fs::read_to_string(out_dir.join("summary.json")).unwrap().replace(out_dir.to_str().unwrap(), "OUT");
        outputs.push((summary, fs::read_to_string(out_dir.join("trials.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = &outputs[0].1;
    assert!(csv.starts_with("trial,outcome,steps,bits,elected_vertex\n"));
    assert_eq!(csv.lines().count(), 13);
    let v: serde_json::Value = serde_json::from_str(&outputs[0].0).unwrap();
    let totals = &v["totals"];
    let sum: u64 = ["correct", "multiple_elected", "none_elected", "undecided"].iter().map(|k| totals[k].as_u64().unwrap()).sum();
    assert_eq!(sum, 12);
}

#[test]
fn elect_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (_, ring, _) = cli(&["generate", "ring:5,anon,one-unshared"]);
    write(dir.path(), "ring.json", &ring);
    let mut c = ExperimentConfig::new(vec![GraphSource::File("ring.json".into())], AlgorithmChoice::M, "exact-size:5", 3);
    c.seed = 5;
    let cfg = write(dir.path(), "exp.json", &c.to_json());
    let (code, out, err) = cli(&["elect", "--config", &cfg]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["totals"]["correct"], 3);
    assert_eq!(v["config"]["seed"], 5);
    let saved = dir.path().join("saved.json");
    let (code, _, _) = cli(&["elect", "--config", &cfg, "--trials", "1", "--save-config", saved.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let back = ExperimentConfig::load(&saved).unwrap();
    assert_eq!(back.trials, 1);
    assert_eq!(back.graphs, c.graphs);
}

#[test]
fn check_exit_codes() {
    let (code, out, _) = cli(&["check", "quasi-lifting"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("0 failed"));
    assert_eq!(cli(&["check", "quasi-lifting", "--corrupt"]).0, EXIT_CHECK_FAILED);
    let (code, _, err) = cli(&["check", "bogus"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("unknown battery"));
    assert_eq!(cli(&["check", "lifting", "--seed", "not-a-seed"]).0, EXIT_USAGE);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(cli(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(cli(&["--help"]).0, EXIT_OK);
}
