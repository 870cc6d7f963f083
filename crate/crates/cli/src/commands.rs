//! Subcommands. Each returns its exit code and writes to the given streams.

use std::io::Write;
use std::path::{Path, PathBuf};

use anonelect::coverings::{is_b_minimal, minimal_base};
use anonelect::families::{generate, generate_covering_pair, GeneratorSpec};
use anonelect::graph::{build_dir, DigraphFile, GraphFile};
use anonelect::randomness::parse_seed;
use anonelect::verifier::CheckReport;
use clap::{Args, Parser, Subcommand};

use crate::checks::run_battery;
use crate::config::{AlgorithmChoice, ExperimentConfig, GraphSource, ModeRequest, SchedulerChoice};
use crate::experiment::{prepare, run_experiment};
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "anonelect", version, about = "Leader election in anonymous networks with shared random sources")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a graph file and list what is wrong with it.
    Validate {
        path: PathBuf,
        /// Read an explicit digraph file instead of a graph file.
        #[arg(long)]
        digraph: bool,
    },
    /// Print the minimal base of a network and whether it is minimal.
    Analyze {
        path: PathBuf,
        /// Keep source classes in the labels when folding.
        #[arg(long)]
        with_sources: bool,
    },
    /// Run election trials and write summaries.
    Elect(Box<ElectArgs>),
    /// Run verifier batteries over generated networks.
    Check {
        /// lifting, quasi-lifting, counters, impossibility or all.
        #[arg(default_value = "all")]
        battery: String,
        #[arg(long, default_value = "0")]
        seed: String,
        /// Break the shared-source assumption; each battery must then report failures.
        #[arg(long)]
        corrupt: bool,
        /// Write the reports as JSON here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a generated network as a graph file.
    Generate {
        /// For example ring:6,anon,classes=ababab.
        spec: String,
        /// Print a covering with this many sheets instead.
        #[arg(long)]
        sheets: Option<usize>,
        /// Seed for random shapes and covering lifts.
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ElectArgs {
    /// JSON experiment config; other flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Graph file to run on; repeatable.
    #[arg(long = "graph")]
    pub graphs: Vec<PathBuf>,
    /// Generator spec to run on; repeatable.
    #[arg(long = "generate")]
    pub specs: Vec<String>,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmChoice>,
    /// none, bound:S, two-approx:T, exact-size:N, topology:FILE or bk:K.
    #[arg(long)]
    pub knowledge: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeRequest>,
    #[arg(long, value_enum)]
    pub scheduler: Option<SchedulerChoice>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Directory for summary.json and trials.csv.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub snapshot_stride: Option<usize>,
    /// Check per-step invariants in every trial.
    #[arg(long)]
    pub verify: bool,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write the resolved config here.
    #[arg(long)]
    pub save_config: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Validate { path, digraph } => cmd_validate(&path, digraph, out),
        Command::Analyze { path, with_sources } => cmd_analyze(&path, with_sources, out),
        Command::Elect(args) => cmd_elect(&args, out),
        Command::Check { battery, seed, corrupt, output } => cmd_check(&battery, parse(&seed)?, corrupt, output.as_deref(), out),
        Command::Generate { spec, sheets, seed, output } => cmd_generate(&spec, sheets, parse(&seed)?, output.as_deref(), out),
    }
}

fn parse(seed: &str) -> Result<u64, CliError> {
    parse_seed(seed).map_err(|e| CliError::Usage(e.to_string()))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(|e| CliError::Io(e.to_string()))
}

pub fn cmd_validate(path: &Path, digraph: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    if digraph {
        let d = DigraphFile::load(path).map_err(|e| CliError::Invalid(e.to_string()))?;
        let violations = d.validate();
        if violations.is_empty() {
            emit(out, &format!("valid: {} vertices, {} arcs", d.vertex_count(), d.arc_count()))?;
            return Ok(EXIT_OK);
        }
        let list: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(CliError::Invalid(format!("{} violations\n{}", violations.len(), list.join("\n"))));
    }
    let g = GraphFile::load(path).map_err(|e| CliError::Invalid(e.to_string()))?;
    emit(out, &format!("valid: {} vertices, {} edges", g.vertex_count(), g.edges().len()))?;
    Ok(EXIT_OK)
}

pub fn cmd_analyze(path: &Path, with_sources: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let g = GraphFile::load(path).map_err(|e| CliError::Invalid(e.to_string()))?;
    let d = if with_sources { build_dir(&g) } else { build_dir(&g).forget_sources() };
    let (base, _) = minimal_base(&d).map_err(|e| CliError::Invalid(e.to_string()))?;
    let b_minimal = is_b_minimal(&g).map_err(|e| CliError::Invalid(e.to_string()))?;
    emit(out, &format!("vertices: {}", g.vertex_count()))?;
    emit(out, &format!("sources in labels: {with_sources}"))?;
    emit(out, &format!("minimal: {}", base.vertex_count() == d.vertex_count()))?;
    emit(out, &format!("B-minimal: {b_minimal}, base size {}", base.vertex_count()))?;
    emit(out, &DigraphFile::to_json(&base))?;
    Ok(EXIT_OK)
}

/// The experiment described by `args`: the config file if any, with flags
/// overriding its fields.
pub fn resolve_config(args: &ElectArgs) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let (mut c, base_dir) = match &args.config {
        Some(p) => (ExperimentConfig::load(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => {
            let algorithm = args.algorithm.ok_or_else(|| CliError::Usage("--algorithm is required without --config".into()))?;
            let knowledge = args.knowledge.clone().ok_or_else(|| CliError::Usage("--knowledge is required without --config".into()))?;
            (ExperimentConfig::new(Vec::new(), algorithm, knowledge, 1), PathBuf::new())
        }
    };
    if !args.graphs.is_empty() || !args.specs.is_empty() {
        c.graphs = args.graphs.iter().cloned().map(GraphSource::File).chain(args.specs.iter().cloned().map(GraphSource::Generate)).collect();
    }
    if let Some(a) = args.algorithm {
        c.algorithm = a;
    }
    if let Some(k) = &args.knowledge {
        c.knowledge = k.clone();
    }
    if let Some(m) = args.mode {
        c.mode = m;
    }
    if let Some(s) = args.scheduler {
        c.scheduler = s;
    }
    if let Some(s) = &args.seed {
        c.seed = parse(s)?;
    }
    if let Some(t) = args.trials {
        c.trials = t;
    }
    if let Some(b) = args.budget {
        c.budget = b;
    }
    if args.output.is_some() {
        c.output = args.output.clone();
    }
    if let Some(s) = args.snapshot_stride {
        c.snapshot_stride = s;
    }
    c.verify |= args.verify;
    Ok((c, base_dir))
}

pub fn cmd_elect(args: &ElectArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (config, base_dir) = resolve_config(args)?;
    if let Some(p) = &args.save_config {
        std::fs::write(p, config.to_json() + "\n").map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    let prepared = prepare(config, &base_dir)?;
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    let summary = run_experiment(&prepared, workers)?;
    match &prepared.config.output {
        Some(dir) => {
            let (json, csv) = summary.write(dir)?;
            emit(out, &format!("mode: {}", summary.mode))?;
            for g in &summary.graphs {
                emit(
                    out,
                    &format!(
                        "{}: {} correct, {} multiple, {} none, {} undecided (error rate {:.4})",
                        g.name, g.counts.correct, g.counts.multiple_elected, g.counts.none_elected, g.counts.undecided, g.error_rate
                    ),
                )?;
            }
            emit(out, &format!("wrote {} and {}", json.display(), csv.display()))?;
        }
        None => emit(out, &summary.to_json())?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_check(battery: &str, seed: u64, corrupt: bool, output: Option<&Path>, out: &mut dyn Write) -> Result<i32, CliError> {
    let reports = run_battery(battery, seed, corrupt)?;
    for r in &reports {
        emit(out, &report_line(r))?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    emit(out, &format!("{} checks, {failed} failed", reports.len()))?;
    if let Some(p) = output {
        let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
        std::fs::write(p, json + "\n").map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn report_line(r: &CheckReport) -> String {
    let verdict = if r.passed { "PASS" } else { "FAIL" };
    let mut line = format!("{verdict} {} {}", r.check, r.instance);
    if let Some(c) = &r.counterexample {
        line.push_str(&format!(" (seed {}, step {}, vertex {})", c.seed, c.step, c.vertex));
    }
    line
}

pub fn cmd_generate(spec: &str, sheets: Option<usize>, seed: u64, output: Option<&Path>, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut parsed: GeneratorSpec = spec.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
    if let anonelect::families::Shape::Random { seed: s, .. } = &mut parsed.shape {
        if seed != 0 {
            *s = seed;
        }
    }
    let g = match sheets {
        Some(q) => generate_covering_pair(&parsed, q, seed).map_err(|e| CliError::Usage(e.to_string()))?.total,
        None => generate(&parsed).map_err(|e| CliError::Usage(e.to_string()))?,
    };
    let json = GraphFile::to_json(&g);
    match output {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => emit(out, &json)?,
    }
    Ok(EXIT_OK)
}
