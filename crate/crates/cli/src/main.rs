use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use ring_gather::checker::{
    check_clean_phase2_entry, check_phase2_transitions, check_trace_all, enumerate_initial_configs,
    phase2_instances, Verdict,
};
use ring_gather::protocol::analyze;
use ring_gather::sim::{
    builtin_scheduler, run, validate_initial, validate_sizes, RunLimits, SchedulerKind,
};
use ring_gather::{RingConfig, SimError};

#[derive(Parser)]
#[command(
    name = "ring-gather",
    version,
    about = "Gathering robots on an anonymous odd ring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trace as JSON lines.
    Simulate(SimulateArgs),
    /// List one occupancy string per class of initial configurations.
    Enumerate(EnumerateArgs),
    /// Run the checker grid and write a JSON report.
    Verify(VerifyArgs),
    /// Show the protocol state and symmetry of a configuration.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct LimitArgs {
    /// Step budget per run.
    #[arg(long, default_value_t = 5_000_000)]
    max_steps: u64,
    /// Every robot completes a cycle within this many steps (default 4k).
    #[arg(long)]
    fairness_bound: Option<u64>,
    /// Skip the size and parity constraints on n and k (testing only).
    #[arg(long)]
    relaxed: bool,
}

impl LimitArgs {
    fn limits(&self, k: usize) -> RunLimits {
        RunLimits {
            max_steps: self.max_steps,
            fairness_bound: self.fairness_bound.unwrap_or(4 * k as u64),
            relaxed: self.relaxed,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Initial occupancy string, e.g. "11111.11111....".
    #[arg(long)]
    occ: String,
    /// Ring size; must match the occupancy string when given.
    #[arg(long)]
    n: Option<usize>,
    /// Robot count; must match the occupancy string when given.
    #[arg(long)]
    k: Option<usize>,
    /// synchronous, random, lazy or exhaustive.
    #[arg(long, default_value = "synchronous")]
    scheduler: String,
    #[arg(long, env = "RING_GATHER_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    limits: LimitArgs,
    /// Trace file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Skip the size and parity constraints on n and k (testing only).
    #[arg(long)]
    relaxed: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Ring sizes to check.
    #[arg(long, value_delimiter = ',', default_values_t = [15, 17])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// First seed; random and lazy runs use consecutive seeds from here.
    #[arg(long, env = "RING_GATHER_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    random_runs: u64,
    #[arg(long, default_value_t = 10)]
    lazy_runs: u64,
    /// Round bound constant: runs must gather within c * n^2 rounds.
    #[arg(long, default_value_t = 20)]
    c: u64,
    /// Exploration depth for the Phase-2 transition checks (default: to fixpoint).
    #[arg(long)]
    depth: Option<usize>,
    #[command(flatten)]
    limits: LimitArgs,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    occ: String,
}

#[derive(Debug)]
struct CliError(String);

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Verify(a) => verify(a),
        Command::Classify(a) => classify(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_config(occ: &str, n: Option<usize>, k: Option<usize>) -> Result<RingConfig, CliError> {
    let cfg: RingConfig = occ.parse()?;
    if let Some(n) = n.filter(|&n| n != cfg.n()) {
        return Err(CliError(format!(
            "--n {n} but the occupancy string has {} nodes",
            cfg.n()
        )));
    }
    if let Some(k) = k.filter(|&k| k != cfg.k()) {
        return Err(CliError(format!(
            "--k {k} but the occupancy string has {} robots",
            cfg.k()
        )));
    }
    Ok(cfg)
}

fn simulate(a: SimulateArgs) -> Result<bool, CliError> {
    let cfg = parse_config(&a.occ, a.n, a.k)?;
    let kind = builtin_scheduler(&a.scheduler, a.seed, 0)?;
    if matches!(kind, SchedulerKind::Exhaustive { .. }) {
        return Err(SimError::ExhaustiveRun.into());
    }
    validate_initial(&cfg, a.limits.relaxed)?;
    let trace = run(&cfg, kind, a.limits.limits(cfg.k()))?;
    let mut w = output(&a.out)?;
    trace.write_jsonl(&mut w)?;
    w.flush()?;
    eprintln!(
        "outcome: {:?}, rounds: {}, steps: {}",
        trace.outcome,
        trace.rounds,
        trace.events.len()
    );
    Ok(trace.outcome == ring_gather::sim::Outcome::Gathered)
}

fn enumerate(a: EnumerateArgs) -> Result<bool, CliError> {
    let cfgs = enumerate_initial_configs(a.n, a.k, a.relaxed)?;
    let mut w = output(&a.out)?;
    for c in &cfgs {
        writeln!(w, "{c}")?;
    }
    w.flush()?;
    eprintln!("count: {}", cfgs.len());
    Ok(true)
}

fn classify(a: ClassifyArgs) -> Result<bool, CliError> {
    let cfg: RingConfig = a.occ.parse()?;
    let analysis = analyze(&cfg);
    let sym = cfg.classify_symmetry();
    println!("tag: {}", analysis.state.tag);
    match analysis.state.tag.phase() {
        Some(p) => println!("phase: {p:?}"),
        None => println!("phase: none"),
    }
    for (role, nodes) in &analysis.state.roles {
        println!("role {role}: {nodes:?}");
    }
    println!("symmetry: {}", sym.cfg_class);
    if let Some(v) = sym.axis_node {
        println!("axis node: {v}");
    }
    if let Some((x, y)) = sym.axis_edge {
        println!("axis edge: {x}-{y}");
    }
    for m in &analysis.moves {
        println!("move: robot at {} -> {:?}", m.robot_node, m.targets);
    }
    Ok(true)
}

#[derive(Serialize)]
struct Counterexample {
    initial: String,
    scheduler: String,
    seed: Option<u64>,
    step: u64,
    description: String,
    occ: String,
}

#[derive(Serialize, Default)]
struct CheckSummary {
    passed: usize,
    failed: usize,
    first_counterexample: Option<Counterexample>,
}

impl CheckSummary {
    fn add(&mut self, v: Verdict, init: &RingConfig, kind: SchedulerKind) {
        if v.passed {
            self.passed += 1;
            return;
        }
        self.failed += 1;
        if self.first_counterexample.is_none() {
            let viol = v
                .violation
                .unwrap_or_else(|| unreachable!("failed verdict has a violation"));
            self.first_counterexample = Some(Counterexample {
                initial: init.to_string(),
                scheduler: kind.name().to_string(),
                seed: kind.seed(),
                step: viol.step,
                description: viol.description,
                occ: viol.occ,
            });
        }
    }
}

#[derive(Serialize)]
struct Report {
    k: usize,
    rings: Vec<usize>,
    initial_configs: BTreeMap<usize, usize>,
    runs: usize,
    round_constant: u64,
    checks: BTreeMap<&'static str, CheckSummary>,
    /// Informational; does not affect `all_passed`.
    diagnostics: BTreeMap<&'static str, CheckSummary>,
    phase2_transitions: BTreeMap<usize, Verdict>,
    max_rounds: u64,
    all_passed: bool,
    wall_clock_secs: f64,
}

struct JobResult {
    init: RingConfig,
    kind: SchedulerKind,
    rounds: u64,
    verdicts: Vec<(&'static str, Verdict)>,
    entry: Verdict,
}

fn verify(a: VerifyArgs) -> Result<bool, CliError> {
    let started = Instant::now();
    if !a.limits.relaxed {
        for &n in &a.n {
            validate_sizes(n, a.k)?;
        }
    }
    let mut initial_configs = BTreeMap::new();
    let mut jobs = Vec::new();
    for &n in &a.n {
        let cfgs = enumerate_initial_configs(n, a.k, a.limits.relaxed)?;
        initial_configs.insert(n, cfgs.len());
        for cfg in cfgs {
            jobs.push((cfg.clone(), SchedulerKind::Synchronous));
            for s in 0..a.random_runs {
                jobs.push((cfg.clone(), SchedulerKind::RandomFair { seed: a.seed + s }));
            }
            for s in 0..a.lazy_runs {
                jobs.push((cfg.clone(), SchedulerKind::Lazy { seed: a.seed + s }));
            }
        }
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError(e.to_string()))?;
    let limits = a.limits.limits(a.k);
    let results: Result<Vec<JobResult>, SimError> = pool.install(|| {
        jobs.into_par_iter()
            .map(|(init, kind)| {
                let trace = run(&init, kind, limits)?;
                Ok(JobResult {
                    rounds: trace.rounds,
                    verdicts: check_trace_all(&trace, a.c),
                    entry: check_clean_phase2_entry(&trace),
                    init,
                    kind,
                })
            })
            .collect()
    });
    let results = results?;

    let mut checks: BTreeMap<&'static str, CheckSummary> = BTreeMap::new();
    let mut diagnostics: BTreeMap<&'static str, CheckSummary> = BTreeMap::new();
    let mut max_rounds = 0;
    for r in &results {
        max_rounds = max_rounds.max(r.rounds);
        for (name, v) in &r.verdicts {
            checks
                .entry(name)
                .or_default()
                .add(v.clone(), &r.init, r.kind);
        }
        diagnostics
            .entry("clean_phase2_entry")
            .or_default()
            .add(r.entry.clone(), &r.init, r.kind);
    }

    let mut phase2_transitions = BTreeMap::new();
    for &n in &a.n {
        let instances: Vec<RingConfig> = phase2_instances(n, a.k)
            .into_iter()
            .map(|(_, c)| c)
            .collect();
        phase2_transitions.insert(n, check_phase2_transitions(&instances, a.depth));
    }

    let all_passed =
        checks.values().all(|c| c.failed == 0) && phase2_transitions.values().all(|v| v.passed);
    let report = Report {
        k: a.k,
        rings: a.n.clone(),
        initial_configs,
        runs: results.len(),
        round_constant: a.c,
        checks,
        diagnostics,
        phase2_transitions,
        max_rounds,
        all_passed,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    let mut w = output(&a.out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    for (name, c) in &report.checks {
        eprintln!("{name}: {} passed, {} failed", c.passed, c.failed);
    }
    for (n, v) in &report.phase2_transitions {
        eprintln!(
            "phase2 transitions n={n}: {}",
            if v.passed { "passed" } else { "failed" }
        );
    }
    Ok(all_passed)
}
