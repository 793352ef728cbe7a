use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use paretoflow::harness::{self, ExperimentConfig, HarnessError, PRESETS};
use paretoflow::problems::{self, REGISTRY};
use paretoflow::solvers::{self, Termination, Variant};

/// Multiobjective accelerated gradient methods and inertial flows.
#[derive(Debug, Parser)]
#[command(name = "paretoflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run solvers from seeded starts and write the aggregate table.
    Run(Options),
    /// Collect final objective vectors into a Pareto-front CSV.
    Front(Options),
    /// Integrate MAVNG and MAVD over an alpha sweep and scan the merit bound.
    Flow(Options),
    /// Run a single start and export its per-iteration trace.
    Trace(Options),
    /// List registered problems, solvers and presets.
    List,
}

#[derive(Debug, Args)]
struct Options {
    /// TOML file with an experiment configuration; flags override it.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Start from a named preset; flags override it.
    #[arg(long)]
    preset: Option<String>,
    /// Problem key, e.g. `jos1:n=5` (repeatable).
    #[arg(long)]
    problem: Vec<String>,
    /// Solver name (repeatable).
    #[arg(long)]
    solver: Vec<Variant>,
    /// Momentum parameter; repeat for a flow sweep.
    #[arg(long)]
    alpha: Vec<f64>,
    /// Flow damping parameter beta.
    #[arg(long)]
    beta: Option<f64>,
    /// Flow exponent p.
    #[arg(long = "p")]
    p: Option<f64>,
    /// Constant step size.
    #[arg(long)]
    step: Option<f64>,
    /// Initial trial step for line search.
    #[arg(long)]
    s0: Option<f64>,
    /// Backtracking factor.
    #[arg(long)]
    sigma: Option<f64>,
    /// Stop tolerance (repeatable).
    #[arg(long)]
    eps: Vec<f64>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Number of seeded starts.
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Attach merit values every this many flow steps.
    #[arg(long)]
    merit_stride: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Flow horizon.
    #[arg(long)]
    t_end: Option<f64>,
    /// Flow step h.
    #[arg(long)]
    h: Option<f64>,
    /// Starting point as comma-separated values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Write wall-clock columns.
    #[arg(long)]
    timing: bool,
    /// Write one trace per run in `run`.
    #[arg(long)]
    traces: bool,
}

/// Failures while setting up (exit 1) versus while running (exit 2).
enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidConfig(_) | HarnessError::Problem(_) | HarnessError::Solver(_) => {
                Failure::Config(e.into())
            }
            _ => Failure::Run(e.into()),
        }
    }
}

fn config_err(e: anyhow::Error) -> Failure {
    Failure::Config(e)
}

fn build_config(o: &Options, verb: &str) -> Result<ExperimentConfig> {
    let mut cfg = match (&o.preset, &o.config) {
        (Some(name), _) => harness::preset(name).with_context(|| format!("unknown preset `{name}`"))?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, None) => ExperimentConfig::default(),
    };
    if !o.problem.is_empty() {
        cfg.problems = o.problem.clone();
    }
    if !o.solver.is_empty() {
        cfg.solvers = o.solver.clone();
    }
    if verb == "flow" {
        if !o.alpha.is_empty() {
            cfg.flow.alphas = o.alpha.clone();
        }
    } else {
        match o.alpha.as_slice() {
            [] => {}
            [a] => cfg.alpha = *a,
            _ => bail!("--alpha may be repeated only for `flow`"),
        }
    }
    if let Some(b) = o.beta {
        cfg.flow.beta = Some(b);
    }
    if let Some(p) = o.p {
        cfg.flow.p = p;
    }
    if let Some(t) = o.t_end {
        cfg.flow.t_end = t;
    }
    if let Some(h) = o.h {
        cfg.flow.h = h;
    }
    if let Some(x0) = &o.x0 {
        cfg.flow.x0 = Some(x0.clone());
    }
    cfg.step = o.step.or(cfg.step);
    cfg.s0 = o.s0.or(cfg.s0);
    cfg.sigma = o.sigma.unwrap_or(cfg.sigma);
    if !o.eps.is_empty() {
        cfg.epsilons = o.eps.clone();
    }
    cfg.k_max = o.k_max.unwrap_or(cfg.k_max);
    cfg.n_starts = o.starts.unwrap_or(cfg.n_starts);
    cfg.seed = o.seed.unwrap_or(cfg.seed);
    cfg.merit_stride = o.merit_stride.unwrap_or(cfg.merit_stride);
    if o.out.is_some() {
        cfg.out_dir = o.out.clone();
    }
    if o.workers.is_some() {
        cfg.workers = o.workers;
    }
    cfg.timing |= o.timing;
    cfg.write_traces |= o.traces;
    Ok(cfg)
}

fn run_verb(o: &Options) -> Result<(), Failure> {
    let cfg = build_config(o, "run").map_err(config_err)?;
    let summary = harness::run_batch(&cfg)?;
    summary
        .write_table(io::stdout().lock(), cfg.timing)
        .map_err(|e| Failure::Run(e.into()))?;
    if summary.failures() > 0 {
        return Err(Failure::Run(anyhow::anyhow!("{} run(s) ended in qp_failure", summary.failures())));
    }
    Ok(())
}

fn front_verb(o: &Options) -> Result<(), Failure> {
    let cfg = build_config(o, "front").map_err(config_err)?;
    let scans = harness::pareto_scan(&cfg)?;
    let mut out = io::stdout().lock();
    for scan in &scans {
        let flagged = scan.points.iter().filter(|p| p.flagged).count();
        writeln!(out, "{}: {} points, {} above tolerance", scan.problem, scan.points.len(), flagged)
            .map_err(|e| Failure::Run(e.into()))?;
        if cfg.out_dir.is_none() {
            scan.write_csv(&mut out).map_err(|e| Failure::Run(e.into()))?;
        }
    }
    Ok(())
}

fn flow_verb(o: &Options) -> Result<(), Failure> {
    let cfg = build_config(o, "flow").map_err(config_err)?;
    let report = harness::flow_experiment(&cfg)?;
    let mut out = io::stdout().lock();
    let io_err = |e: io::Error| Failure::Run(e.into());
    writeln!(out, "alpha,scheme,bound_coefficient,bound_fraction,final_distance_to_front").map_err(io_err)?;
    let mut failed = 0;
    for r in &report.runs {
        let dist = r.final_distance_to_front.map(|d| format!("{d:e}")).unwrap_or_default();
        let scheme = match r.scheme {
            paretoflow::flow::Scheme::Mavng => "mavng",
            paretoflow::flow::Scheme::Mavd => "mavd",
        };
        writeln!(out, "{},{scheme},{},{},{dist}", r.alpha, r.bound.coefficient, r.bound.fraction).map_err(io_err)?;
        failed += usize::from(r.trajectory.failure.is_some());
    }
    if failed > 0 {
        return Err(Failure::Run(anyhow::anyhow!("{failed} trajectory(ies) stopped early")));
    }
    Ok(())
}

fn trace_verb(o: &Options) -> Result<(), Failure> {
    let cfg = build_config(o, "trace").map_err(config_err)?;
    cfg.validate()?;
    let key = &cfg.problems[0];
    let prob = problems::from_key(key).map_err(|e| Failure::Config(e.into()))?;
    let x0 = match &cfg.flow.x0 {
        Some(x) => x.clone(),
        None => harness::sample_starts(&prob, 1, cfg.seed).remove(0),
    };
    let variant = cfg.solvers[0];
    let scfg = cfg.solver_config(variant, cfg.epsilons[0]);
    let trace = solvers::run(&prob, &scfg, &x0).map_err(|e| Failure::Config(e.into()))?;
    let summary = trace.summary_json(&prob, &scfg, cfg.timing);
    match &cfg.out_dir {
        Some(dir) => {
            let stem = format!("trace_{}_{}", harness::slug(key), variant);
            harness::trace_export(&trace, prob.m(), &dir.join(format!("{stem}.csv")), cfg.timing)?;
            let text = serde_json_pretty(&summary);
            fs::write(dir.join(format!("{stem}.json")), text).map_err(|e| Failure::Run(e.into()))?;
            println!(
                "{key} {variant}: {} after {} iterations, residual {:e}",
                trace.termination.as_str(),
                trace.iterations(),
                trace.final_kkt_residual
            );
        }
        None => trace
            .write_csv(io::stdout().lock(), prob.m(), cfg.timing)
            .map_err(|e| Failure::Run(e.into()))?,
    }
    if trace.termination == Termination::QpFailure {
        return Err(Failure::Run(anyhow::anyhow!("run ended in qp_failure")));
    }
    Ok(())
}

fn serde_json_pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn list_verb() {
    println!("problems:");
    for (name, desc) in REGISTRY {
        println!("  {name:<8} {desc}");
    }
    println!("solvers:");
    for v in Variant::ALL {
        println!("  {v}");
    }
    println!("presets:");
    for (name, desc) in PRESETS {
        println!("  {name:<15} {desc}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(o) => run_verb(o),
        Command::Front(o) => front_verb(o),
        Command::Flow(o) => flow_verb(o),
        Command::Trace(o) => trace_verb(o),
        Command::List => {
            list_verb();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
