//! Batch experiments: solver comparisons over seeded starts, Pareto-front
//! scans, flow sweeps with merit-bound reports, and single-run traces.
//!
//! Starts are drawn sequentially from one seeded stream, runs fan out over a
//! bounded rayon pool, and results are gathered in start order. With timing
//! off, every file written here is a pure function of the configuration.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flow::{self, BoundReport, FlowConfig, FlowError, Scheme, Trajectory};
use crate::merit::MeritConfig;
use crate::problems::{self, ProblemError, ProblemInstance};
use crate::rng;
use crate::solvers::{self, IterationTrace, SolverConfig, SolverError, Termination, Variant};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Parameters of a flow sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSweep {
    pub alphas: Vec<f64>,
    /// `β`; `None` runs each α with `β = α`.
    pub beta: Option<f64>,
    pub p: f64,
    pub t0: f64,
    pub h: f64,
    pub t_end: f64,
    /// Starting point; the first seeded start when absent.
    pub x0: Option<Vec<f64>>,
    /// The bound is `bound_factor · α / t²`.
    pub bound_factor: f64,
    /// Time window of the bound scan.
    pub window: Option<(f64, f64)>,
}

impl Default for FlowSweep {
    fn default() -> Self {
        Self {
            alphas: vec![5.0, 10.0, 50.0, 100.0],
            beta: Some(3.0),
            p: 1.0,
            t0: 1.0,
            h: 1e-3,
            t_end: 20.0,
            x0: None,
            bound_factor: 1.0,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registry keys.
    pub problems: Vec<String>,
    pub solvers: Vec<Variant>,
    pub alpha: f64,
    /// Constant step; `0.9/L` when absent.
    pub step: Option<f64>,
    /// Initial trial step of the line-search variants; `10` when absent.
    pub s0: Option<f64>,
    pub sigma: f64,
    pub k_max: usize,
    pub epsilons: Vec<f64>,
    pub n_starts: usize,
    pub seed: u64,
    pub flow: FlowSweep,
    pub out_dir: Option<PathBuf>,
    pub merit_stride: usize,
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
    /// Write wall-clock columns (makes files run-dependent).
    pub timing: bool,
    /// Write one trace CSV per run.
    pub write_traces: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problems: vec!["quad2".into()],
            solvers: vec![Variant::MfiscConst],
            alpha: 50.0,
            step: None,
            s0: None,
            sigma: 0.8,
            k_max: 100_000,
            epsilons: vec![1e-6],
            n_starts: 10,
            seed: 0,
            flow: FlowSweep::default(),
            out_dir: None,
            merit_stride: 10,
            workers: None,
            timing: false,
            write_traces: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: &str| Err(HarnessError::InvalidConfig(msg.into()));
        if self.problems.is_empty() {
            return bad("at least one problem is required");
        }
        if self.solvers.is_empty() {
            return bad("at least one solver is required");
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return bad("epsilons must be a non-empty list of positive values");
        }
        if self.n_starts == 0 {
            return bad("n_starts must be at least 1");
        }
        if self.merit_stride == 0 {
            return bad("merit_stride must be positive");
        }
        if self.workers == Some(0) {
            return bad("workers must be positive");
        }
        for key in &self.problems {
            let prob = problems::from_key(key)?;
            for &variant in &self.solvers {
                for &eps in &self.epsilons {
                    self.solver_config(variant, eps).resolve_step(&prob)?;
                }
            }
        }
        Ok(())
    }

    pub fn solver_config(&self, variant: Variant, epsilon: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(variant)
            .with_alpha(self.alpha)
            .with_sigma(self.sigma)
            .with_epsilon(epsilon)
            .with_k_max(self.k_max);
        cfg.step = if variant.uses_line_search() { self.s0 } else { self.step };
        cfg
    }

    fn pool(&self) -> Result<rayon::ThreadPool, HarnessError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            builder = builder.num_threads(w);
        }
        builder
            .build()
            .map_err(|e| HarnessError::InvalidConfig(format!("cannot build worker pool: {e}")))
    }
}

/// `count` starts drawn uniformly from the problem's init box.
pub fn sample_starts(prob: &ProblemInstance, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut stream = rng::stream(seed, rng::START_POINT_STREAM);
    (0..count).map(|_| prob.init_box().sample(&mut stream)).collect()
}

/// Outcome of one start in one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStatus {
    pub start: usize,
    pub iterations: usize,
    pub termination: Termination,
    pub final_kkt_residual: f64,
    pub capped_line_searches: usize,
    pub wall_time: f64,
}

/// One `(problem, solver, ε)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchCell {
    pub problem: String,
    pub solver: Variant,
    pub epsilon: f64,
    pub total_iterations: usize,
    pub total_time: f64,
    pub runs: Vec<RunStatus>,
}

impl BatchCell {
    pub fn converged(&self) -> usize {
        self.runs.iter().filter(|r| r.termination == Termination::Converged).count()
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.termination == Termination::QpFailure).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub cells: Vec<BatchCell>,
}

impl BatchSummary {
    pub fn cell(&self, problem: &str, solver: Variant, epsilon: f64) -> Option<&BatchCell> {
        self.cells
            .iter()
            .find(|c| c.problem == problem && c.solver == solver && c.epsilon == epsilon)
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().map(BatchCell::failures).sum()
    }

    /// Aggregate table: one row per cell.
    pub fn write_table<W: Write>(&self, mut out: W, timing: bool) -> io::Result<()> {
        writeln!(out, "problem,solver,epsilon,starts,converged,failures,total_iterations,time_s")?;
        for c in &self.cells {
            write!(
                out,
                "{},{},{:e},{},{},{},{},",
                c.problem,
                c.solver,
                c.epsilon,
                c.runs.len(),
                c.converged(),
                c.failures(),
                c.total_iterations
            )?;
            if timing {
                write!(out, "{:e}", c.total_time)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Per-start rows, so that no start is dropped silently.
    pub fn write_runs<W: Write>(&self, mut out: W, timing: bool) -> io::Result<()> {
        writeln!(
            out,
            "problem,solver,epsilon,start,iterations,termination,final_kkt_residual,capped_line_searches,time_s"
        )?;
        for c in &self.cells {
            for r in &c.runs {
                write!(
                    out,
                    "{},{},{:e},{},{},{},{:e},{},",
                    c.problem,
                    c.solver,
                    c.epsilon,
                    r.start,
                    r.iterations,
                    r.termination.as_str(),
                    r.final_kkt_residual,
                    r.capped_line_searches
                )?;
                if timing {
                    write!(out, "{:e}", r.wall_time)?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self, cfg: &ExperimentConfig) -> serde_json::Value {
        let cells: Vec<serde_json::Value> = self
            .cells
            .iter()
            .map(|c| {
                let mut v = serde_json::json!({
                    "problem": c.problem,
                    "solver": c.solver,
                    "epsilon": c.epsilon,
                    "starts": c.runs.len(),
                    "converged": c.converged(),
                    "failures": c.failures(),
                    "total_iterations": c.total_iterations,
                });
                if cfg.timing {
                    v["total_time_s"] = serde_json::json!(c.total_time);
                }
                v
            })
            .collect();
        serde_json::json!({ "config": config_echo(cfg), "cells": cells })
    }
}

/// The configuration without where and how wide it ran, neither of which
/// affects results.
fn config_echo(cfg: &ExperimentConfig) -> serde_json::Value {
    let mut v = serde_json::json!(cfg);
    if let Some(map) = v.as_object_mut() {
        map.remove("out_dir");
        map.remove("workers");
    }
    v
}

/// File-name-safe form of a registry key.
pub fn slug(key: &str) -> String {
    key.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn create(dir: &Path, name: &str) -> io::Result<BufWriter<fs::File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<(), HarnessError> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Runs every configured solver from every start on every problem.
///
/// Writes `summary.csv`, `runs.csv` and `summary.json` (and optionally
/// per-run traces) when an output directory is configured.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchSummary, HarnessError> {
    cfg.validate()?;
    let pool = cfg.pool()?;
    let mut cells = Vec::new();
    for key in &cfg.problems {
        let prob = problems::from_key(key)?;
        let starts = sample_starts(&prob, cfg.n_starts, cfg.seed);
        for &variant in &cfg.solvers {
            for &eps in &cfg.epsilons {
                let scfg = cfg.solver_config(variant, eps);
                let traces: Vec<IterationTrace> = pool.install(|| {
                    starts
                        .par_iter()
                        .map(|x0| solvers::run(&prob, &scfg, x0))
                        .collect::<Result<_, _>>()
                })?;
                if cfg.write_traces {
                    if let Some(dir) = &cfg.out_dir {
                        let dir = dir.join("traces");
                        for (i, t) in traces.iter().enumerate() {
                            let name = format!("{}_{}_eps{:e}_start{i}.csv", slug(key), variant, eps);
                            trace_export(t, prob.m(), &dir.join(name), cfg.timing)?;
                        }
                    }
                }
                let runs: Vec<RunStatus> = traces
                    .iter()
                    .enumerate()
                    .map(|(start, t)| RunStatus {
                        start,
                        iterations: t.iterations(),
                        termination: t.termination,
                        final_kkt_residual: t.final_kkt_residual,
                        capped_line_searches: t.capped_line_searches,
                        wall_time: t.wall_time,
                    })
                    .collect();
                cells.push(BatchCell {
                    problem: key.clone(),
                    solver: variant,
                    epsilon: eps,
                    total_iterations: runs.iter().map(|r| r.iterations).sum(),
                    total_time: runs.iter().map(|r| r.wall_time).sum(),
                    runs,
                });
            }
        }
    }
    let summary = BatchSummary { cells };
    if let Some(dir) = &cfg.out_dir {
        let mut w = create(dir, "summary.csv")?;
        summary.write_table(&mut w, cfg.timing)?;
        w.flush()?;
        let mut w = create(dir, "runs.csv")?;
        summary.write_runs(&mut w, cfg.timing)?;
        w.flush()?;
        write_json(dir, "summary.json", &summary.to_json(cfg))?;
    }
    Ok(summary)
}

/// One point of a front scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontPoint {
    pub start: usize,
    pub objectives: Vec<f64>,
    pub kkt_residual: f64,
    /// Final residual above `ε`.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontScan {
    pub problem: String,
    pub solver: Variant,
    pub epsilon: f64,
    pub points: Vec<FrontPoint>,
}

impl FrontScan {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "start")?;
        let m = self.points.first().map_or(0, |p| p.objectives.len());
        for i in 1..=m {
            write!(out, ",f{i}")?;
        }
        writeln!(out, ",kkt_residual,flagged")?;
        for p in &self.points {
            write!(out, "{}", p.start)?;
            for f in &p.objectives {
                write!(out, ",{f:e}")?;
            }
            writeln!(out, ",{:e},{}", p.kkt_residual, u8::from(p.flagged))?;
        }
        Ok(())
    }
}

/// Final objective vectors from every start, for each problem with the
/// first configured solver and tolerance. Writes `front_<problem>.csv`.
pub fn pareto_scan(cfg: &ExperimentConfig) -> Result<Vec<FrontScan>, HarnessError> {
    cfg.validate()?;
    let pool = cfg.pool()?;
    let variant = cfg.solvers[0];
    let eps = cfg.epsilons[0];
    let scfg = cfg.solver_config(variant, eps);
    let mut scans = Vec::new();
    for key in &cfg.problems {
        let prob = problems::from_key(key)?;
        if !(2..=3).contains(&prob.m()) {
            return Err(HarnessError::InvalidConfig(format!(
                "front scans need 2 or 3 objectives, {key} has {}",
                prob.m()
            )));
        }
        let starts = sample_starts(&prob, cfg.n_starts, cfg.seed);
        let traces: Vec<IterationTrace> = pool.install(|| {
            starts
                .par_iter()
                .map(|x0| solvers::run(&prob, &scfg, x0))
                .collect::<Result<_, _>>()
        })?;
        let points = traces
            .iter()
            .enumerate()
            .map(|(start, t)| FrontPoint {
                start,
                objectives: t.final_objectives.clone(),
                kkt_residual: t.final_kkt_residual,
                flagged: !(t.final_kkt_residual <= eps),
            })
            .collect();
        let scan = FrontScan {
            problem: key.clone(),
            solver: variant,
            epsilon: eps,
            points,
        };
        if let Some(dir) = &cfg.out_dir {
            let mut w = create(dir, &format!("front_{}.csv", slug(key)))?;
            scan.write_csv(&mut w)?;
            w.flush()?;
        }
        scans.push(scan);
    }
    Ok(scans)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowRun {
    pub problem: String,
    pub alpha: f64,
    pub scheme: Scheme,
    pub file: String,
    pub bound: BoundReport,
    pub final_distance_to_front: Option<f64>,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub runs: Vec<FlowRun>,
}

impl FlowReport {
    pub fn run(&self, alpha: f64, scheme: Scheme) -> Option<&FlowRun> {
        self.runs.iter().find(|r| r.alpha == alpha && r.scheme == scheme)
    }
}

/// Distance from `x` to a dense sampling of the problem's Pareto segment.
pub fn distance_to_pareto_segment(prob: &ProblemInstance, x: &[f64], samples: usize) -> Option<f64> {
    let seg = prob.pareto()?;
    Some(
        seg.sample(samples)
            .iter()
            .map(|p| crate::linalg::dist(x, p))
            .fold(f64::INFINITY, f64::min),
    )
}

/// For each α, integrates MAVNG and MAVD, attaches merit values and scans
/// the bound `bound_factor · α / t²`. Writes one CSV per trajectory and
/// `flow_report.json`.
pub fn flow_experiment(cfg: &ExperimentConfig) -> Result<FlowReport, HarnessError> {
    if cfg.flow.alphas.is_empty() {
        return Err(HarnessError::InvalidConfig("flow sweep needs at least one alpha".into()));
    }
    if cfg.merit_stride == 0 {
        return Err(HarnessError::InvalidConfig("merit_stride must be positive".into()));
    }
    let key = cfg
        .problems
        .first()
        .ok_or_else(|| HarnessError::InvalidConfig("a problem is required".into()))?;
    let prob = problems::from_key(key)?;
    let x0 = match &cfg.flow.x0 {
        Some(x) => x.clone(),
        None => sample_starts(&prob, 1, cfg.seed).remove(0),
    };
    let jobs: Vec<(f64, Scheme)> = cfg
        .flow
        .alphas
        .iter()
        .flat_map(|&a| [(a, Scheme::Mavng), (a, Scheme::Mavd)])
        .collect();
    let pool = cfg.pool()?;
    let sweep = &cfg.flow;
    let runs: Vec<FlowRun> = pool.install(|| {
        jobs.par_iter()
            .map(|&(alpha, scheme)| -> Result<FlowRun, HarnessError> {
                let fcfg = FlowConfig {
                    alpha,
                    beta: sweep.beta.unwrap_or(alpha),
                    p: sweep.p,
                    t0: sweep.t0,
                    h: sweep.h,
                    t_end: sweep.t_end,
                    x0: x0.clone(),
                    qp_tol: crate::qp::DEFAULT_TOL,
                };
                let mut traj = flow::integrate(&prob, &fcfg, scheme)?;
                flow::attach_merit(&mut traj, &prob, cfg.merit_stride, &MeritConfig::default())?;
                let bound = flow::merit_bound_scan(&traj, sweep.bound_factor * alpha, sweep.window)?;
                let tag = match scheme {
                    Scheme::Mavng => "mavng",
                    Scheme::Mavd => "mavd",
                };
                Ok(FlowRun {
                    problem: key.clone(),
                    alpha,
                    scheme,
                    file: format!("flow_{}_{tag}_alpha{alpha}.csv", slug(key)),
                    final_distance_to_front: distance_to_pareto_segment(&prob, &traj.last().x, 20_001),
                    bound,
                    trajectory: traj,
                })
            })
            .collect::<Result<_, _>>()
    })?;
    let report = FlowReport { runs };
    if let Some(dir) = &cfg.out_dir {
        for run in &report.runs {
            let mut w = create(dir, &run.file)?;
            run.trajectory.write_csv(&mut w)?;
            w.flush()?;
        }
        let summary: Vec<serde_json::Value> = report
            .runs
            .iter()
            .map(|r| {
                serde_json::json!({
                    "problem": r.problem,
                    "alpha": r.alpha,
                    "scheme": r.scheme,
                    "file": r.file,
                    "bound_coefficient": r.bound.coefficient,
                    "bound_fraction": r.bound.fraction,
                    "merit_samples": r.bound.points.len(),
                    "final_distance_to_front": r.final_distance_to_front,
                    "failure": r.trajectory.failure,
                })
            })
            .collect();
        write_json(dir, "flow_report.json", &serde_json::json!({ "config": config_echo(cfg), "runs": summary }))?;
    }
    Ok(report)
}

/// Writes a run's per-iteration CSV to `path`.
pub fn trace_export(trace: &IterationTrace, m: usize, path: &Path, timing: bool) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    trace.write_csv(&mut w, m, timing)?;
    w.flush()?;
    Ok(())
}

/// Names accepted by [`preset`].
pub const PRESETS: &[(&str, &str)] = &[
    ("bench", "JOS1/SD/TOI4, constant step 0.05, 100 starts, eps 1e-2..1e-8"),
    ("bench-full", "as bench with 1000 starts"),
    ("jos1-desk", "JOS1 n=2, 100 starts, eps 1e-6, step 0.05"),
    ("fronts", "front scans for quad2, lse2, JOS1, SD, TOI4 with 500 starts"),
    ("flow-quad", "quadratic flow sweep, alpha in {5,10,50,100}, bound alpha/t^2"),
    ("flow-lse", "log-sum-exp flow sweep, alpha in {5,10,50,100}, bound 10 alpha/t^2"),
    ("flow-reduction", "quadratic flow with beta = alpha"),
    ("ex1-desk", "regularized log-sum-exp triple (ex1) at n=20, p=10, 20 starts, line search, eps 1e-3"),
    ("ex1-full", "regularized log-sum-exp triple (ex1) at n=200, p=100, 500 starts, line search, eps 1e-3"),
    ("ex2-desk", "regularized least-squares triple (ex2) at n=20, p=20, 10 starts, line search, eps 1e-2"),
    ("ex2-full", "regularized least-squares triple (ex2) at n=100, p=100, 50 starts, line search, eps 1e-2"),
];

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let base = ExperimentConfig::default();
    let bench = ExperimentConfig {
        problems: vec!["jos1".into(), "sd".into(), "toi4".into()],
        solvers: vec![Variant::MfiscConst, Variant::AccgConst],
        step: Some(0.05),
        epsilons: vec![1e-2, 1e-4, 1e-6, 1e-8],
        n_starts: 100,
        ..base.clone()
    };
    let line_search = vec![Variant::MfiscLs, Variant::AccgLs, Variant::SteepestLs];
    let flow_quad = ExperimentConfig {
        problems: vec!["quad2".into()],
        flow: FlowSweep {
            x0: Some(vec![-0.2, -0.1]),
            ..FlowSweep::default()
        },
        merit_stride: 100,
        ..base.clone()
    };
    Some(match name {
        "bench" => bench,
        "bench-full" => ExperimentConfig {
            n_starts: 1000,
            ..bench
        },
        "jos1-desk" => ExperimentConfig {
            problems: vec!["jos1:n=2".into()],
            solvers: vec![Variant::MfiscConst, Variant::AccgConst],
            step: Some(0.05),
            epsilons: vec![1e-6],
            n_starts: 100,
            ..base
        },
        "fronts" => ExperimentConfig {
            problems: ["quad2", "lse2", "jos1", "sd", "toi4"].map(String::from).to_vec(),
            solvers: vec![Variant::MfiscConst],
            epsilons: vec![1e-6],
            n_starts: 500,
            ..base
        },
        "flow-quad" => flow_quad,
        "flow-lse" => ExperimentConfig {
            problems: vec!["lse2".into()],
            flow: FlowSweep {
                x0: Some(vec![0.0, 3.0]),
                bound_factor: 10.0,
                ..FlowSweep::default()
            },
            ..flow_quad
        },
        "flow-reduction" => ExperimentConfig {
            flow: FlowSweep {
                alphas: vec![50.0],
                beta: None,
                x0: Some(vec![-0.2, -0.1]),
                ..FlowSweep::default()
            },
            ..flow_quad
        },
        "ex1-desk" => ExperimentConfig {
            problems: vec!["ex1:n=20,p=10".into()],
            solvers: line_search,
            epsilons: vec![1e-3],
            n_starts: 20,
            ..base
        },
        "ex1-full" => ExperimentConfig {
            problems: vec!["ex1:n=200,p=100".into()],
            solvers: line_search,
            epsilons: vec![1e-3],
            n_starts: 500,
            ..base
        },
        "ex2-desk" => ExperimentConfig {
            problems: vec!["ex2:n=20,p=20".into()],
            solvers: vec![Variant::MfiscLs, Variant::AccgLs],
            epsilons: vec![1e-2],
            n_starts: 10,
            ..base
        },
        "ex2-full" => ExperimentConfig {
            problems: vec!["ex2:n=100,p=100".into()],
            solvers: vec![Variant::MfiscLs, Variant::AccgLs],
            epsilons: vec![1e-2],
            n_starts: 50,
            ..base
        },
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for (name, _) in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn start_on_pareto_set_converges_immediately() {
        let cfg = ExperimentConfig {
            problems: vec!["jos1".into()],
            n_starts: 1,
            ..ExperimentConfig::default()
        };
        // JOS1's Pareto set is the diagonal segment; override the start by
        // running the solver directly on that point.
        let prob = problems::from_key("jos1").unwrap();
        let t = solvers::run(&prob, &cfg.solver_config(Variant::MfiscConst, 1e-6), &[1.0, 1.0]).unwrap();
        assert_eq!(t.iterations(), 0);
        assert!(t.converged());
    }

    #[test]
    fn totals_match_per_run_sums() {
        let cfg = ExperimentConfig {
            problems: vec!["quad2".into(), "toi4".into()],
            solvers: vec![Variant::MfiscConst, Variant::SteepestLs],
            epsilons: vec![1e-3, 1e-5],
            n_starts: 4,
            ..ExperimentConfig::default()
        };
        let s = run_batch(&cfg).unwrap();
        assert_eq!(s.cells.len(), 8);
        for c in &s.cells {
            assert_eq!(c.runs.len(), 4);
            assert_eq!(c.total_iterations, c.runs.iter().map(|r| r.iterations).sum::<usize>());
            let starts: Vec<usize> = c.runs.iter().map(|r| r.start).collect();
            assert_eq!(starts, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_starts = 0;
        assert!(matches!(cfg.validate(), Err(HarnessError::InvalidConfig(_))));
        let cfg = ExperimentConfig {
            problems: vec!["nope".into()],
            ..ExperimentConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(HarnessError::Problem(_))));
        let cfg = ExperimentConfig {
            step: Some(1.0),
            ..ExperimentConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(HarnessError::Solver(_))));
    }

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("ex1:n=20,p=10"), "ex1_n_20_p_10");
    }
}
