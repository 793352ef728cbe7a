//! Discrete multiobjective methods.
//!
//! * MFISC: inertial step whose momentum is tilted toward the steepest-descent
//!   direction `−proj_{C(x_k)}(0)`, followed by a projected gradient step at
//!   the extrapolated point `y_k`;
//! * AccG: the same scheme with Nesterov momentum `(k−1)/(k+2)` and no tilt;
//! * steepest descent with backtracking.
//!
//! Each method runs with a constant step `s < 1/L` or with the shared
//! backtracking rule. Runs produce an [`IterationTrace`] with one record per
//! step taken.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, dot, norm, norm_sq};
use crate::problems::ProblemInstance;
use crate::qp::{self, GradientMatrix, QpError};

/// Floor on `‖u_k‖` in the momentum correction.
pub const SAFE_DIVISION_FLOOR: f64 = 1e-300;

/// Maximum number of step reductions in one backtracking search.
pub const MAX_BACKTRACKS: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("starting point has dimension {got}, problem expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    MfiscConst,
    MfiscLs,
    AccgConst,
    AccgLs,
    SteepestLs,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::MfiscConst,
        Variant::MfiscLs,
        Variant::AccgConst,
        Variant::AccgLs,
        Variant::SteepestLs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::MfiscConst => "mfisc_const",
            Variant::MfiscLs => "mfisc_ls",
            Variant::AccgConst => "accg_const",
            Variant::AccgLs => "accg_ls",
            Variant::SteepestLs => "steepest_ls",
        }
    }

    pub fn uses_line_search(self) -> bool {
        matches!(self, Variant::MfiscLs | Variant::AccgLs | Variant::SteepestLs)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| SolverError::InvalidConfig(format!("unknown solver `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Momentum-correction coefficient, `α ≥ 3`. Unused by AccG and
    /// steepest descent.
    pub alpha: f64,
    /// Constant step, or the initial trial step `s₀` with line search.
    /// `None` selects `0.9/L` (constant) or `10` (line search).
    pub step: Option<f64>,
    /// Stop tolerance on the KKT residual.
    pub epsilon: f64,
    pub k_max: usize,
    /// Backtracking shrink factor.
    pub sigma: f64,
    pub qp_tol: f64,
    /// Take the final update with `∇f_i(x_k)` instead of `∇f_i(y_k)`.
    pub gradient_at_x: bool,
    /// Let the carried step grow by `1/σ` (capped at `s₀`) before each search.
    pub step_growback: bool,
}

impl SolverConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            alpha: 50.0,
            step: None,
            epsilon: 1e-6,
            k_max: 100_000,
            sigma: 0.8,
            qp_tol: qp::DEFAULT_TOL,
            gradient_at_x: false,
            step_growback: false,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// Checks the configuration against `prob` and resolves the step.
    pub fn resolve_step(&self, prob: &ProblemInstance) -> Result<f64, SolverError> {
        if matches!(self.variant, Variant::MfiscConst | Variant::MfiscLs) && !(self.alpha >= 3.0) {
            return Err(SolverError::InvalidConfig(format!("alpha must be >= 3, got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0) {
            return Err(SolverError::InvalidConfig("epsilon must be positive".into()));
        }
        if self.k_max == 0 {
            return Err(SolverError::InvalidConfig("k_max must be positive".into()));
        }
        if !(self.qp_tol > 0.0) {
            return Err(SolverError::InvalidConfig("qp_tol must be positive".into()));
        }
        if self.variant.uses_line_search() {
            if !(self.sigma > 0.0 && self.sigma < 1.0) {
                return Err(SolverError::InvalidConfig(format!(
                    "sigma must lie in (0, 1), got {}",
                    self.sigma
                )));
            }
            let s0 = self.step.unwrap_or(10.0);
            if !(s0 > 0.0) || !s0.is_finite() {
                return Err(SolverError::InvalidConfig(format!("initial step must be positive, got {s0}")));
            }
            return Ok(s0);
        }
        let step = match (self.step, prob.lipschitz()) {
            (Some(s), _) => s,
            (None, Some(l)) => 0.9 / l,
            (None, None) => {
                return Err(SolverError::InvalidConfig(
                    "constant step required: problem has no Lipschitz constant".into(),
                ))
            }
        };
        if !(step > 0.0) || !step.is_finite() {
            return Err(SolverError::InvalidConfig(format!("step must be positive, got {step}")));
        }
        if let Some(l) = prob.lipschitz() {
            if step * l >= 1.0 {
                return Err(SolverError::InvalidConfig(format!(
                    "constant step {step} violates s < 1/L with L = {l}"
                )));
            }
        }
        Ok(step)
    }
}

/// Rolling iterate pair. At `k = 1` both iterates coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x_prev: Vec<f64>,
    pub x_curr: Vec<f64>,
    pub k: usize,
    pub last_step: f64,
}

impl SolverState {
    pub fn start(x0: &[f64], step: f64) -> Self {
        Self {
            x_prev: x0.to_vec(),
            x_curr: x0.to_vec(),
            k: 1,
            last_step: step,
        }
    }

    pub fn displacement(&self) -> Vec<f64> {
        linalg::sub(&self.x_curr, &self.x_prev)
    }

    fn advance(&mut self, next: Vec<f64>) {
        self.x_prev = std::mem::replace(&mut self.x_curr, next);
        self.k += 1;
    }
}

/// `π_k = (k−1)/(k+α−1)·Δx_k − (α−3)/(k+α−1)·(‖Δx_k‖/max(‖u‖, τ))·u`.
///
/// The correction term is exactly zero when `Δx_k = 0`.
pub fn mfisc_momentum(state: &SolverState, alpha: f64, u: &[f64], tau: f64) -> Vec<f64> {
    let k = state.k as f64;
    let denom = k + alpha - 1.0;
    let dx = state.displacement();
    let dx_norm = norm(&dx);
    let mut pi = linalg::scale(&dx, (k - 1.0) / denom);
    if dx_norm > 0.0 {
        let tilt = (alpha - 3.0) / denom * dx_norm / norm(u).max(tau);
        linalg::axpy(-tilt, u, &mut pi);
    }
    pi
}

/// `π_k = (k−1)/(k+2)·Δx_k`.
pub fn accg_momentum(state: &SolverState) -> Vec<f64> {
    let k = state.k as f64;
    linalg::scale(&state.displacement(), (k - 1.0) / (k + 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub step: f64,
    pub reductions: usize,
    /// The reduction cap was hit and `step` is the last candidate.
    pub capped: bool,
}

/// First `s ∈ {s₀, σs₀, σ²s₀, …}` with
/// `min_i [f_i(w+sd) − f_i(w) − s⟨∇f_i(w), d⟩] ≤ ½s‖d‖²`.
pub fn line_search_backtracking(
    prob: &ProblemInstance,
    w: &[f64],
    s0: f64,
    sigma: f64,
    d: &[f64],
) -> LineSearchOutcome {
    let fw = prob.eval(w);
    let gw = prob.grad(w);
    backtrack(prob, w, &fw, &gw, s0, sigma, d)
}

/// The backtracking test at a single trial step.
pub fn sufficient_decrease(
    prob: &ProblemInstance,
    w: &[f64],
    fw: &[f64],
    slopes: &[f64],
    s: f64,
    d: &[f64],
) -> bool {
    let mut trial = w.to_vec();
    linalg::axpy(s, d, &mut trial);
    let ft = prob.eval(&trial);
    let worst_gap = ft
        .iter()
        .zip(fw)
        .zip(slopes)
        .map(|((a, b), slope)| a - b - s * slope)
        .fold(f64::INFINITY, f64::min);
    worst_gap <= 0.5 * s * norm_sq(d)
}

fn backtrack(
    prob: &ProblemInstance,
    w: &[f64],
    fw: &[f64],
    gw: &GradientMatrix,
    s0: f64,
    sigma: f64,
    d: &[f64],
) -> LineSearchOutcome {
    let slopes: Vec<f64> = gw.columns().map(|g| dot(g, d)).collect();
    let mut s = s0;
    for reductions in 0..=MAX_BACKTRACKS {
        if sufficient_decrease(prob, w, fw, &slopes, s, d) {
            return LineSearchOutcome {
                step: s,
                reductions,
                capped: false,
            };
        }
        if reductions < MAX_BACKTRACKS {
            s *= sigma;
        }
    }
    LineSearchOutcome {
        step: s,
        reductions: MAX_BACKTRACKS,
        capped: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    KMax,
    QpFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::KMax => "k_max",
            Termination::QpFailure => "qp_failure",
        }
    }
}

/// State at `x_k` for one step taken from it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `‖proj_{C(x_k)}(0)‖`
    pub kkt_residual: f64,
    /// `‖x_k − x_{k−1}‖`
    pub iter_gap: f64,
    pub objectives: Vec<f64>,
    /// Step used to leave `x_k`.
    pub step: f64,
    /// Largest Frank–Wolfe gap among the subproblems of this step.
    pub qp_gap: f64,
    /// Seconds since the run started.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub variant: Variant,
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
    pub x_final: Vec<f64>,
    pub final_objectives: Vec<f64>,
    /// KKT residual at `x_final` (NaN when it could not be computed).
    pub final_kkt_residual: f64,
    /// Number of line searches that hit the reduction cap.
    pub capped_line_searches: usize,
    pub wall_time: f64,
}

impl IterationTrace {
    /// Steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// Writes `k,kkt_residual,iter_gap,f1..fm,step,qp_gap,time_s`. The time
    /// column is left blank unless `with_time`, which keeps files
    /// byte-reproducible.
    pub fn write_csv<W: Write>(&self, mut out: W, m: usize, with_time: bool) -> io::Result<()> {
        write!(out, "k,kkt_residual,iter_gap")?;
        for i in 1..=m {
            write!(out, ",f{i}")?;
        }
        writeln!(out, ",step,qp_gap,time_s")?;
        for r in &self.records {
            write!(out, "{},{:e},{:e}", r.k, r.kkt_residual, r.iter_gap)?;
            for f in &r.objectives {
                write!(out, ",{f:e}")?;
            }
            write!(out, ",{:e},{:e},", r.step, r.qp_gap)?;
            if with_time {
                write!(out, "{:e}", r.wall_time)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// JSON run summary: configuration echo, termination and totals.
    pub fn summary_json(&self, prob: &ProblemInstance, cfg: &SolverConfig, with_time: bool) -> serde_json::Value {
        let mut v = serde_json::json!({
            "problem": prob.name(),
            "config": cfg,
            "termination": self.termination.as_str(),
            "iterations": self.iterations(),
            "final_kkt_residual": self.final_kkt_residual,
            "final_objectives": self.final_objectives,
            "x_final": self.x_final,
            "capped_line_searches": self.capped_line_searches,
        });
        if with_time {
            v["wall_time_s"] = serde_json::json!(self.wall_time);
        }
        v
    }
}

/// Runs the configured method from `x0`.
pub fn run(prob: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<IterationTrace, SolverError> {
    run_observed(prob, cfg, x0, |_, _| {})
}

/// As [`run`], also handing every visited iterate `(k, x_k)` to `observer`,
/// including the final one.
pub fn run_observed(
    prob: &ProblemInstance,
    cfg: &SolverConfig,
    x0: &[f64],
    mut observer: impl FnMut(usize, &[f64]),
) -> Result<IterationTrace, SolverError> {
    if x0.len() != prob.n() {
        return Err(SolverError::DimensionMismatch {
            expected: prob.n(),
            got: x0.len(),
        });
    }
    let step = cfg.resolve_step(prob)?;
    Ok(Runner::new(prob, cfg, x0, step, &mut observer).execute())
}

fn require(cfg: &SolverConfig, expected: &[Variant]) -> Result<(), SolverError> {
    if expected.contains(&cfg.variant) {
        Ok(())
    } else {
        Err(SolverError::InvalidConfig(format!(
            "configuration is for {}, expected one of {:?}",
            cfg.variant, expected
        )))
    }
}

pub fn mfisc_const_run(prob: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<IterationTrace, SolverError> {
    require(cfg, &[Variant::MfiscConst])?;
    run(prob, cfg, x0)
}

pub fn accg_const_run(prob: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<IterationTrace, SolverError> {
    require(cfg, &[Variant::AccgConst])?;
    run(prob, cfg, x0)
}

pub fn mfisc_ls_run(prob: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<IterationTrace, SolverError> {
    require(cfg, &[Variant::MfiscLs])?;
    run(prob, cfg, x0)
}

pub fn accg_ls_run(prob: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<IterationTrace, SolverError> {
    require(cfg, &[Variant::AccgLs])?;
    run(prob, cfg, x0)
}

pub fn steepest_ls_run(prob: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<IterationTrace, SolverError> {
    require(cfg, &[Variant::SteepestLs])?;
    run(prob, cfg, x0)
}

struct Runner<'a> {
    prob: &'a ProblemInstance,
    cfg: &'a SolverConfig,
    state: SolverState,
    s0: f64,
    records: Vec<TraceRecord>,
    capped: usize,
    started: Instant,
    observer: &'a mut dyn FnMut(usize, &[f64]),
}

/// One step's outcome.
struct Step {
    next: Vec<f64>,
    step: f64,
    /// Largest gap among the subproblems solved besides the stop test.
    qp_gap: f64,
    /// `‖d_k‖` for the line-search variants.
    direction_norm: f64,
}

impl<'a> Runner<'a> {
    fn new(
        prob: &'a ProblemInstance,
        cfg: &'a SolverConfig,
        x0: &[f64],
        step: f64,
        observer: &'a mut dyn FnMut(usize, &[f64]),
    ) -> Self {
        Self {
            prob,
            cfg,
            state: SolverState::start(x0, step),
            s0: step,
            records: Vec::new(),
            capped: 0,
            started: Instant::now(),
            observer,
        }
    }

    fn execute(mut self) -> IterationTrace {
        let variant = self.cfg.variant;
        // ‖d_{k−1}‖ for the variants that test the previous direction.
        let mut prev_direction_norm = f64::INFINITY;
        let termination = loop {
            if self.state.k >= self.cfg.k_max {
                (self.observer)(self.state.k, &self.state.x_curr);
                break Termination::KMax;
            }
            (self.observer)(self.state.k, &self.state.x_curr);
            let gx = self.prob.grad(&self.state.x_curr);
            let hull = match qp::min_norm_in_hull(&gx, self.cfg.qp_tol) {
                Ok(h) => h,
                Err(_) => break Termination::QpFailure,
            };
            let residual = norm(&hull.point);
            let stop = match variant {
                Variant::MfiscConst | Variant::MfiscLs | Variant::AccgConst => residual < self.cfg.epsilon,
                Variant::AccgLs | Variant::SteepestLs => prev_direction_norm <= self.cfg.epsilon,
            };
            if stop {
                break Termination::Converged;
            }
            let outcome = match variant {
                Variant::MfiscConst => self.inertial_const(&gx, Some(&hull.point)),
                Variant::AccgConst => self.inertial_const(&gx, None),
                Variant::MfiscLs => self.inertial_ls(&gx, Some(&hull.point)),
                Variant::AccgLs => self.inertial_ls(&gx, None),
                Variant::SteepestLs => Ok(self.steepest(&gx, &hull.point)),
            };
            let step = match outcome {
                Ok(s) if linalg::all_finite(&s.next) => s,
                _ => break Termination::QpFailure,
            };
            prev_direction_norm = step.direction_norm;
            self.records.push(TraceRecord {
                k: self.state.k,
                kkt_residual: residual,
                iter_gap: linalg::dist(&self.state.x_curr, &self.state.x_prev),
                objectives: self.prob.eval(&self.state.x_curr),
                step: step.step,
                qp_gap: hull.gap.max(step.qp_gap),
                wall_time: self.started.elapsed().as_secs_f64(),
            });
            self.state.last_step = step.step;
            self.state.advance(step.next);
        };
        self.finish(termination)
    }

    fn momentum(&self, tilt: Option<&[f64]>) -> Vec<f64> {
        match tilt {
            Some(u) => mfisc_momentum(&self.state, self.cfg.alpha, u, SAFE_DIVISION_FLOOR),
            None => accg_momentum(&self.state),
        }
    }

    fn inertial_const(&mut self, gx: &GradientMatrix, tilt: Option<&[f64]>) -> Result<Step, QpError> {
        let s = self.s0;
        let pi = self.momentum(tilt);
        let y = linalg::add(&self.state.x_curr, &pi);
        let gy = self.prob.grad(&y);
        let proj = qp::project_onto_scaled_hull(&gy, s, &pi, self.cfg.qp_tol)?;
        let next = if self.cfg.gradient_at_x {
            linalg::sub(&y, &gx.combine(proj.weights.as_slice(), s))
        } else {
            linalg::sub(&y, &proj.point)
        };
        Ok(Step {
            next,
            step: s,
            qp_gap: proj.gap,
            direction_norm: f64::NAN,
        })
    }

    fn inertial_ls(&mut self, gx: &GradientMatrix, tilt: Option<&[f64]>) -> Result<Step, QpError> {
        let s_prev = self.state.last_step;
        let pi = self.momentum(tilt);
        let y = linalg::add(&self.state.x_curr, &pi);
        let gy = self.prob.grad(&y);
        let proj = qp::project_onto_scaled_hull(&gy, s_prev, &pi, self.cfg.qp_tol)?;
        let theta = proj.weights.as_slice();
        let d = gy.combine(theta, -1.0);
        let start = if self.cfg.step_growback {
            (s_prev / self.cfg.sigma).min(self.s0)
        } else {
            s_prev
        };
        let fy = self.prob.eval(&y);
        let ls = backtrack(self.prob, &y, &fy, &gy, start, self.cfg.sigma, &d);
        if ls.capped {
            self.capped += 1;
        }
        let update = if self.cfg.gradient_at_x { gx.combine(theta, -1.0) } else { d };
        let mut next = y;
        linalg::axpy(ls.step, &update, &mut next);
        Ok(Step {
            next,
            step: ls.step,
            qp_gap: proj.gap,
            direction_norm: norm(&update),
        })
    }

    fn steepest(&mut self, gx: &GradientMatrix, u: &[f64]) -> Step {
        let d = linalg::scale(u, -1.0);
        let start = if self.cfg.step_growback {
            (self.state.last_step / self.cfg.sigma).min(self.s0)
        } else {
            self.state.last_step
        };
        let fx = self.prob.eval(&self.state.x_curr);
        let ls = backtrack(self.prob, &self.state.x_curr, &fx, gx, start, self.cfg.sigma, &d);
        if ls.capped {
            self.capped += 1;
        }
        let mut next = self.state.x_curr.clone();
        linalg::axpy(ls.step, &d, &mut next);
        Step {
            next,
            step: ls.step,
            qp_gap: 0.0,
            direction_norm: norm(&d),
        }
    }

    fn finish(self, termination: Termination) -> IterationTrace {
        let x = self.state.x_curr;
        let final_kkt_residual = crate::problems::kkt_residual(self.prob, &x).unwrap_or(f64::NAN);
        IterationTrace {
            variant: self.cfg.variant,
            records: self.records,
            termination,
            final_objectives: self.prob.eval(&x),
            x_final: x,
            final_kkt_residual,
            capped_line_searches: self.capped,
            wall_time: self.started.elapsed().as_secs_f64(),
        }
    }
}
