//! Explicit discretization of the inertial multiobjective flows.
//!
//! With `t_k = t₀ + kh`, `u_k = proj_{C(x_k)}(0)` and
//! `v_k = (x_k − x_{k−1}) − r_k`, one step reads
//!
//! ```text
//! x_{k+1} = x_k + t_k / (t_k + αh) · (v_k − proj_{h²C(x_k)}(v_k))
//! r_k     = (α − β) h / t_k^p · ‖x_k − x_{k−1}‖ / ‖u_k‖ · u_k
//! ```
//!
//! MAVNG uses the correction `r_k`; MAVD drops it, which is also what MAVNG
//! does when `β = α`. The start has zero velocity (`x_{−1} = x_0`).

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::linalg::{self, norm};
use crate::merit::{merit_value, MeritConfig, MeritError};
use crate::problems::ProblemInstance;
use crate::qp;

/// Below this KKT residual the correction direction is treated as undefined
/// and `r_k` is set to zero.
pub const CORRECTION_FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("trajectory has no merit samples")]
    MissingMerit,
    #[error(transparent)]
    Merit(#[from] MeritError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Mavng,
    Mavd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub t0: f64,
    pub h: f64,
    pub t_end: f64,
    pub x0: Vec<f64>,
    pub qp_tol: f64,
}

impl FlowConfig {
    /// `(α, β, p) = (50, 3, 1)`, `t₀ = 1`, `h = 10⁻³`, `t_end = 20`.
    pub fn new(x0: Vec<f64>) -> Self {
        Self {
            alpha: 50.0,
            beta: 3.0,
            p: 1.0,
            t0: 1.0,
            h: 1e-3,
            t_end: 20.0,
            x0,
            qp_tol: qp::DEFAULT_TOL,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self, n: usize) -> Result<(), FlowError> {
        let bad = |msg: String| Err(FlowError::InvalidConfig(msg));
        if !(self.beta > 0.0 && self.alpha >= self.beta) || !self.alpha.is_finite() {
            return bad(format!("need alpha >= beta > 0, got alpha = {}, beta = {}", self.alpha, self.beta));
        }
        if !(self.p >= 0.0) {
            return bad(format!("p must be nonnegative, got {}", self.p));
        }
        if !(self.t0 >= 1.0) {
            return bad(format!("t0 must be at least 1, got {}", self.t0));
        }
        if !(self.h > 0.0) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.t_end > self.t0) || !self.t_end.is_finite() {
            return bad(format!("t_end must exceed t0, got {}", self.t_end));
        }
        if !(self.qp_tol > 0.0) {
            return bad("qp_tol must be positive".into());
        }
        if self.x0.len() != n || !linalg::all_finite(&self.x0) {
            return bad(format!("x0 must be a finite vector of length {n}"));
        }
        Ok(())
    }

    /// Index of the last grid point, `⌊(t_end − t₀)/h⌉`.
    pub fn steps(&self) -> usize {
        ((self.t_end - self.t0) / self.h).round() as usize
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub kkt_residual: f64,
    pub merit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub config: FlowConfig,
    pub samples: Vec<Sample>,
    /// Set when a projection failed and integration stopped early.
    pub failure: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory holds at least x0")
    }

    /// Columns `t, x_1..x_n, kkt_residual, merit`; merit is blank where it
    /// was not sampled.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "t")?;
        for i in 1..=self.config.x0.len() {
            write!(out, ",x_{i}")?;
        }
        writeln!(out, ",kkt_residual,merit")?;
        for s in &self.samples {
            write!(out, "{:e}", s.t)?;
            for v in &s.x {
                write!(out, ",{v:e}")?;
            }
            write!(out, ",{:e},", s.kkt_residual)?;
            if let Some(m) = s.merit {
                write!(out, "{m:e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn mavng_integrate(prob: &ProblemInstance, cfg: &FlowConfig) -> Result<Trajectory, FlowError> {
    integrate(prob, cfg, Scheme::Mavng)
}

pub fn mavd_integrate(prob: &ProblemInstance, cfg: &FlowConfig) -> Result<Trajectory, FlowError> {
    integrate(prob, cfg, Scheme::Mavd)
}

pub fn integrate(prob: &ProblemInstance, cfg: &FlowConfig, scheme: Scheme) -> Result<Trajectory, FlowError> {
    cfg.validate(prob.n())?;
    let last = cfg.steps();
    let h2 = cfg.h * cfg.h;
    let coeff = match scheme {
        Scheme::Mavng => (cfg.alpha - cfg.beta) * cfg.h,
        Scheme::Mavd => 0.0,
    };
    let mut samples = Vec::with_capacity(last + 1);
    let mut failure = None;
    let mut x_prev = cfg.x0.clone();
    let mut x = cfg.x0.clone();
    for k in 0..=last {
        let t = cfg.time(k);
        let grads = prob.grad(&x);
        let hull = match qp::min_norm_in_hull(&grads, cfg.qp_tol) {
            Ok(hull) => hull,
            Err(e) => {
                failure = Some(format!("step {k}: {e}"));
                break;
            }
        };
        let residual = norm(&hull.point);
        samples.push(Sample {
            k,
            t,
            x: x.clone(),
            kkt_residual: residual,
            merit: None,
        });
        if k == last {
            break;
        }
        let mut v = linalg::sub(&x, &x_prev);
        let dx_norm = norm(&v);
        if coeff != 0.0 && dx_norm > 0.0 && residual >= CORRECTION_FLOOR {
            let scale = coeff / t.powf(cfg.p) * dx_norm / residual;
            linalg::axpy(-scale, &hull.point, &mut v);
        }
        let proj = match qp::project_onto_scaled_hull(&grads, h2, &v, cfg.qp_tol) {
            Ok(p) => p,
            Err(e) => {
                failure = Some(format!("step {k}: {e}"));
                break;
            }
        };
        let damping = t / (t + cfg.alpha * cfg.h);
        let mut next = x.clone();
        for ((xi, vi), pi) in next.iter_mut().zip(&v).zip(&proj.point) {
            *xi += damping * (vi - pi);
        }
        if !linalg::all_finite(&next) {
            failure = Some(format!("step {k}: non-finite iterate"));
            break;
        }
        x_prev = std::mem::replace(&mut x, next);
    }
    Ok(Trajectory {
        scheme,
        config: cfg.clone(),
        samples,
        failure,
    })
}

/// Evaluates `φ` on every `stride`-th sample and on the final one, warm
/// starting each solve from the previous maximizer.
pub fn attach_merit(
    traj: &mut Trajectory,
    prob: &ProblemInstance,
    stride: usize,
    cfg: &MeritConfig,
) -> Result<(), FlowError> {
    if stride == 0 {
        return Err(FlowError::InvalidConfig("merit stride must be positive".into()));
    }
    let count = traj.samples.len();
    let mut inner = cfg.clone();
    for (idx, sample) in traj.samples.iter_mut().enumerate() {
        if sample.k % stride != 0 && idx + 1 != count {
            continue;
        }
        let value = match merit_value(prob, &sample.x, &inner) {
            Ok(v) => v,
            Err(MeritError::NoConvergence { phi, z, .. }) => crate::merit::MeritValue {
                phi,
                z_star: z,
                residual: f64::NAN,
                iterations: cfg.inner_max_iter,
            },
            Err(e) => return Err(e.into()),
        };
        sample.merit = Some(value.phi);
        inner.warm_start = Some(value.z_star);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPoint {
    pub t: f64,
    pub merit: f64,
    pub bound: f64,
}

impl BoundPoint {
    pub fn holds(&self) -> bool {
        self.merit <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub coefficient: f64,
    pub points: Vec<BoundPoint>,
    /// Share of points with `φ(x(t)) ≤ coefficient / t²`.
    pub fraction: f64,
}

/// Compares attached merit values with `coefficient / t²` on samples with
/// `t` in `window` (all samples when `None`).
pub fn merit_bound_scan(
    traj: &Trajectory,
    coefficient: f64,
    window: Option<(f64, f64)>,
) -> Result<BoundReport, FlowError> {
    let points: Vec<BoundPoint> = traj
        .samples
        .iter()
        .filter(|s| window.is_none_or(|(lo, hi)| s.t >= lo && s.t <= hi))
        .filter_map(|s| {
            s.merit.map(|merit| BoundPoint {
                t: s.t,
                merit,
                bound: coefficient / (s.t * s.t),
            })
        })
        .collect();
    if points.is_empty() {
        return Err(FlowError::MissingMerit);
    }
    let fraction = points.iter().filter(|p| p.holds()).count() as f64 / points.len() as f64;
    Ok(BoundReport {
        coefficient,
        points,
        fraction,
    })
}
