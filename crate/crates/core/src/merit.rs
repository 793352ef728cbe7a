//! The merit function `φ(x) = sup_z min_i [f_i(x) − f_i(z)]`.
//!
//! `φ(x) = −min_z h(z)` with `h(z) = max_i [f_i(z) − f_i(x)]`. The inner
//! problem is solved by a prox-linear method on the max function: each step
//! minimizes the linearized max plus `‖d‖²/(2t)`, whose dual is a small
//! simplex QP, and `t` adapts by a sufficient-decrease test. The iteration
//! starts at `x`, where `h = 0`, so the returned value is never negative.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, dot, norm};
use crate::problems::{BoxRegion, ProblemInstance};
use crate::qp::{self, QpError};

#[derive(Debug, thiserror::Error)]
pub enum MeritError {
    #[error("merit evaluation unsupported: {0}")]
    Unsupported(String),
    #[error("merit grid oracle needs n = 2, got n = {0}")]
    DimensionUnsupported(usize),
    #[error("invalid merit input: {0}")]
    InvalidInput(String),
    #[error("inner solve stopped at residual {residual:.3e} (best phi {phi:.6e})")]
    NoConvergence { phi: f64, z: Vec<f64>, residual: f64 },
    #[error(transparent)]
    Qp(#[from] QpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeritConfig {
    /// Stop tolerance on the prox-gradient residual `‖Gλ‖`.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Previous maximizer, used when it beats `x` itself.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for MeritConfig {
    fn default() -> Self {
        Self {
            inner_tol: 1e-10,
            inner_max_iter: 20_000,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeritValue {
    pub phi: f64,
    pub z_star: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Evaluates `φ(x)`.
pub fn merit_value(prob: &ProblemInstance, x: &[f64], cfg: &MeritConfig) -> Result<MeritValue, MeritError> {
    if !prob.level_bounded() {
        return Err(MeritError::Unsupported(format!(
            "{} is not level-bounded, so the supremum may be infinite",
            prob.name()
        )));
    }
    if !(cfg.inner_tol > 0.0) {
        return Err(MeritError::InvalidInput("inner_tol must be positive".into()));
    }
    if x.len() != prob.n() || !linalg::all_finite(x) {
        return Err(MeritError::InvalidInput("x must be finite with the problem dimension".into()));
    }
    let fx = prob.eval(x);
    let gaps = |z: &[f64]| -> Vec<f64> { prob.eval(z).iter().zip(&fx).map(|(a, b)| a - b).collect() };
    let max_of = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = 8.0 * f64::EPSILON * (1.0 + fx.iter().fold(0.0f64, |a, f| a.max(f.abs())));

    let mut z = x.to_vec();
    let mut g = gaps(&z);
    if let Some(w) = &cfg.warm_start {
        if w.len() == z.len() && linalg::all_finite(w) {
            let gw = gaps(w);
            if max_of(&gw) < max_of(&g) {
                z = w.clone();
                g = gw;
            }
        }
    }
    let mut h = max_of(&g);
    let mut t = prob.lipschitz().map_or(1.0, |l| 1.0 / l);
    let mut residual = f64::INFINITY;

    for iteration in 0..cfg.inner_max_iter {
        let grads = prob.grad(&z);
        let a: Vec<f64> = g.iter().map(|gi| gi - h).collect();
        let gram = grads.gram();
        let q: Vec<f64> = gram.iter().map(|v| t * v).collect();
        let c: Vec<f64> = a.iter().map(|v| -v).collect();
        let sol = qp::solve_simplex_qp(&q, &c, 1e-14)?;
        let lambda = sol.weights.as_slice();
        let gl = grads.combine(lambda, 1.0);
        residual = norm(&gl);
        // The dual objective certifies how far the model can still go down.
        let model_drop = dot(&a, lambda) - 0.5 * t * residual * residual;
        if residual <= cfg.inner_tol || -model_drop <= slack {
            return Ok(MeritValue {
                phi: 0.0 - h,
                z_star: z,
                residual,
                iterations: iteration,
            });
        }
        let d = linalg::scale(&gl, -t);
        let model = a
            .iter()
            .zip(grads.columns())
            .map(|(ai, gi)| ai + dot(gi, &d))
            .fold(f64::NEG_INFINITY, f64::max)
            + dot(&d, &d) / (2.0 * t);
        let trial = linalg::add(&z, &d);
        let g_trial = gaps(&trial);
        let h_trial = max_of(&g_trial);
        if h_trial <= h + model + slack && h_trial.is_finite() {
            if h_trial >= h {
                // The accepted model decrease is below rounding level.
                return Ok(MeritValue {
                    phi: 0.0 - h,
                    z_star: z,
                    residual,
                    iterations: iteration,
                });
            }
            z = trial;
            g = g_trial;
            h = h_trial;
            t *= 2.0;
        } else {
            t *= 0.5;
            if t < 1e-300 {
                break;
            }
        }
    }
    Err(MeritError::NoConvergence { phi: 0.0 - h, z, residual })
}

/// `max` over a `resolution × resolution` grid on `bounds` of
/// `min_i [f_i(x) − f_i(z)]`. A lower bound on `φ(x)` for `n = 2`.
pub fn merit_grid_oracle(
    prob: &ProblemInstance,
    x: &[f64],
    bounds: &BoxRegion,
    resolution: usize,
) -> Result<f64, MeritError> {
    if prob.n() != 2 {
        return Err(MeritError::DimensionUnsupported(prob.n()));
    }
    if bounds.dim() != 2 || resolution < 2 || x.len() != 2 {
        return Err(MeritError::InvalidInput("grid needs a 2-D box and resolution >= 2".into()));
    }
    let fx = prob.eval(x);
    let coord = |axis: usize, i: usize| {
        let (lo, hi) = (bounds.lower[axis], bounds.upper[axis]);
        lo + (hi - lo) * i as f64 / (resolution - 1) as f64
    };
    let mut best = f64::NEG_INFINITY;
    for i in 0..resolution {
        for j in 0..resolution {
            let fz = prob.eval(&[coord(0, i), coord(1, j)]);
            let v = fx.iter().zip(&fz).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
            best = best.max(v);
        }
    }
    Ok(best)
}
