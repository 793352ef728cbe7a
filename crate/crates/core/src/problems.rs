//! Benchmark problem suite and the KKT-residual evaluator.
//!
//! A [`ProblemInstance`] bundles `m` smooth convex objectives on `ℝⁿ` with
//! the metadata the solvers and the harness need: an optional gradient
//! Lipschitz constant, an optional one-parameter description of (part of)
//! the Pareto set, and a box for sampling starting points.
//!
//! Problems are addressable by registry key, e.g. `quad2`, `lse2`,
//! `jos1:n=2`, `sd`, `toi4`, `ex1:n=20,p=10,delta=0.05,seed=7`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::linalg::{self, dot, norm, Matrix};
use crate::qp::{self, GradientMatrix, QpError};
use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("invalid problem configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown problem key `{0}`")]
    UnknownProblem(String),
    #[error("point has dimension {got}, problem expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A smooth scalar objective with an analytic gradient.
pub trait Objective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }
}

/// `½(x − c)ᵀH(x − c) + offset` with symmetric `H`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub hessian: Matrix,
    pub center: Vec<f64>,
    pub offset: f64,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = linalg::sub(x, &self.center);
        0.5 * dot(&d, &self.hessian.mul_vec(&d)) + self.offset
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let d = linalg::sub(x, &self.center);
        out.copy_from_slice(&self.hessian.mul_vec(&d));
    }
}

/// `δ/2‖x‖² + ln Σ_j exp(a_jᵀx − b_j)`, evaluated with max-subtraction.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    /// Rows are the `a_j`.
    pub a: Matrix,
    pub b: Vec<f64>,
    pub delta: f64,
}

impl LogSumExp {
    fn shifted_exponents(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let z: Vec<f64> = self
            .a
            .mul_vec(x)
            .iter()
            .zip(&self.b)
            .map(|(ax, b)| ax - b)
            .collect();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (z, max)
    }
}

impl Objective for LogSumExp {
    fn dim(&self) -> usize {
        self.a.cols
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (z, max) = self.shifted_exponents(x);
        let sum: f64 = z.iter().map(|zj| (zj - max).exp()).sum();
        max + sum.ln() + 0.5 * self.delta * linalg::norm_sq(x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let (z, max) = self.shifted_exponents(x);
        let weights: Vec<f64> = z.iter().map(|zj| (zj - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let softmax: Vec<f64> = weights.iter().map(|w| w / total).collect();
        out.copy_from_slice(&self.a.tr_mul_vec(&softmax));
        linalg::axpy(self.delta, x, out);
    }
}

/// `δ/2‖x‖² + ½‖Ax − b‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub delta: f64,
}

impl Objective for LeastSquares {
    fn dim(&self) -> usize {
        self.a.cols
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = linalg::sub(&self.a.mul_vec(x), &self.b);
        0.5 * self.delta * linalg::norm_sq(x) + 0.5 * linalg::norm_sq(&r)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let r = linalg::sub(&self.a.mul_vec(x), &self.b);
        out.copy_from_slice(&self.a.tr_mul_vec(&r));
        linalg::axpy(self.delta, x, out);
    }
}

/// `wᵀx`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weights: Vec<f64>,
}

impl Objective for Linear {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x)
    }

    fn gradient_into(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.weights);
    }
}

/// `Σ w_i / x_i` on the positive orthant; `+∞` outside it.
#[derive(Debug, Clone)]
pub struct Reciprocal {
    pub weights: Vec<f64>,
}

impl Objective for Reciprocal {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        if x.iter().any(|v| *v <= 0.0) {
            return f64::INFINITY;
        }
        self.weights.iter().zip(x).map(|(w, v)| w / v).sum()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, w), v) in out.iter_mut().zip(&self.weights).zip(x) {
            *o = -w / (v * v);
        }
    }
}

/// `inner(x) + constant`.
#[derive(Debug, Clone)]
pub struct Shifted {
    pub inner: Arc<dyn Objective>,
    pub constant: f64,
}

impl Objective for Shifted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x) + self.constant
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.gradient_into(x, out)
    }
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRegion {
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Self {
            lower: vec![lo; n],
            upper: vec![hi; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng::uniform(rng, *lo, *hi))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

/// One-parameter description `λ ∈ [0, 1] ↦ x` of Pareto points.
#[derive(Clone)]
pub struct ParetoSegment {
    point_of: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
}

impl ParetoSegment {
    pub fn new(f: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            point_of: Arc::new(f),
        }
    }

    pub fn point(&self, lambda: f64) -> Vec<f64> {
        (self.point_of)(lambda)
    }

    /// `count` points at evenly spaced `λ`, endpoints included.
    pub fn sample(&self, count: usize) -> Vec<Vec<f64>> {
        let count = count.max(2);
        (0..count)
            .map(|k| self.point(k as f64 / (count - 1) as f64))
            .collect()
    }
}

impl fmt::Debug for ParetoSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ParetoSegment")
    }
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    name: String,
    objectives: Vec<Arc<dyn Objective>>,
    lipschitz: Option<f64>,
    pareto: Option<ParetoSegment>,
    init_box: BoxRegion,
    level_bounded: bool,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        objectives: Vec<Arc<dyn Objective>>,
        init_box: BoxRegion,
    ) -> Result<Self, ProblemError> {
        let Some(first) = objectives.first() else {
            return Err(ProblemError::InvalidConfig("at least one objective required".into()));
        };
        let n = first.dim();
        if n == 0 || objectives.iter().any(|o| o.dim() != n) {
            return Err(ProblemError::InvalidConfig(
                "objectives must share a positive dimension".into(),
            ));
        }
        if init_box.dim() != n || init_box.upper.len() != n {
            return Err(ProblemError::InvalidConfig("init box dimension mismatch".into()));
        }
        Ok(Self {
            name: name.into(),
            objectives,
            lipschitz: None,
            pareto: None,
            init_box,
            level_bounded: true,
        })
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_pareto(mut self, segment: ParetoSegment) -> Self {
        self.pareto = Some(segment);
        self
    }

    pub fn with_level_bounded(mut self, bounded: bool) -> Self {
        self.level_bounded = bounded;
        self
    }

    pub fn with_init_box(mut self, init_box: BoxRegion) -> Self {
        assert_eq!(init_box.dim(), self.n());
        self.init_box = init_box;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.objectives[0].dim()
    }

    pub fn m(&self) -> usize {
        self.objectives.len()
    }

    pub fn objectives(&self) -> &[Arc<dyn Objective>] {
        &self.objectives
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn pareto(&self) -> Option<&ParetoSegment> {
        self.pareto.as_ref()
    }

    pub fn init_box(&self) -> &BoxRegion {
        &self.init_box
    }

    /// Whether the merit function's inner problem has bounded level sets.
    pub fn level_bounded(&self) -> bool {
        self.level_bounded
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.objectives.iter().map(|o| o.value(x)).collect()
    }

    pub fn grad(&self, x: &[f64]) -> GradientMatrix {
        let mut g = GradientMatrix::zeros(self.n(), self.m());
        for (i, o) in self.objectives.iter().enumerate() {
            o.gradient_into(x, g.column_mut(i));
        }
        g
    }

    pub fn check_point(&self, x: &[f64]) -> Result<(), ProblemError> {
        if x.len() != self.n() {
            return Err(ProblemError::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Same problem with a copy of objective `i` appended.
    pub fn with_duplicate_objective(&self, i: usize) -> Self {
        let mut p = self.clone();
        p.objectives.push(self.objectives[i].clone());
        p.name = format!("{}+dup{}", self.name, i);
        p
    }

    /// Same problem with `c_i` added to each objective.
    pub fn with_offsets(&self, constants: &[f64]) -> Self {
        assert_eq!(constants.len(), self.m());
        let mut p = self.clone();
        p.objectives = self
            .objectives
            .iter()
            .zip(constants)
            .map(|(o, c)| {
                Arc::new(Shifted {
                    inner: o.clone(),
                    constant: *c,
                }) as Arc<dyn Objective>
            })
            .collect();
        p.name = format!("{}+shift", self.name);
        p
    }
}

/// `‖proj_{C(x)}(0)‖`, the norm of the minimum-norm element of the gradient
/// hull. Zero exactly at Pareto-critical points.
pub fn kkt_residual(prob: &ProblemInstance, x: &[f64]) -> Result<f64, QpError> {
    let hull = qp::min_norm_in_hull(&prob.grad(x), qp::DEFAULT_TOL)?;
    Ok(norm(&hull.point))
}

/// Largest relative discrepancy `‖g_fd − g‖ / max(1, ‖g‖)` over all
/// objectives, with `g_fd` from central differences of step `h`.
pub fn gradient_check(prob: &ProblemInstance, x: &[f64], h: f64) -> f64 {
    let n = prob.n();
    let mut worst = 0.0_f64;
    let mut probe = x.to_vec();
    for obj in prob.objectives() {
        let g = obj.gradient(x);
        let mut err_sq = 0.0;
        for k in 0..n {
            probe[k] = x[k] + h;
            let up = obj.value(&probe);
            probe[k] = x[k] - h;
            let down = obj.value(&probe);
            probe[k] = x[k];
            let fd = (up - down) / (2.0 * h);
            err_sq += (fd - g[k]) * (fd - g[k]);
        }
        worst = worst.max(err_sq.sqrt() / norm(&g).max(1.0));
    }
    worst
}

// --- the suite -------------------------------------------------------------

/// `f₁ = (x₁−1)² + ½x₂²`, `f₂ = ½x₁² + (x₂−1)²`.
pub fn quadratic_pair() -> ProblemInstance {
    let f1 = Quadratic {
        hessian: Matrix::diag(&[2.0, 1.0]),
        center: vec![1.0, 0.0],
        offset: 0.0,
    };
    let f2 = Quadratic {
        hessian: Matrix::diag(&[1.0, 2.0]),
        center: vec![0.0, 1.0],
        offset: 0.0,
    };
    ProblemInstance::new("quad2", vec![Arc::new(f1), Arc::new(f2)], BoxRegion::cube(2, -2.0, 2.0))
        .expect("static problem")
        .with_lipschitz(2.0)
        .with_pareto(ParetoSegment::new(|l| {
            vec![2.0 * l / (1.0 + l), 2.0 * (1.0 - l) / (2.0 - l)]
        }))
}

/// Pair of log-sum-exp objectives sharing the directions `a_j` with offsets
/// `∓b_j`.
pub fn logsumexp_pair() -> ProblemInstance {
    let a = Matrix::from_rows(&[
        vec![10.0, 10.0],
        vec![10.0, -10.0],
        vec![-10.0, -10.0],
        vec![-10.0, 10.0],
    ]);
    let b = vec![0.0, -20.0, 0.0, 20.0];
    let lipschitz = a.spectral_norm_sq(100);
    let f1 = LogSumExp {
        a: a.clone(),
        b: b.clone(),
        delta: 0.0,
    };
    let f2 = LogSumExp {
        a,
        b: b.iter().map(|v| -v).collect(),
        delta: 0.0,
    };
    ProblemInstance::new("lse2", vec![Arc::new(f1), Arc::new(f2)], BoxRegion::cube(2, -3.0, 3.0))
        .expect("static problem")
        .with_lipschitz(lipschitz)
        .with_pareto(ParetoSegment::new(|l| vec![-1.0 + 2.0 * l, 1.0 - 2.0 * l]))
}

/// JOS1 (Jin, Olhofer and Sendhoff): `f₁ = (1/n)Σx_i²`,
/// `f₂ = (1/n)Σ(x_i − 2)²`. Pareto set is the segment from `0` to `2·1`.
pub fn jos1(n: usize) -> Result<ProblemInstance, ProblemError> {
    if n < 2 {
        return Err(ProblemError::InvalidConfig(format!("jos1 needs n >= 2, got {n}")));
    }
    let h = Matrix::diag(&vec![2.0 / n as f64; n]);
    let f1 = Quadratic {
        hessian: h.clone(),
        center: vec![0.0; n],
        offset: 0.0,
    };
    let f2 = Quadratic {
        hessian: h,
        center: vec![2.0; n],
        offset: 0.0,
    };
    Ok(ProblemInstance::new(
        format!("jos1:n={n}"),
        vec![Arc::new(f1), Arc::new(f2)],
        BoxRegion::cube(n, -2.0, 4.0),
    )?
    .with_lipschitz(2.0 / n as f64)
    .with_pareto(ParetoSegment::new(move |l| vec![2.0 * l; n])))
}

/// SD (Stadler and Dauer four-bar truss, scaled form):
/// `f₁ = 2x₁ + √2x₂ + √2x₃ + x₄`, `f₂ = 2/x₁ + 2√2/x₂ + 2√2/x₃ + 2/x₄`,
/// on the positive orthant. Starting points are drawn from the classical
/// design box `[1,3]×[√2,3]×[√2,3]×[1,3]`. Pareto-critical points are
/// `c·(1, √2, √2, √2)`, `c > 0`; the segment covers `c ∈ [1, 3/√2]`.
/// The Lipschitz constant `4` holds for `∇f₂` on the design box.
pub fn sd() -> ProblemInstance {
    let r2 = std::f64::consts::SQRT_2;
    let f1 = Linear {
        weights: vec![2.0, r2, r2, 1.0],
    };
    let f2 = Reciprocal {
        weights: vec![2.0, 2.0 * r2, 2.0 * r2, 2.0],
    };
    let c_max = 3.0 / r2;
    ProblemInstance::new(
        "sd",
        vec![Arc::new(f1), Arc::new(f2)],
        BoxRegion {
            lower: vec![1.0, r2, r2, 1.0],
            upper: vec![3.0; 4],
        },
    )
    .expect("static problem")
    .with_lipschitz(4.0)
    .with_pareto(ParetoSegment::new(move |l| {
        let c = 1.0 + l * (c_max - 1.0);
        vec![c, c * r2, c * r2, c * r2]
    }))
}

/// TOI4 (Toint): `f₁ = x₁² + x₂² + 1`, `f₂ = ½((x₁−x₂)² + (x₃−x₄)²) + 1`.
/// Start box `[−2, 5]⁴`. Pareto points are `(0, 0, c, c)`.
pub fn toi4() -> ProblemInstance {
    let f1 = Quadratic {
        hessian: Matrix::diag(&[2.0, 2.0, 0.0, 0.0]),
        center: vec![0.0; 4],
        offset: 1.0,
    };
    let f2 = Quadratic {
        hessian: Matrix::from_rows(&[
            vec![1.0, -1.0, 0.0, 0.0],
            vec![-1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, -1.0],
            vec![0.0, 0.0, -1.0, 1.0],
        ]),
        center: vec![0.0; 4],
        offset: 1.0,
    };
    ProblemInstance::new("toi4", vec![Arc::new(f1), Arc::new(f2)], BoxRegion::cube(4, -2.0, 5.0))
        .expect("static problem")
        .with_lipschitz(2.0)
        .with_pareto(ParetoSegment::new(|l| {
            let c = -2.0 + 7.0 * l;
            vec![0.0, 0.0, c, c]
        }))
}

fn check_seeded(n: usize, p: usize, delta: f64) -> Result<(), ProblemError> {
    if n == 0 || p == 0 {
        return Err(ProblemError::InvalidConfig(format!("n and p must be positive (n={n}, p={p})")));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(ProblemError::InvalidConfig(format!("delta must be >= 0, got {delta}")));
    }
    Ok(())
}

fn uniform_matrix(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64, stream: u64) -> Matrix {
    let mut r = rng::stream(seed, stream);
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data.iter_mut() {
        *v = rng::uniform(&mut r, lo, hi);
    }
    m
}

fn uniform_vector(len: usize, lo: f64, hi: f64, seed: u64, stream: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, stream);
    (0..len).map(|_| rng::uniform(&mut r, lo, hi)).collect()
}

/// Three regularized log-sum-exp objectives
/// `f_j = δ/2‖x‖² + ln Σ_i exp(⟨a_i^j, x⟩ − b_i^j)` with all data uniform on
/// `[−1, 1]`. Objective `j` draws its `a` rows from stream `2j` and its `b`
/// from stream `2j + 1`.
pub fn regularized_logsumexp_triple(
    n: usize,
    p: usize,
    delta: f64,
    seed: u64,
) -> Result<ProblemInstance, ProblemError> {
    check_seeded(n, p, delta)?;
    let mut objectives: Vec<Arc<dyn Objective>> = Vec::with_capacity(3);
    let mut lipschitz = 0.0_f64;
    for j in 0..3u64 {
        let a = uniform_matrix(p, n, -1.0, 1.0, seed, 2 * j);
        let b = uniform_vector(p, -1.0, 1.0, seed, 2 * j + 1);
        lipschitz = lipschitz.max(a.spectral_norm_sq(100));
        objectives.push(Arc::new(LogSumExp { a, b, delta }));
    }
    Ok(ProblemInstance::new(
        format!("ex1:n={n},p={p},delta={delta},seed={seed}"),
        objectives,
        BoxRegion::cube(n, -2.0, 2.0),
    )?
    .with_lipschitz(delta + lipschitz)
    .with_level_bounded(delta > 0.0))
}

/// Three regularized least-squares objectives
/// `f_j = δ/2‖x‖² + ½‖A^j x − b^j‖²` with `A^j ∈ ℝ^{p×n}`, `b^j ∈ ℝ^p`
/// uniform on `[0, 1]`. Streams as in [`regularized_logsumexp_triple`].
pub fn regularized_least_squares_triple(
    n: usize,
    p: usize,
    delta: f64,
    seed: u64,
) -> Result<ProblemInstance, ProblemError> {
    check_seeded(n, p, delta)?;
    let mut objectives: Vec<Arc<dyn Objective>> = Vec::with_capacity(3);
    let mut lipschitz = 0.0_f64;
    for j in 0..3u64 {
        let a = uniform_matrix(p, n, 0.0, 1.0, seed, 2 * j);
        let b = uniform_vector(p, 0.0, 1.0, seed, 2 * j + 1);
        lipschitz = lipschitz.max(a.spectral_norm_sq(100));
        objectives.push(Arc::new(LeastSquares { a, b, delta }));
    }
    Ok(ProblemInstance::new(
        format!("ex2:n={n},p={p},delta={delta},seed={seed}"),
        objectives,
        BoxRegion::cube(n, -2.0, 2.0),
    )?
    .with_lipschitz(delta + lipschitz)
    .with_level_bounded(delta > 0.0 || p >= n))
}

// --- registry --------------------------------------------------------------

/// Registered base names with a short description.
pub const REGISTRY: &[(&str, &str)] = &[
    ("quad2", "quadratic pair, n=2, m=2"),
    ("lse2", "log-sum-exp pair, n=2, m=2"),
    ("jos1", "JOS1, params: n (default 2)"),
    ("sd", "Stadler-Dauer truss, n=4, m=2"),
    ("toi4", "Toint TOI4, n=4, m=2"),
    ("ex1", "regularized log-sum-exp triple, params: n, p, delta, seed"),
    ("ex2", "regularized least-squares triple, params: n, p, delta, seed"),
];

fn parse_params(params: &str) -> Result<BTreeMap<String, String>, ProblemError> {
    let mut out = BTreeMap::new();
    for part in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| ProblemError::InvalidConfig(format!("expected key=value, got `{part}`")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn take<T: std::str::FromStr>(
    params: &mut BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, ProblemError> {
    match params.remove(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| ProblemError::InvalidConfig(format!("cannot parse {key}=`{v}`"))),
    }
}

/// Builds a problem from its registry key.
pub fn from_key(key: &str) -> Result<ProblemInstance, ProblemError> {
    let (base, rest) = key.split_once(':').unwrap_or((key, ""));
    let mut params = parse_params(rest)?;
    let prob = match base.trim() {
        "quad2" => quadratic_pair(),
        "lse2" => logsumexp_pair(),
        "sd" => sd(),
        "toi4" => toi4(),
        "jos1" => {
            let n = take(&mut params, "n", 2usize)?;
            jos1(n)?
        }
        "ex1" => {
            let n = take(&mut params, "n", 200usize)?;
            let p = take(&mut params, "p", 100usize)?;
            let delta = take(&mut params, "delta", 0.05f64)?;
            let seed = take(&mut params, "seed", 0u64)?;
            regularized_logsumexp_triple(n, p, delta, seed)?
        }
        "ex2" => {
            let n = take(&mut params, "n", 100usize)?;
            let p = take(&mut params, "p", 100usize)?;
            let delta = take(&mut params, "delta", 0.05f64)?;
            let seed = take(&mut params, "seed", 0u64)?;
            regularized_least_squares_triple(n, p, delta, seed)?
        }
        other => return Err(ProblemError::UnknownProblem(other.to_string())),
    };
    if let Some(k) = params.keys().next() {
        return Err(ProblemError::InvalidConfig(format!(
            "unknown parameter `{k}` for problem `{base}`"
        )));
    }
    Ok(prob)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_pair_values_and_gradients() {
        let p = quadratic_pair();
        assert_eq!(p.eval(&[0.0, 1.0]), vec![1.5, 0.0]);
        let g = p.grad(&[0.0, 0.0]);
        assert_eq!(g.column(0), &[-2.0, 0.0]);
        assert_eq!(g.column(1), &[0.0, -2.0]);
        let seg = p.pareto().unwrap();
        assert_eq!(seg.point(0.0), vec![0.0, 1.0]);
        assert_eq!(seg.point(1.0), vec![1.0, 0.0]);
    }

    #[test]
    fn quadratic_pair_segment_is_critical() {
        let p = quadratic_pair();
        for l in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let x = p.pareto().unwrap().point(l);
            assert!(kkt_residual(&p, &x).unwrap() <= 1e-8, "λ={l}");
        }
    }

    #[test]
    fn logsumexp_pair_symmetry() {
        let p = logsumexp_pair();
        assert_eq!(p.pareto().unwrap().point(0.5), vec![0.0, 0.0]);
        let g = p.grad(&[0.0, 0.0]);
        for k in 0..2 {
            assert!((g.column(0)[k] + g.column(1)[k]).abs() < 1e-12);
        }
        assert!(kkt_residual(&p, &[0.0, 0.0]).unwrap() <= 1e-10);
        for x in [[0.3, -1.2], [2.0, 0.5], [-0.7, -0.1]] {
            let neg = [-x[0], -x[1]];
            let a = p.objectives()[0].value(&neg);
            let b = p.objectives()[1].value(&x);
            assert!((a - b).abs() < 1e-12);
        }
        assert!(gradient_check(&p, &[0.0, 3.0], 1e-6) <= 1e-5);
    }

    #[test]
    fn logsumexp_large_arguments_are_stable() {
        let p = logsumexp_pair();
        let f = p.eval(&[80.0, 80.0]);
        assert!(f.iter().all(|v| v.is_finite()));
        assert!(p.grad(&[80.0, 80.0]).is_finite());
    }

    #[test]
    fn single_objective_residual_is_gradient_norm() {
        let f = Quadratic {
            hessian: Matrix::identity(2),
            center: vec![0.0; 2],
            offset: 0.0,
        };
        let p = ProblemInstance::new("half-norm", vec![Arc::new(f)], BoxRegion::cube(2, -1.0, 1.0))
            .unwrap();
        let r = kkt_residual(&p, &[3.0, 4.0]).unwrap();
        assert!((r - 5.0).abs() < 1e-15);
    }

    #[test]
    fn jos1_midpoint_is_critical() {
        let p = jos1(5).unwrap();
        let x = vec![1.0; 5];
        let hull = crate::qp::min_norm_in_hull(&p.grad(&x), 1e-12).unwrap();
        assert!(norm(&hull.point) < 1e-14);
        assert!((hull.weights.as_slice()[0] - 0.5).abs() < 1e-12);
        assert_eq!(p.eval(&vec![0.0; 5])[0], 0.0);
        assert!(jos1(1).is_err());
    }

    #[test]
    fn seeded_generators_are_deterministic() {
        let a = regularized_logsumexp_triple(10, 5, 0.05, 3).unwrap();
        let b = regularized_logsumexp_triple(10, 5, 0.05, 3).unwrap();
        let c = regularized_logsumexp_triple(10, 5, 0.05, 4).unwrap();
        let x = vec![0.3; 10];
        assert_eq!(a.eval(&x), b.eval(&x));
        assert_ne!(a.eval(&x), c.eval(&x));
        assert_eq!(a.lipschitz(), b.lipschitz());
    }

    #[test]
    fn seeded_generators_validate_inputs() {
        assert!(regularized_logsumexp_triple(0, 5, 0.05, 0).is_err());
        assert!(regularized_least_squares_triple(5, 0, 0.05, 0).is_err());
        assert!(regularized_least_squares_triple(5, 5, -1.0, 0).is_err());
    }

    #[test]
    fn full_sized_presets_build() {
        let e1 = from_key("ex1").unwrap();
        assert_eq!((e1.n(), e1.m()), (200, 3));
        assert!(e1.name().contains("p=100") && e1.name().contains("delta=0.05"));
        let e2 = from_key("ex2").unwrap();
        assert_eq!((e2.n(), e2.m()), (100, 3));
    }

    #[test]
    fn least_squares_gradient_identity() {
        let p = from_key("ex2:n=6,p=4,seed=11").unwrap();
        let mut r = rng::stream(99, 0);
        for _ in 0..10 {
            let x = p.init_box().sample(&mut r);
            assert!(gradient_check(&p, &x, 1e-6) <= 1e-5);
        }
    }

    #[test]
    fn regularized_logsumexp_is_strongly_convex() {
        let delta = 0.05;
        let p = regularized_logsumexp_triple(8, 6, delta, 5).unwrap();
        let mut r = rng::stream(5, 77);
        for _ in 0..50 {
            let x = p.init_box().sample(&mut r);
            let y = p.init_box().sample(&mut r);
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            for obj in p.objectives() {
                let h = |z: &[f64]| obj.value(z) - 0.5 * delta * linalg::norm_sq(z);
                assert!(h(&mid) <= 0.5 * (h(&x) + h(&y)) + 1e-12);
            }
        }
    }

    #[test]
    fn registry_parses_keys() {
        assert_eq!(from_key("jos1:n=4").unwrap().n(), 4);
        assert_eq!(from_key("quad2").unwrap().name(), "quad2");
        assert!(matches!(from_key("nope"), Err(ProblemError::UnknownProblem(_))));
        assert!(matches!(from_key("jos1:q=3"), Err(ProblemError::InvalidConfig(_))));
        assert!(matches!(from_key("ex1:n=abc"), Err(ProblemError::InvalidConfig(_))));
        for (name, _) in REGISTRY {
            let key = match *name {
                "ex1" | "ex2" => format!("{name}:n=5,p=3"),
                _ => name.to_string(),
            };
            assert!(from_key(&key).is_ok(), "{key}");
        }
    }

    #[test]
    fn identity_least_squares_has_origin_as_unique_pareto_point() {
        let objectives: Vec<Arc<dyn Objective>> = (0..3)
            .map(|_| {
                Arc::new(LeastSquares {
                    a: Matrix::identity(3),
                    b: vec![0.0; 3],
                    delta: 0.0,
                }) as Arc<dyn Objective>
            })
            .collect();
        let p = ProblemInstance::new("id", objectives, BoxRegion::cube(3, -2.0, 2.0)).unwrap();
        assert_eq!(kkt_residual(&p, &[0.0; 3]).unwrap(), 0.0);
        assert!(kkt_residual(&p, &[0.1, 0.0, 0.0]).unwrap() > 0.09);
    }

    #[test]
    fn duplicated_objective_leaves_residual_unchanged() {
        let p = quadratic_pair();
        let d = p.with_duplicate_objective(0);
        for x in [[0.3, -0.4], [1.5, 1.5], [-1.0, 0.2]] {
            let a = kkt_residual(&p, &x).unwrap();
            let b = kkt_residual(&d, &x).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }
}
