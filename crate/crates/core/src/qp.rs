//! Simplex-constrained quadratic subproblems.
//!
//! Two problems are solved here, both over the unit simplex `Δᵐ`:
//!
//! * the minimum-norm element of the convex hull of the gradient columns,
//!   `min ½‖Gθ‖²`, whose value gives the multiobjective steepest-descent
//!   direction and the KKT residual;
//! * the projection of a vector `v` onto the scaled hull `s·conv(G)`,
//!   `min ½‖sGθ − v‖²`, used by the inertial methods.
//!
//! Both reduce to `min ½θᵀQθ + cᵀθ` on the simplex, which is solved in the
//! `m`-dimensional weight space. One- and two-column instances have closed
//! forms. Larger instances use accelerated projected gradient with
//! function-value restarts, followed by an equality-constrained polish on the
//! detected support. Termination is certified by the Frank–Wolfe gap
//! `max_i ⟨∇q(θ), θ − e_i⟩`.

use crate::linalg::{all_finite, axpy, dot, norm};

/// Default Frank–Wolfe gap tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_ITER_CEILING: usize = 200_000;

#[derive(Debug, thiserror::Error)]
pub enum QpError {
    #[error("non-finite input to simplex QP")]
    NonFinite,
    #[error("invalid QP input: {0}")]
    InvalidInput(String),
    /// The iteration cap was hit. The best iterate is returned with its gap.
    #[error("simplex QP did not reach tolerance (gap {:.3e})", best.gap)]
    NoConvergence { best: Box<HullSolution> },
}

/// `m` gradient columns in `ℝⁿ`, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl GradientMatrix {
    pub fn zeros(n: usize, m: usize) -> Self {
        assert!(n >= 1 && m >= 1, "gradient matrix needs n >= 1 and m >= 1");
        Self {
            n,
            m,
            data: vec![0.0; n * m],
        }
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self, QpError> {
        let m = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if m == 0 || n == 0 {
            return Err(QpError::InvalidInput("empty gradient matrix".into()));
        }
        if columns.iter().any(|c| c.len() != n) {
            return Err(QpError::InvalidInput("ragged gradient columns".into()));
        }
        Ok(Self {
            n,
            m,
            data: columns.into_iter().flatten().collect(),
        })
    }

    /// Dimension of the decision space.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of columns (objectives).
    pub fn count(&self) -> usize {
        self.m
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    /// `scale · Σ θ_i g_i`, accumulated in column order.
    pub fn combine(&self, weights: &[f64], scale: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (w, col) in weights.iter().zip(self.columns()) {
            if *w != 0.0 {
                axpy(scale * w, col, &mut out);
            }
        }
        out
    }

    /// Row-major `m × m` Gram matrix `GᵀG`.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.m;
        let mut q = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = dot(self.column(i), self.column(j));
                q[i * m + j] = v;
                q[j * m + i] = v;
            }
        }
        q
    }

    /// Appends a copy of column `i`.
    pub fn with_duplicate(&self, i: usize) -> Self {
        let mut data = self.data.clone();
        data.extend_from_slice(self.column(i));
        Self {
            n: self.n,
            m: self.m + 1,
            data,
        }
    }
}

/// A point of the unit simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    /// Vertex `e_i` of `Δᵐ`.
    pub fn vertex(m: usize, i: usize) -> Self {
        let mut w = vec![0.0; m];
        w[i] = 1.0;
        Self(w)
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Nonnegative entries summing to one within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.0.iter().all(|v| *v >= 0.0) && (self.0.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullSolution {
    pub weights: SimplexWeights,
    /// The hull element `scale · Gθ`.
    pub point: Vec<f64>,
    /// Frank–Wolfe gap at the returned weights.
    pub gap: f64,
    pub iterations: usize,
}

/// Solution of the generic weight-space problem.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub weights: SimplexWeights,
    pub objective: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Euclidean projection onto `Δᵐ` by the sort-and-threshold rule.
pub fn simplex_euclidean_project(w: &[f64]) -> Result<SimplexWeights, QpError> {
    if w.is_empty() {
        return Err(QpError::InvalidInput("empty weight vector".into()));
    }
    if !all_finite(w) {
        return Err(QpError::NonFinite);
    }
    Ok(SimplexWeights(project_unchecked(w)))
}

fn project_unchecked(w: &[f64]) -> Vec<f64> {
    let mut sorted = w.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    w.iter().map(|v| (v - tau).max(0.0)).collect()
}

fn objective(q: &[f64], c: &[f64], theta: &[f64]) -> f64 {
    let m = c.len();
    let mut val = 0.0;
    for i in 0..m {
        if theta[i] == 0.0 {
            continue;
        }
        val += theta[i] * (0.5 * dot(&q[i * m..(i + 1) * m], theta) + c[i]);
    }
    val
}

fn gradient(q: &[f64], c: &[f64], theta: &[f64]) -> Vec<f64> {
    let m = c.len();
    (0..m)
        .map(|i| dot(&q[i * m..(i + 1) * m], theta) + c[i])
        .collect()
}

fn fw_gap(grad: &[f64], theta: &[f64]) -> f64 {
    let min = grad.iter().copied().fold(f64::INFINITY, f64::min);
    (dot(grad, theta) - min).max(0.0)
}

/// Minimizes `½θᵀQθ + cᵀθ` over `Δᵐ`, with `Q` row-major `m × m` and
/// positive semidefinite.
///
/// On hitting the iteration cap the best iterate is returned with
/// `converged == false`; callers decide whether that is an error.
pub fn solve_simplex_qp(q: &[f64], c: &[f64], tol: f64) -> Result<QpSolution, QpError> {
    let m = c.len();
    if m == 0 || q.len() != m * m {
        return Err(QpError::InvalidInput(format!(
            "gram matrix of length {} does not match {m} weights",
            q.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(QpError::InvalidInput("tolerance must be positive".into()));
    }
    if !all_finite(q) || !all_finite(c) {
        return Err(QpError::NonFinite);
    }
    match m {
        1 => Ok(finish(q, c, vec![1.0], 0, true)),
        2 => Ok(finish(q, c, two_weight_closed_form(q, c), 0, true)),
        _ => Ok(accelerated_projected_gradient(q, c, tol)),
    }
}

fn finish(q: &[f64], c: &[f64], theta: Vec<f64>, iterations: usize, converged: bool) -> QpSolution {
    let grad = gradient(q, c, &theta);
    QpSolution {
        objective: objective(q, c, &theta),
        gap: fw_gap(&grad, &theta),
        weights: SimplexWeights(theta),
        iterations,
        converged,
    }
}

/// Exact minimizer along the edge `θ = (t, 1 − t)`.
fn two_weight_closed_form(q: &[f64], c: &[f64]) -> Vec<f64> {
    let curvature = q[0] - 2.0 * q[1] + q[3];
    let slope_at_zero = q[1] - q[3] + c[0] - c[1];
    let t = if curvature > 0.0 {
        (-slope_at_zero / curvature).clamp(0.0, 1.0)
    } else if slope_at_zero < 0.0 {
        1.0
    } else if slope_at_zero > 0.0 {
        0.0
    } else {
        0.5
    };
    vec![t, 1.0 - t]
}

fn iteration_cap(q: &[f64], m: usize) -> usize {
    let diag: Vec<f64> = (0..m).map(|i| q[i * m + i]).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa = if max == 0.0 {
        1.0
    } else if min <= 0.0 {
        1e12
    } else {
        (max / min).min(1e12)
    };
    let cap = 10.0 * m as f64 * kappa.sqrt() + 1000.0;
    (cap as usize).min(MAX_ITER_CEILING)
}

fn accelerated_projected_gradient(q: &[f64], c: &[f64], tol: f64) -> QpSolution {
    let m = c.len();
    // Gershgorin bound on λ_max(Q); trace is also an upper bound for PSD Q.
    let gersh = (0..m)
        .map(|i| q[i * m..(i + 1) * m].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let trace: f64 = (0..m).map(|i| q[i * m + i]).sum();
    let lipschitz = gersh.min(trace);
    if !(lipschitz > 0.0) {
        // Q = 0: the objective is linear and a vertex is optimal.
        let best = c
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        let mut theta = vec![0.0; m];
        theta[best] = 1.0;
        return finish(q, c, theta, 0, true);
    }
    let step = 1.0 / lipschitz;
    let cap = iteration_cap(q, m);

    let mut theta = vec![1.0 / m as f64; m];
    let mut f_theta = objective(q, c, &theta);
    let mut y = theta.clone();
    let mut momentum = 1.0_f64;

    let mut best = theta.clone();
    let mut best_f = f_theta;
    let mut best_gap = fw_gap(&gradient(q, c, &theta), &theta);
    if best_gap <= tol {
        return finish(q, c, best, 0, true);
    }

    for it in 1..=cap {
        let gy = gradient(q, c, &y);
        let trial: Vec<f64> = y.iter().zip(&gy).map(|(yi, gi)| yi - step * gi).collect();
        let next = project_unchecked(&trial);
        let f_next = objective(q, c, &next);

        if f_next > f_theta {
            // Function-value restart: drop momentum and retry from θ.
            momentum = 1.0;
            y.clone_from(&theta);
            continue;
        }
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        y = next
            .iter()
            .zip(&theta)
            .map(|(n, o)| n + beta * (n - o))
            .collect();
        momentum = next_momentum;
        theta = next;
        f_theta = f_next;

        let g = gradient(q, c, &theta);
        let gap = fw_gap(&g, &theta);
        if f_theta < best_f || (f_theta == best_f && gap < best_gap) {
            best.clone_from(&theta);
            best_f = f_theta;
            best_gap = gap;
        }
        if best_gap <= tol {
            return finish(q, c, best, it, true);
        }
        if it % 10 == 0 {
            if let Some(polished) = polish_on_support(q, c, &theta) {
                let pg = fw_gap(&gradient(q, c, &polished), &polished);
                if pg <= tol {
                    return finish(q, c, polished, it, true);
                }
            }
        }
    }
    if let Some(polished) = polish_on_support(q, c, &best) {
        let pg = fw_gap(&gradient(q, c, &polished), &polished);
        if pg < best_gap {
            best = polished;
            best_gap = pg;
        }
    }
    let converged = best_gap <= tol;
    finish(q, c, best, cap, converged)
}

/// Solves the equality-constrained problem exactly on the support of
/// `theta`. When the KKT system of a support is singular (affinely dependent
/// columns), its one-smaller subsets are tried instead. Returns the feasible
/// candidate with the smallest Frank–Wolfe gap.
fn polish_on_support(q: &[f64], c: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
    let m = c.len();
    let support: Vec<usize> = (0..m).filter(|&i| theta[i] > 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let mut queue = vec![support];
    let mut seen = std::collections::HashSet::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    while let Some(set) = queue.pop() {
        if set.is_empty() || !seen.insert(set.clone()) {
            continue;
        }
        match solve_on_face(q, c, &set) {
            FaceSolve::Singular => {
                for drop in 0..set.len() {
                    let mut child = set.clone();
                    child.remove(drop);
                    queue.push(child);
                }
            }
            FaceSolve::Infeasible => {}
            FaceSolve::Feasible(cand) => {
                let gap = fw_gap(&gradient(q, c, &cand), &cand);
                if best.as_ref().map_or(true, |(g, _)| gap < *g) {
                    best = Some((gap, cand));
                }
            }
        }
    }
    best.map(|(_, theta)| theta)
}

enum FaceSolve {
    Singular,
    Infeasible,
    Feasible(Vec<f64>),
}

fn solve_on_face(q: &[f64], c: &[f64], support: &[usize]) -> FaceSolve {
    let m = c.len();
    let k = support.len();
    // [Q_SS 1; 1ᵀ 0] [θ_S; μ] = [−c_S; 1]
    let dim = k + 1;
    let mut a = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for (r, &i) in support.iter().enumerate() {
        for (s, &j) in support.iter().enumerate() {
            a[r * dim + s] = q[i * m + j];
        }
        a[r * dim + k] = 1.0;
        a[k * dim + r] = 1.0;
        rhs[r] = -c[i];
    }
    rhs[k] = 1.0;
    let Some(sol) = solve_dense(&mut a, &mut rhs, dim) else {
        return FaceSolve::Singular;
    };
    if sol[..k].iter().any(|v| !v.is_finite() || *v < 0.0) {
        return FaceSolve::Infeasible;
    }
    let mut out = vec![0.0; m];
    for (r, &i) in support.iter().enumerate() {
        out[i] = sol[r];
    }
    FaceSolve::Feasible(out)
}

/// Gaussian elimination with partial pivoting. `a` is row-major `n × n`.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let singular = scale * 1e-13 * n as f64;
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))?;
        if a[pivot * n + col].abs() <= singular {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            b.swap(pivot, col);
        }
        for r in col + 1..n {
            let factor = a[r * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= factor * a[col * n + j];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for j in r + 1..n {
            acc -= a[r * n + j] * x[j];
        }
        x[r] = acc / a[r * n + r];
    }
    Some(x)
}

/// Minimum-norm element of `conv{g_1, …, g_m}`, i.e. the projection of the
/// origin onto the gradient hull.
pub fn min_norm_in_hull(g: &GradientMatrix, tol: f64) -> Result<HullSolution, QpError> {
    let zero = vec![0.0; g.dim()];
    project_onto_scaled_hull(g, 1.0, &zero, tol)
}

/// Projection of `v` onto `scale · conv{g_1, …, g_m}`.
///
/// Succeeds when the Frank–Wolfe gap is at most `tol · max(1, R²)` with
/// `R = ‖v‖ + scale · maxᵢ‖g_i‖`, so the tolerance is relative for large
/// instances and absolute for small ones.
pub fn project_onto_scaled_hull(
    g: &GradientMatrix,
    scale: f64,
    v: &[f64],
    tol: f64,
) -> Result<HullSolution, QpError> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(QpError::InvalidInput(format!("scale must be positive, got {scale}")));
    }
    if !(tol > 0.0) {
        return Err(QpError::InvalidInput("tolerance must be positive".into()));
    }
    if v.len() != g.dim() {
        return Err(QpError::InvalidInput(format!(
            "vector of length {} does not match dimension {}",
            v.len(),
            g.dim()
        )));
    }
    if !g.is_finite() || !all_finite(v) {
        return Err(QpError::NonFinite);
    }

    // Gap values scale with the squared size of the instance.
    let radius = norm(v) + scale * g.columns().map(norm).fold(0.0, f64::max);
    let tol = tol * radius.powi(2).max(1.0);
    let m = g.count();
    let (theta, iterations, exact) = match m {
        1 => (vec![1.0], 0, true),
        2 => (edge_projection(g, scale, v), 0, true),
        _ => {
            let mut q = g.gram();
            q.iter_mut().for_each(|e| *e *= scale * scale);
            let c: Vec<f64> = g.columns().map(|col| -scale * dot(col, v)).collect();
            let sol = accelerated_projected_gradient(&q, &c, tol);
            (sol.weights.into_inner(), sol.iterations, false)
        }
    };

    let point = g.combine(&theta, scale);
    let gap = hull_gap(g, scale, v, &point);
    let solution = HullSolution {
        weights: SimplexWeights(theta),
        point,
        gap,
        iterations,
    };
    if exact || gap <= tol {
        Ok(solution)
    } else {
        Err(QpError::NoConvergence {
            best: Box::new(solution),
        })
    }
}

/// Closed-form projection onto the segment `scale·[g₂, g₁]`.
fn edge_projection(g: &GradientMatrix, scale: f64, v: &[f64]) -> Vec<f64> {
    let (g1, g2) = (g.column(0), g.column(1));
    let mut diff_sq = 0.0;
    let mut num = 0.0;
    for i in 0..g.dim() {
        let d = scale * (g1[i] - g2[i]);
        diff_sq += d * d;
        num += d * (v[i] - scale * g2[i]);
    }
    let t = if diff_sq > 0.0 {
        (num / diff_sq).clamp(0.0, 1.0)
    } else {
        0.5
    };
    vec![t, 1.0 - t]
}

/// `max_i ⟨p − v, p − scale·g_i⟩`, nonnegative at any hull point.
fn hull_gap(g: &GradientMatrix, scale: f64, v: &[f64], p: &[f64]) -> f64 {
    let residual: Vec<f64> = p.iter().zip(v).map(|(a, b)| a - b).collect();
    let base = dot(&residual, p);
    g.columns()
        .map(|col| base - scale * dot(&residual, col))
        .fold(0.0, f64::max)
}
