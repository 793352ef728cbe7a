//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use paretoflow::flow::{self, FlowConfig, Scheme};
use paretoflow::harness::{self, ExperimentConfig};
use paretoflow::linalg::{self, Matrix};
use paretoflow::merit::{self, MeritConfig};
use paretoflow::problems::{self, BoxRegion, Objective, ProblemInstance, Quadratic};
use paretoflow::qp::{self, GradientMatrix};
use paretoflow::rng;
use paretoflow::solvers::{self, SolverConfig, Variant};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_matrix(r: &mut ChaCha8Rng, n: usize, m: usize) -> GradientMatrix {
    let cols = (0..m)
        .map(|_| (0..n).map(|_| rng::uniform(r, -2.0, 2.0)).collect())
        .collect();
    GradientMatrix::from_columns(cols).unwrap()
}

/// Minimum of `½‖s·Gθ − v‖²` over a simplex grid with spacing `1/steps`.
fn simplex_grid_minimum(g: &GradientMatrix, s: f64, v: &[f64], steps: usize) -> f64 {
    let m = g.count();
    let gram: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| linalg::dot(g.column(i), g.column(j))).collect())
        .collect();
    let gv: Vec<f64> = (0..m).map(|i| linalg::dot(g.column(i), v)).collect();
    let vv = linalg::dot(v, v);
    let value = |th: &[f64]| {
        let mut quad = 0.0;
        for i in 0..m {
            for j in 0..m {
                quad += th[i] * th[j] * gram[i][j];
            }
        }
        let lin: f64 = th.iter().zip(&gv).map(|(a, b)| a * b).sum();
        0.5 * (s * s * quad - 2.0 * s * lin + vv)
    };
    let h = 1.0 / steps as f64;
    let mut best = f64::INFINITY;
    match m {
        2 => {
            for i in 0..=steps {
                let t = i as f64 * h;
                best = best.min(value(&[t, 1.0 - t]));
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let (a, b) = (i as f64 * h, j as f64 * h);
                    best = best.min(value(&[a, b, (1.0 - a - b).max(0.0)]));
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

fn criterion_qp_oracle() -> Outcome {
    let mut r = rng::stream(2024, 1);
    let mut worst_dev = 0.0_f64;
    let mut worst_gap = 0.0_f64;
    let mut failures = 0;
    for case in 0..100 {
        let m = 2 + case % 2;
        let n = if (case / 2) % 2 == 0 { 2 } else { 10 };
        let g = random_matrix(&mut r, n, m);
        let (s, v) = if case % 4 < 2 {
            (1.0, vec![0.0; n])
        } else {
            let s = rng::uniform(&mut r, 0.1, 2.0);
            (s, (0..n).map(|_| rng::uniform(&mut r, -3.0, 3.0)).collect::<Vec<f64>>())
        };
        let sol = if s == 1.0 && v.iter().all(|x| *x == 0.0) {
            qp::min_norm_in_hull(&g, qp::DEFAULT_TOL)
        } else {
            qp::project_onto_scaled_hull(&g, s, &v, qp::DEFAULT_TOL)
        };
        let Ok(sol) = sol else {
            failures += 1;
            continue;
        };
        let value = 0.5 * linalg::norm_sq(&linalg::sub(&sol.point, &v));
        let oracle = simplex_grid_minimum(&g, s, &v, 1000);
        worst_dev = worst_dev.max((value - oracle).abs());
        worst_gap = worst_gap.max(sol.gap);
    }
    outcome(
        failures == 0 && worst_dev <= 1e-4 && worst_gap <= 1e-10,
        format!("failures {failures}, max |value - grid| {worst_dev:.2e}, max FW gap {worst_gap:.2e}"),
    )
}

fn criterion_gradients() -> Outcome {
    let keys = [
        "quad2",
        "lse2",
        "jos1",
        "jos1:n=10",
        "sd",
        "toi4",
        "ex1",
        "ex1:n=20,p=10",
        "ex2",
        "ex2:n=20,p=20",
    ];
    let mut worst = 0.0_f64;
    let mut worst_key = "";
    for key in keys {
        let prob = problems::from_key(key).unwrap();
        let mut r = rng::stream(77, 5);
        for _ in 0..20 {
            let x = prob.init_box().sample(&mut r);
            for obj in prob.objectives() {
                let g = obj.gradient(&x);
                let mut probe = x.clone();
                let mut err_sq = 0.0;
                for k in 0..x.len() {
                    let h = 1e-6 * (1.0 + x[k].abs());
                    probe[k] = x[k] + h;
                    let up = obj.value(&probe);
                    probe[k] = x[k] - h;
                    let down = obj.value(&probe);
                    probe[k] = x[k];
                    let fd = (up - down) / (2.0 * h);
                    err_sq += (fd - g[k]).powi(2);
                }
                let rel = err_sq.sqrt() / linalg::norm(&g).max(1.0);
                if rel > worst {
                    worst = rel;
                    worst_key = key;
                }
            }
        }
    }
    outcome(worst <= 1e-5, format!("max relative error {worst:.2e} ({worst_key}), {} problems", keys.len()))
}

fn criterion_sublevel() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut runs = 0;
    for key in ["quad2", "jos1", "lse2"] {
        let prob = problems::from_key(key).unwrap();
        let cfg = SolverConfig::new(Variant::MfiscConst)
            .with_epsilon(1e-6)
            .with_k_max(20_000);
        for x0 in harness::sample_starts(&prob, 20, 3) {
            let f0 = prob.eval(&x0);
            let trace = solvers::run(&prob, &cfg, &x0).unwrap();
            let rows = trace.records.iter().map(|r| &r.objectives).chain([&trace.final_objectives]);
            for row in rows {
                for (fi, f0i) in row.iter().zip(&f0) {
                    worst = worst.max(fi - f0i);
                }
            }
            runs += 1;
        }
    }
    outcome(
        worst <= 1e-9,
        format!("{runs} runs, max f_i(x_k) - f_i(x_0) = {worst:.2e}"),
    )
}

/// Scalar-loop MFISC (`alpha = Some`) or AccG on `½xᵀQx`.
fn scalar_reference(q: &[Vec<f64>], x0: &[f64], s: f64, alpha: Option<f64>, steps: usize) -> Vec<Vec<f64>> {
    let n = x0.len();
    let grad = |x: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| q[i][j] * x[j]).sum()).collect() };
    let (mut prev, mut cur) = (x0.to_vec(), x0.to_vec());
    let mut out = vec![cur.clone()];
    for k in 1..=steps {
        let kf = k as f64;
        let dx: Vec<f64> = (0..n).map(|i| cur[i] - prev[i]).collect();
        let mut y = cur.clone();
        if let Some(a) = alpha {
            let g = grad(&cur);
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dn = dx.iter().map(|v| v * v).sum::<f64>().sqrt();
            for i in 0..n {
                y[i] += (kf - 1.0) / (kf + a - 1.0) * dx[i];
                if dn > 0.0 {
                    y[i] -= (a - 3.0) / (kf + a - 1.0) * dn / gn * g[i];
                }
            }
        } else {
            for i in 0..n {
                y[i] += (kf - 1.0) / (kf + 2.0) * dx[i];
            }
        }
        let gy = grad(&y);
        let next: Vec<f64> = (0..n).map(|i| y[i] - s * gy[i]).collect();
        prev = std::mem::replace(&mut cur, next);
        out.push(cur.clone());
    }
    out
}

fn criterion_single_objective() -> Outcome {
    let n = 5;
    let mut r = rng::stream(5, 42);
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng::uniform(&mut r, -1.0, 1.0)).collect()).collect();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { 0.1 } else { 0.0 })
                .collect()
        })
        .collect();
    let hess = Matrix::from_rows(&q);
    let l = hess.spectral_norm_sq(1000).sqrt();
    let f = Quadratic {
        hessian: hess,
        center: vec![0.0; n],
        offset: 0.0,
    };
    let prob = ProblemInstance::new("spd5", vec![Arc::new(f) as Arc<dyn Objective>], BoxRegion::cube(n, -1.0, 1.0))
        .unwrap()
        .with_lipschitz(l);
    let x0: Vec<f64> = (0..n).map(|_| rng::uniform(&mut r, -1.0, 1.0)).collect();
    let s = 0.9 / l;
    let steps = 500;
    let mut worst = 0.0_f64;
    let mut complete = true;
    for (variant, alpha) in [(Variant::MfiscConst, Some(5.0)), (Variant::AccgConst, None)] {
        let cfg = SolverConfig::new(variant)
            .with_alpha(alpha.unwrap_or(50.0))
            .with_step(s)
            .with_epsilon(f64::MIN_POSITIVE)
            .with_k_max(steps + 1);
        let mut iterates = Vec::new();
        solvers::run_observed(&prob, &cfg, &x0, |_, x| iterates.push(x.to_vec())).unwrap();
        let reference = scalar_reference(&q, &x0, s, alpha, steps);
        complete &= iterates.len() == steps + 1;
        for (a, b) in iterates.iter().zip(&reference) {
            worst = worst.max(linalg::dist(a, b));
        }
    }
    outcome(
        complete && worst <= 1e-12,
        format!("{steps} steps each, max iterate deviation {worst:.2e}"),
    )
}

fn criterion_rate() -> Outcome {
    let prob = problems::quadratic_pair();
    let alpha = 5.0;
    let cfg = SolverConfig::new(Variant::MfiscConst)
        .with_alpha(alpha)
        .with_step(0.05)
        .with_epsilon(f64::MIN_POSITIVE)
        .with_k_max(10_001);
    let mut iterates = Vec::new();
    solvers::run_observed(&prob, &cfg, &[-0.2, -0.1], |k, x| iterates.push((k, x.to_vec()))).unwrap();
    let mut mcfg = MeritConfig::default();
    let mut scaled = Vec::new();
    let mut phis = Vec::new();
    for (k, x) in iterates.iter().filter(|(k, _)| (10..=10_000).contains(k)) {
        let value = match merit::merit_value(&prob, x, &mcfg) {
            Ok(v) => v,
            Err(e) => return outcome(false, format!("merit failed at k = {k}: {e}")),
        };
        let kf = *k as f64;
        scaled.push(value.phi * ((kf + alpha - 2.0).powi(2) + kf) / kf.ln().powi(2));
        phis.push((*k, x.clone(), value.phi));
        mcfg.warm_start = Some(value.z_star);
    }
    if scaled.len() != 9991 {
        return outcome(false, format!("expected 9991 iterates in [10, 1e4], got {}", scaled.len()));
    }
    let first = scaled[0];
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bounds = BoxRegion::cube(2, -1.0, 2.0);
    let mut oracle_dev = 0.0_f64;
    for k in [10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000] {
        let (_, x, phi) = &phis[k - 10];
        let grid = merit::merit_grid_oracle(&prob, x, &bounds, 801).unwrap();
        oracle_dev = oracle_dev.max((grid - phi).abs());
    }
    outcome(
        max.is_finite() && max <= 10.0 * first && oracle_dev <= 1e-3,
        format!(
            "envelope max {max:.3e} vs 10x value at k=10 {:.3e}; merit vs grid oracle max dev {oracle_dev:.1e}",
            10.0 * first
        ),
    )
}

fn quad_flow(alpha: f64, beta: f64, scheme: Scheme) -> flow::Trajectory {
    let cfg = FlowConfig::new(vec![-0.2, -0.1]).with_alpha(alpha).with_beta(beta);
    flow::integrate(&problems::quadratic_pair(), &cfg, scheme).unwrap()
}

fn criterion_flow_bound() -> Outcome {
    let prob = problems::quadratic_pair();
    let mut details = Vec::new();
    let mut pass = true;
    for alpha in [50.0, 100.0] {
        let mut traj = quad_flow(alpha, 3.0, Scheme::Mavng);
        if let Err(e) = flow::attach_merit(&mut traj, &prob, 100, &MeritConfig::default()) {
            return outcome(false, format!("merit: {e}"));
        }
        let report = flow::merit_bound_scan(&traj, alpha, Some((2.0, 20.0))).unwrap();
        pass &= report.fraction >= 0.99;
        details.push(format!("alpha {alpha}: {:.3} of {} samples", report.fraction, report.points.len()));
    }
    outcome(pass, details.join("; "))
}

fn criterion_flow_convergence() -> Outcome {
    let mut worst = 0.0_f64;
    let mut identical = true;
    for alpha in [50.0, 100.0] {
        let traj = quad_flow(alpha, 3.0, Scheme::Mavng);
        let x = &traj.last().x;
        let d = (0..=100_000)
            .map(|i| {
                let l = i as f64 / 100_000.0;
                linalg::dist(x, &[2.0 * l / (1.0 + l), 2.0 * (1.0 - l) / (2.0 - l)])
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
        let a = quad_flow(alpha, alpha, Scheme::Mavng);
        let b = quad_flow(alpha, alpha, Scheme::Mavd);
        identical &= a.samples.len() == b.samples.len()
            && a.samples.iter().zip(&b.samples).all(|(p, q)| {
                p.x.iter().zip(&q.x).all(|(u, v)| u.to_bits() == v.to_bits())
            });
    }
    outcome(
        worst <= 1e-2 && identical,
        format!("max endpoint distance to segment {worst:.2e}; beta = alpha bit-identical: {identical}"),
    )
}

fn criterion_ordering() -> Outcome {
    let jos = harness::run_batch(&harness::preset("jos1-desk").unwrap()).unwrap();
    let m = jos.cell("jos1:n=2", Variant::MfiscConst, 1e-6).unwrap().total_iterations;
    let a = jos.cell("jos1:n=2", Variant::AccgConst, 1e-6).unwrap().total_iterations;
    let ex1 = harness::run_batch(&harness::preset("ex1-desk").unwrap()).unwrap();
    let key = "ex1:n=20,p=10";
    let em = ex1.cell(key, Variant::MfiscLs, 1e-3).unwrap().total_iterations;
    let ea = ex1.cell(key, Variant::AccgLs, 1e-3).unwrap().total_iterations;
    let es = ex1.cell(key, Variant::SteepestLs, 1e-3).unwrap().total_iterations;
    outcome(
        2 * m < a && em < ea && ea < es,
        format!("JOS1 MFISC {m} vs AccG {a}; ex1 MFISC {em} < AccG {ea} < SD {es}"),
    )
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = walk(dir)
        .into_iter()
        .map(|p| (p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

fn criterion_determinism() -> Outcome {
    let presets = ["jos1-desk", "ex1-desk", "ex2-desk", "flow-quad", "fronts"];
    let mut mismatched = Vec::new();
    let mut files = 0;
    for name in presets {
        let mut snapshots = Vec::new();
        for workers in [1, 3, 8] {
            let dir = tempfile::tempdir().unwrap();
            let cfg = ExperimentConfig {
                out_dir: Some(dir.path().to_path_buf()),
                workers: Some(workers),
                write_traces: name != "fronts",
                ..harness::preset(name).unwrap()
            };
            match name {
                "flow-quad" => {
                    harness::flow_experiment(&cfg).unwrap();
                }
                "fronts" => {
                    harness::pareto_scan(&cfg).unwrap();
                }
                _ => {
                    harness::run_batch(&cfg).unwrap();
                }
            }
            snapshots.push(dir_contents(dir.path()));
        }
        files += snapshots[0].len();
        if snapshots.iter().any(|s| *s != snapshots[0]) {
            mismatched.push(name);
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("{files} files per run compared across 1/3/8 workers; mismatches: {mismatched:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("1 QP oracle equivalence", criterion_qp_oracle, Duration::from_secs(5)),
        ("2 gradient correctness", criterion_gradients, Duration::from_secs(5)),
        ("3 sublevel monotonicity", criterion_sublevel, Duration::from_secs(10)),
        ("4 single-objective degeneracy", criterion_single_objective, Duration::from_secs(1)),
        ("5 rate envelope", criterion_rate, Duration::from_secs(60)),
        ("6 flow merit bound", criterion_flow_bound, Duration::from_secs(120)),
        ("7 flow convergence", criterion_flow_convergence, Duration::from_secs(60)),
        ("8 solver ordering", criterion_ordering, Duration::from_secs(120)),
        ("9 determinism", criterion_determinism, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= budget;
        failed += usize::from(!pass);
        println!(
            "{} criterion {name}: {} [{:.2}s, budget {}s]",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
