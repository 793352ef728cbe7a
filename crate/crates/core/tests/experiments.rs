use paretoflow::flow::Scheme;
use paretoflow::harness::{self, ExperimentConfig};
use paretoflow::problems;
use paretoflow::solvers::{self, SolverConfig, Variant};

fn front_config(problem: &str, starts: usize) -> ExperimentConfig {
    ExperimentConfig {
        problems: vec![problem.into()],
        n_starts: starts,
        ..harness::preset("fronts").unwrap()
    }
}

#[test]
fn quadratic_front_matches_segment_image() {
    let prob = problems::quadratic_pair();
    let seg = prob.pareto().unwrap();
    let reference: Vec<Vec<f64>> = seg.sample(20_001).iter().map(|x| prob.eval(x)).collect();
    let scan = &harness::pareto_scan(&front_config("quad2", 200)).unwrap()[0];
    for p in &scan.points {
        assert!(!p.flagged);
        let d = reference
            .iter()
            .map(|f| paretoflow::linalg::dist(f, &p.objectives))
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-3, "start {} at distance {d}", p.start);
    }
}

#[test]
fn jos1_front_is_the_expected_segment() {
    let scan = &harness::pareto_scan(&front_config("jos1", 200)).unwrap()[0];
    for p in &scan.points {
        let (f1, f2) = (p.objectives[0], p.objectives[1]);
        // f = (λ², (1−λ)²)·4 for x = 2λ·1, so √f1 + √f2 = 2.
        assert!((f1.sqrt() + f2.sqrt() - 2.0).abs() < 1e-2, "{f1}, {f2}");
        assert!((-1e-9..=4.0 + 1e-9).contains(&f1) && (-1e-9..=4.0 + 1e-9).contains(&f2));
    }
    let spread = scan.points.iter().map(|p| p.objectives[0]).fold(0.0, f64::max);
    assert!(spread > 2.0);
}

#[test]
fn single_start_at_a_vertex_gives_one_point() {
    let prob = problems::quadratic_pair();
    let cfg = SolverConfig::new(Variant::MfiscConst);
    let t = solvers::run(&prob, &cfg, &[1.0, 0.0]).unwrap();
    assert_eq!(t.iterations(), 0);
    assert_eq!(t.final_objectives[0], 0.0);
    assert_eq!(t.final_objectives[1], prob.eval(&[1.0, 0.0])[1]);
}

#[test]
fn sd_trace_reaches_tolerance() {
    let prob = problems::sd();
    let x0 = harness::sample_starts(&prob, 1, 0).remove(0);
    let cfg = SolverConfig::new(Variant::MfiscConst).with_step(0.05).with_epsilon(1e-6);
    let t = solvers::run(&prob, &cfg, &x0).unwrap();
    assert!(t.converged());
    assert!(t.final_kkt_residual < 1e-6);
    assert!(t.records.iter().all(|r| r.iter_gap.is_finite()));
}

#[test]
fn mavng_merit_falls_faster_than_mavd() {
    let cfg = ExperimentConfig {
        flow: harness::FlowSweep {
            alphas: vec![100.0],
            ..harness::preset("flow-quad").unwrap().flow
        },
        ..harness::preset("flow-quad").unwrap()
    };
    let report = harness::flow_experiment(&cfg).unwrap();
    let ng = &report.run(100.0, Scheme::Mavng).unwrap().trajectory;
    let d = &report.run(100.0, Scheme::Mavd).unwrap().trajectory;
    let (mut below, mut total) = (0, 0);
    for (a, b) in ng.samples.iter().zip(&d.samples) {
        if let (Some(ma), Some(mb)) = (a.merit, b.merit) {
            if a.t >= 5.0 {
                total += 1;
                below += usize::from(ma <= mb);
            }
        }
    }
    assert!(2 * below > total, "{below} of {total}");
}

#[test]
fn logsumexp_flow_report_uses_tenfold_bound() {
    let cfg = ExperimentConfig {
        flow: harness::FlowSweep {
            alphas: vec![50.0],
            ..harness::preset("flow-lse").unwrap().flow
        },
        ..harness::preset("flow-lse").unwrap()
    };
    let report = harness::flow_experiment(&cfg).unwrap();
    assert_eq!(report.runs.len(), 2);
    for run in &report.runs {
        assert_eq!(run.bound.coefficient, 500.0);
        assert!(run.trajectory.failure.is_none());
    }
    let ng = report.run(50.0, Scheme::Mavng).unwrap();
    assert!(ng.final_distance_to_front.unwrap() < 5e-2);
}

#[test]
fn example_two_desk_orders_solvers() {
    let summary = harness::run_batch(&harness::preset("ex2-desk").unwrap()).unwrap();
    let key = "ex2:n=20,p=20";
    let m = summary.cell(key, Variant::MfiscLs, 1e-2).unwrap();
    let a = summary.cell(key, Variant::AccgLs, 1e-2).unwrap();
    assert_eq!(m.converged(), 10);
    assert_eq!(a.converged(), 10);
    assert!(m.total_iterations < a.total_iterations);
}

#[test]
fn table_one_schema() {
    let cfg = ExperimentConfig {
        n_starts: 5,
        ..harness::preset("bench").unwrap()
    };
    let summary = harness::run_batch(&cfg).unwrap();
    assert_eq!(summary.cells.len(), 3 * 2 * 4);
    let mut csv = Vec::new();
    summary.write_table(&mut csv, false).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 25);
}
