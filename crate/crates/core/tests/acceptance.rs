//! Acceptance suite. Runs every criterion, prints one `[PASS]`/`[FAIL]` line
//! each and exits nonzero if any failed.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::{SQRT_2, TAU};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rapf::bench::{evaluate_gates, replay, run_bench, BenchConfig, BenchReport, Gate, Manifest, ScenarioSource};
use rapf::fixtures::u_trap_case;
use rapf::metrics::rapf_eval_count;
use rapf::planners::astar::{search, Grid};
use rapf::planners::select_bacteria;
use rapf::potentials::{
    bacteria_points, quad_gradient, quad_obstacle_gradient, quad_total, rotate_contribution, vortex_force,
};
use rapf::terrain::{area_fraction, generate_scenario, AbundanceModel, ScenarioSpec};
use rapf::{
    plan, Obstacle, ObstacleKind, PlanRequest, PlanStatus, PlannerKind, PlannerParams, Potential, Spin, Vec2,
};

use PlannerKind::{Apf, Astar, Crbapf, Rapf, Rvf};

const SCENARIOS: [&str; 3] = ["A", "B", "C"];

struct Outcome {
    passed: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.passed &= ok;
        let mark = if ok { "ok  " } else { "FAIL" };
        self.details.push(format!("{mark} {}", detail.into()));
    }

    fn gates(&mut self, gates: &[Gate], report: &BenchReport) {
        for g in evaluate_gates(gates, report) {
            self.check(g.passed, g.description);
        }
    }
}

fn bench(scenarios: &[&str], planners: &[PlannerKind], base_seed: u64) -> BenchReport {
    let config = BenchConfig {
        scenarios: scenarios.iter().map(|s| ScenarioSource::Preset(s.to_string())).collect(),
        planners: planners.to_vec(),
        trials_per_cell: 100,
        base_seed,
        ..BenchConfig::default()
    };
    run_bench(&config).expect("bench runs")
}

fn c1(report: &BenchReport, elapsed: f64) -> Outcome {
    let mut out = Outcome::new();
    out.gates(
        &[Gate::ReachabilityOrder {
            order: vec![Rapf, Crbapf, Rvf, Apf],
            scenario: None,
        }],
        report,
    );
    // A* must reach whenever a grid path exists on the full map.
    for sc in SCENARIOS {
        let mut misses = 0;
        let mut infeasible = 0;
        for r in report.records.iter().filter(|r| r.planner == Astar && r.scenario == sc) {
            if r.outcome.status.name() == "reached" {
                continue;
            }
            let s = generate_scenario(&ScenarioSpec::preset(sc).unwrap(), r.seed).unwrap();
            let params = PlannerParams {
                rover_radius: s.rover_radius,
                ..PlannerParams::default()
            };
            let req = PlanRequest::new(s.start, s.goal_center, s.obstacles.clone(), params);
            if plan(Astar, &req).unwrap().status == PlanStatus::Reached {
                misses += 1;
            } else {
                infeasible += 1;
            }
        }
        out.check(
            misses == 0,
            format!("{sc}: A* misses on feasible maps {misses} (infeasible maps {infeasible})"),
        );
    }
    out.check(elapsed <= 900.0, format!("bench wall time {elapsed:.1} s <= 900 s"));
    out
}

fn c2() -> Outcome {
    let mut out = Outcome::new();
    for seed in [1_000, 2_000, 3_000] {
        let report = bench(&["C"], &[Crbapf, Rapf], seed);
        for g in evaluate_gates(
            &[Gate::ReachabilityMargin {
                better: Rapf,
                worse: Crbapf,
                points: 10.0,
                scenario: Some("C".into()),
            }],
            &report,
        ) {
            out.check(g.passed, format!("base seed {seed}: {}", g.description));
        }
    }
    out
}

fn c3(report: &BenchReport) -> Outcome {
    let mut out = Outcome::new();
    out.gates(
        &[
            Gate::ReachabilityRatio {
                better: Rapf,
                worse: Apf,
                factor: 2.0,
                scenario: Some("C".into()),
            },
            Gate::PlanningTimeRatio {
                planner: Rapf,
                reference: Apf,
                max: 0.5,
                scenario: None,
            },
        ],
        report,
    );
    out
}

fn c4(report: &BenchReport) -> Outcome {
    let mut out = Outcome::new();
    out.gates(
        &[Gate::PathLengthRatio {
            planner: Rapf,
            reference: Astar,
            min: 1.0,
            max: 1.10,
            scenario: None,
        }],
        report,
    );
    out
}

fn c5(report: &BenchReport) -> Outcome {
    let mut out = Outcome::new();
    let gates: Vec<Gate> = [Rapf, Crbapf]
        .into_iter()
        .map(|planner| Gate::PlanningTimeRatio {
            planner,
            reference: Astar,
            max: 1.0 / 3.0,
            scenario: None,
        })
        .collect();
    out.gates(&gates, report);
    out
}

fn c6() -> Outcome {
    let mut out = Outcome::new();
    let params = PlannerParams::default();
    let expected = rapf_eval_count(params.n_bacteria, 3.0, params.rho_b) as f64;
    let mut worst: f64 = 0.0;
    let mut total = 0.0;
    let routes = 36;
    for k in 0..routes {
        let start = Vec2::new(1.0, -2.0);
        let target = start + Vec2::from_angle(TAU * k as f64 / routes as f64) * 3.0;
        let r = plan(Rapf, &PlanRequest::new(start, target, vec![], params.clone())).unwrap();
        let evals = r.potential_evals as f64;
        worst = worst.max((evals / expected - 1.0).abs());
        total += evals;
    }
    let mean = total / routes as f64;
    out.check(
        worst <= 0.2,
        format!("{routes} routes of 3 m: worst deviation {:.1}% from {expected} (<= 20%)", 100.0 * worst),
    );
    out.check(
        (305.0..=1220.0).contains(&mean),
        format!("mean count {mean:.0}, same order as 610"),
    );
    out
}

fn random_obstacle(rng: &mut ChaCha8Rng) -> Obstacle {
    let kind = if rng.random_bool(0.5) { ObstacleKind::Rock } else { ObstacleKind::Crater };
    Obstacle::new(
        Vec2::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)),
        rng.random_range(0.05..0.8),
        kind,
    )
}

fn c7() -> Outcome {
    let mut out = Outcome::new();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = PlannerParams::default();

    // Closed-form force against central differences of the total potential.
    let mut worst_fd: f64 = 0.0;
    let mut configs = 0;
    while configs < 1000 {
        let obstacles: Vec<Obstacle> = (0..rng.random_range(1..6)).map(|_| random_obstacle(&mut rng)).collect();
        let anchor = &obstacles[0];
        let rho = params.quad_influence(anchor);
        let p = anchor.center + Vec2::from_angle(rng.random_range(0.0..TAU)) * rng.random_range(0.2 * rho..1.2 * rho);
        if obstacles.iter().any(|o| (p - o.center).norm() < 0.1) {
            continue;
        }
        configs += 1;
        let target = Vec2::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        let f = quad_gradient(p, target, &obstacles, &params).unwrap().vector();
        let h = 1e-6;
        let j = |q: Vec2| quad_total(q, target, &obstacles, &params).unwrap();
        let gx = (j(p + Vec2::new(h, 0.0)) - j(p - Vec2::new(h, 0.0))) / (2.0 * h);
        let gy = (j(p + Vec2::new(0.0, h)) - j(p - Vec2::new(0.0, h))) / (2.0 * h);
        let err = (f + Vec2::new(gx, gy)).norm() / f.norm().max(1.0);
        worst_fd = worst_fd.max(err);
    }
    out.check(worst_fd <= 1e-6, format!("force vs finite differences on {configs} configurations: worst relative error {worst_fd:.2e}"));

    // Rotation of obstacle gradients.
    let mut worst_orth: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for _ in 0..1000 {
        let o = random_obstacle(&mut rng);
        let rho = params.quad_influence(&o);
        let p = o.center + Vec2::from_angle(rng.random_range(0.0..TAU)) * rng.random_range(0.1 * rho..rho);
        let target = Vec2::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        let g = quad_obstacle_gradient(p, &o, &params).unwrap().unwrap();
        for spin in [Spin::Ccw, Spin::Cw] {
            let rot = rotate_contribution(g, spin);
            worst_orth = worst_orth.max(rot.dot(g).abs() / g.norm_squared());
            worst_norm = worst_norm.max((rot.norm() - g.norm()).abs() / g.norm());
            let p_spin = PlannerParams { spin, ..params.clone() };
            let v = vortex_force(p, target, std::slice::from_ref(&o), &p_spin, spin).unwrap().vector();
            let repulsive = v - (target - p) * params.k_a;
            worst_orth = worst_orth.max(repulsive.dot(g).abs() / (repulsive.norm() * g.norm()));
        }
    }
    out.check(
        worst_orth <= 1e-12 && worst_norm <= 1e-12,
        format!("vortex orthogonality {worst_orth:.1e}, norm preservation {worst_norm:.1e}"),
    );

    // Ring geometry.
    let mut worst_ring: f64 = 0.0;
    let mut counts_ok = true;
    for _ in 0..1000 {
        let n = rng.random_range(3..17);
        let rho_b = rng.random_range(0.01..1.0);
        let p = Vec2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
        let t = p + Vec2::from_angle(rng.random_range(0.0..TAU)) * rng.random_range(0.5..30.0);
        let prm = PlannerParams {
            n_bacteria: n,
            rho_b,
            ..params.clone()
        };
        for align in [None, Some(t)] {
            let pts = bacteria_points(p, &prm, align).unwrap();
            counts_ok &= pts.len() == n;
            let mut centroid = Vec2::ZERO;
            for &b in &pts {
                worst_ring = worst_ring.max(((b - p).norm() - rho_b).abs());
                centroid += b;
            }
            worst_ring = worst_ring.max((centroid * (1.0 / n as f64) - p).norm());
            let toward = align.map_or(Vec2::new(1.0, 0.0), |t| (t - p).normalized().unwrap());
            worst_ring = worst_ring.max((pts[n - 1] - (p + toward * rho_b)).norm());
        }
    }
    out.check(
        counts_ok && worst_ring <= 1e-9,
        format!("ring count, radius, centroid and alignment: worst error {worst_ring:.1e}"),
    );

    // Bacteria selection against a brute-force filter and argmin.
    let mut mismatches = 0;
    for _ in 0..1000 {
        let target = Vec2::new(rng.random_range(-3..=3) as f64, rng.random_range(-3..=3) as f64);
        let draw = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.2) {
                Potential::Infinite
            } else {
                Potential::Finite(rng.random_range(-5..=5) as f64)
            }
        };
        let robot = draw(&mut rng);
        let cands: Vec<(Vec2, Potential)> = (0..rng.random_range(1..13))
            .map(|_| {
                let c = Vec2::new(rng.random_range(-3..=3) as f64, rng.random_range(-3..=3) as f64);
                (c, draw(&mut rng))
            })
            .collect();
        let lower = |a: Potential, b: Potential| match (a, b) {
            (Potential::Finite(x), Potential::Finite(y)) => x < y,
            (Potential::Finite(_), Potential::Infinite) => true,
            _ => false,
        };
        let mut oracle: Option<(Vec2, f64)> = None;
        for &(c, j) in &cands {
            let d = (c - target).norm();
            if lower(j, robot) && oracle.is_none_or(|(_, bd)| d < bd) {
                oracle = Some((c, d));
            }
        }
        let points: Vec<Vec2> = cands.iter().map(|c| c.0).collect();
        let mut k = 0;
        let got = select_bacteria(robot, &points, target, |_| {
            k += 1;
            cands[k - 1].1
        });
        if got != oracle.map(|o| o.0) {
            mismatches += 1;
        }
    }
    out.check(mismatches == 0, format!("select_bacteria vs brute force: {mismatches}/1000 mismatches"));

    // A* cost against Dijkstra.
    let mut bad = 0;
    let mut unreachable = 0;
    for _ in 0..50 {
        let (cols, rows) = (50, 50);
        let mask: Vec<bool> = (0..cols * rows).map(|_| rng.random_bool(0.3)).collect();
        let free: Vec<usize> = (0..cols * rows).filter(|&i| !mask[i]).collect();
        let s = free[rng.random_range(0..free.len())];
        let g = free[rng.random_range(0..free.len())];
        let grid = Grid::from_mask(cols, rows, 0.1, mask.clone());
        let route = search(&grid, (s % cols, s / cols), (g % cols, g / cols));
        let oracle = dijkstra(&mask, cols, rows, s, g).map(|c| 0.1 * c);
        match (route.map(|r| r.cost(0.1)), oracle) {
            (Some(a), Some(b)) if (a - b).abs() <= 1e-9 => {}
            (None, None) => unreachable += 1,
            _ => bad += 1,
        }
    }
    out.check(bad == 0, format!("A* vs Dijkstra on 50 grids: {bad} mismatches ({unreachable} unreachable pairs)"));

    let secs = t0.elapsed().as_secs_f64();
    out.check(secs <= 60.0, format!("property suite time {secs:.2} s <= 60 s"));
    out
}

/// 8-connected Dijkstra; a diagonal needs both orthogonal neighbours free.
fn dijkstra(blocked: &[bool], cols: usize, rows: usize, s: usize, g: usize) -> Option<f64> {
    let mut dist = vec![f64::INFINITY; blocked.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse((0u64, s)));
    let free = |c: i64, r: i64| c >= 0 && r >= 0 && c < cols as i64 && r < rows as i64 && !blocked[(r * cols as i64 + c) as usize];
    while let Some(Reverse((key, u))) = heap.pop() {
        let d = f64::from_bits(key);
        if d > dist[u] {
            continue;
        }
        if u == g {
            return Some(d);
        }
        let (c, r) = ((u % cols) as i64, (u / cols) as i64);
        for dr in -1..=1 {
            for dc in -1..=1 {
                if (dr, dc) == (0, 0) || !free(c + dc, r + dr) {
                    continue;
                }
                let diag = dr != 0 && dc != 0;
                if diag && !(free(c + dc, r) && free(c, r + dr)) {
                    continue;
                }
                let v = ((r + dr) * cols as i64 + c + dc) as usize;
                let nd = d + if diag { SQRT_2 } else { 1.0 };
                if nd < dist[v] {
                    dist[v] = nd;
                    // Nonnegative doubles order like their bit patterns.
                    heap.push(Reverse((nd.to_bits(), v)));
                }
            }
        }
    }
    None
}

fn ks_statistic(model: &AbundanceModel, samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = model.truncated_cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn c8() -> Outcome {
    let mut out = Outcome::new();
    let expected = [("A", 42, 38), ("B", 88, 32), ("C", 137, 24)];
    for (name, rocks, craters) in expected {
        let spec = ScenarioSpec::preset(name).unwrap();
        let mut counts_ok = true;
        let mut worst_cov: f64 = 0.0;
        for seed in 0..20 {
            let s = generate_scenario(&spec, seed).unwrap();
            let count = |k| s.obstacles.iter().filter(|o| o.kind == k).count();
            counts_ok &= count(ObstacleKind::Rock) == rocks && count(ObstacleKind::Crater) == craters;
            let cov = area_fraction(&s.obstacles, ObstacleKind::Rock, &s.obstacle_region);
            worst_cov = worst_cov.max((cov - 0.018).abs());
        }
        out.check(counts_ok, format!("{name}: {rocks} rocks and {craters} craters on 20 seeds"));
        out.check(
            worst_cov <= 0.001,
            format!("{name}: rock coverage within {:.3} pp of 1.8%", 100.0 * worst_cov),
        );
    }
    let models = [
        ("rocks", AbundanceModel::lunar_rocks(), 11),
        ("craters", AbundanceModel::lunar_craters(), 12),
    ];
    for (label, model, seed) in models {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = model.sample_diameters(100_000, &mut rng);
        let ks = ks_statistic(&model, &mut samples);
        out.check(ks < 0.01, format!("{label}: KS statistic {ks:.5} < 0.01 (n = 100000)"));
    }
    out
}

fn c9() -> Outcome {
    let mut out = Outcome::new();
    let params = PlannerParams::default();
    let success = |kind| {
        (0..50u64)
            .filter(|&s| {
                let c = u_trap_case(s);
                let req = PlanRequest::new(c.start, c.target, c.obstacles, params.clone()).with_seed(s);
                plan(kind, &req).unwrap().status == PlanStatus::Reached
            })
            .count()
    };
    let (rapf, crbapf, apf) = (success(Rapf), success(Crbapf), success(Apf));
    out.check(rapf >= crbapf, format!("RAPF {rapf}/50 >= CRBAPF* {crbapf}/50"));
    out.check(apf == 0, format!("APF {apf}/50 == 0"));
    out
}

fn c10(report: &BenchReport) -> Outcome {
    let mut out = Outcome::new();
    let text = serde_json::to_string(&report.manifest()).unwrap();
    let manifest: Manifest = serde_json::from_str(&text).unwrap();
    let mismatches = replay(&manifest, 1).unwrap();
    for m in mismatches.iter().take(5) {
        out.check(false, m.to_string());
    }
    out.check(
        mismatches.is_empty(),
        format!("replayed {} trials on one worker: {} mismatches", manifest.trials.len(), mismatches.len()),
    );
    out
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let report = bench(&SCENARIOS, &PlannerKind::ALL, 0);
    let bench_secs = t0.elapsed().as_secs_f64();
    println!("{}", report.table());

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("C1 reachability ordering", Box::new(|| c1(&report, bench_secs))),
        ("C2 RAPF vs CRBAPF* margin in C", Box::new(c2)),
        ("C3 RAPF vs APF", Box::new(|| c3(&report))),
        ("C4 path-length near-optimality", Box::new(|| c4(&report))),
        ("C5 planning time vs A*", Box::new(|| c5(&report))),
        ("C6 evaluation count", Box::new(c6)),
        ("C7 numerical properties", Box::new(c7)),
        ("C8 terrain statistics", Box::new(c8)),
        ("C9 U-trap escape", Box::new(c9)),
        ("C10 manifest determinism", Box::new(|| c10(&report))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let o = run();
        println!("[{}] {name}", if o.passed { "PASS" } else { "FAIL" });
        for d in &o.details {
            println!("       {d}");
        }
        failed += usize::from(!o.passed);
    }
    println!("\n{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
