//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.
//!
//! The dataset-gated criterion reads an edge-list export of the
//! uk-2007-05@1000000 crawl from `--uk2007 <path>` (after `--`) or from the
//! `DITER_UK2007_EDGELIST` environment variable, and is skipped otherwise.

use std::fs::File;
use std::io::BufReader;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use diter::baselines::{dense_direct, dense_direct_with_source, gauss_seidel_solve, power_solve};
use diter::diffusion::{l1_distance, FluidState, RunConfig};
use diter::experiments::{
    generate_scenario_s, selection_probability, ExperimentConfig, PreparedExperiment, ScenarioConfig,
};
use diter::synthetic::{dangling_free_graph, random_graph};
use diter::warm_restart::{rebase_add_nodes, rebase_links, resumed_solution};
use diter::{Graph, NodeFluidMode, NodeId, RankOperator};

const D: f64 = 0.85;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

/// The 50 instances shared by criteria 1 and 2.
fn instance_graphs() -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC01);
    (0..50)
        .map(|k| {
            let n = rng.random_range(10..=1000);
            let dangling = rng.random_range(0.0..=0.10);
            let degree = rng.random_range(2.0..12.0);
            random_graph(n, degree, dangling, 1000 + k)
        })
        .collect()
}

fn ac1_balance() -> Verdict {
    let start = Instant::now();
    let mut worst_ratio: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for g in instance_graphs() {
        let op = RankOperator::new(g, D).unwrap();
        let n = op.node_count();
        let mut s = FluidState::init(&op);
        for block in 0..20 {
            for step in 0..1000 {
                // alternate cyclic order and random picks
                let i = if block % 2 == 0 { step % n } else { rng.random_range(0..n) };
                s.diffuse_step(&op, NodeId(i));
            }
            worst_ratio = worst_ratio.max(s.balance_defect(&op) / (1e-12 * n as f64));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst_ratio <= 1.0 && secs < 30.0,
        format!("max defect / (1e-12 N) = {worst_ratio:.3e}, runtime {secs:.2}s"),
    )
}

fn ac2_oracle_equivalence() -> Verdict {
    let mut worst = [0.0f64; 3];
    for g in instance_graphs() {
        let op = RankOperator::new(g, D).unwrap();
        let x = dense_direct(&op).unwrap().x;
        let mut s = FluidState::init(&op);
        s.run(&op, &RunConfig::to_target(1e-10)).unwrap();
        worst[0] = worst[0].max(l1_distance(s.history(), &x));
        worst[1] = worst[1].max(l1_distance(&power_solve(&op, 1e-10).unwrap().x, &x));
        worst[2] = worst[2].max(l1_distance(&gauss_seidel_solve(&op, 1e-10).unwrap().x, &x));
    }
    verdict(
        worst.iter().all(|&w| w <= 1e-9),
        format!(
            "max L1 vs dense: diffusion {:.2e}, power {:.2e}, gauss-seidel {:.2e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn ac3_warm_restart() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut kinds = [0usize; 2];
    let mut negative_fluid_cases = 0;
    for case in 0..100u64 {
        let n = rng.random_range(20..=300);
        let degree = rng.random_range(2.0..10.0);
        let g = random_graph(n, degree, rng.random_range(0.0..0.1), 5000 + case);
        let op = RankOperator::new(g.clone(), D).unwrap();
        let mut s = FluidState::init(&op);

        // n0: none, full convergence, or a random partial run
        match case % 10 {
            0 => {}
            1 => {
                s.run(&op, &RunConfig::to_target(1e-13)).unwrap();
            }
            _ => {
                let steps = rng.random_range(1..=40 * n);
                for t in 0..steps {
                    s.diffuse_step(&op, NodeId(t % n));
                }
            }
        }

        let new_op = if case % 3 == 2 {
            kinds[1] += 1;
            let k = rng.random_range(1..=n / 5 + 1);
            rebase_add_nodes(&mut s, &op, k).unwrap().0
        } else {
            kinds[0] += 1;
            let p_max = 1.0 / (g.link_count() as f64 / n as f64).max(1e-9);
            let eps = rng.random_range(0.0..p_max.min(0.2));
            let m = rng.random_range(1..=4);
            let batch = generate_scenario_s(&g, eps, m, case).unwrap();
            let (g2, changed) = g.apply_mutations(&batch).unwrap();
            let new_op = RankOperator::new(g2, D).unwrap();
            rebase_links(&mut s, &op, &new_op, &changed).unwrap();
            new_op
        };
        if s.fluid().iter().any(|&f| f < 0.0) {
            negative_fluid_cases += 1;
        }
        s.run(&new_op, &RunConfig::to_target(1e-11)).unwrap();
        let resumed = resumed_solution(&s, &new_op, 1e-11).unwrap();
        let scratch = dense_direct(&new_op).unwrap().x;
        worst = worst.max(l1_distance(&resumed, &scratch));
    }
    verdict(
        worst <= 1e-8,
        format!(
            "100 cases ({} link batches, {} node additions, {} with negative fluid): max |resumed - scratch|_1 = {worst:.2e}",
            kinds[0], kinds[1], negative_fluid_cases
        ),
    )
}

fn ac4_residual_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checks = 0usize;
    let mut violations = 0usize;
    let mut min_slack = f64::INFINITY;
    let mut saw_negative = false;
    for inst in 0..20u64 {
        let n = rng.random_range(20..=200);
        let g = random_graph(n, rng.random_range(2.0..8.0), 0.05, 9000 + inst);
        let op = RankOperator::new(g.clone(), D).unwrap();
        let x = dense_direct(&op).unwrap().x;
        let mut s = FluidState::init(&op);
        let mut check = |s: &FluidState, op: &RankOperator, x: &[f64]| {
            let gap = s.residual_bound(op) - s.exact_distance(x).unwrap();
            checks += 1;
            min_slack = min_slack.min(gap);
            if gap < -1e-13 {
                violations += 1;
            }
        };
        for t in 0..(10 * n) {
            s.diffuse_step(&op, NodeId(t % n));
            if t % 7 == 0 {
                check(&s, &op, &x);
            }
        }
        let new_op = if inst % 2 == 0 {
            rebase_add_nodes(&mut s, &op, rng.random_range(1..=n / 4)).unwrap().0
        } else {
            let batch = generate_scenario_s(&g, 0.5 * n as f64 / g.link_count() as f64, 2, inst).unwrap();
            let (g2, changed) = g.apply_mutations(&batch).unwrap();
            let new_op = RankOperator::new(g2, D).unwrap();
            rebase_links(&mut s, &op, &new_op, &changed).unwrap();
            new_op
        };
        saw_negative |= s.fluid().iter().any(|&f| f < 0.0);
        let x_new = dense_direct_with_source(&new_op, s.source()).unwrap().x;
        let m = new_op.node_count();
        check(&s, &new_op, &x_new);
        for t in 0..(30 * m) {
            s.diffuse_step(&new_op, NodeId(t % m));
            if t % 7 == 0 {
                check(&s, &new_op, &x_new);
            }
        }
    }
    verdict(
        violations == 0 && saw_negative,
        format!(
            "{checks} checks, {violations} violations, min(bound - distance) = {min_slack:.2e}, negative fluid seen: {saw_negative}"
        ),
    )
}

/// Graph for the experiment criteria: N = 1000, heavy-tailed degrees, mean
/// out-degree 8, about 4% dangling nodes.
fn experiment_graph() -> Graph {
    random_graph(1000, 8.0, 0.04, 2024)
}

fn ac5_node_jumps() -> Verdict {
    let g = experiment_graph();
    let mut ok = true;
    let mut parts = Vec::new();
    for (mode, label) in [
        (NodeFluidMode::FullUnit, "full"),
        (NodeFluidMode::Consistent, "consistent"),
    ] {
        let cfg = ExperimentConfig {
            node_fluid_mode: mode,
            ..Default::default()
        };
        let prep = PreparedExperiment::prepare(g.clone(), &cfg).unwrap();
        for fraction in [0.001, 0.01, 0.1] {
            let report = prep.run(&ScenarioConfig::nodes(fraction)).unwrap();
            let expected = match mode {
                NodeFluidMode::FullUnit => fraction,
                NodeFluidMode::Consistent => {
                    // |dF|_1 / (1 - d) for N existing nodes and k new ones
                    let n = g.node_count() as f64;
                    let k = report.nodes_added as f64;
                    let df = n * (1.0 - D) * (1.0 / n - 1.0 / (n + k)) + k * (1.0 - D) / (n + k);
                    df / (1.0 - D)
                }
            };
            let ratio = report.jump_distance / expected;
            let within = (0.5..=2.0).contains(&ratio);
            ok &= within;
            parts.push(format!(
                "{label} {fraction}: jump {:.3e} vs {expected:.3e} (x{ratio:.2})",
                report.jump_distance
            ));
        }
    }
    verdict(ok, parts.join("; "))
}

fn ac6_reuse_trend() -> Verdict {
    let g = experiment_graph();
    let prep = PreparedExperiment::prepare(g, &ExperimentConfig::default()).unwrap();
    let mean_reuse = |eps: f64| -> (f64, f64) {
        let reports: Vec<_> = (0..10)
            .map(|seed| prep.run(&ScenarioConfig::links(eps, 1, seed)).unwrap())
            .collect();
        let reuse = reports.iter().map(|r| r.reuse_fraction).sum::<f64>() / 10.0;
        let links = reports.iter().map(|r| r.links_added as f64).sum::<f64>() / 10.0;
        (reuse, links)
    };
    let (small, small_links) = mean_reuse(0.001);
    let (large, large_links) = mean_reuse(0.1);
    verdict(
        small >= 0.5 && small > large,
        format!(
            "reuse(eps=0.001, ~{small_links:.1} links) = {small:.3}, reuse(eps=0.1, ~{large_links:.0} links) = {large:.3}"
        ),
    )
}

fn ac7_scenario_calibration() -> Verdict {
    let g = experiment_graph();
    let n = g.node_count() as f64;
    let mut ok = true;
    let mut parts = Vec::new();
    for (eps, m) in [(0.04, 1usize), (0.02, 2), (0.01, 4)] {
        let p = selection_probability(&g, eps);
        let draws = 1000;
        let total: usize = (0..draws)
            .map(|seed| generate_scenario_s(&g, eps, m, seed).unwrap().added_links().len())
            .sum();
        let mean = total as f64 / draws as f64;
        let expected = m as f64 * g.link_count() as f64 * eps;
        let sigma_mean = m as f64 * (n * p * (1.0 - p)).sqrt() / (draws as f64).sqrt();
        let z = (mean - expected) / sigma_mean;
        ok &= z.abs() <= 3.0;
        parts.push(format!("(eps={eps}, m={m}) mean {mean:.1} vs {expected:.1} (z={z:+.2})"));
    }

    let prep = PreparedExperiment::prepare(g, &ExperimentConfig::default()).unwrap();
    let mut m4_not_worse = 0;
    for trial in 0..30u64 {
        let one = prep.run(&ScenarioConfig::links(0.04, 1, 100 + trial)).unwrap();
        let four = prep.run(&ScenarioConfig::links(0.01, 4, 200 + trial)).unwrap();
        if four.jump_distance <= one.jump_distance {
            m4_not_worse += 1;
        }
    }
    ok &= m4_not_worse > 15;
    parts.push(format!("jump(m=4) <= jump(m=1) in {m4_not_worse}/30 trials"));
    verdict(ok, parts.join("; "))
}

fn ac8_cost_model() -> Verdict {
    let g = dangling_free_graph(1000, 8, 8);
    let l = g.link_count();
    let op = RankOperator::new(g, D).unwrap();
    let mut manual = FluidState::init(&op);
    for i in 0..op.node_count() {
        manual.diffuse_step(&op, NodeId(i));
    }
    let mut scheduled = FluidState::init(&op);
    let cfg = RunConfig {
        max_iterations: Some(1.0),
        sample_every: 1.0,
        ..Default::default()
    };
    scheduled.run(&op, &cfg).unwrap();
    verdict(
        manual.links_used() == l && scheduled.links_used() == l && scheduled.cost() == 1.0,
        format!(
            "L = {l}, one sweep used {} (manual) / {} (scheduled) link-uses",
            manual.links_used(),
            scheduled.links_used()
        ),
    )
}

fn ac9_table1(path: Option<String>) -> Verdict {
    let Some(path) = path else {
        return Verdict::Skip("no uk-2007-05@1000000 edge list supplied".into());
    };
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) => return Verdict::Fail(format!("cannot open {path}: {e}")),
    };
    let g = match Graph::load_edge_list(BufReader::new(file)) {
        Ok(g) => g,
        Err(e) => return Verdict::Fail(format!("cannot parse {path}: {e}")),
    };
    let rows = [(1000usize, 12935u64, 41usize), (10000, 125439, 80), (100000, 3141476, 2729)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, l, dangling) in rows {
        let r = g.restrict_first_n(n);
        let got = (r.link_count(), r.dangling_count());
        ok &= got == (l, dangling);
        parts.push(format!("N={n}: L={} D={} (want {l}, {dangling})", got.0, got.1));
    }
    verdict(ok, parts.join("; "))
}

fn dataset_path() -> Option<String> {
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--uk2007" {
            return args.next();
        }
        if let Some(p) = a.strip_prefix("--uk2007=") {
            return Some(p.to_string());
        }
    }
    std::env::var("DITER_UK2007_EDGELIST").ok().filter(|p| !p.is_empty())
}

fn main() -> ExitCode {
    let dataset = dataset_path();
    type Criterion = Box<dyn FnOnce() -> Verdict>;
    let criteria: Vec<(&str, Criterion)> = vec![
        ("AC1 balance invariant", Box::new(ac1_balance)),
        ("AC2 oracle equivalence", Box::new(ac2_oracle_equivalence)),
        ("AC3 warm-restart equivalence", Box::new(ac3_warm_restart)),
        ("AC4 residual bound soundness", Box::new(ac4_residual_bound)),
        ("AC5 node-addition jump magnitude", Box::new(ac5_node_jumps)),
        ("AC6 reuse trend", Box::new(ac6_reuse_trend)),
        ("AC7 S(m) calibration and m-spread", Box::new(ac7_scenario_calibration)),
        ("AC8 sweep cost model", Box::new(ac8_cost_model)),
        ("AC9 dataset statistics (gated)", Box::new(move || ac9_table1(dataset))),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] {name} ({secs:.1}s): {detail}");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    }
}
