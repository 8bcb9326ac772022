use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn diter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diter"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_graph(dir: &Path) -> String {
    let path = dir.join("g.txt");
    let out = diter(&["generate", "300", "--mean-degree", "6", "--seed", "4", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path());
    let trace = dir.path().join("trace.csv");
    let out = diter(&["solve", &g, "--d", "0.85", "--target", "1e-8", "--schedule", "greedy", "--out", trace.to_str().unwrap()]);
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("residual_bound="), "{stderr}");
    let csv = fs::read_to_string(trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("phase,cost_iterations,distance"));
    let last: Vec<f64> = lines.last().unwrap().split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    assert!(last[1] <= 1e-8);
}

#[test]
fn update_experiment_reports() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path());
    let out = diter(&["update-experiment", &g, "--epsilon", "0.01", "--m", "2", "--seed", "9", "--restrict-n", "250"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("phase,cost_iterations,distance\nbefore,"));
    assert!(csv.contains("\nafter,"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("reuse_fraction="));

    let nodes = diter(&["update-experiment", &g, "--node-fraction", "0.1", "--node-fluid-mode", "full"]);
    assert!(nodes.status.success());
    assert!(String::from_utf8(nodes.stderr).unwrap().contains("nodes_added=30"));
}

#[test]
fn compare_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path());
    let out = diter(&["compare", &g, "--tol", "1e-10"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for method in ["diffusion", "power", "gauss_seidel", "dense_direct"] {
        assert!(text.contains(method), "{text}");
    }

    let small = dir.path().join("c.txt");
    fs::write(&small, "0 1\n1 2\n2 0\n").unwrap();
    let out = diter(&["stats", small.to_str().unwrap(), "--restrict-n", "2", "--restrict-n", "3"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "N,L,L_per_N,dangling,dangling_pct\n2,1,0.5,1,50.0\n3,3,1.0,0,0.0\n"
    );
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "0 1\n1 oops\n").unwrap();
    let out = diter(&["solve", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));

    let g = write_graph(dir.path());
    let out = diter(&["update-experiment", &g, "--epsilon", "0.5"]);
    assert!(!out.status.success());
    assert!(!diter(&["solve", "/nonexistent/graph.txt"]).status.success());
}
