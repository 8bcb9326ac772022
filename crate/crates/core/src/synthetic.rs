//! Seeded synthetic graphs with heavy-tailed degrees, used where a real web
//! crawl is not available.
//!
//! Out-degrees follow a discrete Pareto law and destinations are drawn from
//! a Zipf-like popularity ranking, so both in- and out-degrees are skewed.
//! No self-loops and no duplicate edges are generated, which keeps the link
//! count equal to the stored edge count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

const OUT_DEGREE_SHAPE: f64 = 2.2;
const POPULARITY_EXPONENT: f64 = 0.9;

/// Heavy-tailed random graph with roughly `mean_degree * n` links and
/// roughly `dangling_fraction * n` dangling nodes.
pub fn random_graph(n: usize, mean_degree: f64, dangling_fraction: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n < 2 {
        return Graph::isolated(n);
    }

    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(&mut rng);
    let mut cumulative = Vec::with_capacity(n);
    let mut total = 0.0;
    for r in 0..n {
        total += 1.0 / ((r + 1) as f64).powf(POPULARITY_EXPONENT);
        cumulative.push(total);
    }

    // Pareto(x_m, a) has mean a x_m / (a - 1); aim for the degree among the
    // non-dangling nodes that gives `mean_degree` overall.
    let active_mean = mean_degree / (1.0 - dangling_fraction).max(1e-9);
    let x_m = (active_mean * (OUT_DEGREE_SHAPE - 1.0) / OUT_DEGREE_SHAPE).max(0.5);
    let max_degree = n - 1;

    let mut links = Vec::new();
    let mut chosen = Vec::new();
    for src in 0..n {
        if rng.random_bool(dangling_fraction.clamp(0.0, 1.0)) {
            continue;
        }
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let degree = ((x_m * u.powf(-1.0 / OUT_DEGREE_SHAPE)).round() as usize).clamp(1, max_degree);
        chosen.clear();
        let mut attempts = 0;
        while chosen.len() < degree && attempts < 50 * degree {
            attempts += 1;
            let t = rng.random_range(0.0..total);
            let r = cumulative.partition_point(|&c| c <= t).min(n - 1);
            let dst = rank[r];
            if dst != src && !chosen.contains(&dst) {
                chosen.push(dst);
            }
        }
        links.extend(chosen.iter().map(|&dst| (src, dst)));
    }
    Graph::from_links(n, links).expect("generated indices are in range")
}

/// Random graph where every node has between 1 and `2 * mean_degree - 1`
/// distinct out-edges and none are dangling.
pub fn dangling_free_graph(n: usize, mean_degree: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = Vec::new();
    let mut chosen = Vec::new();
    let top = (2 * mean_degree).saturating_sub(1).clamp(1, n.saturating_sub(1).max(1));
    for src in 0..n {
        if n < 2 {
            break;
        }
        let degree = rng.random_range(1..=top);
        chosen.clear();
        while chosen.len() < degree {
            let dst = rng.random_range(0..n);
            if dst != src && !chosen.contains(&dst) {
                chosen.push(dst);
            }
        }
        links.extend(chosen.iter().map(|&dst| (src, dst)));
    }
    Graph::from_links(n, links).expect("generated indices are in range")
}
