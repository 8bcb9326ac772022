use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use diter::baselines::{dense_direct, gauss_seidel_solve, power_solve, DENSE_MAX_NODES};
use diter::diffusion::{l1_distance, FluidState, RunConfig, Schedule};
use diter::experiments::{
    write_trace_csv, write_trace_rows, ExperimentConfig, PreparedExperiment, ScenarioConfig,
    TRACE_HEADER,
};
use diter::operator::DEFAULT_DAMPING;
use diter::synthetic::random_graph;
use diter::{Graph, NodeFluidMode, RankOperator};

#[derive(Parser, Debug)]
#[command(name = "diter", version, about = "Fluid-diffusion fixed-point solver and update experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve X = PX + B by diffusion and write the convergence trace.
    Solve(SolveArgs),
    /// Solve, perturb the graph, warm-restart and compare with a fresh solve.
    UpdateExperiment(ExperimentArgs),
    /// Compare diffusion against power iteration and Gauss-Seidel.
    Compare(CompareArgs),
    /// Print node, link and dangling-node counts.
    Stats(StatsArgs),
    /// Write a seeded synthetic edge list.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct GraphInput {
    /// Edge-list file (`-` for stdin)
    edgelist: PathBuf,

    /// Keep only nodes 0..N-1
    #[arg(long)]
    restrict_n: Option<usize>,
}

impl GraphInput {
    fn load(&self) -> Result<Graph> {
        let g = if self.edgelist.as_os_str() == "-" {
            Graph::load_edge_list(io::stdin().lock())?
        } else {
            let f = File::open(&self.edgelist)
                .with_context(|| format!("opening {}", self.edgelist.display()))?;
            Graph::load_edge_list(BufReader::new(f))
                .with_context(|| format!("reading {}", self.edgelist.display()))?
        };
        Ok(match self.restrict_n {
            Some(0) => bail!("--restrict-n must be positive"),
            Some(n) => g.restrict_first_n(n),
            None => g,
        })
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: GraphInput,

    #[arg(long = "d", default_value_t = DEFAULT_DAMPING)]
    damping: f64,

    /// Residual-bound target; defaults to 1/N
    #[arg(long)]
    target: Option<f64>,

    /// cyclic, cyclic:<threshold> or greedy
    #[arg(long, default_value = "cyclic")]
    schedule: Schedule,

    /// Trace sampling period in iterations
    #[arg(long, default_value_t = 0.1)]
    sample_every: f64,

    /// Trace CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    input: GraphInput,

    #[arg(long = "d", default_value_t = DEFAULT_DAMPING)]
    damping: f64,

    #[arg(long, default_value_t = 0.001)]
    epsilon: f64,

    #[arg(long, default_value_t = 1)]
    m: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Add this fraction of new isolated nodes instead of links
    #[arg(long)]
    node_fraction: Option<f64>,

    /// consistent or full
    #[arg(long, default_value = "consistent")]
    node_fluid_mode: NodeFluidMode,

    /// Exact-distance target for both phases; defaults to 1/N
    #[arg(long)]
    target: Option<f64>,

    #[arg(long, default_value = "cyclic")]
    schedule: Schedule,

    #[arg(long, default_value_t = 0.05)]
    sample_every: f64,

    /// Trace CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    input: GraphInput,

    #[arg(long = "d", default_value_t = DEFAULT_DAMPING)]
    damping: f64,

    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Edge-list file (`-` for stdin)
    edgelist: PathBuf,

    /// Report the restriction to the first N nodes; repeatable
    #[arg(long = "restrict-n")]
    restrict_n: Vec<usize>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    nodes: usize,

    #[arg(long, default_value_t = 8.0)]
    mean_degree: f64,

    #[arg(long, default_value_t = 0.04)]
    dangling: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn solve(args: SolveArgs) -> Result<()> {
    let g = args.input.load()?;
    let op = RankOperator::new(g, args.damping)?;
    let target = args.target.unwrap_or(1.0 / op.node_count().max(1) as f64);
    let mut state = FluidState::init(&op);
    let cfg = RunConfig::to_target(target)
        .schedule(args.schedule)
        .sample_every(args.sample_every);
    let out = state.run(&op, &cfg)?;

    let mut w = output(&args.out)?;
    writeln!(w, "{TRACE_HEADER}")?;
    write_trace_rows(&out.trace, "solve", &mut w)?;
    w.flush()?;
    eprintln!(
        "nodes={} links={} residual_bound={:e} cost_iterations={:.4} steps={}",
        op.node_count(),
        op.graph().link_count(),
        state.residual_bound(&op),
        state.cost(),
        state.steps()
    );
    Ok(())
}

fn update_experiment(args: ExperimentArgs) -> Result<()> {
    let g = args.input.load()?;
    let cfg = ExperimentConfig {
        damping: args.damping,
        node_fluid_mode: args.node_fluid_mode,
        schedule: args.schedule,
        target: args.target,
        sample_every: args.sample_every,
    };
    let scenario = match args.node_fraction {
        Some(f) => ScenarioConfig::nodes(f),
        None => ScenarioConfig::links(args.epsilon, args.m, args.seed),
    };
    let prep = PreparedExperiment::prepare(g, &cfg)?;
    let report = prep.run(&scenario)?;
    write_trace_csv(&report, output(&args.out)?)?;
    eprintln!(
        "links_added={} nodes_added={} target={:e} update_cost={:.4} jump_distance={:e} jump_bound={:e} limit_shift={:e} cost_to_recover={:.4} cost_scratch={:.4} reuse_fraction={:.4}",
        report.links_added,
        report.nodes_added,
        report.target,
        report.update_cost,
        report.jump_distance,
        report.jump_bound,
        report.limit_shift,
        report.cost_to_recover,
        report.cost_scratch,
        report.reuse_fraction
    );
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let g = args.input.load()?;
    let op = RankOperator::new(g, args.damping)?;
    let mut state = FluidState::init(&op);
    state.run(&op, &RunConfig::to_target(args.tol))?;
    let power = power_solve(&op, args.tol)?;
    let gs = gauss_seidel_solve(&op, args.tol)?;

    println!("method,cost_iterations,l1_vs_diffusion");
    println!("diffusion,{:.4},0", state.cost());
    println!("power,{},{:e}", power.iterations, l1_distance(&power.x, state.history()));
    println!("gauss_seidel,{},{:e}", gs.iterations, l1_distance(&gs.x, state.history()));
    if op.node_count() <= DENSE_MAX_NODES {
        let dense = dense_direct(&op)?;
        println!("dense_direct,,{:e}", l1_distance(&dense.x, state.history()));
    }
    println!("# power vs gauss_seidel L1 = {:e}", l1_distance(&power.x, &gs.x));
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let g = GraphInput {
        edgelist: args.edgelist,
        restrict_n: None,
    }
    .load()?;
    let views: Vec<Graph> = if args.restrict_n.is_empty() {
        vec![g]
    } else {
        args.restrict_n.iter().map(|&n| g.restrict_first_n(n)).collect()
    };
    println!("N,L,L_per_N,dangling,dangling_pct");
    for v in views {
        let n = v.node_count();
        let d = v.dangling_count();
        let per = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
        println!(
            "{n},{},{:.1},{d},{:.1}",
            v.link_count(),
            per(v.link_count() as f64),
            100.0 * per(d as f64)
        );
    }
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.dangling) {
        bail!("--dangling must be in [0, 1]");
    }
    let g = random_graph(args.nodes, args.mean_degree, args.dangling, args.seed);
    let mut w = output(&args.out)?;
    g.write_edge_list(&mut w)?;
    w.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve(a) => solve(a),
        Command::UpdateExperiment(a) => update_experiment(a),
        Command::Compare(a) => compare(a),
        Command::Stats(a) => stats(a),
        Command::Generate(a) => generate(a),
    }
}
