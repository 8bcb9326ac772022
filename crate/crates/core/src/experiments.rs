//! Update-cost experiments: perturbation scenarios, the solve / perturb /
//! resume protocol, reuse metrics and trace CSV output.
//!
//! Randomness comes from `ChaCha8Rng` seeded with the scenario seed, so a
//! batch is reproducible across platforms for a given seed and graph.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{dense_direct_with_source, power_solve_with_source, DENSE_MAX_NODES};
use crate::diffusion::{l1_distance, ConvergenceTrace, FluidState, RunConfig, Schedule};
use crate::error::{ExperimentError, ScenarioError, SolveError};
use crate::graph::{Graph, MutationBatch, NodeId};
use crate::operator::{NodeFluidMode, RankOperator, DEFAULT_DAMPING};
use crate::warm_restart::{rebase_add_nodes, rebase_links};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScenarioKind {
    /// Scenario S(m): every node is selected with probability `L eps / N`
    /// and each selected node gains `m` links to uniform random destinations
    /// other than itself.
    LinkAddition { epsilon: f64, m: usize },
    /// `round(fraction * N)` isolated nodes are appended.
    NodeAddition { fraction: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn links(epsilon: f64, m: usize, seed: u64) -> Self {
        ScenarioConfig {
            kind: ScenarioKind::LinkAddition { epsilon, m },
            seed,
        }
    }

    pub fn nodes(fraction: f64) -> Self {
        ScenarioConfig {
            kind: ScenarioKind::NodeAddition { fraction },
            seed: 0,
        }
    }

    pub fn generate(&self, g: &Graph) -> Result<MutationBatch, ScenarioError> {
        match self.kind {
            ScenarioKind::LinkAddition { epsilon, m } => generate_scenario_s(g, epsilon, m, self.seed),
            ScenarioKind::NodeAddition { fraction } => generate_node_addition(g, fraction),
        }
    }
}

/// Per-node selection probability `L eps / N` of scenario S(m).
pub fn selection_probability(g: &Graph, epsilon: f64) -> f64 {
    if g.node_count() == 0 {
        return 0.0;
    }
    g.link_count() as f64 * epsilon / g.node_count() as f64
}

pub fn generate_scenario_s(
    g: &Graph,
    epsilon: f64,
    m: usize,
    seed: u64,
) -> Result<MutationBatch, ScenarioError> {
    if m == 0 {
        return Err(ScenarioError::Invalid("m must be >= 1".into()));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(ScenarioError::Invalid(format!("epsilon {epsilon} must be >= 0")));
    }
    let p = selection_probability(g, epsilon);
    if p > 1.0 {
        return Err(ScenarioError::ProbabilityAboveOne(p));
    }
    if p == 0.0 {
        return Ok(MutationBatch::empty());
    }
    let n = g.node_count();
    if n < 2 {
        return Err(ScenarioError::Invalid(
            "link scenarios need at least two nodes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = Vec::new();
    for src in 0..n {
        if !rng.random_bool(p) {
            continue;
        }
        for _ in 0..m {
            let mut dst = rng.random_range(0..n - 1);
            if dst >= src {
                dst += 1;
            }
            links.push((NodeId(src), NodeId(dst)));
        }
    }
    Ok(MutationBatch::Links(links))
}

pub fn generate_node_addition(g: &Graph, fraction: f64) -> Result<MutationBatch, ScenarioError> {
    if fraction.is_nan() || fraction <= 0.0 {
        return Err(ScenarioError::Invalid(format!("node fraction {fraction} must be > 0")));
    }
    let k = (fraction * g.node_count() as f64).round() as usize;
    if k == 0 {
        return Err(ScenarioError::NoNodesAdded {
            fraction,
            node_count: g.node_count(),
        });
    }
    Ok(MutationBatch::Nodes(k))
}

/// Solver settings shared by both phases of an update experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub damping: f64,
    pub node_fluid_mode: NodeFluidMode,
    pub schedule: Schedule,
    /// Distance at which a phase counts as converged; `None` means `1/N`.
    pub target: Option<f64>,
    pub sample_every: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            damping: DEFAULT_DAMPING,
            node_fluid_mode: NodeFluidMode::Consistent,
            schedule: Schedule::default(),
            target: None,
            sample_every: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub trace_before: ConvergenceTrace,
    pub trace_after: ConvergenceTrace,
    pub links_added: usize,
    pub nodes_added: usize,
    /// Target distance used for both phases.
    pub target: f64,
    /// Cost (iterations) at which the operator was switched.
    pub update_cost: f64,
    /// Exact distance to the new limit right after the rebase.
    pub jump_distance: f64,
    /// Residual bound right after the rebase.
    pub jump_bound: f64,
    /// `|X - X'|_1` between the old and new limits (new nodes count as 0 in X).
    pub limit_shift: f64,
    pub cost_to_recover: f64,
    pub cost_scratch: f64,
    /// `1 - cost_to_recover / cost_scratch`, clamped to `[0, 1]`.
    pub reuse_fraction: f64,
}

/// Limit of `X = P X + source`: dense elimination up to
/// [`DENSE_MAX_NODES`], a tight power series above.
pub fn reference_limit(
    op: &RankOperator,
    source: &[f64],
    target: f64,
) -> Result<Vec<f64>, SolveError> {
    if op.node_count() <= DENSE_MAX_NODES {
        Ok(dense_direct_with_source(op, source)?.x)
    } else {
        Ok(power_solve_with_source(op, source, target * 1e-4)?.x)
    }
}

/// The first phase of an experiment (solve `P` until the target), which
/// does not depend on the scenario and can be shared across seeds.
#[derive(Clone, Debug)]
pub struct PreparedExperiment {
    cfg: ExperimentConfig,
    op: RankOperator,
    reference: Vec<f64>,
    state: FluidState,
    trace_before: ConvergenceTrace,
    target: f64,
}

impl PreparedExperiment {
    pub fn prepare(graph: Graph, cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        let n = graph.node_count();
        let target = cfg.target.unwrap_or(1.0 / n.max(1) as f64);
        let op = RankOperator::with_mode(graph, cfg.damping, cfg.node_fluid_mode)?;
        let reference = reference_limit(&op, &op.b_vector(), target)?;
        let mut state = FluidState::init(&op);
        let out = state.run(&op, &phase_config(cfg, target, &reference))?;
        Ok(PreparedExperiment {
            cfg: *cfg,
            op,
            reference,
            state,
            trace_before: out.trace,
            target,
        })
    }

    pub fn operator(&self) -> &RankOperator {
        &self.op
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    /// Applies the scenario, rebases, resumes to the target and compares
    /// against a from-scratch solve of the new operator.
    pub fn run(&self, scenario: &ScenarioConfig) -> Result<ExperimentReport, ExperimentError> {
        let batch = scenario.generate(self.op.graph())?;
        self.run_batch(&batch)
    }

    pub fn run_batch(&self, batch: &MutationBatch) -> Result<ExperimentReport, ExperimentError> {
        let mut state = self.state.clone();
        let update_cost = state.cost();
        let new_op = match batch {
            MutationBatch::Links(_) => {
                let (g, changed) = self.op.graph().apply_mutations(batch)?;
                let new_op = RankOperator::with_mode(g, self.cfg.damping, self.cfg.node_fluid_mode)?;
                rebase_links(&mut state, &self.op, &new_op, &changed)?;
                new_op
            }
            MutationBatch::Nodes(k) => rebase_add_nodes(&mut state, &self.op, *k)?.0,
        };

        // The resumed run converges to the limit for its effective source,
        // which differs from B' only in full-unit node-fluid mode.
        let b_new = new_op.b_vector();
        let resume_ref = reference_limit(&new_op, state.source(), self.target)?;
        let scratch_ref = if l1_distance(state.source(), &b_new) <= 1e-14 {
            resume_ref.clone()
        } else {
            reference_limit(&new_op, &b_new, self.target)?
        };

        let jump_distance = state.exact_distance(&resume_ref)?;
        let jump_bound = state.residual_bound(&new_op);
        let mut padded_old = self.reference.clone();
        padded_old.resize(new_op.node_count(), 0.0);
        let limit_shift = l1_distance(&padded_old, &scratch_ref);

        let out = state.run(&new_op, &phase_config(&self.cfg, self.target, &resume_ref))?;
        let cost_to_recover = state.cost() - update_cost;

        let mut scratch = FluidState::with_source(b_new, state.link_ref());
        scratch.run(&new_op, &phase_config(&self.cfg, self.target, &scratch_ref))?;
        let cost_scratch = scratch.cost();
        let reuse_fraction = if cost_scratch > 0.0 {
            (1.0 - cost_to_recover / cost_scratch).clamp(0.0, 1.0)
        } else {
            1.0
        };

        Ok(ExperimentReport {
            trace_before: self.trace_before.clone(),
            trace_after: out.trace,
            links_added: batch.added_links().len(),
            nodes_added: batch.added_nodes(),
            target: self.target,
            update_cost,
            jump_distance,
            jump_bound,
            limit_shift,
            cost_to_recover,
            cost_scratch,
            reuse_fraction,
        })
    }
}

fn phase_config<'a>(cfg: &ExperimentConfig, target: f64, reference: &'a [f64]) -> RunConfig<'a> {
    RunConfig::to_target(target)
        .schedule(cfg.schedule)
        .sample_every(cfg.sample_every)
        .exact(reference)
}

/// Full protocol: solve `P` to the target, apply the scenario, resume with
/// `P'` to the target again.
pub fn run_update_experiment(
    graph: &Graph,
    cfg: &ExperimentConfig,
    scenario: &ScenarioConfig,
) -> Result<ExperimentReport, ExperimentError> {
    PreparedExperiment::prepare(graph.clone(), cfg)?.run(scenario)
}

pub const TRACE_HEADER: &str = "phase,cost_iterations,distance";

/// Writes one trace as CSV rows tagged with `phase`, without header.
pub fn write_trace_rows<W: Write>(
    trace: &ConvergenceTrace,
    phase: &str,
    out: &mut W,
) -> std::io::Result<()> {
    for s in trace.samples() {
        writeln!(out, "{phase},{},{}", s.cost, s.distance)?;
    }
    Ok(())
}

/// `phase,cost_iterations,distance` with the `before` rows followed by the
/// `after` rows.
pub fn write_trace_csv<W: Write>(report: &ExperimentReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    write_trace_rows(&report.trace_before, "before", &mut out)?;
    write_trace_rows(&report.trace_after, "after", &mut out)?;
    out.flush()
}

/// Reads a trace CSV back into `(phase, trace)` pairs in file order.
pub fn read_trace_csv<R: BufRead>(
    reader: R,
) -> Result<Vec<(String, ConvergenceTrace)>, ExperimentError> {
    let mut phases: Vec<(String, ConvergenceTrace)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line_no == 1 {
            if line.trim() != TRACE_HEADER {
                return Err(ExperimentError::TraceParse {
                    line: 1,
                    message: format!("expected header `{TRACE_HEADER}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |message: String| ExperimentError::TraceParse {
            line: line_no,
            message,
        };
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        }
        let cost: f64 = fields[1].parse().map_err(|_| bad(format!("bad cost `{}`", fields[1])))?;
        let distance: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad distance `{}`", fields[2])))?;
        match phases.last_mut() {
            Some((phase, trace)) if phase == fields[0] => trace.push(cost, distance),
            _ => {
                let mut trace = ConvergenceTrace::new();
                trace.push(cost, distance);
                phases.push((fields[0].to_string(), trace));
            }
        }
    }
    Ok(phases)
}
