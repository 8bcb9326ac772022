//! The fluid-diffusion iteration.
//!
//! A [`FluidState`] holds the fluid `F` still to be diffused and the history
//! `H` of fluid already absorbed. Diffusing node `i` moves `F[i]` into `H[i]`
//! and deposits `P[:, i] * F[i]` back into `F`. At every step
//!
//! ```text
//! H + F = F0 + P H
//! ```
//!
//! holds, where `F0` is the initial fluid of the run (the `source` of the
//! state). `H` converges to the solution of `X = P X + F0`, and since `P`
//! contracts the L1 norm by at least `d`, `|X - H|_1 <= |F|_1 / (1 - d)`.
//!
//! Cost is counted in link uses: diffusing a node with `deg` stored
//! out-edges costs `max(deg, 1)`, and visiting a node with zero fluid costs
//! nothing. Dividing by the reference link count `L` gives "iterations".

use crate::error::SolveError;
use crate::graph::NodeId;
use crate::operator::RankOperator;

#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub(crate) fluid: Vec<f64>,
    pub(crate) history: Vec<f64>,
    /// Effective initial fluid of the current epoch.
    pub(crate) source: Vec<f64>,
    pub(crate) steps: u64,
    pub(crate) links_used: u64,
    pub(crate) link_ref: u64,
    pub(crate) epoch: u32,
}

/// Node-selection order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Schedule {
    /// Repeated sweeps in index order, diffusing every node with
    /// `|F[i]| > threshold`. A sweep that selects nothing falls back to
    /// threshold 0 so every node with fluid is eventually visited.
    CyclicSweep { threshold: f64 },
    /// Always diffuse the node with the largest `|F[i]|`.
    GreedyMaxAbs,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::CyclicSweep { threshold: 0.0 }
    }
}

impl std::str::FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cyclic" => Ok(Schedule::default()),
            "greedy" => Ok(Schedule::GreedyMaxAbs),
            other => match other.strip_prefix("cyclic:") {
                Some(t) => t
                    .parse::<f64>()
                    .ok()
                    .filter(|t| *t >= 0.0)
                    .map(|threshold| Schedule::CyclicSweep { threshold })
                    .ok_or_else(|| format!("invalid sweep threshold `{t}`")),
                None => Err(format!("unknown schedule `{other}` (cyclic, cyclic:<θ>, greedy)")),
            },
        }
    }
}

/// How "distance to the limit" is measured while running.
#[derive(Clone, Copy, Debug)]
pub enum DistanceMeasure<'a> {
    /// `|F|_1 / (1 - d)`, a certified upper bound.
    ResidualBound,
    /// `|reference - H|_1` against a precomputed limit.
    Exact(&'a [f64]),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample {
    /// Cumulative cost in iterations (`links_used / L_ref`).
    pub cost: f64,
    pub distance: f64,
}

/// Samples of distance against cost, with strictly increasing cost.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    samples: Vec<TraceSample>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sample. A sample at the same cost as the last one replaces
    /// it; one at a lower cost is ignored.
    pub fn push(&mut self, cost: f64, distance: f64) {
        match self.samples.last_mut() {
            Some(last) if cost == last.cost => last.distance = distance,
            Some(last) if cost < last.cost => {}
            _ => self.samples.push(TraceSample { cost, distance }),
        }
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig<'a> {
    pub schedule: Schedule,
    /// Stop once the measured distance is at most this.
    pub target_distance: Option<f64>,
    /// Stop once cost (in iterations) reaches this.
    pub max_iterations: Option<f64>,
    /// Trace sampling period, in iterations.
    pub sample_every: f64,
    /// Give up with [`SolveError::NotConverged`] past this cost when a
    /// target distance is set.
    pub hard_cap: f64,
    pub distance: DistanceMeasure<'a>,
}

impl Default for RunConfig<'_> {
    fn default() -> Self {
        RunConfig {
            schedule: Schedule::default(),
            target_distance: None,
            max_iterations: None,
            sample_every: 0.1,
            hard_cap: 10_000.0,
            distance: DistanceMeasure::ResidualBound,
        }
    }
}

impl<'a> RunConfig<'a> {
    pub fn to_target(target: f64) -> Self {
        RunConfig {
            target_distance: Some(target),
            ..Default::default()
        }
    }

    pub fn schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn sample_every(mut self, sample_every: f64) -> Self {
        self.sample_every = sample_every;
        self
    }

    pub fn exact(mut self, reference: &'a [f64]) -> Self {
        self.distance = DistanceMeasure::Exact(reference);
        self
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trace: ConvergenceTrace,
    /// Distance at the point the run stopped.
    pub distance: f64,
    pub reached_target: bool,
}

impl FluidState {
    /// Fresh state: `F = B`, `H = 0`, no cost, `L_ref = L` (1 for edgeless
    /// graphs).
    pub fn init(op: &RankOperator) -> Self {
        let link_ref = op.graph().link_count().max(1);
        Self::with_source(op.b_vector(), link_ref)
    }

    /// Fresh state with an arbitrary initial fluid.
    pub fn with_source(source: Vec<f64>, link_ref: u64) -> Self {
        let n = source.len();
        FluidState {
            fluid: source.clone(),
            history: vec![0.0; n],
            source,
            steps: 0,
            links_used: 0,
            link_ref: link_ref.max(1),
            epoch: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.fluid.len()
    }

    pub fn fluid(&self) -> &[f64] {
        &self.fluid
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Effective initial fluid `F0` for which the balance identity holds.
    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn links_used(&self) -> u64 {
        self.links_used
    }

    pub fn link_ref(&self) -> u64 {
        self.link_ref
    }

    /// Number of rebases applied to this state.
    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// Cumulative cost in iterations.
    pub fn cost(&self) -> f64 {
        self.links_used as f64 / self.link_ref as f64
    }

    pub fn fluid_l1(&self) -> f64 {
        self.fluid.iter().map(|f| f.abs()).sum()
    }

    /// One diffusion of node `i`.
    #[inline]
    pub fn diffuse_step(&mut self, op: &RankOperator, i: NodeId) {
        self.steps += 1;
        let f = self.fluid[i.0];
        if f == 0.0 {
            return;
        }
        self.history[i.0] += f;
        self.fluid[i.0] = 0.0;
        for (r, v) in op.column_iter(i) {
            self.fluid[r.0] += v * f;
        }
        self.links_used += op.graph().out_edge_count(i).max(1) as u64;
    }

    /// `|F|_1 / (1 - d)`, an upper bound on `|X - H|_1`.
    pub fn residual_bound(&self, op: &RankOperator) -> f64 {
        self.fluid_l1() / (1.0 - op.damping())
    }

    /// `|reference - H|_1`.
    pub fn exact_distance(&self, reference: &[f64]) -> Result<f64, SolveError> {
        if reference.len() != self.history.len() {
            return Err(SolveError::SizeMismatch {
                expected: self.history.len(),
                found: reference.len(),
            });
        }
        Ok(l1_distance(reference, &self.history))
    }

    /// Max-norm of `H + F - f0 - P H`.
    pub fn check_balance(&self, op: &RankOperator, f0: &[f64]) -> f64 {
        let ph = op.apply(&self.history);
        (0..self.node_count())
            .map(|i| (self.history[i] + self.fluid[i] - f0[i] - ph[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Balance defect against the state's own effective source.
    pub fn balance_defect(&self, op: &RankOperator) -> f64 {
        self.check_balance(op, &self.source)
    }

    fn measure(&self, op: &RankOperator, distance: DistanceMeasure<'_>) -> f64 {
        match distance {
            DistanceMeasure::ResidualBound => self.residual_bound(op),
            DistanceMeasure::Exact(reference) => l1_distance(reference, &self.history),
        }
    }

    /// Diffuses per `cfg.schedule` until the target distance or the
    /// iteration budget is reached.
    pub fn run(&mut self, op: &RankOperator, cfg: &RunConfig<'_>) -> Result<RunOutcome, SolveError> {
        if cfg.target_distance.is_none() && cfg.max_iterations.is_none() {
            return Err(SolveError::InvalidArgument(
                "run needs a target distance or an iteration budget".into(),
            ));
        }
        if let Some(t) = cfg.target_distance {
            if t.is_nan() || t <= 0.0 {
                return Err(SolveError::InvalidArgument(format!("target distance {t} must be > 0")));
            }
        }
        if cfg.sample_every.is_nan() || cfg.sample_every <= 0.0 {
            return Err(SolveError::InvalidArgument("sample_every must be > 0".into()));
        }
        if self.node_count() != op.node_count() {
            return Err(SolveError::SizeMismatch {
                expected: op.node_count(),
                found: self.node_count(),
            });
        }
        if let DistanceMeasure::Exact(reference) = cfg.distance {
            if reference.len() != self.node_count() {
                return Err(SolveError::SizeMismatch {
                    expected: self.node_count(),
                    found: reference.len(),
                });
            }
        }

        let mut runner = Runner {
            cfg,
            trace: ConvergenceTrace::new(),
            next_sample: 0.0,
        };
        runner.advance_sample_point(self.cost());
        let d0 = self.measure(op, cfg.distance);
        runner.trace.push(self.cost(), d0);
        if let Some(done) = runner.stop_check(self, op, d0)? {
            return Ok(done);
        }

        let n = self.node_count();
        match cfg.schedule {
            Schedule::CyclicSweep { threshold } => {
                let mut theta = threshold;
                loop {
                    let mut selected = false;
                    for i in 0..n {
                        let f = self.fluid[i];
                        if f == 0.0 || f.abs() <= theta {
                            continue;
                        }
                        self.diffuse_step(op, NodeId(i));
                        selected = true;
                        if let Some(done) = runner.maybe_sample(self, op)? {
                            return Ok(done);
                        }
                    }
                    if !selected && theta > 0.0 {
                        theta = 0.0;
                        continue;
                    }
                    theta = threshold;
                    let d = self.measure(op, cfg.distance);
                    let exhausted = !selected;
                    if let Some(done) = runner.stop_check(self, op, d)? {
                        return Ok(done);
                    }
                    if exhausted {
                        return runner.finish_exhausted(self, d);
                    }
                }
            }
            Schedule::GreedyMaxAbs => {
                let mut since_check = 0usize;
                loop {
                    let (best, mag) = self
                        .fluid
                        .iter()
                        .enumerate()
                        .fold((0, 0.0f64), |acc, (i, f)| if f.abs() > acc.1 { (i, f.abs()) } else { acc });
                    if mag == 0.0 {
                        let d = self.measure(op, cfg.distance);
                        if let Some(done) = runner.stop_check(self, op, d)? {
                            return Ok(done);
                        }
                        return runner.finish_exhausted(self, d);
                    }
                    self.diffuse_step(op, NodeId(best));
                    if let Some(done) = runner.maybe_sample(self, op)? {
                        return Ok(done);
                    }
                    since_check += 1;
                    if since_check >= n {
                        since_check = 0;
                        let d = self.measure(op, cfg.distance);
                        if let Some(done) = runner.stop_check(self, op, d)? {
                            return Ok(done);
                        }
                    }
                }
            }
        }
    }
}

struct Runner<'c, 'a> {
    cfg: &'c RunConfig<'a>,
    trace: ConvergenceTrace,
    next_sample: f64,
}

impl Runner<'_, '_> {
    fn advance_sample_point(&mut self, cost: f64) {
        let every = self.cfg.sample_every;
        self.next_sample = ((cost / every).floor() + 1.0) * every;
    }

    fn maybe_sample(
        &mut self,
        state: &FluidState,
        op: &RankOperator,
    ) -> Result<Option<RunOutcome>, SolveError> {
        let cost = state.cost();
        if cost < self.next_sample {
            return Ok(None);
        }
        self.advance_sample_point(cost);
        let d = state.measure(op, self.cfg.distance);
        self.trace.push(cost, d);
        self.stop_check(state, op, d)
    }

    fn stop_check(
        &mut self,
        state: &FluidState,
        op: &RankOperator,
        distance: f64,
    ) -> Result<Option<RunOutcome>, SolveError> {
        let cost = state.cost();
        let reached_target = self.cfg.target_distance.is_some_and(|t| distance <= t);
        let budget_spent = self.cfg.max_iterations.is_some_and(|m| cost >= m);
        if reached_target || budget_spent {
            self.trace.push(cost, distance);
            return Ok(Some(RunOutcome {
                trace: std::mem::take(&mut self.trace),
                distance,
                reached_target,
            }));
        }
        if self.cfg.target_distance.is_some() && cost >= self.cfg.hard_cap {
            self.trace.push(cost, distance);
            return Err(SolveError::NotConverged {
                cap: self.cfg.hard_cap,
                bound: state.residual_bound(op),
                trace: Box::new(std::mem::take(&mut self.trace)),
            });
        }
        Ok(None)
    }

    /// All fluid is gone but the target was not met (only possible with an
    /// exact reference that disagrees with the limit).
    fn finish_exhausted(&mut self, state: &FluidState, distance: f64) -> Result<RunOutcome, SolveError> {
        self.trace.push(state.cost(), distance);
        if self.cfg.target_distance.is_some() {
            return Err(SolveError::NotConverged {
                cap: self.cfg.hard_cap,
                bound: 0.0,
                trace: Box::new(std::mem::take(&mut self.trace)),
            });
        }
        Ok(RunOutcome {
            trace: std::mem::take(&mut self.trace),
            distance,
            reached_target: false,
        })
    }
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
