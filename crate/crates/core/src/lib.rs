//! Fluid-diffusion ("D-iteration") solver for fixed points `X = P X + B`
//! with warm restart after graph updates.
//!
//! - [`graph`]: compressed weighted graphs, edge-list I/O and mutations.
//! - [`operator`]: the PageRank-type operator `P = dQ` and source `B`.
//! - [`diffusion`]: the diffusion iteration, schedules and cost accounting.
//! - [`warm_restart`]: rebasing a partial solve onto an updated operator.
//! - [`baselines`]: power, Gauss-Seidel and dense reference solvers.
//! - [`experiments`]: perturbation scenarios and the update-cost protocol.

pub mod baselines;
pub mod diffusion;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod operator;
pub mod synthetic;
pub mod warm_restart;

pub use diffusion::{ConvergenceTrace, FluidState, RunConfig, RunOutcome, Schedule};
pub use error::{ExperimentError, GraphError, ScenarioError, SolveError};
pub use experiments::{ExperimentConfig, ExperimentReport, ScenarioConfig, ScenarioKind};
pub use graph::{Graph, MutationBatch, NodeId};
pub use operator::{NodeFluidMode, RankOperator};
pub use warm_restart::RebaseRecord;
