use thiserror::Error;

use crate::diffusion::ConvergenceTrace;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("node {node} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("vector size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("diffusion did not reach the target within {cap} iterations (residual bound {bound:e})")]
    NotConverged {
        cap: f64,
        bound: f64,
        trace: Box<ConvergenceTrace>,
    },
    #[error("state is not converged (residual bound {bound:e} > target {target:e})")]
    Unconverged { bound: f64, target: f64 },
    #[error("{method} exceeded {iterations} iterations")]
    IterationCap {
        method: &'static str,
        iterations: usize,
    },
    #[error("dense solve limited to {max} nodes, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("selection probability {0} exceeds 1 (lower epsilon)")]
    ProbabilityAboveOne(f64),
    #[error("node fraction {fraction} of {node_count} nodes rounds to zero new nodes")]
    NoNodesAdded { fraction: f64, node_count: usize },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace parse error on line {line}: {message}")]
    TraceParse { line: usize, message: String },
}
