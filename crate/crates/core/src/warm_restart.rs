//! Warm restart of a diffusion after the operator changes.
//!
//! If a state satisfies `H + F = F0 + P H` and the operator becomes `P'`,
//! moving `(P' - P) H` into the fluid gives `H + F' = F0 + P' H`. Resuming
//! the diffusion with `P'` therefore converges to the solution of
//! `X' = P' X' + F0`, with `H` carried over so that the final history is
//! already the combined limit.

use std::collections::BTreeSet;

use crate::diffusion::FluidState;
use crate::error::SolveError;
use crate::graph::NodeId;
use crate::operator::{delta_columns, NodeFluidMode, RankOperator};

/// What a rebase left behind for balance checking.
#[derive(Clone, Debug, PartialEq)]
pub struct RebaseRecord {
    /// Initial fluid for which `H + F = F0 + P' H` holds after the rebase.
    pub f0_effective: Vec<f64>,
    pub epoch: u32,
}

/// Rebases `state` from `old` onto `new`, whose columns may differ only at
/// nodes in `changed`. Work is proportional to the out-degrees of the changed
/// nodes that have absorbed fluid.
pub fn rebase_links(
    state: &mut FluidState,
    old: &RankOperator,
    new: &RankOperator,
    changed: &BTreeSet<NodeId>,
) -> Result<RebaseRecord, SolveError> {
    let n = state.node_count();
    for found in [old.node_count(), new.node_count()] {
        if found != n {
            return Err(SolveError::SizeMismatch { expected: n, found });
        }
    }
    let touched: BTreeSet<NodeId> = changed
        .iter()
        .copied()
        .filter(|j| j.0 < n && state.history[j.0] != 0.0)
        .collect();
    for (j, column) in delta_columns(old, new, &touched) {
        let h = state.history[j.0];
        for (r, v) in column {
            state.fluid[r.0] += v * h;
        }
    }
    state.epoch += 1;
    Ok(RebaseRecord {
        f0_effective: state.source.clone(),
        epoch: state.epoch,
    })
}

/// Appends `k` isolated nodes and adjusts the fluid for the new source
/// `B' = (1-d)/(N+k)`.
///
/// Existing nodes receive `(1-d)(1/(N+k) - 1/N)`. New nodes receive
/// `(1-d)/(N+k)` in [`NodeFluidMode::Consistent`] mode and `1/(N+k)` in
/// [`NodeFluidMode::FullUnit`] mode; only the former converges to the
/// solution of `X' = P' X' + B'`.
pub fn rebase_add_nodes(
    state: &mut FluidState,
    op: &RankOperator,
    k: usize,
) -> Result<(RankOperator, RebaseRecord), SolveError> {
    if k == 0 {
        return Err(SolveError::InvalidArgument("node addition needs k >= 1".into()));
    }
    let n = op.node_count();
    if state.node_count() != n {
        return Err(SolveError::SizeMismatch {
            expected: n,
            found: state.node_count(),
        });
    }
    let d = op.damping();
    let total = (n + k) as f64;
    if n > 0 {
        let shift = (1.0 - d) * (1.0 / total - 1.0 / n as f64);
        for i in 0..n {
            state.fluid[i] += shift;
            state.source[i] += shift;
        }
    }
    let injected = match op.node_fluid_mode() {
        NodeFluidMode::Consistent => (1.0 - d) / total,
        NodeFluidMode::FullUnit => 1.0 / total,
    };
    state.fluid.resize(n + k, injected);
    state.source.resize(n + k, injected);
    state.history.resize(n + k, 0.0);
    state.epoch += 1;

    let new_op = op.with_added_nodes(k);
    Ok((
        new_op,
        RebaseRecord {
            f0_effective: state.source.clone(),
            epoch: state.epoch,
        },
    ))
}

/// The combined limit `H`, once the residual bound is within `target`.
pub fn resumed_solution(
    state: &FluidState,
    op: &RankOperator,
    target: f64,
) -> Result<Vec<f64>, SolveError> {
    let bound = state.residual_bound(op);
    if bound > target {
        return Err(SolveError::Unconverged { bound, target });
    }
    Ok(state.history().to_vec())
}
