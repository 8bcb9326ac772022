//! Reference solvers for `X = P X + B`.
//!
//! These build their own row-oriented copy of `P` straight from the edge
//! list rather than going through [`RankOperator::column_iter`], so they stay
//! independent of the diffusion code path they are used to check.

use std::fmt;

use crate::error::SolveError;
use crate::operator::RankOperator;

pub const DENSE_MAX_NODES: usize = 2000;
const ITERATION_CAP: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Power,
    GaussSeidel,
    DenseDirect,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Power => "power",
            Method::GaussSeidel => "gauss_seidel",
            Method::DenseDirect => "dense_direct",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub method: Method,
}

/// `P` stored by rows: `rows[i]` lists `(j, p_ij)`.
struct RowMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl RowMatrix {
    fn build(op: &RankOperator) -> Self {
        let g = op.graph();
        let n = g.node_count();
        let mut out_weight = vec![0.0f64; n];
        for (src, _, w) in g.links() {
            out_weight[src.0] += f64::from(w);
        }
        let mut rows = vec![Vec::new(); n];
        for (src, dst, w) in g.links() {
            rows[dst.0].push((src.0, op.damping() * f64::from(w) / out_weight[src.0]));
        }
        RowMatrix { rows }
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, p)| p * x[j]).sum()
    }
}

fn check_source(op: &RankOperator, source: &[f64]) -> Result<(), SolveError> {
    if source.len() != op.node_count() {
        return Err(SolveError::SizeMismatch {
            expected: op.node_count(),
            found: source.len(),
        });
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<(), SolveError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(SolveError::InvalidArgument(format!("tolerance {tol} must be > 0")));
    }
    Ok(())
}

/// Successive-difference threshold guaranteeing `|X - X*|_1 <= tol`.
fn step_threshold(op: &RankOperator, tol: f64) -> f64 {
    tol * (1.0 - op.damping()) / op.damping()
}

/// Power series `X <- P X + B` starting from `X = B`.
pub fn power_solve(op: &RankOperator, tol: f64) -> Result<ReferenceSolution, SolveError> {
    power_solve_with_source(op, &op.b_vector(), tol)
}

pub fn power_solve_with_source(
    op: &RankOperator,
    source: &[f64],
    tol: f64,
) -> Result<ReferenceSolution, SolveError> {
    check_source(op, source)?;
    check_tol(tol)?;
    let m = RowMatrix::build(op);
    let n = op.node_count();
    let threshold = step_threshold(op, tol);
    let mut x = source.to_vec();
    let mut next = vec![0.0; n];
    for it in 1..=ITERATION_CAP {
        let mut change = 0.0;
        for i in 0..n {
            next[i] = m.row_dot(i, &x) + source[i];
            change += (next[i] - x[i]).abs();
        }
        std::mem::swap(&mut x, &mut next);
        if change <= threshold {
            return Ok(ReferenceSolution {
                x,
                iterations: it,
                method: Method::Power,
            });
        }
    }
    Err(SolveError::IterationCap {
        method: "power",
        iterations: ITERATION_CAP,
    })
}

/// In-place sweeps using the freshest values, stopping on the same
/// successive-difference rule as [`power_solve`].
pub fn gauss_seidel_solve(op: &RankOperator, tol: f64) -> Result<ReferenceSolution, SolveError> {
    gauss_seidel_solve_with_source(op, &op.b_vector(), tol)
}

pub fn gauss_seidel_solve_with_source(
    op: &RankOperator,
    source: &[f64],
    tol: f64,
) -> Result<ReferenceSolution, SolveError> {
    check_source(op, source)?;
    check_tol(tol)?;
    let m = RowMatrix::build(op);
    let n = op.node_count();
    let threshold = step_threshold(op, tol);
    let mut x = source.to_vec();
    for it in 1..=ITERATION_CAP {
        let mut change = 0.0;
        for i in 0..n {
            // Self-loops make p_ii nonzero; solve the row for x_i exactly.
            let mut diag = 0.0;
            let mut off = 0.0;
            for &(j, p) in &m.rows[i] {
                if j == i {
                    diag += p;
                } else {
                    off += p * x[j];
                }
            }
            let xi = (off + source[i]) / (1.0 - diag);
            change += (xi - x[i]).abs();
            x[i] = xi;
        }
        if change <= threshold {
            return Ok(ReferenceSolution {
                x,
                iterations: it,
                method: Method::GaussSeidel,
            });
        }
    }
    Err(SolveError::IterationCap {
        method: "gauss_seidel",
        iterations: ITERATION_CAP,
    })
}

/// Solves `(I - P) X = B` by Gaussian elimination with partial pivoting.
pub fn dense_direct(op: &RankOperator) -> Result<ReferenceSolution, SolveError> {
    dense_direct_with_source(op, &op.b_vector())
}

pub fn dense_direct_with_source(
    op: &RankOperator,
    source: &[f64],
) -> Result<ReferenceSolution, SolveError> {
    let n = op.node_count();
    if n > DENSE_MAX_NODES {
        return Err(SolveError::TooLarge {
            n,
            max: DENSE_MAX_NODES,
        });
    }
    check_source(op, source)?;
    let rows = RowMatrix::build(op);
    let mut a = vec![0.0f64; n * n];
    for i in 0..n {
        a[i * n + i] = 1.0;
        for &(j, p) in &rows.rows[i] {
            a[i * n + j] -= p;
        }
    }
    let mut x = source.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
            .expect("non-empty pivot range");
        if a[pivot * n + col] == 0.0 {
            return Err(SolveError::Singular);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let (upper, lower) = a.split_at_mut((col + 1) * n);
        let pivot_row = &upper[col * n..];
        let inv = 1.0 / pivot_row[col];
        for r in 0..(n - col - 1) {
            let row = &mut lower[r * n..(r + 1) * n];
            let factor = row[col] * inv;
            if factor == 0.0 {
                continue;
            }
            row[col] = 0.0;
            for k in (col + 1)..n {
                row[k] -= factor * pivot_row[k];
            }
            x[col + 1 + r] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let row = &a[col * n..(col + 1) * n];
        let s: f64 = ((col + 1)..n).map(|k| row[k] * x[k]).sum();
        x[col] = (x[col] - s) / row[col];
    }
    Ok(ReferenceSolution {
        x,
        iterations: 1,
        method: Method::DenseDirect,
    })
}

/// `|X - (P X + B)|_1`, computed from the row form.
pub fn fixed_point_residual(op: &RankOperator, source: &[f64], x: &[f64]) -> f64 {
    let m = RowMatrix::build(op);
    (0..op.node_count())
        .map(|i| (x[i] - m.row_dot(i, x) - source[i]).abs())
        .sum()
}
