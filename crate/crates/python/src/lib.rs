//! Python bindings for the `diter` fluid-diffusion solver.
//!
//! ```python
//! import pyditer
//! g = pyditer.Graph(3, [(0, 1), (1, 2), (2, 0)])
//! s = pyditer.Solver(g, damping=0.85)
//! s.run(target=1e-10)
//! s.history  # [0.333..., 0.333..., 0.333...]
//! ```

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use diter::baselines;
use diter::diffusion::{FluidState, RunConfig, Schedule};
use diter::experiments::{self, ExperimentConfig, PreparedExperiment, ScenarioConfig};
use diter::warm_restart;
use diter::{MutationBatch, NodeFluidMode, NodeId, RankOperator};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_links(links: &[(usize, usize)]) -> Vec<(NodeId, NodeId)> {
    links.iter().map(|&(s, d)| (NodeId(s), NodeId(d))).collect()
}

/// Weighted directed graph with merged duplicate links.
#[pyclass(name = "Graph", module = "pyditer", from_py_object)]
#[derive(Clone)]
pub struct PyGraph {
    inner: diter::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (node_count, links=Vec::new()))]
    fn new(node_count: usize, links: Vec<(usize, usize)>) -> PyResult<Self> {
        let inner = diter::Graph::from_links(node_count, links).map_err(value_err)?;
        Ok(PyGraph { inner })
    }

    /// Load an edge-list file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let f = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let inner = diter::Graph::load_edge_list(BufReader::new(f)).map_err(value_err)?;
        Ok(PyGraph { inner })
    }

    /// Parse edge-list text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = diter::Graph::load_edge_list(text.as_bytes()).map_err(value_err)?;
        Ok(PyGraph { inner })
    }

    /// Seeded heavy-tailed synthetic graph.
    #[staticmethod]
    #[pyo3(signature = (n, mean_degree=8.0, dangling_fraction=0.04, seed=0))]
    fn random(n: usize, mean_degree: f64, dangling_fraction: f64, seed: u64) -> Self {
        PyGraph {
            inner: diter::synthetic::random_graph(n, mean_degree, dangling_fraction, seed),
        }
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn link_count(&self) -> u64 {
        self.inner.link_count()
    }

    #[getter]
    fn dangling_count(&self) -> usize {
        self.inner.dangling_count()
    }

    fn out_degree_weight(&self, node: usize) -> PyResult<f64> {
        if node >= self.inner.node_count() {
            return Err(value_err(format!("node {node} out of range")));
        }
        Ok(self.inner.out_degree_weight(NodeId(node)))
    }

    /// `(src, dst, multiplicity)` for every stored edge.
    fn edges(&self) -> Vec<(usize, usize, u32)> {
        self.inner.links().map(|(s, d, w)| (s.0, d.0, w)).collect()
    }

    fn restrict_first_n(&self, n: usize) -> PyResult<Self> {
        if n == 0 {
            return Err(value_err("n must be positive"));
        }
        Ok(PyGraph {
            inner: self.inner.restrict_first_n(n),
        })
    }

    /// Returns `(new_graph, changed_sources)`.
    fn add_links(&self, links: Vec<(usize, usize)>) -> PyResult<(Self, Vec<usize>)> {
        let (g, changed) = self
            .inner
            .apply_mutations(&MutationBatch::Links(to_links(&links)))
            .map_err(value_err)?;
        Ok((PyGraph { inner: g }, changed.into_iter().map(|j| j.0).collect()))
    }

    fn add_nodes(&self, k: usize) -> PyResult<Self> {
        let (g, _) = self
            .inner
            .apply_mutations(&MutationBatch::Nodes(k))
            .map_err(value_err)?;
        Ok(PyGraph { inner: g })
    }

    fn to_edge_list(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_edge_list(&mut buf).map_err(runtime_err)?;
        String::from_utf8(buf).map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, links={}, dangling={})",
            self.inner.node_count(),
            self.inner.link_count(),
            self.inner.dangling_count()
        )
    }
}

/// An operator `P = dQ` over a graph together with a diffusion state.
#[pyclass(name = "Solver", module = "pyditer")]
pub struct PySolver {
    op: RankOperator,
    state: FluidState,
}

#[pymethods]
impl PySolver {
    #[new]
    #[pyo3(signature = (graph, damping=0.85, node_fluid_mode="consistent"))]
    fn new(graph: &PyGraph, damping: f64, node_fluid_mode: &str) -> PyResult<Self> {
        let mode: NodeFluidMode = node_fluid_mode.parse().map_err(value_err)?;
        let op = RankOperator::with_mode(graph.inner.clone(), damping, mode).map_err(value_err)?;
        let state = FluidState::init(&op);
        Ok(PySolver { op, state })
    }

    #[getter]
    fn graph(&self) -> PyGraph {
        PyGraph {
            inner: self.op.graph().clone(),
        }
    }

    #[getter]
    fn history(&self) -> Vec<f64> {
        self.state.history().to_vec()
    }

    #[getter]
    fn fluid(&self) -> Vec<f64> {
        self.state.fluid().to_vec()
    }

    #[getter]
    fn source(&self) -> Vec<f64> {
        self.state.source().to_vec()
    }

    /// Cumulative cost in iterations.
    #[getter]
    fn cost(&self) -> f64 {
        self.state.cost()
    }

    #[getter]
    fn links_used(&self) -> u64 {
        self.state.links_used()
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.state.steps()
    }

    fn step(&mut self, node: usize) -> PyResult<()> {
        if node >= self.op.node_count() {
            return Err(value_err(format!("node {node} out of range")));
        }
        self.state.diffuse_step(&self.op, NodeId(node));
        Ok(())
    }

    /// Diffuse until `target` (residual bound, or exact distance when
    /// `reference` is given) or `max_iterations`. Returns the trace as a list
    /// of `(cost, distance)`.
    #[pyo3(signature = (target=None, max_iterations=None, schedule="cyclic", sample_every=0.1, reference=None))]
    fn run(
        &mut self,
        target: Option<f64>,
        max_iterations: Option<f64>,
        schedule: &str,
        sample_every: f64,
        reference: Option<Vec<f64>>,
    ) -> PyResult<Vec<(f64, f64)>> {
        let schedule: Schedule = schedule.parse().map_err(value_err)?;
        let mut cfg = RunConfig {
            schedule,
            target_distance: target,
            max_iterations,
            sample_every,
            ..Default::default()
        };
        if let Some(r) = reference.as_deref() {
            cfg = cfg.exact(r);
        }
        let out = self.state.run(&self.op, &cfg).map_err(runtime_err)?;
        Ok(out.trace.samples().iter().map(|s| (s.cost, s.distance)).collect())
    }

    fn residual_bound(&self) -> f64 {
        self.state.residual_bound(&self.op)
    }

    fn exact_distance(&self, reference: Vec<f64>) -> PyResult<f64> {
        self.state.exact_distance(&reference).map_err(value_err)
    }

    /// Max-norm balance defect; against the state's own source by default.
    #[pyo3(signature = (f0=None))]
    fn check_balance(&self, f0: Option<Vec<f64>>) -> PyResult<f64> {
        match f0 {
            Some(f0) if f0.len() != self.op.node_count() => Err(value_err("f0 has the wrong size")),
            Some(f0) => Ok(self.state.check_balance(&self.op, &f0)),
            None => Ok(self.state.balance_defect(&self.op)),
        }
    }

    /// Add links to the graph and rebase the state. Returns the recorded
    /// effective initial fluid.
    fn update_links(&mut self, links: Vec<(usize, usize)>) -> PyResult<Vec<f64>> {
        let (g, changed): (diter::Graph, BTreeSet<NodeId>) = self
            .op
            .graph()
            .apply_mutations(&MutationBatch::Links(to_links(&links)))
            .map_err(value_err)?;
        let new_op =
            RankOperator::with_mode(g, self.op.damping(), self.op.node_fluid_mode()).map_err(value_err)?;
        let record =
            warm_restart::rebase_links(&mut self.state, &self.op, &new_op, &changed).map_err(value_err)?;
        self.op = new_op;
        Ok(record.f0_effective)
    }

    /// Append `k` isolated nodes and rebase the state.
    fn add_nodes(&mut self, k: usize) -> PyResult<Vec<f64>> {
        let (new_op, record) =
            warm_restart::rebase_add_nodes(&mut self.state, &self.op, k).map_err(value_err)?;
        self.op = new_op;
        Ok(record.f0_effective)
    }

    fn resumed_solution(&self, target: f64) -> PyResult<Vec<f64>> {
        warm_restart::resumed_solution(&self.state, &self.op, target).map_err(runtime_err)
    }
}

fn operator(graph: &PyGraph, damping: f64) -> PyResult<RankOperator> {
    RankOperator::new(graph.inner.clone(), damping).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (graph, damping=0.85, tol=1e-10))]
fn power_solve(graph: &PyGraph, damping: f64, tol: f64) -> PyResult<Vec<f64>> {
    Ok(baselines::power_solve(&operator(graph, damping)?, tol).map_err(runtime_err)?.x)
}

#[pyfunction]
#[pyo3(signature = (graph, damping=0.85, tol=1e-10))]
fn gauss_seidel_solve(graph: &PyGraph, damping: f64, tol: f64) -> PyResult<Vec<f64>> {
    Ok(baselines::gauss_seidel_solve(&operator(graph, damping)?, tol)
        .map_err(runtime_err)?
        .x)
}

#[pyfunction]
#[pyo3(signature = (graph, damping=0.85))]
fn dense_direct(graph: &PyGraph, damping: f64) -> PyResult<Vec<f64>> {
    Ok(baselines::dense_direct(&operator(graph, damping)?).map_err(runtime_err)?.x)
}

/// Links of one scenario S(m) draw.
#[pyfunction]
fn generate_scenario_s(graph: &PyGraph, epsilon: f64, m: usize, seed: u64) -> PyResult<Vec<(usize, usize)>> {
    let batch = experiments::generate_scenario_s(&graph.inner, epsilon, m, seed).map_err(value_err)?;
    Ok(batch.added_links().iter().map(|&(s, d)| (s.0, d.0)).collect())
}

/// Runs the solve / update / resume protocol and returns the report as a
/// dict.
#[pyfunction]
#[pyo3(signature = (graph, epsilon=0.001, m=1, seed=0, node_fraction=None, node_fluid_mode="consistent", damping=0.85, target=None))]
#[allow(clippy::too_many_arguments)]
fn update_experiment<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    epsilon: f64,
    m: usize,
    seed: u64,
    node_fraction: Option<f64>,
    node_fluid_mode: &str,
    damping: f64,
    target: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ExperimentConfig {
        damping,
        node_fluid_mode: node_fluid_mode.parse().map_err(value_err)?,
        target,
        ..Default::default()
    };
    let scenario = match node_fraction {
        Some(f) => ScenarioConfig::nodes(f),
        None => ScenarioConfig::links(epsilon, m, seed),
    };
    let report = PreparedExperiment::prepare(graph.inner.clone(), &cfg)
        .and_then(|p| p.run(&scenario))
        .map_err(runtime_err)?;
    let trace = |t: &diter::ConvergenceTrace| -> Vec<(f64, f64)> {
        t.samples().iter().map(|s| (s.cost, s.distance)).collect()
    };
    let d = PyDict::new(py);
    d.set_item("links_added", report.links_added)?;
    d.set_item("nodes_added", report.nodes_added)?;
    d.set_item("target", report.target)?;
    d.set_item("update_cost", report.update_cost)?;
    d.set_item("jump_distance", report.jump_distance)?;
    d.set_item("jump_bound", report.jump_bound)?;
    d.set_item("limit_shift", report.limit_shift)?;
    d.set_item("cost_to_recover", report.cost_to_recover)?;
    d.set_item("cost_scratch", report.cost_scratch)?;
    d.set_item("reuse_fraction", report.reuse_fraction)?;
    d.set_item("trace_before", trace(&report.trace_before))?;
    d.set_item("trace_after", trace(&report.trace_after))?;
    Ok(d)
}

#[pymodule]
fn pyditer(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PySolver>()?;
    m.add_function(wrap_pyfunction!(power_solve, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_seidel_solve, m)?)?;
    m.add_function(wrap_pyfunction!(dense_direct, m)?)?;
    m.add_function(wrap_pyfunction!(generate_scenario_s, m)?)?;
    m.add_function(wrap_pyfunction!(update_experiment, m)?)?;
    Ok(())
}
