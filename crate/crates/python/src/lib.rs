//! Python bindings: the colored multigraph type, chain sampling, the
//! summary statistics, the polarization score and the significance harness.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ccm_core::diagnostics;
use ccm_core::graph::ColoredMultigraph;
use ccm_core::io;
use ccm_core::oracle;
use ccm_core::polarization::{self, RwcConfig, ScoreKind};
use ccm_core::sampler::{
    self, Algorithm, ChainConfig, Laziness, TraceSpec, UniformTarget,
};

fn to_py_err(e: ccm_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse().map_err(to_py_err)
}

fn chain_config(
    algorithm: &str,
    iterations: Option<u64>,
    seed: u64,
    lazy: bool,
    m: usize,
) -> PyResult<ChainConfig> {
    Ok(ChainConfig {
        algorithm: parse_algorithm(algorithm)?,
        iterations: iterations.unwrap_or_else(|| sampler::default_iterations(m)),
        laziness: if lazy { Laziness::Half } else { Laziness::None },
        seed,
        trace: TraceSpec::Off,
        strict_periodicity: false,
    })
}

/// A vertex-colored multigraph with a fixed colored degree matrix.
#[pyclass(module = "ccm")]
#[derive(Clone)]
struct Graph {
    inner: ColoredMultigraph,
}

#[pymethods]
impl Graph {
    /// Build from per-vertex color ids (dense, starting at 0) and an edge
    /// multiset given as vertex-id pairs.
    #[new]
    fn new(colors: Vec<u32>, edges: Vec<(u32, u32)>) -> PyResult<Self> {
        Ok(Graph { inner: ColoredMultigraph::new(colors, &edges).map_err(to_py_err)? })
    }

    /// Load from a node-color file and an edge-list file.
    #[staticmethod]
    fn load(colors_path: &str, edges_path: &str) -> PyResult<Self> {
        Ok(Graph { inner: io::load_graph(colors_path, edges_path).map_err(to_py_err)? })
    }

    /// Write the color and edge files back out (canonically sorted).
    fn save(&self, colors_path: &str, edges_path: &str) -> PyResult<()> {
        let mut cw = std::fs::File::create(colors_path)?;
        io::write_colors(&self.inner, &mut cw).map_err(to_py_err)?;
        let mut ew = std::fs::File::create(edges_path)?;
        io::write_edge_list(&self.inner, &mut ew).map_err(to_py_err)?;
        Ok(())
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn num_colors(&self) -> u32 {
        self.inner.num_colors()
    }

    fn colors(&self) -> Vec<u32> {
        self.inner.colors().to_vec()
    }

    fn vertex_names(&self) -> Vec<String> {
        self.inner.vertex_names().to_vec()
    }

    /// Canonically sorted edge multiset as vertex-id pairs.
    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.canonical_edges()
    }

    /// Colored degree matrix as one row per color.
    fn cdm(&self) -> Vec<Vec<u32>> {
        let cdm = self.inner.cdm();
        (0..cdm.num_colors())
            .map(|l| (0..cdm.n()).map(|v| cdm.entry(l, v)).collect())
            .collect()
    }

    /// Joint color matrix (per-color-pair edge counts).
    fn jcm(&self) -> Vec<Vec<u64>> {
        let jcm = self.inner.jcm();
        let k = jcm.num_colors();
        (0..k).map(|l| (0..k).map(|r| jcm.entry(l, r)).collect()).collect()
    }

    fn theta(&self) -> PyResult<f64> {
        diagnostics::theta(&self.inner).map_err(to_py_err)
    }

    fn degree_assortativity(&self) -> PyResult<f64> {
        diagnostics::degree_assortativity(&self.inner).map_err(to_py_err)
    }

    /// Mean same-color neighbor fraction and the per-vertex values (`None`
    /// for isolated vertices).
    fn m_statistics(&self) -> (f64, Vec<Option<f64>>) {
        let stats = diagnostics::m_statistics(&self.inner);
        (stats.mean, stats.per_vertex)
    }

    fn top_degree_mv(&self, k: usize) -> Vec<(u32, Option<f64>)> {
        diagnostics::top_degree_mv(&self.inner, k)
    }

    /// One chain run; returns the sampled graph.
    #[pyo3(signature = (algorithm = "sirius", iterations = None, seed = 0, lazy = false))]
    fn sample(
        &self,
        algorithm: &str,
        iterations: Option<u64>,
        seed: u64,
        lazy: bool,
    ) -> PyResult<Graph> {
        let cfg = chain_config(algorithm, iterations, seed, lazy, self.inner.m())?;
        let result = sampler::run(self.inner.clone(), &cfg, &UniformTarget).map_err(to_py_err)?;
        Ok(Graph { inner: result.graph })
    }

    /// Independent samples from per-chain derived seeds.
    #[pyo3(signature = (samples, algorithm = "sirius", iterations = None, seed = 0, lazy = false, parallelism = 1))]
    fn sample_many(
        &self,
        samples: usize,
        algorithm: &str,
        iterations: Option<u64>,
        seed: u64,
        lazy: bool,
        parallelism: usize,
    ) -> PyResult<Vec<Graph>> {
        let cfg = chain_config(algorithm, iterations, seed, lazy, self.inner.m())?;
        let graphs =
            sampler::sample_ensemble(&self.inner, &cfg, &UniformTarget, samples, parallelism)
                .map_err(to_py_err)?;
        Ok(graphs.into_iter().map(|inner| Graph { inner }).collect())
    }

    /// Random-walk controversy score of the two-side community split.
    #[pyo3(signature = (restart = 0.15, influencers = 10))]
    fn rwc(&self, restart: f64, influencers: usize) -> PyResult<f64> {
        let cfg = RwcConfig { restart, influencers_per_side: influencers, ..RwcConfig::default() };
        polarization::rwc_score(&self.inner, &cfg).map_err(to_py_err)
    }

    /// Empirical significance of a polarization score against a null model.
    #[pyo3(signature = (score = "rwc", null = "sirius", samples = 100, iterations = None, seed = 0, restart = 0.15, influencers = 10, parallelism = 1))]
    #[allow(clippy::too_many_arguments)]
    fn significance<'py>(
        &self,
        py: Python<'py>,
        score: &str,
        null: &str,
        samples: usize,
        iterations: Option<u64>,
        seed: u64,
        restart: f64,
        influencers: usize,
        parallelism: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let score: ScoreKind = score.parse().map_err(to_py_err)?;
        let cfg = chain_config(null, iterations, seed, false, self.inner.m())?;
        let rwc_cfg =
            RwcConfig { restart, influencers_per_side: influencers, ..RwcConfig::default() };
        let report =
            polarization::significance_test(&self.inner, &cfg, score, samples, &rwc_cfg, parallelism)
                .map_err(to_py_err)?;
        let dict = PyDict::new(py);
        dict.set_item("score_name", report.score_name)?;
        dict.set_item("observed", report.observed)?;
        dict.set_item("nulls", report.nulls)?;
        dict.set_item("p_one_sided_ge", report.p_one_sided_ge)?;
        dict.set_item("p_one_sided_le", report.p_one_sided_le)?;
        dict.set_item("p_two_sided", report.p_two_sided)?;
        Ok(dict)
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n={}, m={}, colors={})",
            self.inner.n(),
            self.inner.m(),
            self.inner.num_colors()
        )
    }
}

/// Default chain length `ceil(m ln m)`.
#[pyfunction]
fn default_iterations(m: usize) -> u64 {
    sampler::default_iterations(m)
}

/// Enumerate the state space of the graph's colored degree matrix and check
/// the chain structure; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (graph, limit = 5_000))]
fn verify<'py>(py: Python<'py>, graph: &Graph, limit: usize) -> PyResult<Bound<'py, PyDict>> {
    let atlas = oracle::enumerate_states(&graph.inner, limit).map_err(to_py_err)?;
    let report = oracle::verify_chain_structure(&atlas);
    let dict = PyDict::new(py);
    dict.set_item("states", report.states)?;
    dict.set_item("strongly_connected", report.strongly_connected)?;
    dict.set_item("has_monochromatic_edge_pair", report.has_monochromatic_edge_pair)?;
    dict.set_item("has_repeated_foreign_color", report.has_repeated_foreign_color)?;
    dict.set_item("period", report.period)?;
    dict.set_item("aperiodic", report.aperiodic)?;
    dict.set_item("theta", report.theta)?;
    dict.set_item("stationary_uniform_max_dev_p", report.stationary_uniform_max_dev_p)?;
    dict.set_item("stationary_uniform_max_dev_p_b", report.stationary_uniform_max_dev_p_b)?;
    dict.set_item("slem_lazy_p", report.slem_lazy_p)?;
    dict.set_item("slem_lazy_p_b", report.slem_lazy_p_b)?;
    dict.set_item("entrywise_relation_max_dev", report.entrywise_relation_max_dev)?;
    dict.set_item("passed", report.passed)?;
    Ok(dict)
}

#[pymodule]
fn ccm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Graph>()?;
    m.add_function(wrap_pyfunction!(default_iterations, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
