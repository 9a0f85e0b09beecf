//! Convergence and comparison statistics: degree assortativity, the
//! valid-proposal probability `theta`, and same-color neighbor fractions.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ColoredMultigraph, VertexId};
use crate::sampler::TracePoint;

/// Pearson correlation of endpoint degrees over the 2m ordered endpoint
/// pairs; self-loops contribute both orientations. NaN when all degrees are
/// equal.
pub fn degree_assortativity(g: &ColoredMultigraph) -> Result<f64> {
    if g.m() == 0 {
        return Err(Error::InvalidInput("assortativity of an empty graph".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut sum_prod = 0.0;
    for (a, b) in g.canonical_edges() {
        let da = g.degree(a) as f64;
        let db = g.degree(b) as f64;
        sum += da + db;
        sum_sq += da * da + db * db;
        sum_prod += 2.0 * da * db;
    }
    let count = (2 * g.m()) as f64;
    let mean = sum / count;
    let variance = sum_sq / count - mean * mean;
    let covariance = sum_prod / count - mean * mean;
    Ok(covariance / variance)
}

/// Probability that a uniformly sampled ordered pair of distinct edge
/// occurrences shares a color class and, for bichromatic classes, draws the
/// pairing orientation: the entrywise ratio between the baseline and
/// class-restricted transition matrices.
pub fn theta(g: &ColoredMultigraph) -> Result<f64> {
    theta_parts(g).map(|(num, den)| num as f64 / den as f64)
}

/// `theta` as an exact fraction over `2 m (m - 1)`.
pub fn theta_parts(g: &ColoredMultigraph) -> Result<(u64, u64)> {
    let m = g.m() as u64;
    if m < 2 {
        return Err(Error::InvalidInput("theta requires at least two edges".into()));
    }
    let mut num = 0u64;
    for ((l, r), size) in g.class_sizes() {
        let s = size as u64;
        // Monochromatic classes count both orientations, bichromatic ones
        // only the pairing one.
        num += if l == r { 2 * s * (s - 1) } else { s * (s - 1) };
    }
    Ok((num, 2 * m * (m - 1)))
}

#[derive(Debug, Clone, Serialize)]
pub struct MStatistics {
    /// Mean same-color neighbor fraction over vertices of positive degree.
    pub mean: f64,
    /// Per-vertex fraction; `None` for isolated vertices.
    pub per_vertex: Vec<Option<f64>>,
}

/// Fraction of same-color neighbors per vertex and its average. Isolated
/// vertices have no defined fraction and are excluded from the mean.
pub fn m_statistics(g: &ColoredMultigraph) -> MStatistics {
    let mut per_vertex = Vec::with_capacity(g.n());
    let mut total = 0.0;
    let mut counted = 0usize;
    for v in 0..g.n() as VertexId {
        let d = g.degree(v);
        if d == 0 {
            per_vertex.push(None);
        } else {
            let mv = g.colored_degree(g.color(v), v) as f64 / d as f64;
            per_vertex.push(Some(mv));
            total += mv;
            counted += 1;
        }
    }
    let mean = if counted == 0 { f64::NAN } else { total / counted as f64 };
    MStatistics { mean, per_vertex }
}

/// Same-color fractions of the `k` highest-degree vertices, ties broken by
/// ascending vertex id.
pub fn top_degree_mv(g: &ColoredMultigraph, k: usize) -> Vec<(VertexId, Option<f64>)> {
    let stats = m_statistics(g);
    let mut order: Vec<VertexId> = (0..g.n() as VertexId).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    order
        .into_iter()
        .take(k)
        .map(|v| (v, stats.per_vertex[v as usize]))
        .collect()
}

/// Trace emission: one row per snapshot with the cumulative outcome tallies.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], mut w: W) -> Result<()> {
    writeln!(w, "iteration,assortativity,out_of_space,non_changing,accepted,rejected,lazy_hold")?;
    for p in trace {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.iteration,
            p.assortativity,
            p.tallies.out_of_space,
            p.tallies.non_changing,
            p.tallies.accepted,
            p.tallies.rejected,
            p.tallies.lazy_hold
        )?;
    }
    Ok(())
}
