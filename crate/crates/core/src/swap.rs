//! Double-edge-swap proposals: classification (CDM-preserving or not,
//! changing or not) and the Metropolis–Hastings proposal ratio for every
//! node-multiplicity case.
//!
//! A proposal replaces the oriented pair `(u,v),(x,y)` by `(u,x),(v,y)`.
//! Orientation is carried on the proposal, never in the store, so the same
//! machinery serves the class-restricted chain, the baseline chain and the
//! plain degree-preserving chain.

use crate::graph::{canon_pair, ColoredMultigraph, OccIdx, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapKind {
    /// CDM-preserving and produces a different multigraph.
    ChangingCdes,
    /// Leaves the multigraph unchanged (trivially CDM-preserving).
    NonChanging,
    /// Would alter the colored degree matrix.
    OutOfSpace,
    /// Degenerate node patterns the proposal loop discards before computing
    /// a ratio: all four slots on one vertex, or two vertices with exactly
    /// one self-loop. Both leave the state unchanged and are tallied with
    /// the non-changing outcomes.
    Skipped,
}

/// Proposal ratio as an exact integer fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RhoRatio {
    pub num: u64,
    pub den: u64,
}

impl RhoRatio {
    #[inline]
    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// A candidate double edge swap with its classification and, when changing,
/// the proposal ratio `rho` read from the live multiplicity counters.
#[derive(Debug, Clone)]
pub struct SwapProposal {
    pub first: OccIdx,
    pub second: OccIdx,
    /// Endpoints as stored, for staleness checks at application time.
    pub first_endpoints: (VertexId, VertexId),
    pub second_endpoints: (VertexId, VertexId),
    /// The oriented pair after any flip: `(u,v),(x,y)`.
    pub oriented: [(VertexId, VertexId); 2],
    /// Replacement pair `(u,x),(v,y)`.
    pub targets: [(VertexId, VertexId); 2],
    pub kind: SwapKind,
    /// Defined only for changing CDES proposals.
    pub rho: Option<RhoRatio>,
}

/// Build and classify the proposal for occurrences `first`, `second` with
/// the first edge optionally flipped.
pub fn propose(
    g: &ColoredMultigraph,
    first: OccIdx,
    second: OccIdx,
    flip_first: bool,
) -> SwapProposal {
    let fe = g.occ_endpoints(first);
    let se = g.occ_endpoints(second);
    let e1 = if flip_first { (fe.1, fe.0) } else { fe };
    let kind = classify(g, e1, se);
    let rho = (kind == SwapKind::ChangingCdes).then(|| compute_rho(g, e1, se));
    SwapProposal {
        first,
        second,
        first_endpoints: fe,
        second_endpoints: se,
        oriented: [e1, se],
        targets: [(e1.0, se.0), (e1.1, se.1)],
        kind,
        rho,
    }
}

fn distinct_nodes(u: VertexId, v: VertexId, x: VertexId, y: VertexId) -> usize {
    let mut seen = [u, v, x, y];
    seen.sort_unstable();
    1 + seen.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Classify the oriented proposal `(u,v),(x,y) -> (u,x),(v,y)`. Matches the
/// brute force of applying the swap to a copy and comparing colored degree
/// matrices and edge multisets, in O(1).
pub fn classify(
    g: &ColoredMultigraph,
    e1: (VertexId, VertexId),
    e2: (VertexId, VertexId),
) -> SwapKind {
    let (u, v) = e1;
    let (x, y) = e2;
    match distinct_nodes(u, v, x, y) {
        1 => return SwapKind::Skipped,
        2 if (u == v) != (x == y) => return SwapKind::Skipped,
        _ => {}
    }
    // Net colored-degree change over the at most four touched vertices:
    // each endpoint loses its old partner's color and gains the new one.
    let mut deltas: [(VertexId, u32, i32); 8] = [(0, 0, 0); 8];
    let mut len = 0;
    let mut bump = |vertex: VertexId, color: u32, d: i32| {
        for slot in deltas.iter_mut().take(len) {
            if slot.0 == vertex && slot.1 == color {
                slot.2 += d;
                return;
            }
        }
        deltas[len] = (vertex, color, d);
        len += 1;
    };
    bump(u, g.color(v), -1);
    bump(v, g.color(u), -1);
    bump(x, g.color(y), -1);
    bump(y, g.color(x), -1);
    bump(u, g.color(x), 1);
    bump(x, g.color(u), 1);
    bump(v, g.color(y), 1);
    bump(y, g.color(v), 1);
    if deltas.iter().take(len).any(|&(_, _, d)| d != 0) {
        return SwapKind::OutOfSpace;
    }
    let mut sources = [canon_pair(u, v), canon_pair(x, y)];
    let mut targets = [canon_pair(u, x), canon_pair(v, y)];
    sources.sort_unstable();
    targets.sort_unstable();
    if sources == targets {
        SwapKind::NonChanging
    } else {
        SwapKind::ChangingCdes
    }
}

/// Proposal ratio for a changing proposal, from live multiplicities.
///
/// The branch table covers every node pattern: four distinct nodes, three
/// with or without a self-loop, two with both slots self-loops, and two
/// joined by parallel edges. The remaining patterns are `Skipped` before a
/// ratio is requested.
pub fn compute_rho(
    g: &ColoredMultigraph,
    e1: (VertexId, VertexId),
    e2: (VertexId, VertexId),
) -> RhoRatio {
    let (u, v) = e1;
    let (x, y) = e2;
    let w_uv = g.multiplicity(u, v) as u64;
    let w_xy = g.multiplicity(x, y) as u64;
    let w_ux = g.multiplicity(u, x) as u64;
    let w_vy = g.multiplicity(v, y) as u64;
    debug_assert!(w_uv >= 1 && w_xy >= 1, "source occurrences must be present");
    match distinct_nodes(u, v, x, y) {
        4 => RhoRatio { num: (w_ux + 1) * (w_vy + 1), den: w_uv * w_xy },
        3 => {
            if u == v || x == y {
                RhoRatio { num: (w_ux + 1) * (w_vy + 1), den: 2 * w_uv * w_xy }
            } else {
                RhoRatio { num: 2 * (w_ux + 1) * (w_vy + 1), den: w_uv * w_xy }
            }
        }
        2 => {
            if u == v && x == y {
                RhoRatio { num: (w_ux + 2) * (w_ux + 1), den: 4 * w_uv * w_xy }
            } else {
                // Two parallel occurrences of the same pair; the changing
                // variant turns them into two self-loops.
                let w_uu = g.multiplicity(u, u) as u64;
                let w_vv = g.multiplicity(v, v) as u64;
                assert!(w_uv >= 2, "parallel case requires multiplicity >= 2");
                RhoRatio { num: 4 * (w_uu + 1) * (w_vv + 1), den: w_uv * (w_uv - 1) }
            }
        }
        _ => unreachable!("degenerate patterns are Skipped before rho is computed"),
    }
}

/// True when the swap's colored-degree deltas cancel. Debug-assert support
/// for `apply_swap`.
pub(crate) fn cdm_delta_is_zero(g: &ColoredMultigraph, swap: &SwapProposal) -> bool {
    classify(g, swap.oriented[0], swap.oriented[1]) != SwapKind::OutOfSpace
}
