//! Random Walk Controversy score with restart, and the null-model
//! significance pipeline.
//!
//! Vertices split into two sides by color; the `k` highest-degree vertices
//! of each side are absorbing. A walk starts (and restarts) uniformly over
//! the non-influential vertices of its side, steps proportionally to edge
//! multiplicities, and stops on first arrival at an influential vertex.
//! `P_XY` is the absorption probability at side `Y`'s influencers for a
//! side-`X` walk, conditioned on absorption; the score is
//! `P_AA * P_BB - P_AB * P_BA`.

use serde::Serialize;

use crate::diagnostics::m_statistics;
use crate::error::{Error, Result};
use crate::graph::{ColoredMultigraph, ColorId, VertexId};
use crate::sampler::{sample_ensemble, ChainConfig, UniformTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommunityMap {
    pub side_of_color: Vec<Side>,
}

impl CommunityMap {
    #[inline]
    pub fn side(&self, color: ColorId) -> Side {
        self.side_of_color[color as usize]
    }
}

/// Side A is the color with the most vertices (ties to the lowest color
/// id); side B collects all other colors.
pub fn map_communities(g: &ColoredMultigraph) -> Result<CommunityMap> {
    if g.num_colors() < 2 {
        return Err(Error::InvalidInput(
            "community mapping needs at least two colors".into(),
        ));
    }
    let mut population = vec![0usize; g.num_colors() as usize];
    for &c in g.colors() {
        population[c as usize] += 1;
    }
    let a_color = (0..g.num_colors())
        .max_by_key(|&c| (population[c as usize], std::cmp::Reverse(c)))
        .unwrap();
    let side_of_color = (0..g.num_colors())
        .map(|c| if c == a_color { Side::A } else { Side::B })
        .collect();
    Ok(CommunityMap { side_of_color })
}

#[derive(Debug, Clone, Serialize)]
pub struct RwcConfig {
    pub restart: f64,
    pub influencers_per_side: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RwcConfig {
    fn default() -> Self {
        RwcConfig {
            restart: 0.15,
            influencers_per_side: 10,
            tolerance: 1e-10,
            max_iterations: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RwcResult {
    pub score: f64,
    pub p_aa: f64,
    pub p_ab: f64,
    pub p_ba: f64,
    pub p_bb: f64,
    pub iterations: usize,
}

/// The `k` highest-degree vertices of each side, ties by ascending id.
pub fn influential_sets(
    g: &ColoredMultigraph,
    map: &CommunityMap,
    k: usize,
) -> (Vec<VertexId>, Vec<VertexId>) {
    let mut by_side: [Vec<VertexId>; 2] = [Vec::new(), Vec::new()];
    for v in 0..g.n() as VertexId {
        let side = map.side(g.color(v));
        by_side[(side == Side::B) as usize].push(v);
    }
    for side in by_side.iter_mut() {
        side.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
        side.truncate(k);
    }
    let [a, b] = by_side;
    (a, b)
}

struct WalkSystem {
    /// Neighbor lists with multiplicity weights; self-loops weighted twice.
    adjacency: Vec<Vec<(VertexId, f64)>>,
    /// Some(side) for absorbing vertices.
    absorbing: Vec<Option<Side>>,
    start_a: Vec<VertexId>,
    start_b: Vec<VertexId>,
}

fn build_system(g: &ColoredMultigraph, map: &CommunityMap, cfg: &RwcConfig) -> Result<WalkSystem> {
    if !(0.0..1.0).contains(&cfg.restart) || cfg.restart <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "restart probability must lie in (0, 1), got {}",
            cfg.restart
        )));
    }
    if cfg.influencers_per_side == 0 {
        return Err(Error::InvalidInput("need at least one influencer per side".into()));
    }
    let (inf_a, inf_b) = influential_sets(g, map, cfg.influencers_per_side);
    if inf_a.is_empty() || inf_b.is_empty() {
        return Err(Error::InvalidInput("a side has no vertices".into()));
    }
    let mut absorbing = vec![None; g.n()];
    for &v in &inf_a {
        absorbing[v as usize] = Some(Side::A);
    }
    for &v in &inf_b {
        absorbing[v as usize] = Some(Side::B);
    }
    let mut start_a = Vec::new();
    let mut start_b = Vec::new();
    for v in 0..g.n() as VertexId {
        if absorbing[v as usize].is_some() {
            continue;
        }
        match map.side(g.color(v)) {
            Side::A => start_a.push(v),
            Side::B => start_b.push(v),
        }
    }
    if start_a.is_empty() || start_b.is_empty() {
        return Err(Error::InvalidInput(
            "a side has no non-influential vertices to start walks from".into(),
        ));
    }
    let mut adjacency = vec![Vec::new(); g.n()];
    for (a, b) in g.canonical_edges() {
        let w = 1.0;
        if a == b {
            adjacency[a as usize].push((a, 2.0 * w));
        } else {
            adjacency[a as usize].push((b, w));
            adjacency[b as usize].push((a, w));
        }
    }
    Ok(WalkSystem { adjacency, absorbing, start_a, start_b })
}

impl WalkSystem {
    /// Absorption probabilities for walks started (and restarted) uniformly
    /// over `start`: returns (P[absorbed at side A influencer | absorbed],
    /// complement, iterations used).
    fn solve(
        &self,
        g: &ColoredMultigraph,
        start: &[VertexId],
        cfg: &RwcConfig,
    ) -> Result<(f64, f64, usize)> {
        let n = g.n();
        let alpha = cfg.restart;
        // f_a: eventually absorbed at side A; f_any: eventually absorbed.
        let mut f_a = vec![0.0f64; n];
        let mut f_any = vec![0.0f64; n];
        let mut next_a = vec![0.0f64; n];
        let mut next_any = vec![0.0f64; n];
        for it in 1..=cfg.max_iterations {
            let mean = |f: &[f64]| {
                start.iter().map(|&v| f[v as usize]).sum::<f64>() / start.len() as f64
            };
            let (restart_a, restart_any) = (mean(&f_a), mean(&f_any));
            let mut delta = 0.0f64;
            for v in 0..n {
                if self.absorbing[v].is_some() {
                    continue;
                }
                let deg = g.degree(v as VertexId) as f64;
                let (mut walk_a, mut walk_any) = (0.0, 0.0);
                if deg == 0.0 {
                    // Stranded walker: the step degenerates to a restart.
                    walk_a = restart_a;
                    walk_any = restart_any;
                } else {
                    for &(w, weight) in &self.adjacency[v] {
                        let p = weight / deg;
                        match self.absorbing[w as usize] {
                            Some(Side::A) => {
                                walk_a += p;
                                walk_any += p;
                            }
                            Some(Side::B) => walk_any += p,
                            None => {
                                walk_a += p * f_a[w as usize];
                                walk_any += p * f_any[w as usize];
                            }
                        }
                    }
                }
                next_a[v] = alpha * restart_a + (1.0 - alpha) * walk_a;
                next_any[v] = alpha * restart_any + (1.0 - alpha) * walk_any;
                delta = delta.max((next_a[v] - f_a[v]).abs());
                delta = delta.max((next_any[v] - f_any[v]).abs());
            }
            std::mem::swap(&mut f_a, &mut next_a);
            std::mem::swap(&mut f_any, &mut next_any);
            if delta < cfg.tolerance {
                let mean = |f: &[f64]| {
                    start.iter().map(|&v| f[v as usize]).sum::<f64>() / start.len() as f64
                };
                let (p_a, p_any) = (mean(&f_a), mean(&f_any));
                if p_any <= 0.0 {
                    return Err(Error::InvalidInput(
                        "no influential vertex is reachable from the start side".into(),
                    ));
                }
                return Ok((p_a / p_any, (p_any - p_a) / p_any, it));
            }
        }
        Err(Error::NonConvergence(cfg.max_iterations))
    }
}

pub fn rwc(g: &ColoredMultigraph, cfg: &RwcConfig, map: &CommunityMap) -> Result<RwcResult> {
    let system = build_system(g, map, cfg)?;
    // solve() reports (toward A, toward B) for either start side.
    let (p_aa, p_ab, it_a) = system.solve(g, &system.start_a, cfg)?;
    let (p_ba, p_bb, it_b) = system.solve(g, &system.start_b, cfg)?;
    Ok(RwcResult {
        score: p_aa * p_bb - p_ab * p_ba,
        p_aa,
        p_ab,
        p_ba,
        p_bb,
        iterations: it_a.max(it_b),
    })
}

/// Convenience entry point using the default community mapping.
pub fn rwc_score(g: &ColoredMultigraph, cfg: &RwcConfig) -> Result<f64> {
    let map = map_communities(g)?;
    Ok(rwc(g, cfg, &map)?.score)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Rwc,
    M,
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScoreKind::Rwc => "rwc",
            ScoreKind::M => "m",
        })
    }
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rwc" => Ok(ScoreKind::Rwc),
            "m" => Ok(ScoreKind::M),
            other => Err(Error::InvalidInput(format!("unknown score {other:?}"))),
        }
    }
}

pub fn compute_score(g: &ColoredMultigraph, kind: ScoreKind, rwc_cfg: &RwcConfig) -> Result<f64> {
    match kind {
        ScoreKind::Rwc => rwc_score(g, rwc_cfg),
        ScoreKind::M => Ok(m_statistics(g).mean),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SignificanceReport {
    pub score_name: String,
    pub observed: f64,
    pub nulls: Vec<f64>,
    pub p_one_sided_ge: f64,
    pub p_one_sided_le: f64,
    pub p_two_sided: f64,
    pub config: SignificanceConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignificanceConfig {
    pub chain: ChainConfig,
    pub samples: usize,
    pub rwc: RwcConfig,
}

/// Compare the observed score against `z` null-model samples; empirical
/// p-values use the add-one estimator `(1 + #extreme) / (z + 1)`.
pub fn significance_test(
    g: &ColoredMultigraph,
    chain_cfg: &ChainConfig,
    score: ScoreKind,
    z: usize,
    rwc_cfg: &RwcConfig,
    parallelism: usize,
) -> Result<SignificanceReport> {
    let observed = compute_score(g, score, rwc_cfg)?;
    let nulls: Vec<f64> = sample_ensemble(g, chain_cfg, &UniformTarget, z, parallelism)?
        .iter()
        .map(|h| compute_score(h, score, rwc_cfg))
        .collect::<Result<_>>()?;
    let ge = nulls.iter().filter(|&&s| s >= observed).count();
    let le = nulls.iter().filter(|&&s| s <= observed).count();
    let p_one_sided_ge = (1 + ge) as f64 / (z + 1) as f64;
    let p_one_sided_le = (1 + le) as f64 / (z + 1) as f64;
    Ok(SignificanceReport {
        score_name: score.to_string(),
        observed,
        nulls,
        p_one_sided_ge,
        p_one_sided_le,
        p_two_sided: (2.0 * p_one_sided_ge.min(p_one_sided_le)).min(1.0),
        config: SignificanceConfig {
            chain: chain_cfg.clone(),
            samples: z,
            rwc: rwc_cfg.clone(),
        },
    })
}
