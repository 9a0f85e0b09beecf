//! Markov chains over the space of multigraphs with a fixed colored degree
//! matrix: the class-restricted chain (`sirius`), the plain
//! Metropolis–Hastings baseline (`sirius-b`), and the degree-only
//! configuration-model chain (`cm`), plus laziness, tracing and ensembles.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use crate::diagnostics::degree_assortativity;
use crate::error::{Error, Result};
use crate::graph::{ColoredMultigraph, ColorId, OccIdx, VertexId};
use crate::swap::{compute_rho, propose, SwapKind, SwapProposal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Sirius,
    SiriusB,
    Cm,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Sirius => "sirius",
            Algorithm::SiriusB => "sirius-b",
            Algorithm::Cm => "cm",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sirius" => Ok(Algorithm::Sirius),
            "sirius-b" | "sirius_b" => Ok(Algorithm::SiriusB),
            "cm" => Ok(Algorithm::Cm),
            other => Err(Error::InvalidInput(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Laziness {
    None,
    Half,
}

/// What to record along the run: nothing, a fixed number of evenly spaced
/// checkpoints, or a snapshot every `n` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceSpec {
    Off,
    Checkpoints(u32),
    EveryN(u64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainConfig {
    pub algorithm: Algorithm,
    pub iterations: u64,
    pub laziness: Laziness,
    pub seed: u64,
    pub trace: TraceSpec,
    /// Refuse to run instead of auto-enabling laziness when neither
    /// aperiodicity condition holds.
    pub strict_periodicity: bool,
}

impl ChainConfig {
    pub fn new(algorithm: Algorithm, iterations: u64, seed: u64) -> Self {
        ChainConfig {
            algorithm,
            iterations,
            laziness: Laziness::None,
            seed,
            trace: TraceSpec::Off,
            strict_periodicity: false,
        }
    }
}

/// Default iteration count `ceil(m ln m)`.
pub fn default_iterations(m: usize) -> u64 {
    if m < 2 {
        return 0;
    }
    let m = m as f64;
    (m * m.ln()).ceil() as u64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTallies {
    pub out_of_space: u64,
    pub non_changing: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub lazy_hold: u64,
}

impl OutcomeTallies {
    pub fn total(&self) -> u64 {
        self.out_of_space + self.non_changing + self.accepted + self.rejected + self.lazy_hold
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub iteration: u64,
    pub assortativity: f64,
    pub tallies: OutcomeTallies,
}

#[derive(Debug)]
pub struct RunResult {
    pub graph: ColoredMultigraph,
    pub tallies: OutcomeTallies,
    pub trace: Vec<TracePoint>,
    /// Laziness was switched on because neither aperiodicity condition held.
    pub auto_lazy: bool,
}

/// Unnormalized target weight over states. Chains only ever need the weight
/// ratio of the proposed state to the current one, which every supported
/// target can read off the swap's local delta.
pub trait TargetWeight: Sync {
    /// `pi(H) / pi(G)` for the proposed move.
    fn weight_ratio(&self, g: &ColoredMultigraph, proposal: &SwapProposal) -> f64;
    /// Weight of a whole state; used by the exact-matrix oracle.
    fn state_weight(&self, g: &ColoredMultigraph) -> f64;
}

/// Uniform distribution over the state space.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformTarget;

impl TargetWeight for UniformTarget {
    fn weight_ratio(&self, _g: &ColoredMultigraph, _p: &SwapProposal) -> f64 {
        1.0
    }
    fn state_weight(&self, _g: &ColoredMultigraph) -> f64 {
        1.0
    }
}

/// `pi(G)` proportional to `base^(self-loop occurrences of G)`.
#[derive(Debug, Clone, Copy)]
pub struct SelfLoopBias {
    pub base: f64,
}

impl TargetWeight for SelfLoopBias {
    fn weight_ratio(&self, _g: &ColoredMultigraph, p: &SwapProposal) -> f64 {
        let loops = |pairs: &[(VertexId, VertexId); 2]| {
            pairs.iter().filter(|(a, b)| a == b).count() as i32
        };
        self.base.powi(loops(&p.targets) - loops(&p.oriented))
    }
    fn state_weight(&self, g: &ColoredMultigraph) -> f64 {
        self.base.powi(g.self_loop_count() as i32)
    }
}

/// Seedable generator used by all chains: 128-bit PCG.
pub type ChainRng = Pcg64Mcg;

pub fn chain_rng(seed: u64) -> ChainRng {
    Pcg64Mcg::new(0xcafe_f00d_d15e_a5e5_u128 ^ ((seed as u128) << 32 | seed as u128))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-chain seed for ensemble member `index`; stable for a given library
/// version.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5bf0_3635)))
}

/// Why the chain is aperiodic without laziness, if it is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "condition")]
pub enum AperiodicityWitness {
    /// Some color has at least two monochromatic edges.
    MonochromaticEdgePair { color: ColorId },
    /// Some vertex has at least two neighbors of one foreign color.
    RepeatedForeignColor { vertex: VertexId, color: ColorId },
}

pub fn aperiodicity_condition(g: &ColoredMultigraph) -> Option<AperiodicityWitness> {
    for (key, size) in g.class_sizes() {
        if key.0 == key.1 && size >= 2 {
            return Some(AperiodicityWitness::MonochromaticEdgePair { color: key.0 });
        }
    }
    for v in 0..g.n() as VertexId {
        for l in 0..g.num_colors() {
            if l != g.color(v) && g.colored_degree(l, v) >= 2 {
                return Some(AperiodicityWitness::RepeatedForeignColor { vertex: v, color: l });
            }
        }
    }
    None
}

/// Uniform sampling over occurrences of classes with at least two members.
/// Class sizes are determined by the CDM, so the table stays valid for the
/// whole run of a CDM-preserving chain.
struct EligibleClasses {
    /// (class id, cumulative occurrence count).
    cumulative: Vec<(u32, usize)>,
    total: usize,
}

impl EligibleClasses {
    fn new(g: &ColoredMultigraph) -> Self {
        let mut cumulative = Vec::new();
        let mut total = 0;
        for class in 0..g.num_classes() as u32 {
            let size = g.class_size(class);
            if size >= 2 {
                total += size;
                cumulative.push((class, total));
            }
        }
        EligibleClasses { cumulative, total }
    }

    fn sample<R: Rng + ?Sized>(&self, g: &ColoredMultigraph, rng: &mut R) -> Option<OccIdx> {
        if self.total == 0 {
            return None;
        }
        let r = rng.random_range(0..self.total);
        let i = self.cumulative.partition_point(|&(_, cum)| cum <= r);
        let (class, cum_end) = self.cumulative[i];
        let offset = g.class_size(class) - (cum_end - r);
        Some(g.class_occ_at(class, offset))
    }
}

fn mh_decide<R: Rng + ?Sized>(
    g: &mut ColoredMultigraph,
    proposal: &SwapProposal,
    target: &dyn TargetWeight,
    rng: &mut R,
    tallies: &mut OutcomeTallies,
) {
    match proposal.kind {
        SwapKind::Skipped | SwapKind::NonChanging => tallies.non_changing += 1,
        SwapKind::OutOfSpace => tallies.out_of_space += 1,
        SwapKind::ChangingCdes => {
            let accept = proposal.rho.expect("changing proposals carry rho").as_f64()
                * target.weight_ratio(g, proposal);
            if rng.random::<f64>() < accept {
                g.apply_swap(proposal).expect("freshly proposed swap");
                tallies.accepted += 1;
            } else {
                tallies.rejected += 1;
            }
        }
    }
}

fn sirius_step<R: Rng + ?Sized>(
    g: &mut ColoredMultigraph,
    eligible: &EligibleClasses,
    target: &dyn TargetWeight,
    rng: &mut R,
    tallies: &mut OutcomeTallies,
) {
    let Some(first) = eligible.sample(g, rng) else {
        // No class can form a changing CDES; the chain is stuck at its
        // single state.
        tallies.non_changing += 1;
        return;
    };
    let second = g
        .sample_class_edge_excluding(first, rng)
        .expect("eligible classes have at least two occurrences");
    let (u, v) = g.occ_endpoints(first);
    // Bichromatic edges are stored with the lower color first, so the flip
    // pairs matching-color endpoints; monochromatic pairs choose one of the
    // two swaps by coin.
    let flip = if g.color(u) != g.color(v) { true } else { rng.random_bool(0.5) };
    let proposal = propose(g, first, second, flip);
    debug_assert_ne!(
        proposal.kind,
        SwapKind::OutOfSpace,
        "class-restricted proposals always preserve the CDM"
    );
    mh_decide(g, &proposal, target, rng, tallies);
}

fn sample_distinct_pair<R: Rng + ?Sized>(m: usize, rng: &mut R) -> (u32, u32) {
    let i = rng.random_range(0..m);
    // Map the excluded slot to the tail: exact uniformity over the rest.
    let mut j = rng.random_range(0..m - 1);
    if j == i {
        j = m - 1;
    }
    (i as u32, j as u32)
}

fn sirius_b_step<R: Rng + ?Sized>(
    g: &mut ColoredMultigraph,
    target: &dyn TargetWeight,
    rng: &mut R,
    tallies: &mut OutcomeTallies,
) {
    if g.m() < 2 {
        tallies.non_changing += 1;
        return;
    }
    let (i, j) = sample_distinct_pair(g.m(), rng);
    let flip = rng.random_bool(0.5);
    let proposal = propose(g, OccIdx(i), OccIdx(j), flip);
    mh_decide(g, &proposal, target, rng, tallies);
}

fn cm_step<R: Rng + ?Sized>(
    g: &mut ColoredMultigraph,
    target: &dyn TargetWeight,
    rng: &mut R,
    tallies: &mut OutcomeTallies,
) {
    if g.m() < 2 {
        tallies.non_changing += 1;
        return;
    }
    let (i, j) = sample_distinct_pair(g.m(), rng);
    let flip = rng.random_bool(0.5);
    let proposal = propose(g, OccIdx(i), OccIdx(j), flip);
    match proposal.kind {
        SwapKind::Skipped | SwapKind::NonChanging => tallies.non_changing += 1,
        // The degree-only chain ignores colors: any changing swap is a move.
        SwapKind::ChangingCdes | SwapKind::OutOfSpace => {
            let rho = proposal
                .rho
                .unwrap_or_else(|| compute_rho(g, proposal.oriented[0], proposal.oriented[1]));
            let accept = rho.as_f64() * target.weight_ratio(g, &proposal);
            if rng.random::<f64>() < accept {
                g.apply_swap(&proposal).expect("freshly proposed swap");
                tallies.accepted += 1;
            } else {
                tallies.rejected += 1;
            }
        }
    }
}

fn trace_iterations(spec: TraceSpec, steps: u64) -> Vec<u64> {
    match spec {
        TraceSpec::Off => Vec::new(),
        TraceSpec::EveryN(stride) => {
            let stride = stride.max(1);
            (1..=steps / stride).map(|k| k * stride).collect()
        }
        TraceSpec::Checkpoints(count) => {
            if steps == 0 || count == 0 {
                return Vec::new();
            }
            let mut points: Vec<u64> =
                (1..=count as u64).map(|k| (k * steps).div_ceil(count as u64)).collect();
            points.dedup();
            points
        }
    }
}

/// Run the configured chain, seeding the generator from the config.
pub fn run(g: ColoredMultigraph, cfg: &ChainConfig, target: &dyn TargetWeight) -> Result<RunResult> {
    let mut rng = chain_rng(cfg.seed);
    run_with_rng(g, cfg, target, &mut rng)
}

pub fn run_with_rng<R: Rng + ?Sized>(
    g: ColoredMultigraph,
    cfg: &ChainConfig,
    target: &dyn TargetWeight,
    rng: &mut R,
) -> Result<RunResult> {
    run_observed(g, cfg, target, rng, |_| {})
}

/// As `run_with_rng`, invoking `observer` on the state after every inner
/// step. Lets callers histogram visited states against an enumerated space.
pub fn run_observed<R: Rng + ?Sized, F: FnMut(&ColoredMultigraph)>(
    mut g: ColoredMultigraph,
    cfg: &ChainConfig,
    target: &dyn TargetWeight,
    rng: &mut R,
    mut observer: F,
) -> Result<RunResult> {
    let mut laziness = cfg.laziness;
    let mut auto_lazy = false;
    if matches!(cfg.algorithm, Algorithm::Sirius | Algorithm::SiriusB)
        && laziness == Laziness::None
        && cfg.iterations > 0
        && aperiodicity_condition(&g).is_none()
    {
        if cfg.strict_periodicity {
            return Err(Error::Periodic(
                "no monochromatic edge pair and no vertex with two same-foreign-color \
                 neighbors; enable laziness to guarantee convergence"
                    .into(),
            ));
        }
        laziness = Laziness::Half;
        auto_lazy = true;
    }
    // A lazy chain over 2t nominal steps holds for the failed coin flips;
    // running the survivors back to back is equivalent in law.
    let (steps, lazy_hold) = match laziness {
        Laziness::None => (cfg.iterations, 0),
        Laziness::Half => {
            let nominal = 2 * cfg.iterations;
            let k = if nominal == 0 {
                0
            } else {
                Binomial::new(nominal, 0.5).expect("valid binomial").sample(rng)
            };
            (k, nominal - k)
        }
    };
    let mut tallies = OutcomeTallies { lazy_hold, ..OutcomeTallies::default() };
    let schedule = trace_iterations(cfg.trace, steps);
    let mut trace = Vec::with_capacity(schedule.len());
    let mut next_snapshot = 0;
    let eligible = match cfg.algorithm {
        Algorithm::Sirius => Some(EligibleClasses::new(&g)),
        _ => None,
    };
    for it in 1..=steps {
        match cfg.algorithm {
            Algorithm::Sirius => {
                sirius_step(&mut g, eligible.as_ref().unwrap(), target, rng, &mut tallies)
            }
            Algorithm::SiriusB => sirius_b_step(&mut g, target, rng, &mut tallies),
            Algorithm::Cm => cm_step(&mut g, target, rng, &mut tallies),
        }
        observer(&g);
        if next_snapshot < schedule.len() && schedule[next_snapshot] == it {
            trace.push(TracePoint {
                iteration: it,
                assortativity: degree_assortativity(&g).unwrap_or(f64::NAN),
                tallies,
            });
            next_snapshot += 1;
        }
    }
    Ok(RunResult { graph: g, tallies, trace, auto_lazy })
}

/// Baseline variant that keeps proposing until `valid_steps` proposals were
/// classified in space (accepted, rejected or non-changing); the benchmark
/// mode for running-time comparisons at equal effective length.
pub fn run_sirius_b_until_valid<R: Rng + ?Sized>(
    mut g: ColoredMultigraph,
    valid_steps: u64,
    target: &dyn TargetWeight,
    rng: &mut R,
) -> Result<RunResult> {
    if valid_steps > 0 {
        let same_class_pair = g.class_sizes().iter().any(|&(_, s)| s >= 2);
        let shared_vertex = (0..g.n() as VertexId).any(|v| g.degree(v) >= 2);
        if g.m() < 2 || (!same_class_pair && !shared_vertex) {
            return Err(Error::InvalidInput(
                "every proposal is out of space; the valid-step target is unreachable".into(),
            ));
        }
    }
    let mut tallies = OutcomeTallies::default();
    while tallies.accepted + tallies.rejected + tallies.non_changing < valid_steps {
        sirius_b_step(&mut g, target, rng, &mut tallies);
    }
    Ok(RunResult { graph: g, tallies, trace: Vec::new(), auto_lazy: false })
}

/// Run `z` independently seeded chains (seed_i derived from `cfg.seed` and
/// the chain index) on clones of `g`, at most `parallelism` at a time.
/// Results are ordered by chain index regardless of completion order.
pub fn run_ensemble(
    g: &ColoredMultigraph,
    cfg: &ChainConfig,
    target: &dyn TargetWeight,
    z: usize,
    parallelism: usize,
) -> Result<Vec<RunResult>> {
    if z == 0 {
        return Err(Error::InvalidInput("ensemble size must be at least 1".into()));
    }
    let workers = parallelism.clamp(1, z);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<RunResult>>>> =
        (0..z).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= z {
                    break;
                }
                let chain_cfg = ChainConfig {
                    seed: derive_seed(cfg.seed, i as u64),
                    ..cfg.clone()
                };
                let result = run(g.clone(), &chain_cfg, target);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

/// As `run_ensemble`, discarding diagnostics.
pub fn sample_ensemble(
    g: &ColoredMultigraph,
    cfg: &ChainConfig,
    target: &dyn TargetWeight,
    z: usize,
    parallelism: usize,
) -> Result<Vec<ColoredMultigraph>> {
    Ok(run_ensemble(g, cfg, target, z, parallelism)?
        .into_iter()
        .map(|r| r.graph)
        .collect())
}
