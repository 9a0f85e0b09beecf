//! Vertex-colored multigraph with O(1) expected-time multiplicity queries,
//! O(1) uniform edge-occurrence sampling per color class, and O(1) swap
//! application.
//!
//! Edge occurrences live in flat arrays with swap-pop deletion. Each
//! occurrence carries back-pointers into its color-class list so that a
//! removal touches a constant number of entries. Bichromatic occurrences are
//! stored with the lower-color endpoint first, monochromatic ones with the
//! lower vertex id first; samplers rely on the bichromatic convention.

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::swap::{SwapKind, SwapProposal};

pub type VertexId = u32;
pub type ColorId = u32;

/// Handle to a single edge occurrence. Valid until the next mutation of the
/// graph it was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OccIdx(pub u32);

/// Canonical (min, max) form of an unordered vertex pair.
#[inline]
pub fn canon_pair(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy)]
struct Occurrence {
    a: VertexId,
    b: VertexId,
    class: u32,
    pos_in_class: u32,
}

#[derive(Debug, Clone)]
pub struct ColoredMultigraph {
    color_of: Vec<ColorId>,
    num_colors: u32,
    vertex_names: Vec<String>,
    color_names: Vec<String>,
    occs: Vec<Occurrence>,
    /// Color-pair key of each class, `key.0 <= key.1`.
    class_keys: Vec<(ColorId, ColorId)>,
    /// Occurrence indices per class, unordered.
    class_occs: Vec<Vec<u32>>,
    class_index: FxHashMap<(ColorId, ColorId), u32>,
    multiplicity: FxHashMap<(VertexId, VertexId), u32>,
    /// Row-major `num_colors x n` colored degrees.
    colored_degree: Vec<u32>,
    degree: Vec<u32>,
}

impl ColoredMultigraph {
    /// Build a graph from per-vertex colors and an edge multiset. Color ids
    /// must be dense (`0..num_colors`); vertex names default to the ids.
    pub fn new(color_of: Vec<ColorId>, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let vertex_names = (0..color_of.len()).map(|v| v.to_string()).collect();
        let num_colors = color_of.iter().max().map_or(0, |&c| c + 1);
        let color_names = (0..num_colors).map(|c| c.to_string()).collect();
        Self::with_names(color_of, edges, vertex_names, color_names)
    }

    pub fn with_names(
        color_of: Vec<ColorId>,
        edges: &[(VertexId, VertexId)],
        vertex_names: Vec<String>,
        color_names: Vec<String>,
    ) -> Result<Self> {
        let n = color_of.len();
        let num_colors = color_names.len() as u32;
        if vertex_names.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} vertex names for {} vertices",
                vertex_names.len(),
                n
            )));
        }
        for (v, &c) in color_of.iter().enumerate() {
            if c >= num_colors {
                return Err(Error::InvalidInput(format!(
                    "vertex {v} has color id {c}, but only {num_colors} colors are declared"
                )));
            }
        }
        let mut g = ColoredMultigraph {
            color_of,
            num_colors,
            vertex_names,
            color_names,
            occs: Vec::with_capacity(edges.len()),
            class_keys: Vec::new(),
            class_occs: Vec::new(),
            class_index: FxHashMap::default(),
            multiplicity: FxHashMap::default(),
            colored_degree: vec![0; num_colors as usize * n],
            degree: vec![0; n],
        };
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({a},{b}) references a vertex outside 0..{n}"
                )));
            }
            g.insert_occurrence(a, b);
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.color_of.len()
    }

    /// Number of edge occurrences, `m`.
    #[inline]
    pub fn m(&self) -> usize {
        self.occs.len()
    }

    #[inline]
    pub fn num_colors(&self) -> u32 {
        self.num_colors
    }

    #[inline]
    pub fn color(&self, v: VertexId) -> ColorId {
        self.color_of[v as usize]
    }

    pub fn colors(&self) -> &[ColorId] {
        &self.color_of
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> u32 {
        self.degree[v as usize]
    }

    /// `l`-colored degree of `v`: occurrences of neighbors of color `l`,
    /// a self-loop at `v` counting twice towards its own color.
    #[inline]
    pub fn colored_degree(&self, l: ColorId, v: VertexId) -> u32 {
        self.colored_degree[l as usize * self.n() + v as usize]
    }

    /// Number of occurrences of the unordered pair `{u, v}`.
    #[inline]
    pub fn multiplicity(&self, u: VertexId, v: VertexId) -> u32 {
        self.multiplicity.get(&canon_pair(u, v)).copied().unwrap_or(0)
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v as usize]
    }

    pub fn color_name(&self, c: ColorId) -> &str {
        &self.color_names[c as usize]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    pub fn color_names(&self) -> &[String] {
        &self.color_names
    }

    /// Stored endpoints of an occurrence (bichromatic: lower color first).
    #[inline]
    pub fn occ_endpoints(&self, idx: OccIdx) -> (VertexId, VertexId) {
        let o = &self.occs[idx.0 as usize];
        (o.a, o.b)
    }

    #[inline]
    pub fn class_of_occ(&self, idx: OccIdx) -> u32 {
        self.occs[idx.0 as usize].class
    }

    pub fn num_classes(&self) -> usize {
        self.class_keys.len()
    }

    pub fn class_key(&self, class: u32) -> (ColorId, ColorId) {
        self.class_keys[class as usize]
    }

    pub fn class_size(&self, class: u32) -> usize {
        self.class_occs[class as usize].len()
    }

    pub fn class_occurrences(&self, class: u32) -> impl Iterator<Item = OccIdx> + '_ {
        self.class_occs[class as usize].iter().map(|&i| OccIdx(i))
    }

    #[inline]
    pub fn class_occ_at(&self, class: u32, pos: usize) -> OccIdx {
        OccIdx(self.class_occs[class as usize][pos])
    }

    pub fn self_loop_count(&self) -> usize {
        self.occs.iter().filter(|o| o.a == o.b).count()
    }

    /// Sizes of the non-empty color-pair classes, keyed by color pair.
    pub fn class_sizes(&self) -> Vec<((ColorId, ColorId), usize)> {
        let mut sizes: Vec<_> = self
            .class_keys
            .iter()
            .zip(&self.class_occs)
            .filter(|(_, occs)| !occs.is_empty())
            .map(|(&key, occs)| (key, occs.len()))
            .collect();
        sizes.sort_unstable();
        sizes
    }

    /// One edge occurrence uniformly at random.
    pub fn sample_edge_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<OccIdx> {
        if self.occs.is_empty() {
            return Err(Error::InvalidInput("cannot sample from an empty edge multiset".into()));
        }
        Ok(OccIdx(rng.random_range(0..self.occs.len()) as u32))
    }

    /// Uniform occurrence from the class of `excluded`, excluding exactly
    /// that occurrence (other copies of the same pair stay eligible). The
    /// excluded slot is mapped to the list tail so a single draw over the
    /// first `size - 1` slots is exactly uniform.
    pub fn sample_class_edge_excluding<R: Rng + ?Sized>(
        &self,
        excluded: OccIdx,
        rng: &mut R,
    ) -> Result<OccIdx> {
        let occ = &self.occs[excluded.0 as usize];
        let list = &self.class_occs[occ.class as usize];
        if list.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "class {:?} has a single occurrence; nothing to pair it with",
                self.class_keys[occ.class as usize]
            )));
        }
        let mut r = rng.random_range(0..list.len() - 1);
        if r == occ.pos_in_class as usize {
            r = list.len() - 1;
        }
        Ok(OccIdx(list[r]))
    }

    /// Apply a double edge swap: remove the two source occurrences and insert
    /// the proposal's targets. Degree sequence is preserved for any DES; the
    /// CDM is preserved exactly when the proposal is a CDES.
    pub fn apply_swap(&mut self, swap: &SwapProposal) -> Result<()> {
        let i = swap.first.0 as usize;
        let j = swap.second.0 as usize;
        if i == j {
            return Err(Error::StaleSwap("swap references the same occurrence twice".into()));
        }
        for (idx, expect) in [(i, swap.first_endpoints), (j, swap.second_endpoints)] {
            let live = self
                .occs
                .get(idx)
                .map(|o| (o.a, o.b) == expect)
                .unwrap_or(false);
            if !live {
                return Err(Error::StaleSwap(format!(
                    "occurrence {idx} no longer holds endpoints {expect:?}"
                )));
            }
        }
        debug_assert!(
            swap.kind != SwapKind::ChangingCdes || crate::swap::cdm_delta_is_zero(self, swap),
            "changing CDES must leave the colored degree matrix untouched"
        );
        // Remove the higher index first so the lower one stays valid.
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        self.remove_occurrence(hi);
        self.remove_occurrence(lo);
        let [t1, t2] = swap.targets;
        self.insert_occurrence(t1.0, t1.1);
        self.insert_occurrence(t2.0, t2.1);
        Ok(())
    }

    /// Colored degree matrix read from the maintained counters.
    pub fn cdm(&self) -> ColoredDegreeMatrix {
        ColoredDegreeMatrix {
            num_colors: self.num_colors,
            n: self.n() as u32,
            entries: self.colored_degree.clone(),
        }
    }

    /// Joint color matrix, derived from the CDM by row summation.
    pub fn jcm(&self) -> JointColorMatrix {
        self.cdm().jcm(&self.color_of)
    }

    /// Edge multiset as lexicographically sorted canonical pairs. Used as
    /// the canonical state encoding and for emission.
    pub fn canonical_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut edges: Vec<_> = self.occs.iter().map(|o| canon_pair(o.a, o.b)).collect();
        edges.sort_unstable();
        edges
    }

    /// Multiset equality of the edge sets plus color equality.
    pub fn same_multigraph(&self, other: &ColoredMultigraph) -> bool {
        self.color_of == other.color_of && self.canonical_edges() == other.canonical_edges()
    }

    fn canonical_orientation(&self, a: VertexId, b: VertexId) -> (VertexId, VertexId) {
        let (ca, cb) = (self.color_of[a as usize], self.color_of[b as usize]);
        if ca < cb {
            (a, b)
        } else if cb < ca {
            (b, a)
        } else {
            canon_pair(a, b)
        }
    }

    fn insert_occurrence(&mut self, a: VertexId, b: VertexId) {
        let (a, b) = self.canonical_orientation(a, b);
        let key = {
            let (ca, cb) = (self.color_of[a as usize], self.color_of[b as usize]);
            if ca <= cb {
                (ca, cb)
            } else {
                (cb, ca)
            }
        };
        let class = match self.class_index.get(&key) {
            Some(&c) => c,
            None => {
                let c = self.class_keys.len() as u32;
                self.class_keys.push(key);
                self.class_occs.push(Vec::new());
                self.class_index.insert(key, c);
                c
            }
        };
        let idx = self.occs.len() as u32;
        let list = &mut self.class_occs[class as usize];
        let pos = list.len() as u32;
        list.push(idx);
        self.occs.push(Occurrence { a, b, class, pos_in_class: pos });
        *self.multiplicity.entry(canon_pair(a, b)).or_insert(0) += 1;
        let n = self.n();
        self.colored_degree[self.color_of[b as usize] as usize * n + a as usize] += 1;
        self.colored_degree[self.color_of[a as usize] as usize * n + b as usize] += 1;
        self.degree[a as usize] += 1;
        self.degree[b as usize] += 1;
    }

    fn remove_occurrence(&mut self, idx: usize) {
        let occ = self.occs[idx];
        // Swap-pop out of the class list, repointing the member that moved.
        let list = &mut self.class_occs[occ.class as usize];
        let pos = occ.pos_in_class as usize;
        let last = list.len() - 1;
        list.swap(pos, last);
        list.pop();
        if pos < list.len() {
            let moved = list[pos] as usize;
            self.occs[moved].pos_in_class = pos as u32;
        }
        let key = canon_pair(occ.a, occ.b);
        let count = self.multiplicity.get_mut(&key).expect("multiplicity entry");
        *count -= 1;
        if *count == 0 {
            self.multiplicity.remove(&key);
        }
        let n = self.n();
        self.colored_degree[self.color_of[occ.b as usize] as usize * n + occ.a as usize] -= 1;
        self.colored_degree[self.color_of[occ.a as usize] as usize * n + occ.b as usize] -= 1;
        self.degree[occ.a as usize] -= 1;
        self.degree[occ.b as usize] -= 1;
        // Swap-pop out of the global store, repointing the class entry of
        // the occurrence that moved into the hole.
        let last = self.occs.len() - 1;
        self.occs.swap(idx, last);
        self.occs.pop();
        if idx < self.occs.len() {
            let moved = self.occs[idx];
            self.class_occs[moved.class as usize][moved.pos_in_class as usize] = idx as u32;
        }
    }

    /// Recompute every index from the raw occurrence list and compare with
    /// the maintained state. Test support; O(n + m).
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        let edges: Vec<_> = self.occs.iter().map(|o| (o.a, o.b)).collect();
        let fresh = ColoredMultigraph::with_names(
            self.color_of.clone(),
            &edges,
            self.vertex_names.clone(),
            self.color_names.clone(),
        )
        .map_err(|e| e.to_string())?;
        if fresh.multiplicity != self.multiplicity {
            return Err("multiplicity map out of sync".into());
        }
        if fresh.colored_degree != self.colored_degree {
            return Err("colored degrees out of sync".into());
        }
        if fresh.degree != self.degree {
            return Err("degrees out of sync".into());
        }
        let mut expect_deg = vec![0u64; self.n()];
        for o in &self.occs {
            expect_deg[o.a as usize] += 1;
            expect_deg[o.b as usize] += 1;
        }
        for (v, &expected) in expect_deg.iter().enumerate() {
            let by_color: u64 = (0..self.num_colors)
                .map(|l| self.colored_degree(l, v as u32) as u64)
                .sum();
            if by_color != expected {
                return Err(format!("colored degrees of vertex {v} do not sum to its degree"));
            }
        }
        let total: usize = self.class_occs.iter().map(|l| l.len()).sum();
        if total != self.occs.len() {
            return Err("class lists do not partition the occurrence store".into());
        }
        for (cls, list) in self.class_occs.iter().enumerate() {
            for (pos, &i) in list.iter().enumerate() {
                let o = &self.occs[i as usize];
                if o.class as usize != cls || o.pos_in_class as usize != pos {
                    return Err(format!("back-pointer of occurrence {i} is stale"));
                }
                let key = {
                    let (ca, cb) = (self.color_of[o.a as usize], self.color_of[o.b as usize]);
                    if ca <= cb {
                        (ca, cb)
                    } else {
                        (cb, ca)
                    }
                };
                if key != self.class_keys[cls] {
                    return Err(format!("occurrence {i} sits in the wrong class"));
                }
                let (ca, cb) = (self.color_of[o.a as usize], self.color_of[o.b as usize]);
                if ca != cb && ca > cb {
                    return Err(format!("occurrence {i} violates the orientation convention"));
                }
            }
        }
        Ok(())
    }
}

/// The `|L| x n` matrix of colored degrees; the invariant every CCM chain
/// preserves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredDegreeMatrix {
    num_colors: u32,
    n: u32,
    entries: Vec<u32>,
}

impl ColoredDegreeMatrix {
    pub fn num_colors(&self) -> u32 {
        self.num_colors
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn entry(&self, l: ColorId, v: VertexId) -> u32 {
        self.entries[l as usize * self.n as usize + v as usize]
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Column sums, i.e. the degree sequence.
    pub fn degree_sequence(&self) -> Vec<u64> {
        let n = self.n as usize;
        let mut deg = vec![0u64; n];
        for l in 0..self.num_colors as usize {
            for (v, d) in deg.iter_mut().enumerate() {
                *d += self.entries[l * n + v] as u64;
            }
        }
        deg
    }

    /// Joint color matrix by summation: the diagonal counts each
    /// monochromatic edge twice, hence the halving.
    pub fn jcm(&self, color_of: &[ColorId]) -> JointColorMatrix {
        let k = self.num_colors as usize;
        let n = self.n as usize;
        let mut entries = vec![0u64; k * k];
        for l in 0..k {
            for (v, &cv) in color_of.iter().enumerate() {
                let d = self.entries[l * n + v] as u64;
                if cv as usize == l {
                    entries[l * k + l] += d;
                } else {
                    entries[l * k + cv as usize] += d;
                }
            }
        }
        for l in 0..k {
            debug_assert!(entries[l * k + l].is_multiple_of(2));
            entries[l * k + l] /= 2;
        }
        // Symmetry holds by construction: J[l][r] summed over r-colored
        // vertices equals the count of {l, r} edges.
        JointColorMatrix { num_colors: self.num_colors, entries }
    }
}

/// The `|L| x |L|` symmetric matrix of per-color-pair edge counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointColorMatrix {
    num_colors: u32,
    entries: Vec<u64>,
}

impl JointColorMatrix {
    pub fn num_colors(&self) -> u32 {
        self.num_colors
    }

    #[inline]
    pub fn entry(&self, l: ColorId, r: ColorId) -> u64 {
        self.entries[l as usize * self.num_colors as usize + r as usize]
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        let k = self.num_colors as usize;
        (0..k).all(|l| (0..k).all(|r| self.entries[l * k + r] == self.entries[r * k + l]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::chain_rng;
    use crate::swap::{propose, SwapKind};
    use rand::Rng;

    #[test]
    fn self_loop_counts_twice() {
        let g = ColoredMultigraph::new(vec![0], &[(0, 0)]).unwrap();
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.colored_degree(0, 0), 2);
    }

    #[test]
    fn empty_edge_set_gives_an_all_zero_cdm() {
        let g = ColoredMultigraph::new(vec![0, 1, 0], &[]).unwrap();
        assert!(g.cdm().entries().iter().all(|&e| e == 0));
    }

    #[test]
    fn cdm_equals_a_fresh_recount_on_random_graphs() {
        let mut rng = chain_rng(23);
        for _ in 0..5 {
            let g = crate::synth::random_colored_multigraph(&mut rng, 20, 60, 3);
            let cdm = g.cdm();
            let mut recount = vec![0u32; g.num_colors() as usize * g.n()];
            for (a, b) in g.canonical_edges() {
                recount[g.color(b) as usize * g.n() + a as usize] += 1;
                recount[g.color(a) as usize * g.n() + b as usize] += 1;
            }
            assert_eq!(cdm.entries(), &recount[..]);
            let degrees: Vec<u64> = (0..g.n() as u32).map(|v| g.degree(v) as u64).collect();
            assert_eq!(cdm.degree_sequence(), degrees);
        }
    }

    #[test]
    fn jcm_matches_a_direct_per_class_edge_count() {
        let mut rng = chain_rng(29);
        for _ in 0..5 {
            let g = crate::synth::random_colored_multigraph(&mut rng, 15, 40, 4);
            let jcm = g.jcm();
            assert!(jcm.is_symmetric());
            let k = g.num_colors() as usize;
            let mut direct = vec![0u64; k * k];
            for (a, b) in g.canonical_edges() {
                let (ca, cb) = (g.color(a) as usize, g.color(b) as usize);
                direct[ca * k + cb] += 1;
                if ca != cb {
                    direct[cb * k + ca] += 1;
                }
            }
            assert_eq!(jcm.entries(), &direct[..]);
        }
    }

    #[test]
    fn monochromatic_jcm_holds_all_edges() {
        let g = ColoredMultigraph::new(vec![0; 5], &[(0, 1), (1, 2), (2, 2), (3, 4)]).unwrap();
        assert_eq!(g.jcm().entry(0, 0), 4);
    }

    #[test]
    fn class_exclusion_of_a_two_element_class_is_deterministic() {
        let g = ColoredMultigraph::new(vec![0, 0, 0, 0], &[(0, 1), (2, 3)]).unwrap();
        let mut rng = chain_rng(1);
        for _ in 0..50 {
            let other = g.sample_class_edge_excluding(OccIdx(0), &mut rng).unwrap();
            assert_eq!(other, OccIdx(1));
        }
    }

    #[test]
    fn class_exclusion_on_a_singleton_class_is_an_error() {
        let g = ColoredMultigraph::new(vec![0, 0, 1], &[(0, 1), (0, 2)]).unwrap();
        let mut rng = chain_rng(2);
        assert!(g.sample_class_edge_excluding(OccIdx(0), &mut rng).is_err());
    }

    #[test]
    fn exclusion_sampling_is_uniform_over_the_remaining_occurrences() {
        // One class of five occurrences, two of them parallel copies;
        // excluding one leaves four equally likely slots, and only the
        // sampled copy is excluded, not its twin.
        let g = ColoredMultigraph::new(
            vec![0, 0, 0, 0],
            &[(0, 1), (0, 1), (1, 2), (2, 3), (0, 3)],
        )
        .unwrap();
        let excluded = OccIdx(0);
        let mut rng = chain_rng(3);
        let draws = 1_000_000u32;
        let mut counts = vec![0u32; g.m()];
        for _ in 0..draws {
            counts[g.sample_class_edge_excluding(excluded, &mut rng).unwrap().0 as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        let p = 0.25;
        let bound = 4.0 * (p * (1.0 - p) / draws as f64).sqrt();
        for (i, &c) in counts.iter().enumerate().skip(1) {
            let freq = c as f64 / draws as f64;
            assert!((freq - p).abs() < bound, "occurrence {i}: {freq}");
        }
        // The twin copy of the excluded pair stays eligible.
        assert!(counts[1] > 0);
    }

    #[test]
    fn global_edge_sampling_is_uniform() {
        // Two classes sized four and three: every occurrence at 1/7.
        let g = ColoredMultigraph::new(
            vec![0, 0, 0, 1, 1],
            &[(0, 1), (1, 2), (0, 2), (0, 0), (0, 3), (1, 4), (2, 3)],
        )
        .unwrap();
        assert_eq!(
            g.class_sizes().iter().map(|&(_, s)| s).collect::<Vec<_>>(),
            vec![4, 3]
        );
        let mut rng = chain_rng(4);
        let draws = 1_000_000u32;
        let mut counts = vec![0u32; g.m()];
        for _ in 0..draws {
            counts[g.sample_edge_uniform(&mut rng).unwrap().0 as usize] += 1;
        }
        let p = 1.0 / 7.0;
        let bound = 4.0 * (p * (1.0 - p) / draws as f64).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!((freq - p).abs() < bound, "occurrence {i}: {freq}");
        }
    }

    #[test]
    fn swap_then_reverse_restores_the_multigraph() {
        let g = ColoredMultigraph::new(
            vec![0, 0, 0, 0, 1, 1],
            &[(0, 1), (2, 3), (0, 4), (1, 5), (0, 1)],
        )
        .unwrap();
        let mut h = g.clone();
        let p = propose(&h, OccIdx(0), OccIdx(1), false);
        assert_eq!(p.kind, SwapKind::ChangingCdes);
        h.apply_swap(&p).unwrap();
        assert!(!h.same_multigraph(&g));
        // Locate the inserted targets and swap them back.
        let find = |h: &ColoredMultigraph, pair: (u32, u32)| {
            (0..h.m() as u32)
                .map(OccIdx)
                .find(|&i| canon_pair(h.occ_endpoints(i).0, h.occ_endpoints(i).1) == canon_pair(pair.0, pair.1))
                .unwrap()
        };
        let i = find(&h, p.targets[0]);
        let j = find(&h, p.targets[1]);
        let (a, b) = h.occ_endpoints(i);
        let (x, y) = h.occ_endpoints(j);
        // Orient so the reverse swap recreates the original pairs.
        let reverse_targets_ok = |prop: &crate::swap::SwapProposal| {
            let mut t = [canon_pair(prop.targets[0].0, prop.targets[0].1),
                         canon_pair(prop.targets[1].0, prop.targets[1].1)];
            let mut s = [canon_pair(p.oriented[0].0, p.oriented[0].1),
                         canon_pair(p.oriented[1].0, p.oriented[1].1)];
            t.sort_unstable();
            s.sort_unstable();
            t == s
        };
        let mut restored = false;
        for flip in [false, true] {
            let back = propose(&h, i, j, flip);
            if reverse_targets_ok(&back) {
                let mut h2 = h.clone();
                h2.apply_swap(&back).unwrap();
                assert!(h2.same_multigraph(&g));
                assert_eq!(h2.cdm(), g.cdm());
                restored = true;
            }
        }
        assert!(restored, "one orientation must reverse the swap: {a},{b} / {x},{y}");
    }

    #[test]
    fn stale_handles_are_rejected() {
        let mut g =
            ColoredMultigraph::new(vec![0, 0, 0, 0], &[(0, 1), (2, 3), (1, 2)]).unwrap();
        let p = propose(&g, OccIdx(0), OccIdx(1), false);
        g.apply_swap(&p).unwrap();
        // The occurrences were consumed; replaying the same proposal fails.
        assert!(matches!(g.apply_swap(&p), Err(crate::error::Error::StaleSwap(_))));
    }

    #[test]
    fn indices_survive_long_random_swap_sequences() {
        let mut rng = chain_rng(6);
        let mut g = crate::synth::random_colored_multigraph(&mut rng, 10, 30, 3);
        let mut applied = 0;
        while applied < 200 {
            let i = rng.random_range(0..g.m()) as u32;
            let mut j = rng.random_range(0..g.m() - 1) as u32;
            if j == i {
                j = g.m() as u32 - 1;
            }
            let p = propose(&g, OccIdx(i), OccIdx(j), rng.random_bool(0.5));
            // Exercise every changing swap, CDM-preserving or not.
            if matches!(p.kind, SwapKind::ChangingCdes | SwapKind::OutOfSpace) {
                g.apply_swap(&p).unwrap();
                applied += 1;
            }
        }
        g.check_consistency().unwrap();
    }
}
