//! Synthetic colored multigraphs for tests and benchmarks.

use rand::Rng;

use crate::graph::{ColorId, ColoredMultigraph, VertexId};

/// Random graph on `n` vertices with `m` independently drawn edges and `k`
/// colors; parallel edges and self-loops arise from collisions. Every color
/// is used when `n >= k`.
pub fn random_colored_multigraph<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    k: u32,
) -> ColoredMultigraph {
    assert!(n > 0 && k > 0);
    let colors: Vec<ColorId> = (0..n)
        .map(|v| if v < k as usize { v as u32 } else { rng.random_range(0..k) })
        .collect();
    let edges: Vec<(VertexId, VertexId)> = (0..m)
        .map(|_| (rng.random_range(0..n) as u32, rng.random_range(0..n) as u32))
        .collect();
    ColoredMultigraph::new(colors, &edges).expect("valid synthetic graph")
}

/// Two balanced color groups with a planted within-color edge bias:
/// each edge is monochromatic with probability `bias / (bias + 1)`.
pub fn planted_two_color<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    bias: f64,
) -> ColoredMultigraph {
    assert!(n >= 4 && n.is_multiple_of(2));
    let half = n / 2;
    let colors: Vec<ColorId> = (0..n).map(|v| if v < half { 0 } else { 1 }).collect();
    let p_within = bias / (bias + 1.0);
    let edges: Vec<(VertexId, VertexId)> = (0..m)
        .map(|_| {
            if rng.random_bool(p_within) {
                let side = rng.random_bool(0.5) as usize * half;
                (
                    (side + rng.random_range(0..half)) as u32,
                    (side + rng.random_range(0..half)) as u32,
                )
            } else {
                (rng.random_range(0..half) as u32, (half + rng.random_range(0..half)) as u32)
            }
        })
        .collect();
    ColoredMultigraph::new(colors, &edges).expect("valid synthetic graph")
}

/// Deterministic disjoint-edge graph realizing a prescribed class-size
/// profile: `spec` lists color pairs with the number of edges to create in
/// each class. Every edge gets fresh endpoints, so the graph is a perfect
/// matching and stays simple under any swap; the out-of-space probability
/// of the baseline chain is then exactly `1 - theta`.
pub fn matching_with_classes(spec: &[((ColorId, ColorId), usize)]) -> ColoredMultigraph {
    let mut colors = Vec::new();
    let mut edges = Vec::new();
    for &((l, r), count) in spec {
        for _ in 0..count {
            let a = colors.len() as u32;
            colors.push(l);
            let b = colors.len() as u32;
            colors.push(r);
            edges.push((a, b));
        }
    }
    let k = colors.iter().max().map_or(1, |&c| c + 1);
    // Dense color ids: make sure every id below the max occurs.
    for c in 0..k {
        if !colors.contains(&c) {
            colors.push(c);
        }
    }
    ColoredMultigraph::new(colors, &edges).expect("valid matching graph")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::chain_rng;

    #[test]
    fn random_graph_uses_every_color_and_all_edges() {
        let mut rng = chain_rng(1);
        let g = random_colored_multigraph(&mut rng, 30, 80, 5);
        assert_eq!(g.n(), 30);
        assert_eq!(g.m(), 80);
        for c in 0..5 {
            assert!(g.colors().iter().any(|&x| x == c));
        }
        g.check_consistency().unwrap();
    }

    #[test]
    fn matching_graph_realizes_the_class_profile() {
        let g = matching_with_classes(&[((0, 0), 3), ((0, 1), 2), ((1, 1), 1)]);
        assert_eq!(g.m(), 6);
        let sizes = g.class_sizes();
        assert_eq!(sizes, vec![((0, 0), 3), ((0, 1), 2), ((1, 1), 1)]);
        assert!((0..g.n() as u32).all(|v| g.degree(v) <= 1));
    }
}
