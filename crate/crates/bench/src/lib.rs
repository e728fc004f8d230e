//! Synthetic inputs for the kernel benchmarks.

use incite_core::{DangerCounts, RetweetGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform random retweet graph with `n` users and about `m` distinct
/// edges, each user posting 0 to 2 originals.
pub fn random_graph(n: usize, m: usize, seed: u64) -> RetweetGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..n).map(|i| format!("u{i}")).collect();
    let original = (0..n).map(|_| rng.gen_range(0..3)).collect();
    let edges: Vec<(usize, usize, u64)> = (0..m)
        .filter_map(|_| {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            (u != v).then(|| (u, v, rng.gen_range(1..4)))
        })
        .collect();
    RetweetGraph::from_parts(nodes, original, edges).expect("generated graph is valid")
}

/// Danger counts on every `stride`-th user of `g`.
pub fn sparse_counts(g: &RetweetGraph, stride: usize, seed: u64) -> DangerCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = DangerCounts::default();
    for id in g.nodes().iter().step_by(stride.max(1)) {
        counts.set(id.clone(), rng.gen_range(1..10));
    }
    counts
}

/// Heavy-tailed scores in `[0, 1]`, mostly zero, shaped like normalized
/// diffusion output.
pub fn skewed_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| if rng.gen_bool(0.8) { 0.0 } else { rng.gen::<f64>().powi(4) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let a = random_graph(100, 500, 1);
        let b = random_graph(100, 500, 1);
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        assert!(a.edge_count() > 400);
        assert_eq!(sparse_counts(&a, 10, 2).iter().count(), 10);
        assert_eq!(skewed_scores(50, 3), skewed_scores(50, 3));
    }
}
