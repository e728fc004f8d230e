use std::collections::VecDeque;

use rayon::prelude::*;

use super::RetweetGraph;

/// Sum of incoming retweet weight per node.
pub fn indegree_centrality(g: &RetweetGraph) -> Vec<f64> {
    let mut score = vec![0.0; g.node_count()];
    for (_, v, w) in g.edges() {
        score[v] += w as f64;
    }
    score
}

/// Harmonic closeness over unweighted hop distances towards each node:
/// `score(v) = sum over x != v of 1 / d(x, v)`, unreachable pairs adding 0.
pub fn harmonic_closeness(g: &RetweetGraph) -> Vec<f64> {
    let n = g.node_count();
    let incoming: Vec<Vec<usize>> = g
        .in_edges()
        .into_iter()
        .map(|e| e.into_iter().map(|(u, _)| u).collect())
        .collect();
    (0..n)
        .into_par_iter()
        .map_init(
            || (vec![usize::MAX; n], VecDeque::new()),
            |(dist, queue), v| {
                // BFS backwards along edges from v gives d(x, v) for every x.
                dist.fill(usize::MAX);
                dist[v] = 0;
                queue.clear();
                queue.push_back(v);
                let mut total = 0.0;
                while let Some(x) = queue.pop_front() {
                    let d = dist[x];
                    if d > 0 {
                        total += 1.0 / d as f64;
                    }
                    for &u in &incoming[x] {
                        if dist[u] == usize::MAX {
                            dist[u] = d + 1;
                            queue.push_back(u);
                        }
                    }
                }
                total
            },
        )
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenvectorResult {
    pub scores: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Eigenvector centrality where a node inherits score from the nodes that
/// retweet it, weighted by retweet count. Runs power iteration on
/// `I + W^T`, which shares its eigenvectors with `W^T` and avoids
/// oscillation on periodic graphs. Scores have unit Euclidean norm.
pub fn eigenvector_centrality(g: &RetweetGraph, tol: f64, max_iter: usize) -> EigenvectorResult {
    let n = g.node_count();
    if n == 0 {
        return EigenvectorResult {
            scores: Vec::new(),
            converged: true,
            iterations: 0,
        };
    }
    let uniform = 1.0 / (n as f64).sqrt();
    if g.edge_count() == 0 {
        log::warn!("eigenvector centrality on a graph without edges; returning uniform scores");
        return EigenvectorResult {
            scores: vec![uniform; n],
            converged: true,
            iterations: 0,
        };
    }
    let mut x = vec![uniform; n];
    let mut next = vec![0.0; n];
    for it in 1..=max_iter {
        next.copy_from_slice(&x);
        for (u, v, w) in g.edges() {
            next[v] += w as f64 * x[u];
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in next.iter_mut() {
            *a /= norm;
        }
        let delta = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if delta < tol {
            return EigenvectorResult {
                scores: x,
                converged: true,
                iterations: it,
            };
        }
    }
    log::warn!("eigenvector centrality did not converge in {max_iter} iterations");
    EigenvectorResult {
        scores: x,
        converged: false,
        iterations: max_iter,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityReport {
    pub nodes: Vec<String>,
    pub indegree: Vec<f64>,
    pub harmonic: Vec<f64>,
    pub eigenvector: Vec<f64>,
    pub eigenvector_converged: bool,
    pub eigenvector_iterations: usize,
}

pub fn centrality_report(g: &RetweetGraph, tol: f64, max_iter: usize) -> CentralityReport {
    let eig = eigenvector_centrality(g, tol, max_iter);
    CentralityReport {
        nodes: g.nodes().to_vec(),
        indegree: indegree_centrality(g),
        harmonic: harmonic_closeness(g),
        eigenvector: eig.scores,
        eigenvector_converged: eig.converged,
        eigenvector_iterations: eig.iterations,
    }
}
