//! Retweet-induced weighted directed graphs and their transition matrices.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::corpus::Tweet;
use crate::error::{Error, Result};

mod centrality;
mod export;

pub use centrality::{
    centrality_report, eigenvector_centrality, harmonic_closeness, indegree_centrality,
    CentralityReport, EigenvectorResult,
};
pub use export::{export_dot, export_gexf, parse_gexf, write_adjacency_csv, ParsedGexf};

/// Rows above this size are multiplied in parallel.
const PAR_ROWS: usize = 4096;

/// Directed graph where an edge `u -> v` of weight `n` means `u` retweeted
/// `v` `n` times. Original-tweet counts live beside the edge set as node
/// self weights; there is never an explicit `u -> u` edge.
#[derive(Debug, Clone, PartialEq)]
pub struct RetweetGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    original: Vec<u64>,
    // CSR over sources, targets sorted within each row.
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<u64>,
}

impl RetweetGraph {
    pub fn empty() -> Self {
        RetweetGraph {
            nodes: Vec::new(),
            index: HashMap::new(),
            original: Vec::new(),
            offsets: vec![0],
            targets: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Builds a graph over `nodes` (kept in the given order) from
    /// index-based edges. Repeated edges are summed and zero weights dropped.
    pub fn from_parts<I>(nodes: Vec<String>, original: Vec<u64>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        let n = nodes.len();
        if original.len() != n {
            return Err(Error::invalid(format!(
                "{} original counts for {n} nodes",
                original.len()
            )));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in nodes.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate node {id:?}")));
            }
        }
        let mut list: Vec<(usize, usize, u64)> = Vec::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::invalid(format!(
                    "self edge on {:?}; self weight belongs in original counts",
                    nodes[u]
                )));
            }
            if w > 0 {
                list.push((u, v, w));
            }
        }
        list.sort_unstable_by_key(|&(u, v, _)| (u, v));
        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::with_capacity(list.len());
        let mut weights: Vec<u64> = Vec::with_capacity(list.len());
        let mut last: Option<(usize, usize)> = None;
        for (u, v, w) in list {
            if last == Some((u, v)) {
                *weights.last_mut().expect("previous edge") += w;
                continue;
            }
            last = Some((u, v));
            offsets[u + 1] += 1;
            targets.push(v);
            weights.push(w);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Ok(RetweetGraph {
            nodes,
            index,
            original,
            offsets,
            targets,
            weights,
        })
    }

    /// Sums several graphs over the union of their users.
    pub fn merge<'a, I>(graphs: I) -> Self
    where
        I: IntoIterator<Item = &'a RetweetGraph>,
    {
        let mut original: BTreeMap<&str, u64> = BTreeMap::new();
        let mut edges: HashMap<(&str, &str), u64> = HashMap::new();
        for g in graphs {
            for (i, id) in g.nodes.iter().enumerate() {
                *original.entry(id).or_insert(0) += g.original[i];
            }
            for (u, v, w) in g.edges() {
                *edges.entry((&g.nodes[u], &g.nodes[v])).or_insert(0) += w;
            }
        }
        let nodes: Vec<String> = original.keys().map(|s| s.to_string()).collect();
        let pos: HashMap<&str, usize> = original.keys().enumerate().map(|(i, s)| (*s, i)).collect();
        let edge_list: Vec<_> = edges
            .into_iter()
            .map(|((u, v), w)| (pos[u], pos[v], w))
            .collect();
        RetweetGraph::from_parts(nodes, original.into_values().collect(), edge_list)
            .expect("merged parts are consistent")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Original tweets posted by node `u`.
    pub fn original(&self, u: usize) -> u64 {
        self.original[u]
    }

    pub fn originals(&self) -> &[u64] {
        &self.original
    }

    /// Edges leaving `u` as `(target, weight)`.
    pub fn out_edges(&self, u: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.node_count()).flat_map(move |u| self.out_edges(u).map(move |(v, w)| (u, v, w)))
    }

    pub fn weight(&self, u: usize, v: usize) -> u64 {
        let r = self.offsets[u]..self.offsets[u + 1];
        match self.targets[r.clone()].binary_search(&v) {
            Ok(i) => self.weights[r.start + i],
            Err(_) => 0,
        }
    }

    /// Incoming adjacency: for each node, the `(source, weight)` pairs of
    /// edges pointing at it, sources ascending.
    pub fn in_edges(&self) -> Vec<Vec<(usize, u64)>> {
        let mut incoming = vec![Vec::new(); self.node_count()];
        for (u, v, w) in self.edges() {
            incoming[v].push((u, w));
        }
        incoming
    }
}

/// Counts retweets and originals over the given tweets. Nodes are every
/// author and every retweeted user, ordered by id. Quote tweets add no edge
/// and count as original content of the quoting user.
pub fn build_retweet_graph<'a, I>(tweets: I) -> RetweetGraph
where
    I: IntoIterator<Item = &'a Tweet>,
{
    let mut users: BTreeSet<&str> = BTreeSet::new();
    let mut originals: HashMap<&str, u64> = HashMap::new();
    let mut retweets: HashMap<(&str, &str), u64> = HashMap::new();
    for t in tweets {
        users.insert(&t.user_id);
        match &t.retweet_of_user {
            Some(src) => {
                users.insert(src);
                *retweets.entry((&t.user_id, src)).or_insert(0) += 1;
            }
            None => *originals.entry(&t.user_id).or_insert(0) += 1,
        }
    }
    let nodes: Vec<String> = users.iter().map(|s| s.to_string()).collect();
    let pos: HashMap<&str, usize> = users.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let original = users
        .iter()
        .map(|u| originals.get(u).copied().unwrap_or(0))
        .collect();
    let edges: Vec<_> = retweets
        .into_iter()
        .map(|((u, v), w)| (pos[u], pos[v], w))
        .collect();
    RetweetGraph::from_parts(nodes, original, edges).expect("counted parts are consistent")
}

/// Square sparse matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Duplicated coordinates are summed; exact zeros are dropped.
    pub fn from_triplets<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        for (r, c, v) in entries {
            if r >= n || c >= n {
                return Err(Error::invalid(format!("entry ({r}, {c}) outside {n}x{n}")));
            }
            list.push((r, c, v));
        }
        list.sort_by_key(|&(r, c, _)| (r, c));
        let mut m = SparseMatrix::zeros(n);
        let mut last = None;
        for (r, c, v) in list {
            if last == Some((r, c)) {
                *m.vals.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((r, c));
            m.row_ptr[r + 1] += 1;
            m.cols.push(c);
            m.vals.push(v);
        }
        for i in 0..n {
            m.row_ptr[i + 1] += m.row_ptr[i];
        }
        Ok(m.pruned())
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "matrix is not square: row of length {} in {n} rows",
                r.len()
            )));
        }
        let entries = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, v)| (i, j, *v)));
        SparseMatrix::from_triplets(n, entries)
    }

    fn pruned(self) -> Self {
        if self.vals.iter().all(|v| *v != 0.0) {
            return self;
        }
        let mut out = SparseMatrix::zeros(self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                if v != 0.0 {
                    out.cols.push(c);
                    out.vals.push(v);
                }
            }
            out.row_ptr[r + 1] = out.cols.len();
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(i) => self.vals[span.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (r, c, v) in self.entries() {
            out[r][c] = v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        // Rows are visited in order, so each transposed row comes out sorted.
        for (r, c, v) in self.entries() {
            let slot = next[c];
            cols[slot] = r;
            vals[slot] = v;
            next[c] += 1;
        }
        SparseMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::invalid(format!(
                "vector of length {} against {}x{} matrix",
                x.len(),
                self.n,
                self.n
            )));
        }
        let dot = |r: usize| self.row(r).map(|(c, v)| v * x[c]).sum::<f64>();
        Ok(if self.n >= PAR_ROWS {
            (0..self.n).into_par_iter().map(dot).collect()
        } else {
            (0..self.n).map(dot).collect()
        })
    }
}

/// The weighted adjacency matrix: retweet counts off the diagonal and
/// original-tweet counts on it.
pub fn adjacency(g: &RetweetGraph) -> SparseMatrix {
    let n = g.node_count();
    let mut m = SparseMatrix::zeros(n);
    for u in 0..n {
        let mut row: Vec<(usize, f64)> = g.out_edges(u).map(|(v, w)| (v, w as f64)).collect();
        if g.original(u) > 0 {
            let at = row.partition_point(|(v, _)| *v < u);
            row.insert(at, (u, g.original(u) as f64));
        }
        for (c, v) in row {
            m.cols.push(c);
            m.vals.push(v);
        }
        m.row_ptr[u + 1] = m.cols.len();
    }
    m
}

/// Row-stochastic matrix derived from an adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    matrix: SparseMatrix,
    degenerate: Vec<bool>,
}

impl TransitionMatrix {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Rows that were all zero and were replaced by a self loop.
    pub fn degenerate_rows(&self) -> &[bool] {
        &self.degenerate
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|r| self.matrix.row(r).map(|(_, v)| v).sum())
            .collect()
    }

    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.matrix.mul_vec(p)
    }
}

/// Transposes `a` and normalizes each row to sum to one. An all-zero row
/// becomes the identity row and is flagged.
pub fn transition(a: &SparseMatrix) -> Result<TransitionMatrix> {
    if let Some((r, c, v)) = a.entries().find(|(_, _, v)| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid(format!(
            "adjacency entry ({r}, {c}) = {v} is not a nonnegative number"
        )));
    }
    let t = a.transpose();
    let n = t.dim();
    let mut degenerate = vec![false; n];
    let mut out = SparseMatrix::zeros(n);
    for r in 0..n {
        let sum: f64 = t.row(r).map(|(_, v)| v).sum();
        if sum > 0.0 {
            for (c, v) in t.row(r) {
                out.cols.push(c);
                out.vals.push(v / sum);
            }
        } else {
            degenerate[r] = true;
            out.cols.push(r);
            out.vals.push(1.0);
        }
        out.row_ptr[r + 1] = out.cols.len();
    }
    Ok(TransitionMatrix {
        matrix: out,
        degenerate,
    })
}
