//! Jenks natural breaks: the partition of sorted values into `k` contiguous
//! classes with minimum total within-class sum of squared deviations.

use crate::error::{Error, Result};

/// Inputs longer than this are thinned to blocks of consecutive order
/// statistics in [`JenksMode::Auto`].
pub const THIN_ABOVE: usize = 5000;
/// Target number of blocks after thinning.
pub const THIN_TARGET: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JenksMode {
    /// Exact on small inputs. Above [`THIN_ABOVE`] values, breaks may only
    /// fall between blocks of about `n / THIN_TARGET` consecutive values.
    #[default]
    Auto,
    Exact,
}

/// Class upper bounds (all but the last class) for `k` classes.
pub fn jenks_breaks(values: &[f64], k: usize) -> Result<Vec<f64>> {
    jenks_breaks_with(values, k, JenksMode::Auto)
}

pub fn jenks_breaks_with(values: &[f64], k: usize, mode: JenksMode) -> Result<Vec<f64>> {
    let sorted = sorted_finite(values)?;
    let step = match mode {
        JenksMode::Auto if sorted.len() > THIN_ABOVE => sorted.len().div_ceil(THIN_TARGET),
        _ => 1,
    };
    let blocks = blocks(&sorted, step);
    let ends = optimal_class_ends(&blocks.means, &blocks.weights, k)?;
    Ok(ends[..k - 1].iter().map(|&e| blocks.tops[e]).collect())
}

/// The optimal classes themselves, as sorted slices of the input values.
/// Equal values always land in the same class.
pub fn jenks_classes(values: &[f64], k: usize) -> Result<Vec<Vec<f64>>> {
    let sorted = sorted_finite(values)?;
    let b = blocks(&sorted, 1);
    let ends = optimal_class_ends(&b.means, &b.weights, k)?;
    let mut classes = Vec::with_capacity(k);
    let mut start = 0usize;
    for &end in &ends {
        let hi = b.tops[end];
        let stop = sorted.partition_point(|v| *v <= hi);
        classes.push(sorted[start..stop].to_vec());
        start = stop;
    }
    Ok(classes)
}

/// Sum of within-class squared deviations.
pub fn within_class_sse(classes: &[Vec<f64>]) -> f64 {
    classes
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / c.len() as f64;
            c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        })
        .sum()
}

fn sorted_finite(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("jenks breaks of an empty sample"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("jenks breaks over non-finite values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Consecutive runs of sorted values, each summarized by mean, count and
/// largest value. A block holds at least `step` values and never splits
/// equal values, so `step = 1` gives the distinct values with multiplicities.
struct Blocks {
    means: Vec<f64>,
    weights: Vec<f64>,
    tops: Vec<f64>,
}

fn blocks(sorted: &[f64], step: usize) -> Blocks {
    let mut b = Blocks {
        means: Vec::new(),
        weights: Vec::new(),
        tops: Vec::new(),
    };
    let mut start = 0;
    while start < sorted.len() {
        let mut end = (start + step).min(sorted.len());
        let top = sorted[end - 1];
        end += sorted[end..].partition_point(|v| *v <= top);
        let run = &sorted[start..end];
        b.means.push(if run[0] == top { top } else { run.iter().sum::<f64>() / run.len() as f64 });
        b.weights.push(run.len() as f64);
        b.tops.push(top);
        start = end;
    }
    b
}

struct Prefix {
    w: Vec<f64>,
    s: Vec<f64>,
    q: Vec<f64>,
}

impl Prefix {
    fn new(xs: &[f64], ws: &[f64]) -> Self {
        // Centre on the weighted mean to keep the running sums small.
        let total: f64 = ws.iter().sum();
        let mean = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / total;
        let n = xs.len();
        let mut p = Prefix {
            w: vec![0.0; n + 1],
            s: vec![0.0; n + 1],
            q: vec![0.0; n + 1],
        };
        for i in 0..n {
            let x = xs[i] - mean;
            p.w[i + 1] = p.w[i] + ws[i];
            p.s[i + 1] = p.s[i] + ws[i] * x;
            p.q[i + 1] = p.q[i] + ws[i] * x * x;
        }
        p
    }

    /// Weighted SSE of items `i..=j`.
    fn sse(&self, i: usize, j: usize) -> f64 {
        let w = self.w[j + 1] - self.w[i];
        let s = self.s[j + 1] - self.s[i];
        let q = self.q[j + 1] - self.q[i];
        (q - s * s / w).max(0.0)
    }
}

/// Index of the last item of each class. Layered dynamic programme; the
/// optimal split point is monotone in the right end, so each layer is filled
/// by divide and conquer in `O(m log m)`.
fn optimal_class_ends(xs: &[f64], ws: &[f64], k: usize) -> Result<Vec<usize>> {
    let m = xs.len();
    if k < 2 {
        return Err(Error::invalid(format!("jenks needs at least 2 classes, got {k}")));
    }
    if k > m {
        return Err(Error::invalid(format!(
            "{k} classes requested but only {m} distinct values or blocks"
        )));
    }
    let prefix = Prefix::new(xs, ws);
    let mut prev: Vec<f64> = (0..m).map(|j| prefix.sse(0, j)).collect();
    // split[c][j]: first item of the last class when items 0..=j form c+1 classes
    let mut split = vec![vec![0usize; m]; k];
    for c in 1..k {
        let mut cur = vec![f64::INFINITY; m];
        fill_layer(&prefix, &prev, &mut cur, &mut split[c], c, c, m - 1, c, m - 1);
        prev = cur;
    }
    let mut ends = vec![0usize; k];
    let mut j = m - 1;
    for c in (0..k).rev() {
        ends[c] = j;
        if c > 0 {
            j = split[c][j] - 1;
        }
    }
    Ok(ends)
}

#[allow(clippy::too_many_arguments)]
fn fill_layer(
    prefix: &Prefix,
    prev: &[f64],
    cur: &mut [f64],
    split: &mut [usize],
    c: usize,
    lo: usize,
    hi: usize,
    opt_lo: usize,
    opt_hi: usize,
) {
    if lo > hi {
        return;
    }
    let mid = lo + (hi - lo) / 2;
    let mut best = f64::INFINITY;
    let mut best_i = opt_lo.max(c);
    for i in opt_lo.max(c)..=opt_hi.min(mid) {
        let cost = prev[i - 1] + prefix.sse(i, mid);
        if cost < best {
            best = cost;
            best_i = i;
        }
    }
    cur[mid] = best;
    split[mid] = best_i;
    if mid > lo {
        fill_layer(prefix, prev, cur, split, c, lo, mid - 1, opt_lo, best_i);
    }
    fill_layer(prefix, prev, cur, split, c, mid + 1, hi, best_i, opt_hi);
}
