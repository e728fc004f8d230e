//! Danger Amplification Belief (DAB) scores and danger categories.
//!
//! Each user starts with a belief equal to their number of dangerous tweets.
//! Beliefs are then averaged over the retweet graph by repeated
//! multiplication with the row-stochastic transition matrix (a DeGroot
//! process). Normalized scores are split into not (N), moderately (M) and
//! very (V) dangerous with Jenks natural breaks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotate::DangerCounts;
use crate::error::{Error, Result};
use crate::graph::{adjacency, transition, RetweetGraph, TransitionMatrix};

mod jenks;

pub use jenks::{
    jenks_breaks, jenks_breaks_with, jenks_classes, within_class_sse, JenksMode, THIN_ABOVE,
    THIN_TARGET,
};

/// Default number of diffusion steps.
pub const DEFAULT_STEPS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    pub values: Vec<f64>,
    /// Number of updates applied since initialization.
    pub step: usize,
}

impl BeliefVector {
    pub fn initial(values: Vec<f64>) -> Self {
        BeliefVector { values, step: 0 }
    }
}

/// One DeGroot update `p' = T p`.
pub fn degroot_step(t: &TransitionMatrix, p: &BeliefVector) -> Result<BeliefVector> {
    Ok(BeliefVector {
        values: t.apply(&p.values)?,
        step: p.step + 1,
    })
}

/// Raw and max-normalized beliefs after diffusion, aligned with graph nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DabScores {
    pub nodes: Vec<String>,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub steps: usize,
}

impl DabScores {
    pub fn normalized_map(&self) -> BTreeMap<String, f64> {
        self.nodes.iter().cloned().zip(self.normalized.iter().copied()).collect()
    }
}

/// Scales by the maximum; all zeros when the maximum is not positive.
pub fn normalize_by_max(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        raw.iter().map(|v| v / max).collect()
    } else {
        vec![0.0; raw.len()]
    }
}

/// Diffuses dangerous-tweet counts over the retweet graph for `steps`
/// updates. Users absent from `counts` start at zero.
pub fn compute_dab(g: &RetweetGraph, counts: &DangerCounts, steps: usize) -> Result<DabScores> {
    if steps == 0 {
        return Err(Error::invalid("diffusion needs at least one step"));
    }
    let t = transition(&adjacency(g))?;
    let initial = g.nodes().iter().map(|u| counts.get(u) as f64).collect();
    let mut p = BeliefVector::initial(initial);
    while p.step < steps {
        p = degroot_step(&t, &p)?;
    }
    Ok(DabScores {
        nodes: g.nodes().to_vec(),
        normalized: normalize_by_max(&p.values),
        raw: p.values,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DangerCategory {
    /// Not dangerous.
    N,
    /// Moderately dangerous.
    M,
    /// Very dangerous.
    V,
}

impl DangerCategory {
    pub const ALL: [DangerCategory; 3] = [DangerCategory::N, DangerCategory::M, DangerCategory::V];

    pub fn is_dangerous(self) -> bool {
        self != DangerCategory::N
    }
}

impl fmt::Display for DangerCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DangerCategory::N => "N",
            DangerCategory::M => "M",
            DangerCategory::V => "V",
        })
    }
}

impl FromStr for DangerCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" => Ok(DangerCategory::N),
            "M" => Ok(DangerCategory::M),
            "V" => Ok(DangerCategory::V),
            other => Err(Error::Parse(format!("unknown danger category {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DacAssignment {
    pub categories: Vec<DangerCategory>,
    /// Share of users in M or V.
    pub dangerous_fraction: f64,
}

/// Categorizes scores against ascending thresholds: N up to and including
/// the first threshold, V strictly above the last, M in between. With a
/// single threshold the M class is empty.
pub fn assign_dac(scores: &[f64], thresholds: &[f64]) -> Result<DacAssignment> {
    let (Some(&low), Some(&high)) = (thresholds.first(), thresholds.last()) else {
        return Err(Error::invalid("no thresholds"));
    };
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid(format!("thresholds {thresholds:?} are not ascending")));
    }
    let categories: Vec<DangerCategory> = scores
        .iter()
        .map(|&s| {
            if s <= low {
                DangerCategory::N
            } else if s <= high && thresholds.len() > 1 {
                DangerCategory::M
            } else {
                DangerCategory::V
            }
        })
        .collect();
    let dangerous = categories.iter().filter(|c| c.is_dangerous()).count();
    let dangerous_fraction = if categories.is_empty() {
        0.0
    } else {
        dangerous as f64 / categories.len() as f64
    };
    Ok(DacAssignment {
        categories,
        dangerous_fraction,
    })
}

/// Scores with their Jenks thresholds and categories.
#[derive(Debug, Clone, PartialEq)]
pub struct DabResult {
    pub scores: DabScores,
    pub thresholds: Vec<f64>,
    pub categories: Vec<DangerCategory>,
    pub dangerous_fraction: f64,
}

impl DabResult {
    pub fn classify(scores: DabScores, k: usize) -> Result<Self> {
        let thresholds = jenks_breaks(&scores.normalized, k)?;
        let dac = assign_dac(&scores.normalized, &thresholds)?;
        Ok(DabResult {
            scores,
            thresholds,
            categories: dac.categories,
            dangerous_fraction: dac.dangerous_fraction,
        })
    }

    pub fn category_map(&self) -> BTreeMap<String, DangerCategory> {
        self.scores.nodes.iter().cloned().zip(self.categories.iter().copied()).collect()
    }
}

/// Mean normalized score per user over the events the user appears in.
pub fn average_dab(per_event: &[BTreeMap<String, f64>]) -> Result<BTreeMap<String, f64>> {
    if per_event.is_empty() {
        return Err(Error::invalid("averaging needs at least one event"));
    }
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for event in per_event {
        for (user, score) in event {
            let e = acc.entry(user).or_insert((0.0, 0));
            e.0 += score;
            e.1 += 1;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(u, (sum, n))| (u.to_string(), sum / n as f64))
        .collect())
}

/// Right-continuous empirical CDF at each distinct value, ascending.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::invalid("ecdf of an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("ecdf over NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        if i + 1 == n || sorted[i + 1] != *v {
            out.push((*v, (i + 1) as f64 / n as f64));
        }
    }
    Ok(out)
}
