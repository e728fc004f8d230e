//! Dual-annotator label resolution and agreement.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;

use serde::Deserialize;

use crate::corpus::{read_jsonl, Ingested};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationPair {
    pub tweet_id: String,
    pub label_a: bool,
    pub label_b: bool,
}

impl AnnotationPair {
    pub fn new(tweet_id: impl Into<String>, label_a: bool, label_b: bool) -> Self {
        AnnotationPair {
            tweet_id: tweet_id.into(),
            label_a,
            label_b,
        }
    }
}

#[derive(Debug, Deserialize)]
struct AnnotationRecord {
    tweet_id: String,
    label_a: Option<bool>,
    label_b: Option<bool>,
}

/// Parsed annotation file. Tweets carrying a single label are counted in
/// `single_annotator` and left out of `pairs`.
#[derive(Debug, Clone)]
pub struct Annotations {
    pub pairs: Vec<AnnotationPair>,
    pub single_annotator: usize,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

pub fn parse_annotations<R: BufRead>(reader: R) -> Result<Annotations> {
    let Ingested {
        records,
        skipped,
        mut warnings,
    } = read_jsonl(reader, |r: AnnotationRecord| {
        if r.tweet_id.is_empty() {
            return Err("empty tweet_id".to_string());
        }
        Ok(r)
    })?;
    let mut out = Annotations {
        pairs: Vec::with_capacity(records.len()),
        single_annotator: 0,
        skipped,
        warnings: Vec::new(),
    };
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.tweet_id.clone()) {
            warnings.push(format!("duplicate annotation for tweet {}", r.tweet_id));
            out.skipped += 1;
            continue;
        }
        match (r.label_a, r.label_b) {
            (Some(a), Some(b)) => out.pairs.push(AnnotationPair::new(r.tweet_id, a, b)),
            _ => out.single_annotator += 1,
        }
    }
    out.warnings = warnings;
    Ok(out)
}

/// A tweet is dangerous only when both annotators say so.
pub fn resolve_label(pair: &AnnotationPair) -> bool {
    pair.label_a && pair.label_b
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaResult {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    /// Chance agreement was 1, so the ratio was replaced by 1 (perfect
    /// observed agreement) or 0.
    pub degenerate: bool,
}

pub fn cohens_kappa(pairs: &[AnnotationPair]) -> Result<KappaResult> {
    if pairs.is_empty() {
        return Err(Error::invalid("kappa needs at least one annotation pair"));
    }
    let n = pairs.len() as f64;
    let agree = pairs.iter().filter(|p| p.label_a == p.label_b).count() as f64;
    let a_yes = pairs.iter().filter(|p| p.label_a).count() as f64 / n;
    let b_yes = pairs.iter().filter(|p| p.label_b).count() as f64 / n;
    let observed = agree / n;
    let expected = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
    if expected >= 1.0 {
        let kappa = if observed >= 1.0 { 1.0 } else { 0.0 };
        return Ok(KappaResult {
            kappa,
            observed,
            expected,
            degenerate: true,
        });
    }
    Ok(KappaResult {
        kappa: (observed - expected) / (1.0 - expected),
        observed,
        expected,
        degenerate: false,
    })
}

/// Number of resolved-dangerous tweets per user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DangerCounts {
    counts: BTreeMap<String, u64>,
}

impl DangerCounts {
    pub fn get(&self, user: &str) -> u64 {
        self.counts.get(user).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Users with at least one dangerous tweet.
    pub fn dangerous_users(&self) -> BTreeSet<&str> {
        self.counts
            .iter()
            .filter(|(_, c)| **c > 0)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn set(&mut self, user: impl Into<String>, count: u64) {
        self.counts.insert(user.into(), count);
    }

    /// Sums another shard into this one.
    pub fn merge(&mut self, other: DangerCounts) {
        for (u, c) in other.counts {
            *self.counts.entry(u).or_insert(0) += c;
        }
    }
}

impl FromIterator<(String, u64)> for DangerCounts {
    fn from_iter<I: IntoIterator<Item = (String, u64)>>(iter: I) -> Self {
        let mut out = DangerCounts::default();
        for (u, c) in iter {
            *out.counts.entry(u).or_insert(0) += c;
        }
        out
    }
}

/// Counts resolved labels per user. Every user in the input appears, with a
/// zero count when none of their tweets is dangerous.
pub fn danger_counts<'a, I>(labelled: I) -> DangerCounts
where
    I: IntoIterator<Item = (&'a str, bool)>,
{
    labelled
        .into_iter()
        .map(|(u, dangerous)| (u.to_string(), u64::from(dangerous)))
        .collect()
}
