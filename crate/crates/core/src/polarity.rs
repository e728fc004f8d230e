//! Audience polarization scores.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Deserialize;

use crate::corpus::read_jsonl;
use crate::error::{Error, Result};
use crate::stats::distributions::chi_square_sf;

/// Significance level below which follower polarity is reported.
pub const DEFAULT_ALPHA: f64 = 0.005;

/// How many politicians of each party follow one account, and how many
/// politicians of each party there are overall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartyFollowing {
    pub bjp: u64,
    pub inc: u64,
    pub total_bjp: u64,
    pub total_inc: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerPolarity {
    pub score: f64,
    pub chi_square: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Goodness-of-fit chi-square of an account's party split against the
/// global party proportions, reported as `ln(1 + chi2)` when `p <= alpha`
/// and 0 otherwise.
pub fn follower_polarity(pf: &PartyFollowing, alpha: f64) -> Result<FollowerPolarity> {
    if pf.total_bjp == 0 || pf.total_inc == 0 {
        return Err(Error::invalid("party totals must be positive"));
    }
    if pf.bjp > pf.total_bjp || pf.inc > pf.total_inc {
        return Err(Error::invalid(format!(
            "follower counts ({}, {}) exceed party totals ({}, {})",
            pf.bjp, pf.inc, pf.total_bjp, pf.total_inc
        )));
    }
    let n = (pf.bjp + pf.inc) as f64;
    if n == 0.0 {
        return Ok(FollowerPolarity {
            score: 0.0,
            chi_square: 0.0,
            p_value: 1.0,
            significant: false,
        });
    }
    let share = pf.total_bjp as f64 / (pf.total_bjp + pf.total_inc) as f64;
    let expected_b = n * share;
    let expected_c = n - expected_b;
    let db = pf.bjp as f64 - expected_b;
    let dc = pf.inc as f64 - expected_c;
    let chi_square = db * db / expected_b + dc * dc / expected_c;
    let p_value = chi_square_sf(chi_square, 1.0)?;
    let significant = p_value <= alpha;
    Ok(FollowerPolarity {
        score: if significant { chi_square.ln_1p() } else { 0.0 },
        chi_square,
        p_value,
        significant,
    })
}

/// Externally estimated stance per user in `[-1, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StanceTable {
    pub provenance: String,
    stances: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
struct StanceRecord {
    user_id: String,
    stance: f64,
}

impl StanceTable {
    pub fn new(
        provenance: impl Into<String>,
        entries: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self> {
        let mut stances = BTreeMap::new();
        for (u, s) in entries {
            if !(-1.0..=1.0).contains(&s) {
                return Err(Error::invalid(format!("stance {s} of {u:?} outside [-1, 1]")));
            }
            stances.insert(u, s);
        }
        Ok(StanceTable {
            provenance: provenance.into(),
            stances,
        })
    }

    pub fn get(&self, user: &str) -> Option<f64> {
        self.stances.get(user).copied()
    }

    pub fn len(&self) -> usize {
        self.stances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stances.is_empty()
    }
}

/// Reads line-delimited `{"user_id", "stance"}` records; out-of-range
/// stances are skipped like any malformed line.
pub fn parse_stances<R: BufRead>(reader: R, provenance: &str) -> Result<(StanceTable, usize)> {
    let ingested = read_jsonl(reader, |r: StanceRecord| {
        if (-1.0..=1.0).contains(&r.stance) {
            Ok((r.user_id, r.stance))
        } else {
            Err(format!("stance {} outside [-1, 1]", r.stance))
        }
    })?;
    Ok((StanceTable::new(provenance, ingested.records)?, ingested.skipped))
}

/// Absolute retweet-weighted mean stance of the users retweeting `author`.
/// Retweeters without a stance, and the author themself, are ignored.
pub fn retweet_polarity(
    author: &str,
    retweeters: &[(&str, f64)],
    stances: &StanceTable,
) -> Result<f64> {
    let mut weighted = 0.0;
    let mut total = 0.0;
    for &(user, w) in retweeters {
        if user == author || w <= 0.0 {
            continue;
        }
        if let Some(s) = stances.get(user) {
            weighted += w * s;
            total += w;
        }
    }
    if total == 0.0 {
        return Err(Error::Undefined(format!(
            "no retweeter of {author:?} has a stance"
        )));
    }
    Ok((weighted / total).abs().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NB: u64 = 14094;
    const NI: u64 = 12341;

    fn pf(b: u64, c: u64) -> PartyFollowing {
        PartyFollowing {
            bjp: b,
            inc: c,
            total_bjp: NB,
            total_inc: NI,
        }
    }

    /// Upper tail of chi-square(1) via the standard normal: integrate the
    /// normal density beyond sqrt(x) with composite Simpson.
    fn chi1_tail_by_quadrature(x: f64) -> f64 {
        let a = x.sqrt();
        let b = a + 40.0;
        let n = 200_000;
        let h = (b - a) / n as f64;
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = phi(a) + phi(b);
        for i in 1..n {
            let z = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * phi(z);
        }
        2.0 * s * h / 3.0
    }

    #[test]
    fn no_followers_and_independence() {
        assert_eq!(follower_polarity(&pf(0, 0), DEFAULT_ALPHA).unwrap().score, 0.0);
        // 14094:12341 exactly
        let r = follower_polarity(&pf(NB, NI), DEFAULT_ALPHA).unwrap();
        assert_eq!(r.score, 0.0);
        assert!(r.chi_square.abs() < 1e-9);
        assert!((r.p_value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn one_sided_following() {
        let r = follower_polarity(&pf(100, 0), DEFAULT_ALPHA).unwrap();
        // expected BJP count 100 * 14094 / 26435 = 53.3157
        assert!((r.chi_square - 87.56).abs() < 0.05, "{}", r.chi_square);
        assert!(r.significant && r.p_value < 1e-15);
        assert!((r.score - 4.484).abs() < 0.01);
        assert!((r.score - 88.56208315595289f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn p_value_matches_quadrature() {
        for x in [0.01, 0.5, 1.0, 3.84, 7.88, 15.0] {
            let r = chi_square_sf(x, 1.0).unwrap();
            let q = chi1_tail_by_quadrature(x);
            assert!((r - q).abs() < 1e-9, "x={x}: {r} vs {q}");
        }
    }

    #[test]
    fn gating_at_alpha() {
        // a mild imbalance is not significant at 0.005
        let r = follower_polarity(&pf(12, 8), DEFAULT_ALPHA).unwrap();
        assert!(!r.significant);
        assert_eq!(r.score, 0.0);
        assert!(r.chi_square > 0.0);
        assert!(follower_polarity(&pf(1, 1), 0.005).is_ok());
        let bad = PartyFollowing { total_bjp: 0, ..pf(0, 0) };
        assert!(follower_polarity(&bad, 0.005).is_err());
        assert!(follower_polarity(&pf(NB + 1, 0), 0.005).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_under_party_swap(b in 0u64..500, c in 0u64..500, nb in 500u64..20000, ni in 500u64..20000) {
            let x = follower_polarity(&PartyFollowing { bjp: b, inc: c, total_bjp: nb, total_inc: ni }, 0.005).unwrap();
            let y = follower_polarity(&PartyFollowing { bjp: c, inc: b, total_bjp: ni, total_inc: nb }, 0.005).unwrap();
            prop_assert!((x.chi_square - y.chi_square).abs() < 1e-9 * (1.0 + x.chi_square));
            prop_assert_eq!(x.significant, y.significant);
        }

        #[test]
        fn proportional_counts_score_zero(m in 1u64..50, nb in 1u64..200, ni in 1u64..200) {
            let r = follower_polarity(&PartyFollowing { bjp: m * nb, inc: m * ni, total_bjp: nb * 60, total_inc: ni * 60 }, 0.005).unwrap();
            prop_assert_eq!(r.score, 0.0);
        }

        #[test]
        fn nondecreasing_in_imbalance(n in 1u64..400) {
            // walk b from the expected count outwards in both directions
            let share = NB as f64 / (NB + NI) as f64;
            let centre = (n as f64 * share).round() as u64;
            let mut last = -1.0;
            for b in centre..=n {
                let s = follower_polarity(&pf(b, n - b), 0.005).unwrap().score;
                prop_assert!(s >= last);
                last = s;
            }
            last = -1.0;
            for b in (0..=centre).rev() {
                let s = follower_polarity(&pf(b, n - b), 0.005).unwrap().score;
                prop_assert!(s >= last);
                last = s;
            }
        }
    }

    fn table() -> StanceTable {
        StanceTable::new(
            "test",
            [
                ("a".to_string(), 1.0),
                ("b".to_string(), -1.0),
                ("c".to_string(), -0.5),
                ("d".to_string(), 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn retweet_polarity_examples() {
        let t = table();
        assert_eq!(retweet_polarity("x", &[("a", 2.0), ("d", 1.0)], &t).unwrap(), 1.0);
        assert_eq!(retweet_polarity("x", &[("a", 1.0), ("b", 1.0)], &t).unwrap(), 0.0);
        let r = retweet_polarity("x", &[("a", 3.0), ("c", 1.0), ("nostance", 5.0)], &t).unwrap();
        assert!((r - 0.625).abs() < 1e-12);
        assert!(matches!(
            retweet_polarity("x", &[("nostance", 1.0)], &t),
            Err(Error::Undefined(_))
        ));
    }

    proptest! {
        #[test]
        fn retweet_polarity_invariances(
            entries in proptest::collection::vec((-1.0f64..=1.0, 1.0f64..10.0), 1..10),
            scale in 0.1f64..100.0,
        ) {
            let users: Vec<String> = (0..entries.len()).map(|i| format!("u{i}")).collect();
            let pos = StanceTable::new("p", users.iter().cloned().zip(entries.iter().map(|e| e.0))).unwrap();
            let neg = StanceTable::new("n", users.iter().cloned().zip(entries.iter().map(|e| -e.0))).unwrap();
            let rts: Vec<(&str, f64)> = users.iter().map(String::as_str).zip(entries.iter().map(|e| e.1)).collect();
            let scaled: Vec<(&str, f64)> = rts.iter().map(|(u, w)| (*u, w * scale)).collect();
            let base = retweet_polarity("x", &rts, &pos).unwrap();
            prop_assert!((0.0..=1.0).contains(&base));
            prop_assert!((base - retweet_polarity("x", &scaled, &pos).unwrap()).abs() < 1e-9);
            prop_assert!((base - retweet_polarity("x", &rts, &neg).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_stance_lines() {
        let input = "{\"user_id\":\"a\",\"stance\":0.5}\n{\"user_id\":\"b\",\"stance\":2}\n";
        let (t, skipped) = parse_stances(input.as_bytes(), "file").unwrap();
        assert_eq!(t.get("a"), Some(0.5));
        assert_eq!(skipped, 1);
    }
}
