//! Tweet ingestion, text normalization, event classification and lexicon
//! based candidate selection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Event a tweet is about. Built-in events order before custom ones, and that
/// order is the tie-break used by [`classify_event`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventLabel {
    CaaNrc,
    Covid19,
    Farmers,
    Custom(String),
}

impl EventLabel {
    fn rank(&self) -> u8 {
        match self {
            EventLabel::CaaNrc => 0,
            EventLabel::Covid19 => 1,
            EventLabel::Farmers => 2,
            EventLabel::Custom(_) => 3,
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            EventLabel::CaaNrc => "CAA_NRC",
            EventLabel::Covid19 => "COVID19",
            EventLabel::Farmers => "FARMERS",
            EventLabel::Custom(name) => name,
        }
    }
}

impl Ord for EventLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank()).then_with(|| match (self, other) {
            (EventLabel::Custom(a), EventLabel::Custom(b)) => a.cmp(b),
            _ => Ordering::Equal,
        })
    }
}

impl PartialOrd for EventLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::invalid("empty event name"));
        }
        Ok(match s.to_ascii_uppercase().as_str() {
            "CAA_NRC" | "CAA/NRC" | "CAA" => EventLabel::CaaNrc,
            "COVID19" | "COVID-19" | "COVID" => EventLabel::Covid19,
            "FARMERS" | "FARMERS_PROTEST" => EventLabel::Farmers,
            _ => EventLabel::Custom(s.to_string()),
        })
    }
}

impl Serialize for EventLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EventLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tweet {
    pub id: String,
    pub user_id: String,
    pub raw_text: String,
    pub norm_text: String,
    pub created_at: DateTime<Utc>,
    /// Author of the retweeted tweet; `None` for original and quote tweets.
    pub retweet_of_user: Option<String>,
    pub is_quote: bool,
    pub event: Option<EventLabel>,
    pub danger_label: Option<bool>,
}

impl Tweet {
    pub fn is_retweet(&self) -> bool {
        self.retweet_of_user.is_some()
    }

    /// Original content: neither a retweet nor a quote.
    pub fn is_original(&self) -> bool {
        !self.is_retweet() && !self.is_quote
    }
}

#[derive(Debug, Deserialize)]
struct TweetRecord {
    id: String,
    user_id: String,
    text: String,
    created_at: String,
    #[serde(default)]
    retweet_of_user: Option<String>,
    #[serde(default)]
    is_quote: bool,
}

impl TryFrom<TweetRecord> for Tweet {
    type Error = String;

    fn try_from(r: TweetRecord) -> std::result::Result<Self, String> {
        if r.id.is_empty() || r.user_id.is_empty() {
            return Err("empty id or user_id".into());
        }
        let created_at = DateTime::parse_from_rfc3339(&r.created_at)
            .map_err(|e| format!("created_at: {e}"))?
            .with_timezone(&Utc);
        if r.retweet_of_user.as_deref() == Some(r.user_id.as_str()) {
            return Err(format!("tweet {} retweets its own author", r.id));
        }
        if r.is_quote && r.retweet_of_user.is_some() {
            return Err(format!("tweet {} is both a quote and a retweet", r.id));
        }
        Ok(Tweet {
            norm_text: normalize_text(&r.text),
            id: r.id,
            user_id: r.user_id,
            raw_text: r.text,
            created_at,
            retweet_of_user: r.retweet_of_user,
            is_quote: r.is_quote,
            event: None,
            danger_label: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    #[serde(rename = "BJP")]
    Bjp,
    #[serde(rename = "INC")]
    Inc,
    #[serde(rename = "other")]
    Other,
}

impl FromStr for Party {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BJP" => Ok(Party::Bjp),
            "INC" => Ok(Party::Inc),
            "OTHER" => Ok(Party::Other),
            other => Err(Error::invalid(format!("unknown party {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UserCategory {
    Politician(Party),
    Influencer(String),
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub id: String,
    pub statuses_count: u64,
    pub followers_count: u64,
    pub friends_count: u64,
    pub favourites_count: u64,
    pub verified: bool,
    pub category: UserCategory,
    pub description: String,
}

#[derive(Debug, Deserialize)]
struct UserRecord {
    id: String,
    statuses_count: u64,
    followers_count: u64,
    friends_count: u64,
    favourites_count: u64,
    #[serde(default)]
    verified: bool,
    #[serde(default)]
    category: String,
    #[serde(default)]
    party: Option<String>,
    #[serde(default)]
    description: String,
}

impl TryFrom<UserRecord> for UserProfile {
    type Error = String;

    fn try_from(r: UserRecord) -> std::result::Result<Self, String> {
        if r.id.is_empty() {
            return Err("empty user id".into());
        }
        let category = match r.category.trim() {
            "politician" => {
                let party = match r.party.as_deref() {
                    Some(p) => p.parse().map_err(|e: Error| e.to_string())?,
                    None => Party::Other,
                };
                UserCategory::Politician(party)
            }
            "influencer" => UserCategory::Influencer(String::new()),
            c if c.starts_with("influencer:") => {
                UserCategory::Influencer(c["influencer:".len()..].to_string())
            }
            _ => UserCategory::Unknown,
        };
        Ok(UserProfile {
            id: r.id,
            statuses_count: r.statuses_count,
            followers_count: r.followers_count,
            friends_count: r.friends_count,
            favourites_count: r.favourites_count,
            verified: r.verified,
            category,
            description: r.description,
        })
    }
}

/// Per-event lexicon configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconSet {
    pub event: EventLabel,
    pub target_group: String,
    pub lexica: BTreeSet<String>,
    pub negative_lexica: BTreeSet<String>,
    pub seed_keywords: BTreeSet<String>,
}

#[derive(Debug, Deserialize)]
struct LexiconRecord {
    event: EventLabel,
    #[serde(default)]
    target_group: String,
    lexica: Vec<String>,
    #[serde(default)]
    negative_lexica: Vec<String>,
    #[serde(default)]
    seed_keywords: Vec<String>,
}

impl LexiconSet {
    pub fn new(
        event: EventLabel,
        target_group: impl Into<String>,
        lexica: impl IntoIterator<Item = impl Into<String>>,
        negative_lexica: impl IntoIterator<Item = impl Into<String>>,
        seed_keywords: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self> {
        let set = LexiconSet {
            event,
            target_group: target_group.into(),
            lexica: lexica.into_iter().map(Into::into).collect(),
            negative_lexica: negative_lexica.into_iter().map(Into::into).collect(),
            seed_keywords: seed_keywords.into_iter().map(Into::into).collect(),
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        let all = self
            .lexica
            .iter()
            .chain(&self.negative_lexica)
            .chain(&self.seed_keywords);
        for term in all {
            if term.is_empty() || normalize_text(term) != *term || term.contains(' ') {
                return Err(Error::invalid(format!(
                    "lexicon term {term:?} for {} is not a normalized single token",
                    self.event
                )));
            }
        }
        if let Some(t) = self.lexica.intersection(&self.negative_lexica).next() {
            return Err(Error::invalid(format!(
                "{t:?} is both a lexicon and a negative lexicon term for {}",
                self.event
            )));
        }
        Ok(())
    }
}

/// Term embeddings, supplied as an input table.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct EmbeddingRecord {
    term: String,
    vector: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self> {
        let mut table = EmbeddingTable::default();
        for (term, v) in entries {
            table.insert(term, v)?;
        }
        Ok(table)
    }

    fn insert(&mut self, term: String, v: Vec<f64>) -> Result<()> {
        if v.is_empty() {
            return Err(Error::invalid(format!("empty vector for {term:?}")));
        }
        if self.vectors.is_empty() {
            self.dim = v.len();
        } else if v.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector for {term:?} has dimension {}, expected {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().all(|x| *x == 0.0) || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("degenerate vector for {term:?}")));
        }
        self.vectors.insert(term, v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<&[f64]> {
        self.vectors.get(term).map(Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }
}

/// Records read from a line-delimited source, with the count of lines that
/// were rejected.
#[derive(Debug, Clone)]
pub struct Ingested<T> {
    pub records: Vec<T>,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

/// Reads one JSON document per line. Blank lines are ignored; a line that
/// fails to parse or to convert is skipped and reported.
pub fn read_jsonl<R, Rec, T, F>(reader: R, mut convert: F) -> Result<Ingested<T>>
where
    R: BufRead,
    Rec: serde::de::DeserializeOwned,
    F: FnMut(Rec) -> std::result::Result<T, String>,
{
    let mut out = Ingested {
        records: Vec::new(),
        skipped: 0,
        warnings: Vec::new(),
    };
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Rec>(&line)
            .map_err(|e| e.to_string())
            .and_then(&mut convert);
        match parsed {
            Ok(t) => out.records.push(t),
            Err(msg) => {
                log::warn!("line {}: skipped: {msg}", lineno + 1);
                out.skipped += 1;
                out.warnings.push(format!("line {}: {msg}", lineno + 1));
            }
        }
    }
    Ok(out)
}

pub fn parse_tweets<R: BufRead>(reader: R) -> Result<Ingested<Tweet>> {
    read_jsonl(reader, |r: TweetRecord| Tweet::try_from(r))
}

pub fn parse_users<R: BufRead>(reader: R) -> Result<Ingested<UserProfile>> {
    read_jsonl(reader, |r: UserRecord| UserProfile::try_from(r))
}

/// Lexicon documents are strict: a malformed entry is an error, not a skip.
pub fn parse_lexica<R: BufRead>(reader: R) -> Result<Vec<LexiconSet>> {
    let ingested = read_jsonl(reader, |r: LexiconRecord| {
        LexiconSet::new(
            r.event,
            r.target_group,
            r.lexica,
            r.negative_lexica,
            r.seed_keywords,
        )
        .map_err(|e| e.to_string())
    })?;
    if let Some(w) = ingested.warnings.first() {
        return Err(Error::Parse(format!("lexicon config: {w}")));
    }
    let mut seen = HashSet::new();
    for l in &ingested.records {
        if !seen.insert(l.event.clone()) {
            return Err(Error::Parse(format!("duplicate lexicon for {}", l.event)));
        }
    }
    Ok(ingested.records)
}

pub fn parse_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingTable> {
    let ingested = read_jsonl(reader, |r: EmbeddingRecord| Ok((r.term, r.vector)))?;
    if let Some(w) = ingested.warnings.first() {
        return Err(Error::Parse(format!("embedding table: {w}")));
    }
    EmbeddingTable::new(ingested.records)
}

fn url_pattern() -> &'static Regex {
    static URL: OnceLock<Regex> = OnceLock::new();
    URL.get_or_init(|| Regex::new(r"https?://\S*|\bt\.co/\S*").expect("valid regex"))
}

/// Lowercases, strips URLs, and drops every character that is not
/// alphanumeric, whitespace, `#` or `@`. Whitespace runs collapse to a single
/// space.
pub fn normalize_text(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let without_urls = url_pattern().replace_all(&lowered, " ");
    let mut out = String::with_capacity(without_urls.len());
    let mut pending_space = false;
    for c in without_urls.chars() {
        if c.is_whitespace() {
            pending_space = true;
        } else if c.is_alphanumeric() || c == '#' || c == '@' {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

/// Whether `term` occurs in the token list. A bare term also matches its
/// hashtag form, so `caa` matches `#caa` but `#caa` does not match `caa`.
fn token_matches(token: &str, term: &str) -> bool {
    token == term || (token.strip_prefix('#') == Some(term) && !term.starts_with('#'))
}

fn contains_term(tokens: &[&str], term: &str) -> bool {
    tokens.iter().any(|t| token_matches(t, term))
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("zero vector"));
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Grows the seed set by adding every vocabulary term whose cosine similarity
/// to a current member is at least `tau`, round by round, until nothing new is
/// added or `max_iter` rounds have run.
pub fn expand_seed_keywords(
    seeds: &BTreeSet<String>,
    table: &EmbeddingTable,
    tau: f64,
    max_iter: usize,
) -> Result<BTreeSet<String>> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format!("tau must lie in (0, 1], got {tau}")));
    }
    let mut current = BTreeSet::new();
    for s in seeds {
        if table.get(s).is_some() {
            current.insert(s.clone());
        } else {
            log::warn!("seed keyword {s:?} has no embedding; dropped");
        }
    }
    if current.is_empty() {
        return Err(Error::invalid("no seed keyword has an embedding"));
    }

    let mut frontier: Vec<String> = current.iter().cloned().collect();
    for _ in 0..max_iter {
        let mut added = BTreeSet::new();
        for term in table.terms() {
            if current.contains(term) {
                continue;
            }
            let v = table.get(term).expect("term from table");
            for member in &frontier {
                let m = table.get(member).expect("member has embedding");
                if cosine_similarity(v, m)? >= tau {
                    added.insert(term.to_string());
                    break;
                }
            }
        }
        if added.is_empty() {
            break;
        }
        // Only the terms added this round can contribute new neighbours.
        frontier = added.iter().cloned().collect();
        current.extend(added);
    }
    Ok(current)
}

/// The event whose keyword set has the most distinct matches in the tweet.
pub fn classify_event(
    tweet: &Tweet,
    keyword_sets: &BTreeMap<EventLabel, BTreeSet<String>>,
) -> Option<EventLabel> {
    let tokens: Vec<&str> = tweet.norm_text.split(' ').filter(|t| !t.is_empty()).collect();
    let mut best: Option<(&EventLabel, usize)> = None;
    for (label, terms) in keyword_sets {
        let hits = terms.iter().filter(|t| contains_term(&tokens, t)).count();
        if hits > 0 && best.is_none_or(|(_, b)| hits > b) {
            best = Some((label, hits));
        }
    }
    best.map(|(l, _)| l.clone())
}

/// Whether a normalized text contains at least one lexicon term and no
/// negative lexicon term.
pub fn is_candidate(norm_text: &str, lex: &LexiconSet) -> bool {
    let tokens: Vec<&str> = norm_text.split(' ').filter(|t| !t.is_empty()).collect();
    lex.lexica.iter().any(|t| contains_term(&tokens, t))
        && !lex.negative_lexica.iter().any(|t| contains_term(&tokens, t))
}

pub fn filter_candidates<'a>(tweets: &'a [Tweet], lex: &LexiconSet) -> Vec<&'a Tweet> {
    tweets
        .iter()
        .filter(|t| is_candidate(&t.norm_text, lex))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermRatio {
    pub count_a: u64,
    pub count_b: u64,
    /// `None` when `term_b` never occurs.
    pub ratio: Option<f64>,
}

pub fn term_frequency_ratio<'a, I>(tweets: I, term_a: &str, term_b: &str) -> TermRatio
where
    I: IntoIterator<Item = &'a Tweet>,
{
    let (mut count_a, mut count_b) = (0u64, 0u64);
    for t in tweets {
        for tok in t.norm_text.split(' ') {
            if token_matches(tok, term_a) {
                count_a += 1;
            }
            if token_matches(tok, term_b) {
                count_b += 1;
            }
        }
    }
    let ratio = (count_b > 0).then(|| count_a as f64 / count_b as f64);
    TermRatio {
        count_a,
        count_b,
        ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tweet(text: &str) -> Tweet {
        Tweet {
            id: "t".into(),
            user_id: "u".into(),
            raw_text: text.into(),
            norm_text: normalize_text(text),
            created_at: DateTime::parse_from_rfc3339("2020-01-01T00:00:00Z")
                .unwrap()
                .with_timezone(&Utc),
            retweet_of_user: None,
            is_quote: false,
            event: None,
            danger_label: None,
        }
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("ABC"), "abc");
        assert_eq!(
            normalize_text("Spread of #CoronaJihad!! http://a.b 😀"),
            "spread of #coronajihad"
        );
        assert_eq!(normalize_text("see t.co/xyz  now"), "see now");
        assert_eq!(normalize_text("@Someone: don't!"), "@someone dont");
        assert_eq!(normalize_text("a\u{200d}b ✊🏽 c"), "ab c");
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,60}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once.clone());
            prop_assert!(!once.contains("http"));
            prop_assert_eq!(once.to_lowercase(), once.clone());
        }

        #[test]
        fn normalize_handles_url_mixtures(a in "[A-Za-z ]{0,10}", b in "[a-z./]{0,10}") {
            let s = format!("{a} https://{b} {a}");
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3, -2.0, 5.0];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    fn toy_table() -> EmbeddingTable {
        EmbeddingTable::new(vec![
            ("caa".to_string(), vec![1.0, 0.0, 0.0]),
            ("nrc".to_string(), vec![0.95, 0.31, 0.0]),
            ("npr".to_string(), vec![0.75, 0.66, 0.0]),
            ("shaheenbagh".to_string(), vec![0.45, 0.89, 0.05]),
            ("cricket".to_string(), vec![0.0, 0.1, 1.0]),
        ])
        .unwrap()
    }

    /// Reachability over the graph of pairs with similarity >= tau.
    fn closure_oracle(seeds: &[&str], table: &EmbeddingTable, tau: f64) -> BTreeSet<String> {
        let terms: Vec<&str> = table.terms().collect();
        let n = terms.len();
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                let a = table.get(terms[i]).unwrap();
                let b = table.get(terms[j]).unwrap();
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                reach[i][j] = i == j || dot / (na * nb) >= tau;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        for (i, t) in terms.iter().enumerate() {
            if seeds.contains(t) {
                for j in 0..n {
                    if reach[i][j] {
                        out.insert(terms[j].to_string());
                    }
                }
            }
        }
        out
    }

    #[test]
    fn expansion_matches_closure_oracle() {
        let table = toy_table();
        let got = expand_seed_keywords(&set(&["caa"]), &table, 0.9, 100).unwrap();
        let want = closure_oracle(&["caa"], &table, 0.9);
        assert_eq!(got, want);
        // caa-nrc-npr-shaheenbagh is a chain, each step above 0.9.
        assert_eq!(got, set(&["caa", "nrc", "npr", "shaheenbagh"]));
        // One round only reaches direct neighbours.
        let one = expand_seed_keywords(&set(&["caa"]), &table, 0.9, 1).unwrap();
        assert_eq!(one, set(&["caa", "nrc"]));
    }

    #[test]
    fn expansion_edge_cases() {
        let table = toy_table();
        let seeds = set(&["caa", "cricket"]);
        assert_eq!(expand_seed_keywords(&seeds, &table, 1.0, 10).unwrap(), seeds);
        assert_eq!(expand_seed_keywords(&seeds, &table, 0.5, 0).unwrap(), seeds);
        let with_missing = set(&["caa", "absent"]);
        assert_eq!(
            expand_seed_keywords(&with_missing, &table, 1.0, 10).unwrap(),
            set(&["caa"])
        );
        assert!(expand_seed_keywords(&set(&["absent"]), &table, 0.9, 10).is_err());
        assert!(expand_seed_keywords(&seeds, &table, 0.0, 10).is_err());
    }

    proptest! {
        #[test]
        fn expansion_is_monotone_in_tau(
            vecs in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 2..8),
            t1 in 0.05f64..1.0,
            t2 in 0.05f64..1.0,
        ) {
            prop_assume!(vecs.iter().all(|v| v.iter().any(|x| x.abs() > 1e-3)));
            let table = EmbeddingTable::new(
                vecs.into_iter().enumerate().map(|(i, v)| (format!("w{i}"), v)),
            ).unwrap();
            let seeds = set(&["w0"]);
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let loose = expand_seed_keywords(&seeds, &table, lo, 50).unwrap();
            let strict = expand_seed_keywords(&seeds, &table, hi, 50).unwrap();
            prop_assert!(strict.is_subset(&loose));
            prop_assert_eq!(strict, closure_oracle(&["w0"], &table, hi));
        }
    }

    #[test]
    fn classify_examples() {
        let mut sets = BTreeMap::new();
        sets.insert(EventLabel::CaaNrc, set(&["caa", "nrc"]));
        sets.insert(EventLabel::Covid19, set(&["covid", "lockdown"]));
        sets.insert(EventLabel::Farmers, set(&["farmers", "tractor"]));
        assert_eq!(
            classify_event(&tweet("caa nrc protest"), &sets),
            Some(EventLabel::CaaNrc)
        );
        assert_eq!(classify_event(&tweet("good morning"), &sets), None);
        assert_eq!(
            classify_event(&tweet("farmers in lockdown"), &sets),
            Some(EventLabel::Covid19)
        );
        assert_eq!(
            classify_event(&tweet("#Farmers #tractor lockdown"), &sets),
            Some(EventLabel::Farmers)
        );
        // repeated tokens count once
        assert_eq!(
            classify_event(&tweet("covid covid covid caa nrc"), &sets),
            Some(EventLabel::CaaNrc)
        );
    }

    #[test]
    fn event_order_is_fixed() {
        let mut labels = vec![
            EventLabel::Custom("aaa".into()),
            EventLabel::Farmers,
            EventLabel::CaaNrc,
            EventLabel::Covid19,
        ];
        labels.sort();
        assert_eq!(
            labels,
            vec![
                EventLabel::CaaNrc,
                EventLabel::Covid19,
                EventLabel::Farmers,
                EventLabel::Custom("aaa".into())
            ]
        );
        assert_eq!("COVID19".parse::<EventLabel>().unwrap(), EventLabel::Covid19);
    }

    fn lexicons() -> (LexiconSet, LexiconSet) {
        let covid = LexiconSet::new(
            EventLabel::Covid19,
            "Muslims",
            ["jihadist", "#coronajihad", "#nizamuddinidiots"],
            ["islamophobia", "blaming", "label"],
            ["covid"],
        )
        .unwrap();
        let farmers = LexiconSet::new(
            EventLabel::Farmers,
            "Sikhs & Farmers",
            ["khalistani", "#khalistaniterrorists", "#traitornottractor"],
            ["discredit", "dubbed", "defame"],
            ["farmers"],
        )
        .unwrap();
        (covid, farmers)
    }

    #[test]
    fn filter_examples() {
        let (covid, farmers) = lexicons();
        let tweets = vec![
            tweet("With the growing Islamic violence in the country... #CoronaJihad"),
            tweet("good morning everyone"),
        ];
        let kept = filter_candidates(&tweets, &covid);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].raw_text, tweets[0].raw_text);

        let ft = vec![tweet(
            "farmers are being dubbed as khalistani since they launched the protest against farm laws",
        )];
        assert!(filter_candidates(&ft, &farmers).is_empty());
        assert!(filter_candidates(&tweets[1..], &farmers).is_empty());
    }

    #[test]
    fn lexicon_validation() {
        assert!(LexiconSet::new(EventLabel::CaaNrc, "", ["a"], ["a"], ["b"]).is_err());
        assert!(LexiconSet::new(EventLabel::CaaNrc, "", ["Upper"], [""; 0], ["b"]).is_err());
        assert!(LexiconSet::new(EventLabel::CaaNrc, "", ["two words"], [""; 0], ["b"]).is_err());
    }

    proptest! {
        #[test]
        fn filter_is_subset_and_dedup_stable(picks in proptest::collection::vec(0usize..6, 0..20)) {
            let (covid, _) = lexicons();
            let pool = [
                "#coronajihad spreading",
                "jihadist label",
                "hello world",
                "stop blaming jihadist",
                "#nizamuddinidiots again",
                "jihadist jihadist",
            ];
            let tweets: Vec<Tweet> = picks
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut t = tweet(pool[*p]);
                    t.id = format!("t{i}");
                    t
                })
                .collect();
            let kept = filter_candidates(&tweets, &covid);
            prop_assert!(kept.len() <= tweets.len());
            let ids: Vec<&str> = kept.iter().map(|t| t.id.as_str()).collect();
            let mut sorted = ids.clone();
            sorted.sort_by_key(|id| id[1..].parse::<usize>().unwrap());
            prop_assert_eq!(&ids, &sorted);

            let mut doubled = tweets.clone();
            doubled.extend(tweets.iter().cloned());
            let mut seen = HashSet::new();
            let dedup: Vec<&str> = filter_candidates(&doubled, &covid)
                .into_iter()
                .filter(|t| seen.insert(t.id.clone()))
                .map(|t| t.id.as_str())
                .collect();
            prop_assert_eq!(dedup, ids);
        }
    }

    #[test]
    fn term_ratio_examples() {
        let tweets = vec![
            tweet("jihadi jihadi muslim"),
            tweet("jihadi jihadi jihadi"),
            tweet("#jihadi muslim"),
        ];
        let r = term_frequency_ratio(&tweets, "jihadi", "muslim");
        assert_eq!((r.count_a, r.count_b), (6, 2));
        assert_eq!(r.ratio, Some(3.0));
        assert_eq!(term_frequency_ratio(&tweets, "muslim", "muslim").ratio, Some(1.0));
        assert_eq!(term_frequency_ratio(&tweets, "jihadi", "absent").ratio, None);
    }

    #[test]
    fn parse_tweet_lines() {
        assert!(parse_tweets("".as_bytes()).unwrap().records.is_empty());

        let own = r#"{"id":"1","user_id":"a","text":"x","created_at":"2020-01-01T00:00:00Z","retweet_of_user":"a","is_quote":false}"#;
        let got = parse_tweets(own.as_bytes()).unwrap();
        assert_eq!((got.records.len(), got.skipped), (0, 1));

        let input = [
            r#"{"id":"1","user_id":"a","text":"Hello World!","created_at":"2020-01-01T00:00:00Z","retweet_of_user":null,"is_quote":false}"#,
            r#"{"id":"2","user_id":"b","text":"RT hi","created_at":"2020-01-01T05:30:00+05:30","retweet_of_user":"a","is_quote":false}"#,
            "this is not json",
            r#"{"id":"3","user_id":"c","text":"q","created_at":"2020-01-02T00:00:00Z","retweet_of_user":null,"is_quote":true}"#,
        ]
        .join("\n");
        let got = parse_tweets(input.as_bytes()).unwrap();
        assert_eq!((got.records.len(), got.skipped), (3, 1));
        assert_eq!(got.records[0].norm_text, "hello world");
        assert_eq!(got.records[1].retweet_of_user.as_deref(), Some("a"));
        assert_eq!(got.records[1].created_at, got.records[0].created_at);
        assert!(got.records[2].is_quote && !got.records[2].is_original());
    }

    #[test]
    fn parse_user_lines() {
        let input = [
            r#"{"id":"p1","statuses_count":10,"followers_count":5,"friends_count":2,"favourites_count":0,"verified":true,"category":"politician","party":"BJP","description":""}"#,
            r#"{"id":"i1","statuses_count":1,"followers_count":1,"friends_count":1,"favourites_count":1,"verified":false,"category":"influencer:journalist","party":null,"description":"x"}"#,
            r#"{"id":"bad","statuses_count":-1,"followers_count":1,"friends_count":1,"favourites_count":1,"verified":false,"category":"","party":null,"description":""}"#,
            r#"{"id":"p2","statuses_count":1,"followers_count":1,"friends_count":1,"favourites_count":1,"verified":false,"category":"politician","party":"XYZ","description":""}"#,
        ]
        .join("\n");
        let got = parse_users(input.as_bytes()).unwrap();
        assert_eq!(got.skipped, 2);
        assert_eq!(got.records[0].category, UserCategory::Politician(Party::Bjp));
        assert_eq!(
            got.records[1].category,
            UserCategory::Influencer("journalist".into())
        );
    }

    #[test]
    fn parse_lexicon_documents() {
        let doc = r##"{"event":"COVID19","target_group":"Muslims","lexica":["jihadist","#coronajihad"],"negative_lexica":["blaming"],"seed_keywords":["covid","corona"]}"##;
        let lex = parse_lexica(doc.as_bytes()).unwrap();
        assert_eq!(lex[0].event, EventLabel::Covid19);
        assert!(lex[0].lexica.contains("#coronajihad"));
        let dup = format!("{doc}\n{doc}");
        assert!(parse_lexica(dup.as_bytes()).is_err());
    }
}
