//! Generates the bundled synthetic fixture: 200 users, about 5,000 tweets
//! over three events, dual annotations, stances, party following counts,
//! term embeddings, lexica and a pipeline config. Then runs the full
//! pipeline and writes the golden outputs next to the inputs.
//!
//! ```text
//! cargo run -p incite-cli --example gen_fixture [-- OUTPUT_DIR]
//! ```
//!
//! The construction pins the shape of the results:
//! * speakers (authors of dangerous tweets) never retweet, so belief only
//!   reaches the speakers themselves and every other user keeps a score of
//!   exactly zero; the dangerous share of each event is speakers / 200;
//! * annotation disagreement counts are solved for a target kappa.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, LogNormal};
use serde_json::json;

use incite_cli::config::PipelineConfig;
use incite_cli::pipeline::Stage;
use incite_cli::{run, Overrides};

const SEED: u64 = 20_200_315;
const USERS: usize = 200;

struct EventSpec {
    label: &'static str,
    target_group: &'static str,
    /// `(term, angle in degrees)` in the event's embedding plane; the first
    /// two are the seeds.
    vocabulary: &'static [(&'static str, f64)],
    lexica: &'static [&'static str],
    negative: &'static [&'static str],
    speakers: usize,
    kappa: f64,
    start: (i32, u32, u32),
}

const EVENTS: [EventSpec; 3] = [
    EventSpec {
        label: "CAA_NRC",
        target_group: "Muslims",
        vocabulary: &[
            ("caa", 0.0),
            ("nrc", 10.0),
            ("#caa", 5.0),
            ("shaheenbagh", 20.0),
            ("citizenship", 35.0),
            ("detention", 70.0),
            ("npr", 110.0),
        ],
        lexica: &["jihadi", "infiltrators", "termites", "#deportthem"],
        negative: &["dubbed", "blamed", "condemn"],
        speakers: 8,
        kappa: 0.92,
        start: (2019, 12, 10),
    },
    EventSpec {
        label: "COVID19",
        target_group: "Muslims",
        vocabulary: &[
            ("covid", 0.0),
            ("coronavirus", 8.0),
            ("#covid19", 15.0),
            ("lockdown", 30.0),
            ("pandemic", 40.0),
            ("quarantine", 75.0),
        ],
        lexica: &["#coronajihad", "#tablighijamaat", "superspreaders", "jihadi"],
        negative: &["dubbed", "blamed", "fake"],
        speakers: 2,
        kappa: 0.73,
        start: (2020, 3, 25),
    },
    EventSpec {
        label: "FARMERS",
        target_group: "Sikhs",
        vocabulary: &[
            ("farmers", 0.0),
            ("farmlaws", 12.0),
            ("#farmersprotest", 6.0),
            ("kisan", 25.0),
            ("msp", 40.0),
            ("mandi", 80.0),
        ],
        lexica: &["khalistani", "#khalistanis", "traitors", "terrorists"],
        negative: &["dubbed", "blamed", "called"],
        speakers: 12,
        kappa: 0.88,
        start: (2020, 11, 26),
    },
];

/// Words on an embedding plane of their own, never event keywords.
const UNRELATED: [(&str, f64); 3] = [("cricket", 0.0), ("movie", 50.0), ("weather", 100.0)];

const FILLER: [&str; 16] = [
    "today", "people", "india", "news", "watch", "government", "delhi", "must", "read", "everyone",
    "this", "is", "what", "happening", "our", "country",
];
const DANGER_FILLER: [&str; 6] = ["they", "will", "destroy", "us", "throw", "out"];
const DECORATION: [&str; 5] = ["!!", " https://t.co/x9Yq2", " 😡", "...", " http://bit.ly/3abc"];

struct TweetOut {
    id: String,
    user_id: String,
    text: String,
    created_at: DateTime<Utc>,
    retweet_of_user: Option<String>,
    is_quote: bool,
}

struct Gen {
    rng: ChaCha8Rng,
    tweets: Vec<TweetOut>,
    annotations: Vec<serde_json::Value>,
}

fn user(i: usize) -> String {
    format!("u{i:03}")
}

impl Gen {
    fn push(&mut self, user_id: String, text: String, at: DateTime<Utc>, rt: Option<String>, quote: bool) -> usize {
        let id = format!("t{:05}", self.tweets.len() + 1);
        self.tweets.push(TweetOut {
            id,
            user_id,
            text,
            created_at: at,
            retweet_of_user: rt,
            is_quote: quote,
        });
        self.tweets.len() - 1
    }

    fn words(&mut self, pool: &[&str], n: usize) -> Vec<String> {
        (0..n).map(|_| pool.choose(&mut self.rng).expect("pool").to_string()).collect()
    }

    fn decorate(&mut self, mut words: Vec<String>) -> String {
        words.shuffle(&mut self.rng);
        let mut text = words.join(" ");
        if let Some(first) = text.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        if self.rng.gen_bool(0.3) {
            text.push_str(DECORATION.choose(&mut self.rng).expect("decoration"));
        }
        text
    }

    fn when(&mut self, start: DateTime<Utc>) -> DateTime<Utc> {
        start + Duration::minutes(self.rng.gen_range(0..30 * 24 * 60))
    }

    fn event_text(&mut self, keywords: &[&str], extra: &[&str]) -> String {
        let k = self.rng.gen_range(1..=2);
        let mut w = self.words(keywords, k);
        let f = self.rng.gen_range(3..=6);
        w.extend(self.words(&FILLER, f));
        w.extend(extra.iter().map(|s| s.to_string()));
        self.decorate(w)
    }
}

fn kappa(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let n = (a + b + c + d) as f64;
    let po = (a + d) as f64 / n;
    let ya = (a + b) as f64 / n;
    let yb = (a + c) as f64 / n;
    let pe = ya * yb + (1.0 - ya) * (1.0 - yb);
    (po - pe) / (1.0 - pe)
}

/// Disagreement and negative-agreement counts for `a` agreed-dangerous
/// tweets that put kappa closest to `target`, preferring small corpora.
fn solve_counts(a: usize, target: f64) -> (usize, usize, usize) {
    let mut best = (f64::INFINITY, (0, 0, 0));
    for b in 1..=30 {
        for c in 1..=30 {
            for d in 40..=160 {
                let err = (kappa(a, b, c, d) - target).abs();
                if err < best.0 - 1e-12 {
                    best = (err, (b, c, d));
                }
            }
        }
    }
    best.1
}

fn unit_plane(axis: usize, deg: f64) -> Vec<f64> {
    let mut v = vec![0.0; 8];
    let r = deg.to_radians();
    v[2 * axis] = (r.cos() * 1e6).round() / 1e6;
    v[2 * axis + 1] = (r.sin() * 1e6).round() / 1e6;
    v
}

fn write_lines(path: &Path, lines: &[String]) {
    let mut f = fs::File::create(path).expect("create fixture file");
    for l in lines {
        writeln!(f, "{l}").expect("write fixture line");
    }
}

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic"));
    fs::create_dir_all(&dir).expect("create fixture dir");

    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(SEED),
        tweets: Vec::new(),
        annotations: Vec::new(),
    };

    // Speakers are disjoint across events.
    let mut order: Vec<usize> = (0..USERS).collect();
    order.shuffle(&mut g.rng);
    let mut speakers_of: Vec<Vec<usize>> = Vec::new();
    let mut offset = 0;
    for ev in &EVENTS {
        speakers_of.push(order[offset..offset + ev.speakers].to_vec());
        offset += ev.speakers;
    }
    let any_speaker: Vec<bool> = (0..USERS).map(|u| speakers_of.iter().flatten().any(|&s| s == u)).collect();

    for (ei, ev) in EVENTS.iter().enumerate() {
        let start = Utc.with_ymd_and_hms(ev.start.0, ev.start.1, ev.start.2, 0, 0, 0).unwrap();
        let keywords: Vec<&str> = ev.vocabulary.iter().map(|(t, _)| *t).collect();
        let speakers = &speakers_of[ei];
        let is_speaker = |u: usize| speakers.contains(&u);
        let others: Vec<usize> = (0..USERS).filter(|&u| !is_speaker(u)).collect();

        // Ordinary originals; every user appears in every event.
        let mut originals: Vec<Vec<usize>> = vec![Vec::new(); USERS];
        for u in 0..USERS {
            for _ in 0..g.rng.gen_range(4..=7) {
                let text = g.event_text(&keywords, &[]);
                let at = g.when(start);
                let quote = !is_speaker(u) && g.rng.gen_bool(0.08);
                let idx = g.push(user(u), text, at, None, quote);
                originals[u].push(idx);
            }
        }

        // Dangerous tweets by speakers, agreed by both annotators.
        let mut agreed = 0;
        for (k, &s) in speakers.iter().enumerate() {
            let n = 5 + (k * 3 + ei) % 5;
            for j in 0..n {
                let lex = ev.lexica[(k + j) % ev.lexica.len()];
                let mut extra = vec![lex];
                // "jihadi" about three times as often as "muslim"
                if ev.lexica.contains(&"jihadi") {
                    if j % 4 != 3 {
                        extra.push("jihadi");
                    }
                    if j % 4 == 0 {
                        extra.push("muslim");
                    }
                }
                let danger = g.words(&DANGER_FILLER, 3);
                let danger: Vec<&str> = danger.iter().map(String::as_str).collect();
                extra.extend(danger);
                let text = g.event_text(&keywords, &extra);
                let at = g.when(start);
                let idx = g.push(user(s), text, at, None, false);
                originals[s].push(idx);
                let id = g.tweets[idx].id.clone();
                g.annotations.push(json!({"tweet_id": id, "label_a": true, "label_b": true}));
                agreed += 1;
            }
        }

        // Other lexicon hits by ordinary users.
        let (b, c, d) = solve_counts(agreed, ev.kappa);
        let labels = std::iter::repeat((true, false))
            .take(b)
            .chain(std::iter::repeat((false, true)).take(c))
            .chain(std::iter::repeat((false, false)).take(d));
        for (la, lb) in labels {
            let u = *others.choose(&mut g.rng).expect("ordinary users");
            let lex = *ev.lexica.choose(&mut g.rng).expect("lexicon");
            let text = g.event_text(&keywords, &[lex]);
            let at = g.when(start);
            let idx = g.push(user(u), text, at, None, false);
            originals[u].push(idx);
            let id = g.tweets[idx].id.clone();
            g.annotations.push(json!({"tweet_id": id, "label_a": la, "label_b": lb}));
        }
        // Candidates seen by one annotator only.
        for i in 0..4 {
            let u = *others.choose(&mut g.rng).expect("ordinary users");
            let lex = ev.lexica[i % ev.lexica.len()];
            let text = g.event_text(&keywords, &[lex]);
            let at = g.when(start);
            let idx = g.push(user(u), text, at, None, false);
            originals[u].push(idx);
            let id = g.tweets[idx].id.clone();
            g.annotations.push(json!({"tweet_id": id, "label_a": i % 2 == 0, "label_b": null}));
        }
        // Counter-speech: lexicon term next to a negative term.
        for i in 0..10 {
            let u = *others.choose(&mut g.rng).expect("ordinary users");
            let lex = ev.lexica[i % ev.lexica.len()];
            let neg = ev.negative[i % ev.negative.len()];
            let text = g.event_text(&keywords, &["being", neg, "as", lex]);
            let at = g.when(start);
            let idx = g.push(user(u), text, at, None, false);
            originals[u].push(idx);
        }

        // Retweets. Speakers are retweeted a controlled number of times and
        // never retweet anyone.
        let retweet = |g: &mut Gen, src: usize, by: usize| {
            let pick = *originals[src].choose(&mut g.rng).expect("source has originals");
            let text = format!("RT @{}: {}", user(src), g.tweets[pick].text);
            let at = g.tweets[pick].created_at + Duration::minutes(g.rng.gen_range(1..600));
            g.push(user(by), text, at, Some(user(src)), false);
        };
        for &s in speakers {
            let og = originals[s].len() as f64;
            let keep = g.rng.gen_range(0.78..0.95);
            let incoming = (og * (1.0 / keep - 1.0)).round() as usize;
            for _ in 0..incoming.max(1) {
                let by = *others.choose(&mut g.rng).expect("ordinary users");
                retweet(&mut g, s, by);
            }
        }
        for _ in 0..420 {
            let src = *others.choose(&mut g.rng).expect("ordinary users");
            let by = loop {
                let by = *others.choose(&mut g.rng).expect("ordinary users");
                if by != src {
                    break by;
                }
            };
            retweet(&mut g, src, by);
        }
    }

    // Tweets matching no event, and ties between two events.
    let base = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
    for _ in 0..120 {
        let u = g.rng.gen_range(0..USERS);
        let w = g.words(&["cricket", "movie", "weather", "today", "match", "great", "morning"], 5);
        let text = g.decorate(w);
        let at = base + Duration::minutes(g.rng.gen_range(0..365 * 24 * 60));
        g.push(user(u), text, at, None, false);
    }
    for _ in 0..6 {
        let u = g.rng.gen_range(0..USERS);
        let text = g.decorate(vec!["caa".into(), "covid".into(), "people".into(), "today".into()]);
        let at = base + Duration::minutes(g.rng.gen_range(0..365 * 24 * 60));
        g.push(user(u), text, at, None, false);
    }
    // An annotation for a tweet that is no candidate, and one for an
    // unknown tweet.
    let plain = g.tweets.iter().find(|t| t.text.starts_with("Cricket") || t.text.contains("cricket")).map(|t| t.id.clone());
    if let Some(id) = plain {
        g.annotations.push(json!({"tweet_id": id, "label_a": false, "label_b": false}));
    }
    g.annotations.push(json!({"tweet_id": "t99999", "label_a": true, "label_b": false}));

    // Tweets file, ordered by time.
    g.tweets.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
    let mut lines: Vec<String> = g
        .tweets
        .iter()
        .map(|t| {
            json!({
                "id": t.id,
                "user_id": t.user_id,
                "text": t.text,
                "created_at": t.created_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                "retweet_of_user": t.retweet_of_user,
                "is_quote": t.is_quote,
            })
            .to_string()
        })
        .collect();
    lines.insert(17, "{\"id\": \"broken".to_string());
    lines.insert(
        400,
        json!({"id": "t00000", "user_id": "u001", "text": "RT @u001: self", "created_at": "2020-01-01T00:00:00Z",
               "retweet_of_user": "u001", "is_quote": false})
        .to_string(),
    );
    write_lines(&dir.join("tweets.jsonl"), &lines);

    // Users.
    let statuses = LogNormal::new(7.0, 1.2).unwrap();
    let followers = LogNormal::new(6.0, 1.5).unwrap();
    let friends = LogNormal::new(5.5, 1.0).unwrap();
    let favourites = LogNormal::new(7.0, 1.5).unwrap();
    let kinds = ["journalist", "celebrity", "activist"];
    let mut users = Vec::new();
    for u in 0..USERS {
        let boost = if any_speaker[u] { 3.0 } else { 1.0 };
        let (category, party) = match u {
            0..=4 => ("politician".to_string(), Some("BJP")),
            5..=8 => ("politician".to_string(), Some("INC")),
            9 => ("politician".to_string(), None),
            10..=24 => (format!("influencer:{}", kinds[u % 3]), None),
            _ => ("unknown".to_string(), None),
        };
        users.push(
            json!({
                "id": user(u),
                "statuses_count": (statuses.sample(&mut g.rng) * boost) as u64,
                "followers_count": (followers.sample(&mut g.rng) * boost * boost) as u64,
                "friends_count": friends.sample(&mut g.rng) as u64,
                "favourites_count": favourites.sample(&mut g.rng) as u64,
                "verified": g.rng.gen_bool(0.1),
                "category": category,
                "party": party,
                "description": format!("synthetic account {u}"),
            })
            .to_string(),
        );
    }
    write_lines(&dir.join("users.jsonl"), &users);

    write_lines(
        &dir.join("annotations.jsonl"),
        &g.annotations.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
    );

    let lexica: Vec<String> = EVENTS
        .iter()
        .map(|ev| {
            json!({
                "event": ev.label,
                "target_group": ev.target_group,
                "lexica": ev.lexica,
                "negative_lexica": ev.negative,
                "seed_keywords": [ev.vocabulary[0].0, ev.vocabulary[1].0],
            })
            .to_string()
        })
        .collect();
    write_lines(&dir.join("lexica.jsonl"), &lexica);

    let mut embeddings = Vec::new();
    for (axis, ev) in EVENTS.iter().enumerate() {
        for (term, deg) in ev.vocabulary {
            embeddings.push(json!({"term": term, "vector": unit_plane(axis, *deg)}).to_string());
        }
    }
    for (term, deg) in UNRELATED {
        embeddings.push(json!({"term": term, "vector": unit_plane(3, deg)}).to_string());
    }
    embeddings.push(json!({"term": "muslim", "vector": unit_plane(3, 200.0)}).to_string());
    write_lines(&dir.join("embeddings.jsonl"), &embeddings);

    let mut stances = Vec::new();
    for u in 0..USERS {
        if g.rng.gen_bool(0.85) {
            let s: f64 = if any_speaker[u] { g.rng.gen_range(0.5..1.0) } else { g.rng.gen_range(-1.0..1.0) };
            stances.push(json!({"user_id": user(u), "stance": (s * 1e4).round() / 1e4}).to_string());
        }
    }
    write_lines(&dir.join("stances.jsonl"), &stances);

    let mut following = Vec::new();
    for u in 0..USERS {
        if !any_speaker[u] && !g.rng.gen_bool(0.75) {
            continue;
        }
        let total = g.rng.gen_range(0..120u64);
        let share = if any_speaker[u] { 0.92 } else { g.rng.gen_range(0.43..0.63) };
        let bjp = Binomial::new(total, share).unwrap().sample(&mut g.rng);
        following.push(json!({"user_id": user(u), "bjp": bjp, "inc": total - bjp}).to_string());
    }
    write_lines(&dir.join("party_following.jsonl"), &following);

    let config = r#"# Synthetic fixture; regenerate with
#   cargo run -p incite-cli --example gen_fixture
[paths]
tweets = "tweets.jsonl"
users = "users.jsonl"
annotations = "annotations.jsonl"
lexica = "lexica.jsonl"
embeddings = "embeddings.jsonl"
stances = "stances.jsonl"
party_following = "party_following.jsonl"
output = "out"

[expand]
tau = 0.7
max_iter = 10

[dab]
steps = 2
classes = 3

[polarity]
alpha = 0.005
total_bjp = 14094
total_inc = 12341
stance_provenance = "synthetic uniform stances"

[stats]
alpha = 0.05
bootstrap_n = 2000
seed = 7

[terms]
pairs = [["jihadi", "muslim"], ["khalistani", "sikh"]]
"#;
    fs::write(dir.join("config.toml"), config).expect("write config");

    // Golden outputs, checked against the construction targets.
    let golden = dir.join("golden");
    if golden.exists() {
        fs::remove_dir_all(&golden).expect("clear golden");
    }
    let cfg = PipelineConfig::load(&dir.join("config.toml")).expect("config loads");
    let overrides = Overrides {
        out: Some(golden.clone()),
        ..Overrides::default()
    };
    run("all", &Stage::ALL, cfg, &overrides).expect("pipeline runs on the fixture");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(golden.join("report.json")).unwrap()).unwrap();
    let mut summary = BTreeMap::new();
    for (ev, e) in EVENTS.iter().zip(report["events"].as_array().unwrap()) {
        let k = e["kappa"].as_f64().unwrap();
        let frac = e["dangerous_fraction"].as_f64().unwrap();
        assert!((k - ev.kappa).abs() < 0.005, "{}: kappa {k}", ev.label);
        assert_eq!(frac, ev.speakers as f64 / USERS as f64, "{}: dangerous fraction", ev.label);
        summary.insert(ev.label, (k, frac));
    }
    println!("tweets: {}", g.tweets.len());
    for (label, (k, frac)) in summary {
        println!("{label}: kappa {k:.4}, dangerous fraction {frac}");
    }
}
