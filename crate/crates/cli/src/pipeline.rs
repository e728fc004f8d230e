//! Stage implementations. Each stage computes what it needs from earlier
//! stages in memory, so a subcommand run alone writes the same bytes as the
//! corresponding part of `all`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use incite_core::annotate::{cohens_kappa, parse_annotations, resolve_label, AnnotationPair};
use incite_core::corpus::{
    classify_event, expand_seed_keywords, is_candidate, parse_embeddings, parse_lexica,
    parse_tweets, parse_users, read_jsonl, term_frequency_ratio,
};
use incite_core::diffusion::{average_dab, compute_dab, ecdf, jenks_breaks, assign_dac};
use incite_core::graph::{
    adjacency, build_retweet_graph, centrality_report, export_dot, export_gexf, transition,
    write_adjacency_csv,
};
use incite_core::polarity::{follower_polarity, parse_stances, retweet_polarity};
use incite_core::stats::{group_summary, linreg, log_count, one_way_anova, tukey_hsd};
use incite_core::{
    DabResult, DangerCategory, DangerCounts, EventLabel, LexiconSet, PartyFollowing, RetweetGraph,
    Tweet, UserProfile,
};

use crate::artifacts::{num, opt_num, Artifacts, Table};
use crate::config::PipelineConfig;
use crate::error::RunError;

/// Subcommands in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    ClassifyEvents,
    Filter,
    Kappa,
    BuildGraph,
    Dab,
    Classify,
    Polarity,
    Centrality,
    Stats,
    Terms,
    ExportGexf,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 13] = [
        Stage::Ingest,
        Stage::ClassifyEvents,
        Stage::Filter,
        Stage::Kappa,
        Stage::BuildGraph,
        Stage::Dab,
        Stage::Classify,
        Stage::Polarity,
        Stage::Centrality,
        Stage::Stats,
        Stage::Terms,
        Stage::ExportGexf,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::ClassifyEvents => "classify-events",
            Stage::Filter => "filter",
            Stage::Kappa => "kappa",
            Stage::BuildGraph => "build-graph",
            Stage::Dab => "dab",
            Stage::Classify => "classify",
            Stage::Polarity => "polarity",
            Stage::Centrality => "centrality",
            Stage::Stats => "stats",
            Stage::Terms => "terms",
            Stage::ExportGexf => "export-gexf",
            Stage::Report => "report",
        }
    }
}

/// Scope label for results on all events together.
const ALL_SCOPE: &str = "ALL";
/// Scope label for results on cross-event averaged scores.
const AVERAGE_SCOPE: &str = "AVERAGE";

fn open(path: &Path) -> Result<BufReader<File>, RunError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| RunError::Data(format!("cannot open {}: {e}", path.display())))
}

/// File-name-safe form of an event label.
fn slug(e: &EventLabel) -> String {
    e.as_str()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

#[derive(Debug, Deserialize)]
struct PartyRecord {
    user_id: String,
    bjp: u64,
    inc: u64,
}

struct Ingest {
    tweets: Vec<Tweet>,
    users: Vec<UserProfile>,
    lexica: Vec<LexiconSet>,
    summary: Table,
}

struct EventIndex {
    keywords: BTreeMap<EventLabel, BTreeSet<String>>,
    seeds: BTreeMap<EventLabel, BTreeSet<String>>,
    /// tweet indices per event, in input order
    tweets: BTreeMap<EventLabel, Vec<usize>>,
}

struct Annotated {
    kappa: BTreeMap<EventLabel, Option<incite_core::KappaResult>>,
    pairs: BTreeMap<EventLabel, usize>,
    counts: BTreeMap<EventLabel, DangerCounts>,
    dangerous_tweets: BTreeMap<EventLabel, Vec<usize>>,
    single_annotator: usize,
    unmatched: usize,
}

struct Averaged {
    scores: BTreeMap<String, f64>,
    events: BTreeMap<String, usize>,
    thresholds: Vec<f64>,
    categories: BTreeMap<String, DangerCategory>,
    dangerous_fraction: f64,
}

struct PolarityRow {
    retweet: Option<f64>,
    follower: incite_core::FollowerPolarity,
}

/// Lazily computed pipeline state for one run.
pub struct Run<'a> {
    cfg: &'a PipelineConfig,
    only_event: Option<EventLabel>,
    ingest: Option<Ingest>,
    events: Option<EventIndex>,
    candidates: Option<BTreeMap<EventLabel, Vec<usize>>>,
    annotated: Option<Annotated>,
    graphs: Option<BTreeMap<EventLabel, RetweetGraph>>,
    merged: Option<RetweetGraph>,
    dab: Option<BTreeMap<EventLabel, DabResult>>,
    averaged: Option<Averaged>,
    polarity: Option<BTreeMap<String, PolarityRow>>,
    eigen_unconverged: Vec<String>,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a PipelineConfig, event: Option<&str>) -> Result<Self, RunError> {
        let only_event = event
            .map(|e| e.parse::<EventLabel>().map_err(|err| RunError::Config(err.to_string())))
            .transpose()?;
        Ok(Run {
            cfg,
            only_event,
            ingest: None,
            events: None,
            candidates: None,
            annotated: None,
            graphs: None,
            merged: None,
            dab: None,
            averaged: None,
            polarity: None,
            eigen_unconverged: Vec::new(),
        })
    }

    /// Labels processed in this run, in the fixed event order.
    pub fn event_labels(&mut self) -> Result<Vec<EventLabel>, RunError> {
        self.ensure_ingest()?;
        Ok(self.ingest.as_ref().expect("ingested").lexica.iter().map(|l| l.event.clone()).collect())
    }

    fn ensure_ingest(&mut self) -> Result<(), RunError> {
        if self.ingest.is_some() {
            return Ok(());
        }
        let p = &self.cfg.paths;
        let tweets = parse_tweets(open(&self.cfg.resolve(&p.tweets))?)?;
        let users = parse_users(open(&self.cfg.resolve(&p.users))?)?;
        let mut lexica = parse_lexica(open(&self.cfg.resolve(&p.lexica))?)?;
        lexica.sort_by(|a, b| a.event.cmp(&b.event));

        let mut wanted: Vec<EventLabel> = Vec::new();
        for name in &self.cfg.events.include {
            wanted.push(name.parse().map_err(|e: incite_core::Error| RunError::Config(e.to_string()))?);
        }
        if let Some(e) = &self.only_event {
            if !wanted.is_empty() && !wanted.contains(e) {
                return Err(RunError::Config(format!("event {e} is not in events.include")));
            }
            wanted = vec![e.clone()];
        }
        for w in &wanted {
            if !lexica.iter().any(|l| &l.event == w) {
                return Err(RunError::Config(format!("no lexicon configured for event {w}")));
            }
        }
        if !wanted.is_empty() {
            lexica.retain(|l| wanted.contains(&l.event));
        }
        if lexica.is_empty() {
            return Err(RunError::Data("lexicon file defines no events".into()));
        }

        let mut summary = Table::new(&["input", "records", "skipped"]);
        summary.push(vec!["tweets".into(), tweets.records.len().to_string(), tweets.skipped.to_string()]);
        summary.push(vec!["users".into(), users.records.len().to_string(), users.skipped.to_string()]);
        summary.push(vec!["lexica".into(), lexica.len().to_string(), "0".into()]);
        self.ingest = Some(Ingest {
            tweets: tweets.records,
            users: users.records,
            lexica,
            summary,
        });
        Ok(())
    }

    fn ensure_events(&mut self) -> Result<(), RunError> {
        if self.events.is_some() {
            return Ok(());
        }
        self.ensure_ingest()?;
        let table = parse_embeddings(open(&self.cfg.resolve(&self.cfg.paths.embeddings))?)?;
        let ingest = self.ingest.as_mut().expect("ingested");
        let mut keywords = BTreeMap::new();
        let mut seeds = BTreeMap::new();
        for lex in &ingest.lexica {
            let expanded =
                expand_seed_keywords(&lex.seed_keywords, &table, self.cfg.expand.tau, self.cfg.expand.max_iter)?;
            keywords.insert(lex.event.clone(), expanded);
            seeds.insert(lex.event.clone(), lex.seed_keywords.clone());
        }
        let mut tweets: BTreeMap<EventLabel, Vec<usize>> =
            keywords.keys().map(|k| (k.clone(), Vec::new())).collect();
        for (i, t) in ingest.tweets.iter_mut().enumerate() {
            t.event = classify_event(t, &keywords);
            if let Some(e) = &t.event {
                tweets.get_mut(e).expect("label from keyword sets").push(i);
            }
        }
        self.events = Some(EventIndex {
            keywords,
            seeds,
            tweets,
        });
        Ok(())
    }

    fn ensure_candidates(&mut self) -> Result<(), RunError> {
        if self.candidates.is_some() {
            return Ok(());
        }
        self.ensure_events()?;
        let ingest = self.ingest.as_ref().expect("ingested");
        let events = self.events.as_ref().expect("classified");
        let mut out = BTreeMap::new();
        for lex in &ingest.lexica {
            // Retweets repeat someone else's text, so only authored content
            // is a candidate.
            let idx: Vec<usize> = events.tweets[&lex.event]
                .iter()
                .copied()
                .filter(|&i| {
                    let t = &ingest.tweets[i];
                    !t.is_retweet() && is_candidate(&t.norm_text, lex)
                })
                .collect();
            out.insert(lex.event.clone(), idx);
        }
        self.candidates = Some(out);
        Ok(())
    }

    fn ensure_annotated(&mut self) -> Result<(), RunError> {
        if self.annotated.is_some() {
            return Ok(());
        }
        self.ensure_candidates()?;
        let ann = parse_annotations(open(&self.cfg.resolve(&self.cfg.paths.annotations))?)?;
        let by_tweet: HashMap<&str, &AnnotationPair> =
            ann.pairs.iter().map(|p| (p.tweet_id.as_str(), p)).collect();
        let ingest = self.ingest.as_mut().expect("ingested");
        let candidates = self.candidates.as_ref().expect("filtered");
        let mut kappa = BTreeMap::new();
        let mut pairs_n = BTreeMap::new();
        let mut counts = BTreeMap::new();
        let mut dangerous_tweets = BTreeMap::new();
        let mut matched = 0usize;
        for (event, idx) in candidates {
            let mut pairs = Vec::new();
            let mut labelled: Vec<(String, bool)> = Vec::new();
            let mut dangerous = Vec::new();
            for &i in idx {
                let t = &mut ingest.tweets[i];
                if let Some(p) = by_tweet.get(t.id.as_str()) {
                    let resolved = resolve_label(p);
                    t.danger_label = Some(resolved);
                    pairs.push((*p).clone());
                    labelled.push((t.user_id.clone(), resolved));
                    if resolved {
                        dangerous.push(i);
                    }
                }
            }
            matched += pairs.len();
            let k = if pairs.is_empty() {
                log::warn!("no dual annotations for {event}");
                None
            } else {
                Some(cohens_kappa(&pairs)?)
            };
            kappa.insert(event.clone(), k);
            pairs_n.insert(event.clone(), pairs.len());
            counts.insert(
                event.clone(),
                labelled.into_iter().map(|(u, d)| (u, u64::from(d))).collect(),
            );
            dangerous_tweets.insert(event.clone(), dangerous);
        }
        self.annotated = Some(Annotated {
            kappa,
            pairs: pairs_n,
            counts,
            dangerous_tweets,
            single_annotator: ann.single_annotator,
            unmatched: ann.pairs.len().saturating_sub(matched),
        });
        Ok(())
    }

    fn ensure_graphs(&mut self) -> Result<(), RunError> {
        if self.graphs.is_some() {
            return Ok(());
        }
        self.ensure_events()?;
        let ingest = self.ingest.as_ref().expect("ingested");
        let events = self.events.as_ref().expect("classified");
        let graphs: BTreeMap<EventLabel, RetweetGraph> = events
            .tweets
            .iter()
            .map(|(e, idx)| (e.clone(), build_retweet_graph(idx.iter().map(|&i| &ingest.tweets[i]))))
            .collect();
        self.merged = Some(RetweetGraph::merge(graphs.values()));
        self.graphs = Some(graphs);
        Ok(())
    }

    fn ensure_dab(&mut self) -> Result<(), RunError> {
        if self.dab.is_some() {
            return Ok(());
        }
        self.ensure_annotated()?;
        self.ensure_graphs()?;
        let graphs = self.graphs.as_ref().expect("graphs");
        let counts = &self.annotated.as_ref().expect("annotated").counts;
        let mut out = BTreeMap::new();
        for (event, g) in graphs {
            if g.node_count() == 0 {
                return Err(RunError::Data(format!("event {event} has no tweets")));
            }
            let scores = compute_dab(g, &counts[event], self.cfg.dab.steps)?;
            out.insert(event.clone(), DabResult::classify(scores, self.cfg.dab.classes)?);
        }
        self.dab = Some(out);
        Ok(())
    }

    fn ensure_averaged(&mut self) -> Result<(), RunError> {
        if self.averaged.is_some() {
            return Ok(());
        }
        self.ensure_dab()?;
        let dab = self.dab.as_ref().expect("dab");
        let maps: Vec<BTreeMap<String, f64>> = dab.values().map(|d| d.scores.normalized_map()).collect();
        let scores = average_dab(&maps)?;
        let mut events: BTreeMap<String, usize> = BTreeMap::new();
        for m in &maps {
            for u in m.keys() {
                *events.entry(u.clone()).or_insert(0) += 1;
            }
        }
        let values: Vec<f64> = scores.values().copied().collect();
        let thresholds = jenks_breaks(&values, self.cfg.dab.classes)?;
        let dac = assign_dac(&values, &thresholds)?;
        let categories = scores.keys().cloned().zip(dac.categories).collect();
        self.averaged = Some(Averaged {
            scores,
            events,
            thresholds,
            categories,
            dangerous_fraction: dac.dangerous_fraction,
        });
        Ok(())
    }

    fn ensure_polarity(&mut self) -> Result<(), RunError> {
        if self.polarity.is_some() {
            return Ok(());
        }
        self.ensure_graphs()?;
        let cfg = self.cfg;
        let (stances, skipped) = parse_stances(
            open(&cfg.resolve(&cfg.paths.stances))?,
            &cfg.polarity.stance_provenance,
        )?;
        if skipped > 0 {
            log::warn!("{skipped} stance records skipped");
        }
        let following = read_jsonl(open(&cfg.resolve(&cfg.paths.party_following))?, |r: PartyRecord| {
            Ok((r.user_id, (r.bjp, r.inc)))
        })?;
        if following.skipped > 0 {
            log::warn!("{} party-following records skipped", following.skipped);
        }
        let following: HashMap<String, (u64, u64)> = following.records.into_iter().collect();
        let merged = self.merged.as_ref().expect("graphs");
        let incoming = merged.in_edges();
        let ingest = self.ingest.as_ref().expect("ingested");
        let mut out = BTreeMap::new();
        for user in &ingest.users {
            let retweet = match merged.node_index(&user.id) {
                Some(v) => {
                    let rts: Vec<(&str, f64)> = incoming[v]
                        .iter()
                        .map(|&(u, w)| (merged.nodes()[u].as_str(), w as f64))
                        .collect();
                    undefined_to_none(retweet_polarity(&user.id, &rts, &stances))?
                }
                None => None,
            };
            let (bjp, inc) = following.get(&user.id).copied().unwrap_or((0, 0));
            let follower = follower_polarity(
                &PartyFollowing {
                    bjp,
                    inc,
                    total_bjp: cfg.polarity.total_bjp,
                    total_inc: cfg.polarity.total_inc,
                },
                cfg.polarity.alpha,
            )?;
            out.insert(user.id.clone(), PolarityRow { retweet, follower });
        }
        self.polarity = Some(out);
        Ok(())
    }

    pub fn execute(&mut self, stage: Stage, art: &mut Artifacts) -> Result<(), RunError> {
        log::info!("stage {}", stage.name());
        match stage {
            Stage::Ingest => self.write_ingest(art),
            Stage::ClassifyEvents => self.write_events(art),
            Stage::Filter => self.write_candidates(art),
            Stage::Kappa => self.write_kappa(art),
            Stage::BuildGraph => self.write_graphs(art),
            Stage::Dab => self.write_dab(art),
            Stage::Classify => self.write_classify(art),
            Stage::Polarity => self.write_polarity(art),
            Stage::Centrality => self.write_centrality(art),
            Stage::Stats => self.write_stats(art),
            Stage::Terms => self.write_terms(art),
            Stage::ExportGexf => self.write_exports(art),
            Stage::Report => self.write_report(art),
        }
    }

    fn write_ingest(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_ingest()?;
        art.write_table("ingest", "ingest_summary.csv", &self.ingest.as_ref().expect("ingested").summary)?;
        Ok(())
    }

    fn write_events(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_events()?;
        let ingest = self.ingest.as_ref().expect("ingested");
        let events = self.events.as_ref().expect("classified");
        let mut kw = Table::new(&["event", "term", "seed"]);
        for (e, terms) in &events.keywords {
            for t in terms {
                kw.push(vec![e.to_string(), t.clone(), events.seeds[e].contains(t).to_string()]);
            }
        }
        let mut te = Table::new(&["tweet_id", "event"]);
        for t in &ingest.tweets {
            te.push(vec![t.id.clone(), t.event.as_ref().map(ToString::to_string).unwrap_or_default()]);
        }
        let mut summary = Table::new(&["event", "tweets", "original", "retweets", "quotes", "users"]);
        for (e, idx) in &events.tweets {
            let ts: Vec<&Tweet> = idx.iter().map(|&i| &ingest.tweets[i]).collect();
            let users: BTreeSet<&str> = ts.iter().map(|t| t.user_id.as_str()).collect();
            summary.push(vec![
                e.to_string(),
                ts.len().to_string(),
                ts.iter().filter(|t| t.is_original()).count().to_string(),
                ts.iter().filter(|t| t.is_retweet()).count().to_string(),
                ts.iter().filter(|t| t.is_quote).count().to_string(),
                users.len().to_string(),
            ]);
        }
        art.write_table("classify-events", "event_keywords.csv", &kw)?;
        art.write_table("classify-events", "tweet_events.csv", &te)?;
        art.write_table("classify-events", "event_summary.csv", &summary)?;
        Ok(())
    }

    fn write_candidates(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_candidates()?;
        let ingest = self.ingest.as_ref().expect("ingested");
        let mut t = Table::new(&["event", "tweet_id", "user_id"]);
        for (e, idx) in self.candidates.as_ref().expect("filtered") {
            for &i in idx {
                let tw = &ingest.tweets[i];
                t.push(vec![e.to_string(), tw.id.clone(), tw.user_id.clone()]);
            }
        }
        art.write_table("filter", "candidates.csv", &t)?;
        Ok(())
    }

    fn write_kappa(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_annotated()?;
        let ingest = self.ingest.as_ref().expect("ingested");
        let a = self.annotated.as_ref().expect("annotated");
        let mut kt = Table::new(&["event", "pairs", "kappa", "observed", "expected", "degenerate"]);
        for (e, k) in &a.kappa {
            match k {
                Some(k) => {
                    println!("{e}\tkappa={:.4}\tpairs={}", k.kappa, a.pairs[e]);
                    kt.push(vec![
                        e.to_string(),
                        a.pairs[e].to_string(),
                        num(k.kappa),
                        num(k.observed),
                        num(k.expected),
                        k.degenerate.to_string(),
                    ]);
                }
                None => {
                    println!("{e}\tkappa=undefined\tpairs=0");
                    kt.push(vec![e.to_string(), "0".into(), String::new(), String::new(), String::new(), String::new()]);
                }
            }
        }
        if a.single_annotator > 0 || a.unmatched > 0 {
            log::info!(
                "{} single-annotator records excluded; {} annotations match no candidate",
                a.single_annotator,
                a.unmatched
            );
        }
        let mut ds = Table::new(&["event", "annotated", "dangerous_tweets", "dangerous_users"]);
        let mut du = Table::new(&["event", "user_id", "dangerous_tweets"]);
        for (e, c) in &a.counts {
            ds.push(vec![
                e.to_string(),
                a.pairs[e].to_string(),
                a.dangerous_tweets[e].len().to_string(),
                c.dangerous_users().len().to_string(),
            ]);
            for (u, n) in c.iter().filter(|(_, n)| *n > 0) {
                du.push(vec![e.to_string(), u.to_string(), n.to_string()]);
            }
        }
        debug_assert!(a.dangerous_tweets.values().flatten().all(|&i| ingest.tweets[i].danger_label == Some(true)));
        art.write_table("kappa", "kappa.csv", &kt)?;
        art.write_table("kappa", "danger_summary.csv", &ds)?;
        art.write_table("kappa", "dangerous_users.csv", &du)?;
        Ok(())
    }

    fn write_graphs(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_graphs()?;
        let mut summary = Table::new(&["event", "nodes", "edges", "original_tweets", "retweets", "degenerate_rows"]);
        for (e, g) in self.graphs.as_ref().expect("graphs") {
            let t = transition(&adjacency(g))?;
            summary.push(vec![
                e.to_string(),
                g.node_count().to_string(),
                g.edge_count().to_string(),
                g.originals().iter().sum::<u64>().to_string(),
                g.edges().map(|(_, _, w)| w).sum::<u64>().to_string(),
                t.degenerate_rows().iter().filter(|d| **d).count().to_string(),
            ]);
            let mut edges = Table::new(&["source", "target", "weight"]);
            for (u, v, w) in g.edges() {
                edges.push(vec![g.nodes()[u].clone(), g.nodes()[v].clone(), w.to_string()]);
            }
            art.write_table("build-graph", &format!("graph_{}_edges.csv", slug(e)), &edges)?;
            let mut buf = Vec::new();
            write_adjacency_csv(g, &mut buf)?;
            let rows = adjacency(g).nnz();
            art.write_bytes("build-graph", &format!("adjacency_{}.csv", slug(e)), rows, &buf)?;
        }
        art.write_table("build-graph", "graph_summary.csv", &summary)?;
        Ok(())
    }

    fn write_dab(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_dab()?;
        let mut t = Table::new(&["user_id", "event", "raw", "normalized", "category"]);
        for (e, d) in self.dab.as_ref().expect("dab") {
            for (i, u) in d.scores.nodes.iter().enumerate() {
                t.push(vec![
                    u.clone(),
                    e.to_string(),
                    num(d.scores.raw[i]),
                    num(d.scores.normalized[i]),
                    d.categories[i].to_string(),
                ]);
            }
            let mut ec = Table::new(&["value", "fraction"]);
            for (v, f) in ecdf(&d.scores.normalized)? {
                ec.push(vec![num(v), num(f)]);
            }
            art.write_table("dab", &format!("ecdf_{}.csv", slug(e)), &ec)?;
        }
        art.write_table("dab", "dab.csv", &t)?;
        Ok(())
    }

    fn write_classify(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_averaged()?;
        let mut th = Table::new(&["scope", "class", "upper_bound"]);
        let mut sm = Table::new(&["scope", "users", "N", "M", "V", "dangerous_fraction"]);
        let mut add = |scope: &str, thresholds: &[f64], cats: &mut dyn Iterator<Item = DangerCategory>, frac: f64| {
            for (i, b) in thresholds.iter().enumerate() {
                th.push(vec![scope.to_string(), (i + 1).to_string(), num(*b)]);
            }
            let mut n = [0usize; 3];
            for c in cats {
                n[c as usize] += 1;
            }
            sm.push(vec![
                scope.to_string(),
                n.iter().sum::<usize>().to_string(),
                n[0].to_string(),
                n[1].to_string(),
                n[2].to_string(),
                num(frac),
            ]);
        };
        for (e, d) in self.dab.as_ref().expect("dab") {
            add(e.as_str(), &d.thresholds, &mut d.categories.iter().copied(), d.dangerous_fraction);
        }
        let avg = self.averaged.as_ref().expect("averaged");
        add(AVERAGE_SCOPE, &avg.thresholds, &mut avg.categories.values().copied(), avg.dangerous_fraction);
        let mut at = Table::new(&["user_id", "events", "mean_normalized", "category"]);
        for (u, s) in &avg.scores {
            at.push(vec![u.clone(), avg.events[u].to_string(), num(*s), avg.categories[u].to_string()]);
        }
        art.write_table("classify", "dac_thresholds.csv", &th)?;
        art.write_table("classify", "dac_summary.csv", &sm)?;
        art.write_table("classify", "dac_average.csv", &at)?;
        Ok(())
    }

    fn write_polarity(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_polarity()?;
        let mut t = Table::new(&[
            "user_id",
            "retweet_polarity",
            "follower_polarity",
            "chi_square",
            "p_value",
            "significant",
        ]);
        for (u, r) in self.polarity.as_ref().expect("polarity") {
            t.push(vec![
                u.clone(),
                opt_num(r.retweet),
                num(r.follower.score),
                num(r.follower.chi_square),
                num(r.follower.p_value),
                r.follower.significant.to_string(),
            ]);
        }
        art.write_table("polarity", "polarity.csv", &t)?;
        Ok(())
    }

    fn write_centrality(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_graphs()?;
        let mut t = Table::new(&["scope", "user_id", "indegree", "harmonic", "eigenvector"]);
        let graphs = self.graphs.as_ref().expect("graphs");
        let merged = self.merged.as_ref().expect("graphs");
        let scopes = graphs
            .iter()
            .map(|(e, g)| (e.as_str().to_string(), g))
            .chain(std::iter::once((ALL_SCOPE.to_string(), merged)));
        let mut unconverged = Vec::new();
        for (scope, g) in scopes {
            let r = centrality_report(g, self.cfg.centrality.tol, self.cfg.centrality.max_iter);
            if !r.eigenvector_converged {
                unconverged.push(scope.clone());
            }
            for (i, u) in r.nodes.iter().enumerate() {
                t.push(vec![
                    scope.clone(),
                    u.clone(),
                    num(r.indegree[i]),
                    num(r.harmonic[i]),
                    num(r.eigenvector[i]),
                ]);
            }
        }
        self.eigen_unconverged = unconverged;
        art.write_table("centrality", "centrality.csv", &t)?;
        Ok(())
    }

    fn write_stats(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_averaged()?;
        self.ensure_polarity()?;
        let cfg = self.cfg;
        let ingest = self.ingest.as_ref().expect("ingested");
        let avg = self.averaged.as_ref().expect("averaged");
        let pol = self.polarity.as_ref().expect("polarity");

        type Extract = fn(&UserProfile, &PolarityRow) -> Option<f64>;
        let attributes: [(&str, Extract); 6] = [
            ("log_statuses_count", |u, _| Some(log_count(u.statuses_count))),
            ("log_followers_count", |u, _| Some(log_count(u.followers_count))),
            ("log_friends_count", |u, _| Some(log_count(u.friends_count))),
            ("log_favourites_count", |u, _| Some(log_count(u.favourites_count))),
            ("retweet_polarity", |_, p| p.retweet),
            ("follower_polarity", |_, p| Some(p.follower.score)),
        ];

        let mut st = Table::new(&[
            "attribute",
            "n",
            "slope",
            "intercept",
            "slope_p",
            "anova_f",
            "anova_p",
            "df_between",
            "df_within",
            "hsd_critical_q",
            "hsd_N_M",
            "hsd_N_V",
            "hsd_M_V",
        ]);
        let mut md = Table::new(&["attribute", "category", "n", "median", "ci_low", "ci_high", "replicates", "seed"]);
        for (name, extract) in attributes {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut groups: BTreeMap<DangerCategory, Vec<f64>> = BTreeMap::new();
            for u in &ingest.users {
                let (Some(score), Some(p)) = (avg.scores.get(&u.id), pol.get(&u.id)) else {
                    continue;
                };
                let Some(y) = extract(u, p) else { continue };
                xs.push(*score);
                ys.push(y);
                groups.entry(avg.categories[&u.id]).or_default().push(y);
            }
            let reg = if xs.len() >= 3 { undefined_to_none(linreg(&xs, &ys).map_err(invalid_to_undefined))? } else { None };
            let usable: Vec<(DangerCategory, Vec<f64>)> =
                groups.iter().filter(|(_, v)| v.len() >= 2).map(|(c, v)| (*c, v.clone())).collect();
            let values: Vec<Vec<f64>> = usable.iter().map(|(_, v)| v.clone()).collect();
            let (anova, hsd) = if usable.len() >= 2 {
                (Some(one_way_anova(&values)?), Some(tukey_hsd(&values, cfg.stats.alpha)?))
            } else {
                log::warn!("{name}: fewer than two categories with two users; ANOVA skipped");
                (None, None)
            };
            let verdict = |a: DangerCategory, b: DangerCategory| -> String {
                let (Some(h), Some(i), Some(j)) = (
                    hsd.as_ref(),
                    usable.iter().position(|(c, _)| *c == a),
                    usable.iter().position(|(c, _)| *c == b),
                ) else {
                    return String::new();
                };
                let p = h.pair(i, j).expect("pair exists");
                if p.significant { "significant" } else { "not_significant" }.to_string()
            };
            use DangerCategory::{M, N, V};
            st.push(vec![
                name.to_string(),
                xs.len().to_string(),
                opt_num(reg.map(|r| r.slope)),
                opt_num(reg.map(|r| r.intercept)),
                opt_num(reg.map(|r| r.slope_p)),
                opt_num(anova.map(|a| a.f)),
                opt_num(anova.map(|a| a.p_value)),
                anova.map(|a| a.df_between.to_string()).unwrap_or_default(),
                anova.map(|a| a.df_within.to_string()).unwrap_or_default(),
                opt_num(hsd.as_ref().map(|h| h.critical_q)),
                verdict(N, M),
                verdict(N, V),
                verdict(M, V),
            ]);
            for (c, v) in &groups {
                let s = group_summary(v, cfg.stats.bootstrap_n, cfg.stats.seed)?;
                md.push(vec![
                    name.to_string(),
                    c.to_string(),
                    s.n.to_string(),
                    num(s.median),
                    num(s.ci_low),
                    num(s.ci_high),
                    s.replicates.to_string(),
                    s.seed.to_string(),
                ]);
            }
        }
        art.write_table("stats", "stats.csv", &st)?;
        art.write_table("stats", "medians.csv", &md)?;
        Ok(())
    }

    fn write_terms(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_annotated()?;
        let ingest = self.ingest.as_ref().expect("ingested");
        let a = self.annotated.as_ref().expect("annotated");
        let mut t = Table::new(&["scope", "term_a", "term_b", "count_a", "count_b", "ratio"]);
        let all: Vec<usize> = a.dangerous_tweets.values().flatten().copied().collect();
        let scopes = a
            .dangerous_tweets
            .iter()
            .map(|(e, idx)| (e.as_str(), idx))
            .chain(std::iter::once((ALL_SCOPE, &all)));
        for (scope, idx) in scopes {
            for (ta, tb) in &self.cfg.terms.pairs {
                let r = term_frequency_ratio(idx.iter().map(|&i| &ingest.tweets[i]), ta, tb);
                t.push(vec![
                    scope.to_string(),
                    ta.clone(),
                    tb.clone(),
                    r.count_a.to_string(),
                    r.count_b.to_string(),
                    opt_num(r.ratio),
                ]);
            }
        }
        art.write_table("terms", "terms.csv", &t)?;
        Ok(())
    }

    fn write_exports(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_dab()?;
        let graphs = self.graphs.as_ref().expect("graphs");
        for (e, d) in self.dab.as_ref().expect("dab") {
            let g = &graphs[e];
            let cats = d.category_map();
            let gexf = export_gexf(g, &cats)?;
            art.write_bytes("export-gexf", &format!("graph_{}.gexf", slug(e)), g.node_count(), gexf.as_bytes())?;
            let dot = export_dot(g, &cats)?;
            art.write_bytes("export-gexf", &format!("graph_{}.dot", slug(e)), g.node_count(), dot.as_bytes())?;
        }
        Ok(())
    }

    fn write_report(&mut self, art: &mut Artifacts) -> Result<(), RunError> {
        self.ensure_averaged()?;
        self.ensure_candidates()?;
        let ingest = self.ingest.as_ref().expect("ingested");
        let events = self.events.as_ref().expect("classified");
        let candidates = self.candidates.as_ref().expect("filtered");
        let a = self.annotated.as_ref().expect("annotated");
        let graphs = self.graphs.as_ref().expect("graphs");
        let dab = self.dab.as_ref().expect("dab");
        let avg = self.averaged.as_ref().expect("averaged");
        let report = Report {
            tweets: ingest.tweets.len(),
            users: ingest.users.len(),
            unclassified_tweets: ingest.tweets.iter().filter(|t| t.event.is_none()).count(),
            single_annotator_excluded: a.single_annotator,
            diffusion_steps: self.cfg.dab.steps,
            classes: self.cfg.dab.classes,
            events: dab
                .iter()
                .map(|(e, d)| {
                    let count = |c: DangerCategory| d.categories.iter().filter(|x| **x == c).count();
                    EventReport {
                        event: e.to_string(),
                        tweets: events.tweets[e].len(),
                        keywords: events.keywords[e].len(),
                        candidates: candidates[e].len(),
                        annotated_pairs: a.pairs[e],
                        kappa: a.kappa[e].map(|k| k.kappa),
                        dangerous_tweets: a.dangerous_tweets[e].len(),
                        dangerous_authors: a.counts[e].dangerous_users().len(),
                        nodes: graphs[e].node_count(),
                        edges: graphs[e].edge_count(),
                        thresholds: d.thresholds.clone(),
                        n: count(DangerCategory::N),
                        m: count(DangerCategory::M),
                        v: count(DangerCategory::V),
                        dangerous_fraction: d.dangerous_fraction,
                    }
                })
                .collect(),
            average: AverageReport {
                users: avg.scores.len(),
                thresholds: avg.thresholds.clone(),
                dangerous_fraction: avg.dangerous_fraction,
            },
        };
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        art.write_bytes("report", "report.json", report.events.len(), text.as_bytes())?;
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        self.eigen_unconverged
            .iter()
            .map(|s| format!("eigenvector centrality did not converge for {s}"))
            .collect()
    }
}

#[derive(Serialize)]
struct Report {
    tweets: usize,
    users: usize,
    unclassified_tweets: usize,
    single_annotator_excluded: usize,
    diffusion_steps: usize,
    classes: usize,
    events: Vec<EventReport>,
    average: AverageReport,
}

#[derive(Serialize)]
struct EventReport {
    event: String,
    tweets: usize,
    keywords: usize,
    candidates: usize,
    annotated_pairs: usize,
    kappa: Option<f64>,
    dangerous_tweets: usize,
    dangerous_authors: usize,
    nodes: usize,
    edges: usize,
    thresholds: Vec<f64>,
    n: usize,
    m: usize,
    v: usize,
    dangerous_fraction: f64,
}

#[derive(Serialize)]
struct AverageReport {
    users: usize,
    thresholds: Vec<f64>,
    dangerous_fraction: f64,
}

fn undefined_to_none<T>(r: incite_core::Result<T>) -> Result<Option<T>, RunError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(incite_core::Error::Undefined(msg)) => {
            log::debug!("{msg}");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

/// A constant regressor inside the fixture is an empty result, not a failure.
fn invalid_to_undefined(e: incite_core::Error) -> incite_core::Error {
    match e {
        incite_core::Error::InvalidArgument(m) => incite_core::Error::Undefined(m),
        other => other,
    }
}
