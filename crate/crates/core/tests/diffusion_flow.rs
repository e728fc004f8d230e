use incite_core::annotate::danger_counts;
use incite_core::corpus::parse_tweets;
use incite_core::diffusion::compute_dab;
use incite_core::graph::build_retweet_graph;
use incite_core::{DabResult, DangerCategory};

const TWEETS: &str = r#"{"id":"1","user_id":"d","text":"first","created_at":"2020-01-01T00:00:00Z","retweet_of_user":null,"is_quote":false}
{"id":"2","user_id":"d","text":"second","created_at":"2020-01-01T01:00:00Z","retweet_of_user":null,"is_quote":false}
{"id":"3","user_id":"d","text":"RT","created_at":"2020-01-01T02:00:00Z","retweet_of_user":"x","is_quote":false}
{"id":"4","user_id":"d","text":"RT","created_at":"2020-01-01T03:00:00Z","retweet_of_user":"x","is_quote":false}
{"id":"5","user_id":"x","text":"hello","created_at":"2020-01-01T04:00:00Z","retweet_of_user":null,"is_quote":false}
{"id":"6","user_id":"y","text":"RT","created_at":"2020-01-01T05:00:00Z","retweet_of_user":"x","is_quote":false}
{"id":"7","user_id":"z","text":"elsewhere","created_at":"2020-01-01T06:00:00Z","retweet_of_user":null,"is_quote":false}
{"id":"8","user_id":"z","text":"broken
"#;

#[test]
fn danger_reaches_retweeted_users_only() {
    let ingested = parse_tweets(TWEETS.as_bytes()).unwrap();
    assert_eq!((ingested.records.len(), ingested.skipped), (7, 1));
    let tweets = ingested.records;

    let g = build_retweet_graph(&tweets);
    assert_eq!(g.nodes(), ["d", "x", "y", "z"]);
    assert_eq!(g.weight(0, 1), 2);

    // Both originals of d are dangerous.
    let counts = danger_counts(
        tweets
            .iter()
            .filter(|t| t.is_original())
            .map(|t| (t.user_id.as_str(), t.user_id == "d")),
    );
    assert_eq!(counts.get("d"), 2);

    let dab = compute_dab(&g, &counts, 2).unwrap();
    let score = |u: &str| dab.normalized[g.node_index(u).unwrap()];
    assert_eq!(score("d"), 1.0);
    // x keeps a quarter of itself, takes a quarter from y and half from d.
    assert!((score("x") - 0.625).abs() < 1e-12);
    assert_eq!(score("y"), 0.0);
    assert_eq!(score("z"), 0.0);

    let classified = DabResult::classify(dab, 2).unwrap();
    assert_eq!(classified.thresholds, [0.0]);
    let cats = classified.category_map();
    assert_eq!(cats["d"], DangerCategory::V);
    assert_eq!(cats["x"], DangerCategory::V);
    assert_eq!(cats["y"], DangerCategory::N);
    assert_eq!(classified.dangerous_fraction, 0.5);
}
