use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use rimkit::cli::{ingest_ids, scan_cache, IngestOutcome};
use rimkit::dataset::{read_dataset, render_dataset, write_dataset};
use rimkit::fetch::{Fetcher, RateLimiter, UreqTransport};
use rimkit::ingest::{ingest_game, QuarantineEntry, QuarantineReason};
use rimkit_core::model::AliasTable;
use rimkit_core::{SeasonType, SeriesState};

fn cache() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cache")
}

fn offline() -> Fetcher<UreqTransport> {
    Fetcher {
        cache: cache(),
        network: false,
        summary_template: None,
        wp_template: None,
        limiter: RateLimiter::per_minute(0),
        transport: UreqTransport::default(),
    }
}

fn run() -> IngestOutcome {
    let ids = scan_cache(&cache(), &[]).unwrap();
    ingest_ids(&offline(), &ids, &AliasTable::new(), 0.5).unwrap()
}

fn entry(game: &str, play: Option<&str>, reason: QuarantineReason) -> (String, Option<String>, QuarantineReason) {
    (game.into(), play.map(str::to_string), reason)
}

#[test]
fn fixture_corpus_yields_the_expected_ledger() {
    let out = run();
    let mut q = out.quarantine.clone();
    q.sort();
    let got: Vec<_> = q.iter().map(|e| (e.game_id.clone(), e.play_id.clone(), e.reason)).collect();
    assert_eq!(
        got,
        vec![
            entry("401000003", Some("401000003002"), QuarantineReason::WpOutOfRange),
            entry("401000003", Some("401000003004"), QuarantineReason::NoPostSample),
            entry("401000005", None, QuarantineReason::ParseError),
            entry("401000006", None, QuarantineReason::MissingWpFeed),
        ]
    );
    let parse = q.iter().find(|e| e.reason == QuarantineReason::ParseError).unwrap();
    let len = std::fs::metadata(cache().join("2023-24/401000005.summary.json")).unwrap().len();
    assert!(parse.detail.contains(&format!("at byte {len}")), "{}", parse.detail);

    let ids: Vec<&str> = out.games.iter().map(|g| g.game_id.as_str()).collect();
    assert_eq!(ids, ["401000001", "401000002", "401000003", "401000004"]);
    assert_eq!(out.flags, BTreeMap::from([("no-crew".to_string(), 1)]));
}

#[test]
fn kept_games_carry_the_aligned_values() {
    let out = run();
    let by_id = |id: &str| out.games.iter().find(|g| g.game_id == id).unwrap();

    let g1 = by_id("401000001");
    assert_eq!(g1.crew.len(), 3);
    let pairs: Vec<(f64, f64)> = g1.events.iter().map(|e| (e.pre_wp.value(), e.post_wp.value())).collect();
    assert_eq!(pairs, [(0.55, 0.57), (0.58, 0.54), (0.54, 0.60)]);
    assert_eq!(g1.events[2].clock_seconds_remaining, 45.2);
    assert_eq!(g1.events[0].charged_team.as_ref().unwrap().as_str(), "NYK");

    assert!(by_id("401000002").crew.is_empty());

    // The out-of-range sample is skipped on both sides of the alignment.
    let g3 = by_id("401000003");
    let pairs: Vec<(f64, f64)> = g3.events.iter().map(|e| (e.pre_wp.value(), e.post_wp.value())).collect();
    assert_eq!(pairs, [(0.6, 0.7), (0.6, 0.7)]);

    let g4 = by_id("401000004");
    assert_eq!(g4.season_type, SeasonType::Postseason);
    assert_eq!(g4.series_state, Some(SeriesState { home_wins: 1, away_wins: 1 }));
    assert_eq!(g4.events[1].period, 5);
}

#[test]
fn re_ingest_is_byte_identical() {
    let a = run();
    let b = run();
    let ra = render_dataset(&a.games, &a.quarantine, &a.flags, &[]).unwrap();
    let rb = render_dataset(&b.games, &b.quarantine, &b.flags, &[]).unwrap();
    assert_eq!(ra, rb);

    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("ds");
    let m1 = write_dataset(&a.games, &a.quarantine, &a.flags, &[], &root).unwrap();
    let ds = read_dataset(&root).unwrap();
    assert_eq!(ds.manifest, m1);
    assert_eq!(ds.games, {
        let mut g = a.games.clone();
        g.sort_by(|x, y| (x.season_type.as_str(), &x.game_id).cmp(&(y.season_type.as_str(), &y.game_id)));
        g
    });
    let mut q = a.quarantine.clone();
    q.sort();
    assert_eq!(ds.quarantine, q);
}

#[test]
fn corrupted_partition_is_detected() {
    let a = run();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("ds");
    write_dataset(&a.games, &a.quarantine, &a.flags, &[], &root).unwrap();
    let p = root.join("2023-24/regular/games.jsonl");
    let mut bytes = std::fs::read(&p).unwrap();
    bytes[10] ^= 1;
    std::fs::write(&p, bytes).unwrap();
    assert!(read_dataset(&root).is_err());
}

fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(cache().join("2023-24").join(name)).unwrap()
}

fn check_complete(id: &str, summary: &[u8], wp: Option<&[u8]>) {
    let r = ingest_game(id, summary, wp, &AliasTable::new(), 0.5);
    let no_post = r.quarantined.iter().filter(|e| e.reason == QuarantineReason::NoPostSample).count();
    match &r.game {
        Some(g) => {
            assert_eq!(g.events.len() + no_post, r.fouls_seen, "every foul is kept or quarantined");
            assert_eq!(r.no_crew, g.crew.is_empty());
        }
        None => assert!(!r.quarantined.is_empty(), "a dropped game leaves a ledger entry"),
    }
    let all_have_ids = r.quarantined.iter().all(|e: &QuarantineEntry| !e.game_id.is_empty());
    assert!(all_have_ids);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn truncation_never_panics(cut in 0usize..3000, which in 0usize..4) {
        let name = ["401000001.summary.json", "401000002.summary.json", "401000004.summary.json", "401000006.summary.json"][which];
        let doc = fixture(name);
        let cut = cut.min(doc.len());
        check_complete("x", &doc[..cut], None);
    }

    #[test]
    fn byte_flips_never_panic(pos in 0usize..3000, byte in any::<u8>()) {
        let mut doc = fixture("401000001.summary.json");
        let i = pos % doc.len();
        doc[i] = byte;
        check_complete("x", &doc, None);
        let wp = fixture("401000003.wp.json");
        let mut wp2 = wp.clone();
        let j = pos % wp2.len();
        wp2[j] = byte;
        check_complete("y", &fixture("401000003.summary.json"), Some(&wp2));
    }

    #[test]
    fn dropping_samples_keeps_the_ledger_complete(mask in proptest::collection::vec(any::<bool>(), 6)) {
        let doc: serde_json::Value = serde_json::from_slice(&fixture("401000001.summary.json")).unwrap();
        let samples: Vec<serde_json::Value> = doc["winprobability"]
            .as_array()
            .unwrap()
            .iter()
            .zip(&mask)
            .filter(|(_, keep)| **keep)
            .map(|(s, _)| s.clone())
            .collect();
        let wp = serde_json::to_vec(&samples).unwrap();
        check_complete("401000001", &fixture("401000001.summary.json"), Some(&wp));
    }
}
