mod oracle;

use rimkit_core::metrics::{compute_game_metrics, FoulFilter};
use rimkit_core::outliers::{build_cells, build_ref_team_panel, PanelRow, RefTeamPanel};
use rimkit_core::synth::{generate, oracle_excess, oracle_recompute, SimConfig};
use rimkit_core::{GameMetrics, SeasonType, Side};

fn corpus() -> Vec<rimkit_core::GameRecord> {
    let cfg = SimConfig {
        n_teams: 10,
        n_referees: 15,
        games_per_season: 300,
        postseason_games_per_season: 40,
        seasons: 2,
        overtime_rate: 0.2,
        ..SimConfig::default()
    };
    generate(&cfg).unwrap().games
}

#[test]
fn metrics_match_single_pass_recomputation() {
    let games = corpus();
    let oracle = oracle_recompute(&games);
    for (g, o) in games.iter().zip(&oracle) {
        let m = compute_game_metrics(g, &FoulFilter::default());
        assert_eq!(m.game_id, o.game_id);
        assert!((m.rim - o.rim).abs() < 1e-12);
        assert_eq!(m.calls, o.calls);
        match (m.swing_per_call.value(), o.swing_per_call) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
            (None, None) => {}
            other => panic!("swing mismatch {other:?}"),
        }
        assert_eq!(i64::from(m.row(Side::Home).signed_disparity), o.home_disparity);
        assert_eq!(i64::from(m.row(Side::Away).signed_disparity), o.away_disparity);
        assert!((m.home.signed_team_rim - o.home_signed_rim).abs() < 1e-12);
        assert!((m.away.signed_team_rim - o.away_signed_rim).abs() < 1e-12);
    }
}

#[test]
fn excess_matches_direct_recomputation() {
    let games = corpus();
    let metrics: Vec<GameMetrics> = games
        .iter()
        .map(|g| compute_game_metrics(g, &FoulFilter::default()))
        .collect();
    for st in [None, Some(SeasonType::Regular), Some(SeasonType::Postseason)] {
        let cells = build_cells(&build_ref_team_panel(&metrics, st));
        let oracle = oracle_excess(&games, st);
        assert_eq!(cells.len(), oracle.len());
        for c in &cells {
            let (n, x_rim, x_disp) = oracle[&(c.referee.to_string(), c.team.to_string())];
            assert_eq!(c.games, n);
            assert!((c.rim.x - x_rim).abs() < 1e-12);
            assert!((c.disparity.x - x_disp).abs() < 1e-12);
        }
    }
}

#[test]
fn excess_on_an_unbalanced_toy_panel() {
    let toy = [
        ("R1", "A", 1.0),
        ("R1", "A", 3.0),
        ("R1", "B", -2.0),
        ("R2", "A", 0.5),
        ("R2", "B", 4.0),
        ("R2", "B", 1.0),
        ("R2", "B", 0.0),
    ];
    let rows: Vec<PanelRow> = toy
        .iter()
        .enumerate()
        .map(|(i, (r, t, y))| PanelRow {
            game_id: format!("g{i}"),
            referee: (*r).into(),
            team: (*t).into(),
            opponent: "Z".into(),
            season: "2022-23".into(),
            is_home: true,
            signed_team_rim: *y,
            signed_disparity: -*y,
        })
        .collect();
    let panel = RefTeamPanel { rows, games_used: 7, games_without_crew: 0 };
    let expect = oracle::excess_direct(&toy);
    for c in build_cells(&panel) {
        let x = expect[&(c.referee.to_string(), c.team.to_string())];
        assert!((c.rim.x - x).abs() < 1e-14);
        assert!((c.disparity.x + x).abs() < 1e-14);
    }
}
