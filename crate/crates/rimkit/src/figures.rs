//! Figure-data tables, one file per figure.

use std::collections::{BTreeMap, BTreeSet};

use rimkit_core::aggregate::{
    component_check_tables, home_away_summary, referee_distribution, referee_summaries,
    series_state_summary, top_bottom_table, ComponentCheck, RefMetric, RefSeasonSummary,
    RefereeDistribution,
};
use rimkit_core::inference::{
    ref_team_residual_effects, series_state_effects, team_side_effects, FitResult, Outcome, Target,
};
use rimkit_core::metrics::team_game_rows;
use rimkit_core::outliers::{
    build_cells, build_ref_team_panel, outlier_tables, OutcomeMetric, OutlierReport, OutlierTable,
};
use rimkit_core::{GameMetrics, PeriodBucket, RefereeName, SeasonType, Side, TeamGameRow, TeamId};

use crate::config::RunConfig;
use crate::table::{f6, int, opt6, Table};

pub const FIGURES: [&str; 18] = [
    "fig1_rim_distribution",
    "fig2_component_calls_swing",
    "fig3_top_bottom",
    "fig4_volume_swing",
    "fig5_quarter_rim",
    "fig6_series_summary",
    "fig7_postseason_distribution",
    "fig8_home_away",
    "fig9_team_home_away",
    "fig10_ref_team_rim_outliers",
    "fig11_ref_team_disp_outliers",
    "fig12_series_effects",
    "fig13_team_side_effects",
    "fig14_ref_team_effects",
    "figA1_component_no_minimum",
    "figA2_quarter_disparity",
    "figA3_ref_team_z_map",
    "figA4_excess_scatter",
];

/// Which games a figure needs.
pub fn requirement(name: &str) -> Option<SeasonType> {
    match name {
        "fig6_series_summary" | "fig7_postseason_distribution" | "fig12_series_effects" => {
            Some(SeasonType::Postseason)
        }
        "fig8_home_away" => None,
        _ => Some(SeasonType::Regular),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSet {
    pub tables: Vec<Table>,
    /// (figure, reason)
    pub skipped: Vec<(String, String)>,
}

const PCT: f64 = 100.0;

fn season_type_note(cfg: &RunConfig, st: SeasonType) -> String {
    format!("season type {}, minimum {} games", st.as_str(), cfg.min_games(st))
}

fn distribution_table(name: &str, description: &str, dist: &RefereeDistribution, side_k: usize) -> Table {
    let mut t = Table::new(
        name,
        description,
        &[
            ("referee", "referee name"),
            ("games", "games officiated (each game credited to every crew member)"),
            ("mean_rim", "mean game RIM over the referee's games, probability units"),
            ("band_lower", "league mean minus one SD of referee mean RIM"),
            ("band_upper", "league mean plus one SD of referee mean RIM"),
            ("within_band", "1 if mean_rim lies inside the band"),
            ("side_table", "bottom or top when the referee is in the side table"),
            ("side_rank", "rank within the side table (1 = most extreme)"),
        ],
    );
    let ranked = top_bottom_table(&dist.summaries, side_k, RefMetric::MeanRim);
    let mut side: BTreeMap<&RefereeName, (&str, usize)> = BTreeMap::new();
    for (i, r) in ranked.bottom.iter().enumerate() {
        side.insert(&r.referee, ("bottom", i + 1));
    }
    for (i, r) in ranked.top.iter().enumerate() {
        side.insert(&r.referee, ("top", i + 1));
    }
    t.note(format!(
        "qualified referees {} of {}; minimum {} games; games {} ({} without crew)",
        dist.summaries.len(),
        dist.referees_total,
        dist.min_games,
        dist.games,
        dist.games_without_crew
    ));
    match &dist.band {
        Some(b) => t.note(format!("band mean {} sd {} k {}", f6(b.mean), f6(b.sd), b.k)),
        None => t.note("band undefined: fewer than two qualified referees"),
    }
    if ranked.short {
        t.note(format!("fewer than {} qualified referees; side table holds all of them", 2 * side_k));
    }
    for s in &dist.summaries {
        let (tag, rank) = side.get(&s.referee).map(|(a, b)| (a.to_string(), b.to_string())).unwrap_or_default();
        t.push(vec![
            s.referee.to_string(),
            int(s.games),
            f6(s.mean_rim),
            opt6(dist.band.map(|b| b.lower())),
            opt6(dist.band.map(|b| b.upper())),
            dist.band.map(|b| int(u8::from(b.contains(s.mean_rim)))).unwrap_or_default(),
            tag,
            rank,
        ]);
    }
    t
}

fn component_table(name: &str, description: &str, check: &ComponentCheck) -> Table {
    let mut t = Table::new(
        name,
        description,
        &[
            ("referee", "referee name"),
            ("games", "games officiated"),
            ("calls_per_game", "mean foul calls per game"),
            ("pct_swing_per_call", "mean swing per call x 100 (percentage points); empty if no game had calls"),
            ("mean_rim", "mean game RIM, probability units"),
            ("mean_abs_disparity", "mean absolute foul disparity per game"),
        ],
    );
    t.note(format!("minimum games {}; referees {}", check.min_games, check.points.len()));
    t.note(format!(
        "pearson calls_per_game vs pct_swing_per_call: {}",
        opt6(check.corr_calls_swing).if_empty("undefined")
    ));
    t.note(format!(
        "pearson mean_rim vs mean_abs_disparity: {}",
        opt6(check.corr_rim_disparity).if_empty("undefined")
    ));
    for p in &check.points {
        t.push(vec![
            p.referee.to_string(),
            int(p.games),
            f6(p.calls_per_game),
            opt6(p.pct_swing_per_call),
            f6(p.mean_rim),
            f6(p.mean_abs_disparity),
        ]);
    }
    t
}

trait IfEmpty {
    fn if_empty(self, alt: &str) -> String;
}

impl IfEmpty for String {
    fn if_empty(self, alt: &str) -> String {
        if self.is_empty() {
            alt.to_string()
        } else {
            self
        }
    }
}

fn quarter_table(name: &str, description: &str, summaries: &[RefSeasonSummary], rim: bool) -> Table {
    let cols: &[(&'static str, &'static str)] = if rim {
        &[
            ("referee", "referee name"),
            ("games", "games officiated"),
            ("q1", "mean RIM from first-quarter fouls per game"),
            ("q2", "mean RIM from second-quarter fouls per game"),
            ("q3", "mean RIM from third-quarter fouls per game"),
            ("q4", "mean RIM from fourth-quarter fouls per game"),
            ("ot", "mean RIM from overtime fouls per game (all games in the denominator)"),
        ]
    } else {
        &[
            ("referee", "referee name"),
            ("games", "games officiated"),
            ("q1", "mean absolute first-quarter foul disparity per game"),
            ("q2", "mean absolute second-quarter foul disparity per game"),
            ("q3", "mean absolute third-quarter foul disparity per game"),
            ("q4", "mean absolute fourth-quarter foul disparity per game"),
            ("ot", "mean absolute overtime foul disparity per game (all games in the denominator)"),
        ]
    };
    let mut t = Table::new(name, description, cols);
    for s in summaries {
        let mut row = vec![s.referee.to_string(), int(s.games)];
        for b in PeriodBucket::ALL {
            let q = s.quarters.get(&b);
            row.push(opt6(q.map(|q| if rim { q.mean_rim } else { q.mean_abs_disparity })));
        }
        t.push(row);
    }
    t
}

fn outlier_table(name: &str, description: &str, table: &OutlierTable, report: &OutlierReport) -> Table {
    let mut t = Table::new(
        name,
        description,
        &[
            ("rank", "rank by absolute excess"),
            ("referee", "referee name"),
            ("team", "listed team"),
            ("games", "shared games"),
            ("y", "observed referee-team mean"),
            ("a", "referee mean over all the referee's panel rows"),
            ("b", "team mean over all the team's panel rows"),
            ("m", "global panel mean"),
            ("x", "excess y - (a + b - m); positive favors the listed team"),
            ("z", "excess standardized over qualified pairs; empty if undefined"),
        ],
    );
    t.note(format!(
        "qualified pairs {} of {} at minimum {} shared games",
        report.qualified, report.cells_total, report.min_pair_games
    ));
    if table.short {
        t.note("fewer qualified pairs with nonzero excess than the requested table size");
    }
    for (i, r) in table.rows.iter().enumerate() {
        t.push(vec![
            int(i + 1),
            r.referee.to_string(),
            r.team.to_string(),
            int(r.games),
            f6(r.parts.y),
            f6(r.parts.a),
            f6(r.parts.b),
            f6(r.parts.m),
            f6(r.parts.x),
            opt6(r.z),
        ]);
    }
    t
}

const FIT_COLUMNS: [(&str, &str); 9] = [
    ("estimate", "coefficient estimate"),
    ("se", "game-clustered standard error"),
    ("t", "estimate / se; empty if se is zero"),
    ("ci_low", "lower confidence bound"),
    ("ci_high", "upper confidence bound"),
    ("rho", "equal-strength omitted-variable robustness value"),
    ("n", "rows in the fit"),
    ("clusters", "games (clusters)"),
    ("dof", "degrees of freedom used for intervals and rho"),
];

fn fit_columns(lead: &[(&'static str, &'static str)]) -> Vec<(&'static str, &'static str)> {
    lead.iter().copied().chain(FIT_COLUMNS).collect()
}

fn fit_cells(fit: &FitResult, name: &str) -> Option<Vec<String>> {
    let c = fit.coefficient(name)?;
    Some(vec![
        f6(c.estimate),
        f6(c.se),
        opt6(c.t),
        f6(c.ci_low),
        f6(c.ci_high),
        opt6(c.rho),
        int(fit.n),
        int(fit.clusters),
        f6(fit.dof),
    ])
}

fn fit_notes(t: &mut Table, label: &str, fit: &FitResult) {
    t.note(format!(
        "{label}: n {} clusters {} rank {} dof {} ({}) correction {} level {} t_crit {}",
        fit.n,
        fit.clusters,
        fit.rank,
        f6(fit.dof),
        format!("{:?}", fit.dof_mode).to_lowercase(),
        format!("{:?}", fit.correction).to_lowercase(),
        fit.level,
        f6(fit.t_crit)
    ));
    if !fit.dropped.is_empty() {
        t.note(format!("{label}: rank filter dropped {}", fit.dropped.join(" ")));
    }
    if fit.excluded_rows > 0 {
        t.note(format!("{label}: {} rows excluded for missing terms", fit.excluded_rows));
    }
    if fit.degenerate {
        t.note(format!("{label}: outcome is constant; fit is degenerate"));
    }
}

fn outcome_label(o: Outcome) -> &'static str {
    o.as_str()
}

/// Largest team-side departures from the league side mean, one side per team.
pub fn team_side_targets(rows: &[TeamGameRow], k: usize) -> Vec<(TeamId, Side, f64)> {
    let s = home_away_summary(rows, Some(SeasonType::Regular));
    let mut cands = Vec::new();
    for t in &s.teams {
        if t.home.rows > 0 {
            cands.push((t.team.clone(), Side::Home, t.home.mean_signed_disparity - s.league_home.mean_signed_disparity));
        }
        if t.away.rows > 0 {
            cands.push((t.team.clone(), Side::Away, t.away.mean_signed_disparity - s.league_away.mean_signed_disparity));
        }
    }
    cands.sort_by(|a, b| {
        b.2.abs()
            .total_cmp(&a.2.abs())
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.as_str().cmp(b.1.as_str()))
    });
    let mut seen = BTreeSet::new();
    cands.into_iter().filter(|c| seen.insert(c.0.clone())).take(k).collect()
}

/// Top pairs from both outlier tables, deduplicated in order.
pub fn pair_targets(report: &OutlierReport, k: usize) -> Vec<(RefereeName, TeamId)> {
    let mut seen = BTreeSet::new();
    report
        .rim
        .rows
        .iter()
        .take(k)
        .chain(report.disparity.rows.iter().take(k))
        .map(|r| (r.referee.clone(), r.team.clone()))
        .filter(|p| seen.insert(p.clone()))
        .collect()
}

pub fn build_figures(metrics: &[GameMetrics], cfg: &RunConfig) -> FigureSet {
    build_named(metrics, cfg, &FIGURES)
}

/// Builds the named figures in the given order.
pub fn build_named(metrics: &[GameMetrics], cfg: &RunConfig, names: &[&str]) -> FigureSet {
    let has = |st: SeasonType| metrics.iter().any(|g| g.season_type == st);
    let mut set = FigureSet { tables: Vec::new(), skipped: Vec::new() };
    let rows = team_game_rows(metrics);
    let regular_rows: Vec<TeamGameRow> =
        rows.iter().filter(|r| r.season_type == SeasonType::Regular).cloned().collect();
    let post_rows: Vec<TeamGameRow> =
        rows.iter().filter(|r| r.season_type == SeasonType::Postseason).cloned().collect();

    let reg_dist = referee_distribution(metrics, SeasonType::Regular, cfg.min_games_regular);
    let post_dist = referee_distribution(metrics, SeasonType::Postseason, cfg.min_games_postseason);
    let reg_all = referee_summaries(metrics, SeasonType::Regular);
    let checks = component_check_tables(&reg_all, cfg.min_games_regular);
    let by_name: BTreeMap<&RefereeName, &RefSeasonSummary> =
        reg_dist.summaries.iter().map(|s| (&s.referee, s)).collect();

    let panel = build_ref_team_panel(metrics, Some(SeasonType::Regular));
    let cells = build_cells(&panel);
    let report = outlier_tables(&cells, cfg.min_pair_games, cfg.outlier_k);
    let opts = cfg.fit_options();

    for &name in names {
        let need = requirement(name);
        let available = match need {
            Some(st) => has(st),
            None => !metrics.is_empty(),
        };
        if !available {
            let reason = match need {
                Some(st) => format!("no {} games in the selected data", st.as_str()),
                None => "no games in the selected data".to_string(),
            };
            set.skipped.push((name.to_string(), reason));
            continue;
        }
        let table = match name {
            "fig1_rim_distribution" => {
                let mut t = distribution_table(
                    name,
                    "regular-season referee RIM distribution with a one-SD band and bottom/top side table",
                    &reg_dist,
                    cfg.side_table_k,
                );
                t.note(season_type_note(cfg, SeasonType::Regular));
                t
            }
            "fig7_postseason_distribution" => {
                let mut t = distribution_table(
                    name,
                    "postseason referee RIM distribution with a one-SD band and bottom/top side table",
                    &post_dist,
                    cfg.side_table_k,
                );
                t.note(season_type_note(cfg, SeasonType::Postseason));
                t
            }
            "fig2_component_calls_swing" => component_table(
                name,
                "regular-season calls per game vs percent swing per call, and mean RIM vs mean absolute disparity, qualified referees",
                &checks.qualified,
            ),
            "figA1_component_no_minimum" => component_table(
                name,
                "regular-season calls per game vs percent swing per call without a minimum-games threshold",
                &checks.unfiltered,
            ),
            "fig3_top_bottom" | "fig4_volume_swing" => {
                let ranked = top_bottom_table(&reg_dist.summaries, cfg.top_bottom_k, RefMetric::MeanRim);
                let volume = name == "fig4_volume_swing";
                let mut t = if volume {
                    Table::new(
                        name,
                        "volume (crew fouls per game) and leverage (percent swing per call) for the bottom and top referees by mean RIM",
                        &[
                            ("section", "bottom, mean or top"),
                            ("rank", "rank within the section (1 = most extreme)"),
                            ("referee", "referee name; empty on the mean row"),
                            ("games", "games officiated"),
                            ("mean_rim", "mean game RIM"),
                            ("calls_per_game", "mean crew foul calls per game"),
                            ("pct_swing_per_call", "mean swing per call x 100"),
                        ],
                    )
                } else {
                    Table::new(
                        name,
                        "bottom, mean and top regular-season referees by mean RIM",
                        &[
                            ("section", "bottom, mean or top"),
                            ("rank", "rank within the section (1 = most extreme)"),
                            ("referee", "referee name; empty on the mean row"),
                            ("games", "games officiated"),
                            ("mean_rim", "mean game RIM"),
                        ],
                    )
                };
                t.note(season_type_note(cfg, SeasonType::Regular));
                if ranked.short {
                    t.note(format!(
                        "fewer than {} qualified referees; all are listed under bottom",
                        2 * cfg.top_bottom_k
                    ));
                }
                let mean_calls = crate::analysis::mean_of(reg_dist.summaries.iter().map(|s| s.mean_calls_per_game));
                let mean_swing =
                    crate::analysis::mean_of(reg_dist.summaries.iter().filter_map(|s| s.mean_swing_per_call));
                let push = |t: &mut Table, section: &str, rank: usize, r: Option<&RefSeasonSummary>, value: Option<f64>| {
                    let mut row = vec![
                        section.to_string(),
                        int(rank),
                        r.map(|s| s.referee.to_string()).unwrap_or_default(),
                        r.map(|s| int(s.games)).unwrap_or_default(),
                        opt6(value),
                    ];
                    if volume {
                        match r {
                            Some(s) => {
                                row.push(f6(s.mean_calls_per_game));
                                row.push(opt6(s.mean_swing_per_call.map(|v| v * PCT)));
                            }
                            None => {
                                row.push(opt6(mean_calls));
                                row.push(opt6(mean_swing.map(|v| v * PCT)));
                            }
                        }
                    }
                    t.push(row);
                };
                for (i, r) in ranked.bottom.iter().enumerate() {
                    push(&mut t, "bottom", i + 1, by_name.get(&r.referee).copied(), Some(r.value));
                }
                push(&mut t, "mean", 0, None, ranked.overall_mean);
                for (i, r) in ranked.top.iter().enumerate() {
                    push(&mut t, "top", i + 1, by_name.get(&r.referee).copied(), Some(r.value));
                }
                t
            }
            "fig5_quarter_rim" => {
                let mut t = quarter_table(name, "quarter-specific mean RIM by qualified regular-season referee", &reg_dist.summaries, true);
                t.note(season_type_note(cfg, SeasonType::Regular));
                t
            }
            "figA2_quarter_disparity" => {
                let mut t = quarter_table(
                    name,
                    "quarter-specific mean absolute foul disparity by qualified regular-season referee",
                    &reg_dist.summaries,
                    false,
                );
                t.note(season_type_note(cfg, SeasonType::Regular));
                t
            }
            "fig6_series_summary" => {
                let s = series_state_summary(&post_rows);
                let mut t = Table::new(
                    name,
                    "postseason mean absolute foul disparity and mean game RIM by normalized pregame series score",
                    &[
                        ("series_state", "pregame series score with mirrored states collapsed, low--high"),
                        ("games", "games at this state"),
                        ("team_rows", "team-game rows at this state (2 per game)"),
                        ("mean_abs_disparity", "mean absolute foul disparity"),
                        ("mean_game_rim", "mean game RIM"),
                    ],
                );
                t.note(format!(
                    "games with pregame series state {}; without {}",
                    s.games_with_state, s.games_without_state
                ));
                for c in &s.cells {
                    t.push(vec![
                        c.key.to_string(),
                        int(c.games),
                        int(c.team_rows),
                        f6(c.mean_abs_disparity),
                        f6(c.mean_game_rim),
                    ]);
                }
                t
            }
            "fig8_home_away" => {
                let mut t = Table::new(
                    name,
                    "home/away team-game rows across regular season and postseason (signed foul disparity and signed team RIM)",
                    &[
                        ("game_id", "game id"),
                        ("season", "season"),
                        ("season_type", "regular or postseason"),
                        ("team", "listed team"),
                        ("opponent", "opponent"),
                        ("side", "home or away"),
                        ("signed_disparity", "opponent fouls minus own fouls; positive favors the listed team"),
                        ("signed_team_rim", "net win-probability movement toward the listed team over foul events"),
                    ],
                );
                for (label, st) in [("all", None), ("regular", Some(SeasonType::Regular)), ("postseason", Some(SeasonType::Postseason))] {
                    let s = home_away_summary(&rows, st);
                    t.note(format!(
                        "{label}: home rows {} mean s {} mean q {}; away rows {} mean s {} mean q {}",
                        s.league_home.rows,
                        f6(s.league_home.mean_signed_disparity),
                        f6(s.league_home.mean_signed_team_rim),
                        s.league_away.rows,
                        f6(s.league_away.mean_signed_disparity),
                        f6(s.league_away.mean_signed_team_rim)
                    ));
                }
                for r in &rows {
                    t.push(vec![
                        r.game_id.clone(),
                        r.season.clone(),
                        r.season_type.as_str().to_string(),
                        r.team.to_string(),
                        r.opponent.to_string(),
                        if r.is_home { "home" } else { "away" }.to_string(),
                        int(r.signed_disparity),
                        f6(r.signed_team_rim),
                    ]);
                }
                t
            }
            "fig9_team_home_away" => {
                let s = home_away_summary(&regular_rows, Some(SeasonType::Regular));
                let mut t = Table::new(
                    name,
                    "regular-season team-specific home/away splits",
                    &[
                        ("team", "team"),
                        ("home_rows", "home games"),
                        ("home_mean_signed_disparity", "mean signed foul disparity at home"),
                        ("home_mean_signed_team_rim", "mean signed team RIM at home"),
                        ("away_rows", "away games"),
                        ("away_mean_signed_disparity", "mean signed foul disparity away"),
                        ("away_mean_signed_team_rim", "mean signed team RIM away"),
                    ],
                );
                t.note(format!(
                    "league home mean s {} q {}; away mean s {} q {}",
                    f6(s.league_home.mean_signed_disparity),
                    f6(s.league_home.mean_signed_team_rim),
                    f6(s.league_away.mean_signed_disparity),
                    f6(s.league_away.mean_signed_team_rim)
                ));
                for team in &s.teams {
                    t.push(vec![
                        team.team.to_string(),
                        int(team.home.rows),
                        f6(team.home.mean_signed_disparity),
                        f6(team.home.mean_signed_team_rim),
                        int(team.away.rows),
                        f6(team.away.mean_signed_disparity),
                        f6(team.away.mean_signed_team_rim),
                    ]);
                }
                t
            }
            "fig10_ref_team_rim_outliers" => outlier_table(
                name,
                "largest regular-season referee-team excess signed team RIM",
                &report.rim,
                &report,
            ),
            "fig11_ref_team_disp_outliers" => outlier_table(
                name,
                "largest regular-season referee-team excess signed foul disparity",
                &report.disparity,
                &report,
            ),
            "figA3_ref_team_z_map" | "figA4_excess_scatter" => {
                let z = name == "figA3_ref_team_z_map";
                let mut t = if z {
                    Table::new(
                        name,
                        "regular-season referee-team outlier map: standardized excess disparity and RIM with combined z-score",
                        &[
                            ("referee", "referee name"),
                            ("team", "listed team"),
                            ("games", "shared games"),
                            ("x_disp", "excess signed foul disparity"),
                            ("x_rim", "excess signed team RIM"),
                            ("z_disp", "standardized x_disp; empty if undefined"),
                            ("z_rim", "standardized x_rim; empty if undefined"),
                            ("z_combined", "z_disp + z_rim"),
                        ],
                    )
                } else {
                    Table::new(
                        name,
                        "regular-season referee-team excess signed team RIM vs excess signed foul disparity",
                        &[
                            ("referee", "referee name"),
                            ("team", "listed team"),
                            ("games", "shared games"),
                            ("x_rim", "excess signed team RIM"),
                            ("x_disp", "excess signed foul disparity"),
                        ],
                    )
                };
                t.note(format!(
                    "qualified pairs {} at minimum {} shared games",
                    report.qualified, report.min_pair_games
                ));
                if z {
                    if !report.z_rim_defined || !report.z_disp_defined {
                        t.note("a z-score is undefined: zero spread of excess over qualified pairs");
                    }
                } else {
                    t.note(format!(
                        "pearson x_rim vs x_disp: {}",
                        opt6(report.corr_rim_disp).if_empty("undefined")
                    ));
                }
                for p in &report.scatter {
                    let row = if z {
                        vec![
                            p.referee.to_string(),
                            p.team.to_string(),
                            int(p.games),
                            f6(p.x_disp),
                            f6(p.x_rim),
                            opt6(p.z_disp),
                            opt6(p.z_rim),
                            opt6(p.z_combined),
                        ]
                    } else {
                        vec![p.referee.to_string(), p.team.to_string(), int(p.games), f6(p.x_rim), f6(p.x_disp)]
                    };
                    t.push(row);
                }
                t
            }
            "fig12_series_effects" => {
                let mut t = Table::new(
                    name,
                    "postseason pregame series-score effects relative to 0--0, controlling for home team, away team and season; one row per game",
                    &fit_columns(&[
                        ("outcome", "abs_disparity or game_rim"),
                        ("series_state", "pregame series score, low--high"),
                        ("games", "games at this state"),
                    ]),
                );
                let s = series_state_summary(&post_rows);
                let games_at: BTreeMap<String, u32> = s.cells.iter().map(|c| (c.key.to_string(), c.games)).collect();
                for outcome in [Outcome::AbsDisparity, Outcome::GameRim] {
                    match series_state_effects(metrics, outcome, &opts) {
                        Ok(fit) => {
                            fit_notes(&mut t, outcome_label(outcome), &fit.fit);
                            if !fit.keys_omitted.is_empty() {
                                t.note(format!(
                                    "{}: no games at {}",
                                    outcome_label(outcome),
                                    fit.keys_omitted.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ")
                                ));
                            }
                            for key in &fit.keys_present {
                                let key = key.to_string();
                                if let Some(cells) = fit_cells(&fit.fit, &format!("series[{key}]")) {
                                    let mut row = vec![
                                        outcome_label(outcome).to_string(),
                                        key.clone(),
                                        int(games_at.get(&key).copied().unwrap_or(0)),
                                    ];
                                    row.extend(cells);
                                    t.push(row);
                                }
                            }
                        }
                        Err(e) => t.note(format!("{}: fit unavailable: {e}", outcome_label(outcome))),
                    }
                }
                t.note(format!("games without pregame series state {}", s.games_without_state));
                t
            }
            "fig13_team_side_effects" => {
                let mut t = Table::new(
                    name,
                    "regular-season team-side effects with omitted-variable robustness; controls: home, team, opponent, season",
                    &fit_columns(&[
                        ("outcome", "signed_disparity or signed_team_rim"),
                        ("form", "target column form: paired (+1 team rows, -1 mirrored opponent rows) or indicator"),
                        ("team", "listed team"),
                        ("side", "home or away"),
                        ("games", "games by the team on that side"),
                    ]),
                );
                let targets = team_side_targets(&regular_rows, cfg.team_side_k);
                t.note(format!(
                    "targets: the {} largest team-side departures in mean signed disparity, one side per team",
                    targets.len()
                ));
                let pairs: Vec<(TeamId, Side)> = targets.iter().map(|(a, b, _)| (a.clone(), *b)).collect();
                for outcome in [Outcome::SignedDisparity, Outcome::SignedTeamRim] {
                    match team_side_effects(&rows, &pairs, cfg.target_form, outcome, &opts) {
                        Ok(fit) => {
                            fit_notes(&mut t, outcome_label(outcome), &fit);
                            for (team, side) in &pairs {
                                let target = Target::TeamSide { team: team.clone(), side: *side, form: cfg.target_form };
                                let games = regular_rows
                                    .iter()
                                    .filter(|r| &r.team == team && r.is_home == (*side == Side::Home))
                                    .count();
                                if let Some(cells) = fit_cells(&fit, &target.name()) {
                                    let mut row = vec![
                                        outcome_label(outcome).to_string(),
                                        cfg.target_form.as_str().to_string(),
                                        team.to_string(),
                                        side.as_str().to_string(),
                                        int(games),
                                    ];
                                    row.extend(cells);
                                    t.push(row);
                                }
                            }
                        }
                        Err(e) => t.note(format!("{}: fit unavailable: {e}", outcome_label(outcome))),
                    }
                }
                t
            }
            "fig14_ref_team_effects" => {
                let mut t = Table::new(
                    name,
                    "residual regular-season referee-team effects; controls: referee, team, opponent, season; positive means the listed team does better with that referee",
                    &fit_columns(&[
                        ("outcome", "signed_team_rim or signed_disparity"),
                        ("referee", "referee name"),
                        ("team", "listed team"),
                        ("games", "shared games"),
                        ("excess", "additive-baseline excess for this outcome"),
                    ]),
                );
                let pairs = pair_targets(&report, cfg.pair_targets_k);
                t.note(format!(
                    "targets: top {} pairs from each outlier table ({} distinct); qualified pairs {}",
                    cfg.pair_targets_k,
                    pairs.len(),
                    report.qualified
                ));
                let cell_of: BTreeMap<(&RefereeName, &TeamId), _> =
                    cells.iter().map(|c| ((&c.referee, &c.team), c)).collect();
                for (outcome, metric) in [
                    (Outcome::SignedTeamRim, OutcomeMetric::SignedTeamRim),
                    (Outcome::SignedDisparity, OutcomeMetric::SignedDisparity),
                ] {
                    match ref_team_residual_effects(&panel, &pairs, outcome, cfg.min_pair_games, &opts) {
                        Ok(fit) => {
                            fit_notes(&mut t, outcome_label(outcome), &fit.fit);
                            for (r, tm, g) in &fit.excluded {
                                t.note(format!("{}: excluded {r}|{tm} with {g} games", outcome_label(outcome)));
                            }
                            for (referee, team) in &pairs {
                                let target = Target::RefTeam { referee: referee.clone(), team: team.clone() };
                                let cell = cell_of.get(&(referee, team));
                                if let Some(cells) = fit_cells(&fit.fit, &target.name()) {
                                    let mut row = vec![
                                        outcome_label(outcome).to_string(),
                                        referee.to_string(),
                                        team.to_string(),
                                        cell.map(|c| int(c.games)).unwrap_or_default(),
                                        opt6(cell.map(|c| c.parts(metric).x)),
                                    ];
                                    row.extend(cells);
                                    t.push(row);
                                }
                            }
                        }
                        Err(e) => t.note(format!("{}: fit unavailable: {e}", outcome_label(outcome))),
                    }
                }
                t
            }
            other => {
                set.skipped.push((other.to_string(), "unknown figure".into()));
                continue;
            }
        };
        set.tables.push(table);
    }
    set
}
