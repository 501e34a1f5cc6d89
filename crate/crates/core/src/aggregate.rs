//! Referee, team, home/away, quarter and series-state aggregations.
//!
//! Every game's metrics are credited in full to each member of its crew:
//! the feeds name the crew, not the official behind each whistle. Referee
//! means are unweighted over games. Inputs are sorted by game id before any
//! summation, so outputs do not depend on input order.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::metrics::GameMetrics;
use crate::model::{PeriodBucket, RefereeName, SeasonType, SeriesStateKey, TeamGameRow, TeamId};
use crate::stats::{mean, pearson, sample_sd};

/// Qualification threshold used for regular-season referee tables.
pub const REGULAR_MIN_GAMES: u32 = 50;
/// Default postseason threshold (configurable; no published value).
pub const POSTSEASON_MIN_GAMES: u32 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarterMeans {
    pub mean_rim: f64,
    pub mean_abs_disparity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefSeasonSummary {
    pub referee: RefereeName,
    pub games: u32,
    pub mean_rim: f64,
    pub mean_calls_per_game: f64,
    /// Mean of per-game swing per call over games with at least one call.
    pub mean_swing_per_call: Option<f64>,
    pub mean_abs_disparity: f64,
    pub quarters: BTreeMap<PeriodBucket, QuarterMeans>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionBand {
    pub mean: f64,
    pub sd: f64,
    pub k: f64,
}

impl DistributionBand {
    pub fn lower(&self) -> f64 {
        self.mean - self.k * self.sd
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.k * self.sd
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower() && x <= self.upper()
    }
}

fn sorted_by_id(games: &[GameMetrics]) -> Vec<&GameMetrics> {
    let mut v: Vec<&GameMetrics> = games.iter().collect();
    v.sort_by(|a, b| a.game_id.cmp(&b.game_id));
    v
}

#[derive(Default)]
struct RefAcc {
    games: u32,
    rim: f64,
    calls: f64,
    swing: f64,
    swing_games: u32,
    abs_disp: f64,
    quarter_rim: [f64; 5],
    quarter_disp: [f64; 5],
}

/// One summary per referee (unfiltered), sorted by name. Games without a
/// crew are skipped.
pub fn referee_summaries(games: &[GameMetrics], season_type: SeasonType) -> Vec<RefSeasonSummary> {
    let mut acc: BTreeMap<&RefereeName, RefAcc> = BTreeMap::new();
    for g in sorted_by_id(games) {
        if g.season_type != season_type {
            continue;
        }
        for r in &g.crew {
            let a = acc.entry(r).or_default();
            a.games += 1;
            a.rim += g.rim;
            a.calls += f64::from(g.calls);
            if let Some(c) = g.swing_per_call.value() {
                a.swing += c;
                a.swing_games += 1;
            }
            a.abs_disp += f64::from(g.abs_disparity());
            for (i, bucket) in PeriodBucket::ALL.iter().enumerate() {
                if let Some(t) = g.per_period.get(bucket) {
                    a.quarter_rim[i] += t.rim;
                    a.quarter_disp[i] += f64::from(t.disparity.unsigned_abs());
                }
            }
        }
    }
    acc.into_iter()
        .map(|(name, a)| {
            let n = f64::from(a.games);
            RefSeasonSummary {
                referee: name.clone(),
                games: a.games,
                mean_rim: a.rim / n,
                mean_calls_per_game: a.calls / n,
                mean_swing_per_call: (a.swing_games > 0)
                    .then(|| a.swing / f64::from(a.swing_games)),
                mean_abs_disparity: a.abs_disp / n,
                quarters: PeriodBucket::ALL
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        (
                            *b,
                            QuarterMeans {
                                mean_rim: a.quarter_rim[i] / n,
                                mean_abs_disparity: a.quarter_disp[i] / n,
                            },
                        )
                    })
                    .collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefereeDistribution {
    pub season_type: SeasonType,
    pub min_games: u32,
    /// Qualified referees ordered by mean RIM desc, name asc.
    pub summaries: Vec<RefSeasonSummary>,
    /// One-SD band over qualified referees' mean RIM; `None` when empty.
    pub band: Option<DistributionBand>,
    pub referees_total: usize,
    pub games: usize,
    pub games_without_crew: usize,
}

impl RefereeDistribution {
    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }
}

pub fn referee_distribution(
    games: &[GameMetrics],
    season_type: SeasonType,
    min_games: u32,
) -> RefereeDistribution {
    let min_games = min_games.max(1);
    let all = referee_summaries(games, season_type);
    let referees_total = all.len();
    let mut summaries: Vec<RefSeasonSummary> =
        all.into_iter().filter(|s| s.games >= min_games).collect();
    summaries.sort_by(|a, b| {
        b.mean_rim
            .total_cmp(&a.mean_rim)
            .then_with(|| a.referee.cmp(&b.referee))
    });
    let means: Vec<f64> = summaries.iter().map(|s| s.mean_rim).collect();
    let band = mean(&means).map(|m| DistributionBand {
        mean: m,
        sd: sample_sd(&means).unwrap_or(0.0),
        k: 1.0,
    });
    let in_type = games.iter().filter(|g| g.season_type == season_type);
    RefereeDistribution {
        season_type,
        min_games,
        summaries,
        band,
        referees_total,
        games: in_type.clone().count(),
        games_without_crew: in_type.filter(|g| g.crew.is_empty()).count(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RefMetric {
    MeanRim,
    CallsPerGame,
    SwingPerCall,
    AbsDisparity,
}

impl RefMetric {
    pub fn value(self, s: &RefSeasonSummary) -> Option<f64> {
        match self {
            RefMetric::MeanRim => Some(s.mean_rim),
            RefMetric::CallsPerGame => Some(s.mean_calls_per_game),
            RefMetric::SwingPerCall => s.mean_swing_per_call,
            RefMetric::AbsDisparity => Some(s.mean_abs_disparity),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RefMetric::MeanRim => "mean_rim",
            RefMetric::CallsPerGame => "calls_per_game",
            RefMetric::SwingPerCall => "swing_per_call",
            RefMetric::AbsDisparity => "abs_disparity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRow {
    pub referee: RefereeName,
    pub games: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTable {
    pub metric: RefMetric,
    pub k: usize,
    /// Lowest `k`, ascending. Holds every row when `short` is set.
    pub bottom: Vec<RankedRow>,
    pub overall_mean: Option<f64>,
    /// Highest `k`, descending. Empty when `short` is set.
    pub top: Vec<RankedRow>,
    /// Fewer than `2k` rows were available.
    pub short: bool,
}

pub fn top_bottom_table(summaries: &[RefSeasonSummary], k: usize, metric: RefMetric) -> RankedTable {
    let k = k.max(1);
    let mut rows: Vec<RankedRow> = summaries
        .iter()
        .filter_map(|s| {
            metric.value(s).map(|v| RankedRow {
                referee: s.referee.clone(),
                games: s.games,
                value: v,
            })
        })
        .collect();
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let overall_mean = mean(&values);
    rows.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.referee.cmp(&b.referee)));
    if rows.len() < 2 * k {
        return RankedTable {
            metric,
            k,
            bottom: rows,
            overall_mean,
            top: Vec::new(),
            short: true,
        };
    }
    let bottom = rows[..k].to_vec();
    let mut desc = rows;
    desc.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| a.referee.cmp(&b.referee)));
    desc.truncate(k);
    RankedTable {
        metric,
        k,
        bottom,
        overall_mean,
        top: desc,
        short: false,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SideMeans {
    pub rows: u32,
    pub mean_signed_disparity: f64,
    pub mean_signed_team_rim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamHomeAway {
    pub team: TeamId,
    pub home: SideMeans,
    pub away: SideMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeAwaySummary {
    /// `None` pools both season types.
    pub season_type: Option<SeasonType>,
    pub league_home: SideMeans,
    pub league_away: SideMeans,
    pub teams: Vec<TeamHomeAway>,
}

#[derive(Default)]
struct SideAcc {
    rows: u32,
    disp: i64,
    rim: f64,
}

impl SideAcc {
    fn add(&mut self, r: &TeamGameRow) {
        self.rows += 1;
        self.disp += i64::from(r.signed_disparity);
        self.rim += r.signed_team_rim;
    }

    fn finish(&self) -> SideMeans {
        if self.rows == 0 {
            return SideMeans::default();
        }
        let n = f64::from(self.rows);
        SideMeans {
            rows: self.rows,
            mean_signed_disparity: self.disp as f64 / n,
            mean_signed_team_rim: self.rim / n,
        }
    }
}

fn sorted_rows(rows: &[TeamGameRow]) -> Vec<&TeamGameRow> {
    let mut v: Vec<&TeamGameRow> = rows.iter().collect();
    v.sort_by(|a, b| a.game_id.cmp(&b.game_id).then(b.is_home.cmp(&a.is_home)));
    v
}

pub fn home_away_summary(rows: &[TeamGameRow], season_type: Option<SeasonType>) -> HomeAwaySummary {
    let mut league = [SideAcc::default(), SideAcc::default()];
    let mut teams: BTreeMap<&TeamId, [SideAcc; 2]> = BTreeMap::new();
    for r in sorted_rows(rows) {
        if season_type.is_some_and(|t| t != r.season_type) {
            continue;
        }
        let idx = usize::from(!r.is_home);
        league[idx].add(r);
        teams.entry(&r.team).or_default()[idx].add(r);
    }
    HomeAwaySummary {
        season_type,
        league_home: league[0].finish(),
        league_away: league[1].finish(),
        teams: teams
            .into_iter()
            .map(|(t, acc)| TeamHomeAway {
                team: t.clone(),
                home: acc[0].finish(),
                away: acc[1].finish(),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesCell {
    pub key: SeriesStateKey,
    pub games: u32,
    pub team_rows: u32,
    pub mean_abs_disparity: f64,
    pub mean_game_rim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    /// Keys with at least one game, ascending.
    pub cells: Vec<SeriesCell>,
    pub games_with_state: u32,
    pub games_without_state: u32,
}

/// Postseason games grouped by mirror-collapsed pregame series state.
/// Non-postseason rows are ignored.
pub fn series_state_summary(rows: &[TeamGameRow]) -> SeriesSummary {
    #[derive(Default)]
    struct Acc {
        games: u32,
        rows: u32,
        abs_disp: f64,
        rim: f64,
    }
    let mut acc: BTreeMap<SeriesStateKey, Acc> = BTreeMap::new();
    let mut without = 0;
    for r in sorted_rows(rows) {
        if r.season_type != SeasonType::Postseason {
            continue;
        }
        match r.series_state_normalized {
            None => {
                if r.is_home {
                    without += 1;
                }
            }
            Some(key) => {
                let a = acc.entry(key).or_default();
                a.rows += 1;
                if r.is_home {
                    a.games += 1;
                    a.abs_disp += f64::from(r.signed_disparity.unsigned_abs());
                    a.rim += r.game_rim;
                }
            }
        }
    }
    let cells: Vec<SeriesCell> = acc
        .into_iter()
        .filter(|(_, a)| a.games > 0)
        .map(|(key, a)| SeriesCell {
            key,
            games: a.games,
            team_rows: a.rows,
            mean_abs_disparity: a.abs_disp / f64::from(a.games),
            mean_game_rim: a.rim / f64::from(a.games),
        })
        .collect();
    SeriesSummary {
        games_with_state: cells.iter().map(|c| c.games).sum(),
        games_without_state: without,
        cells,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentPoint {
    pub referee: RefereeName,
    pub games: u32,
    pub calls_per_game: f64,
    /// Mean swing per call times 100.
    pub pct_swing_per_call: Option<f64>,
    pub mean_rim: f64,
    pub mean_abs_disparity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCheck {
    pub min_games: u32,
    pub points: Vec<ComponentPoint>,
    /// Calls per game vs percent swing per call.
    pub corr_calls_swing: Option<f64>,
    /// Mean RIM vs mean absolute disparity.
    pub corr_rim_disparity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentChecks {
    pub qualified: ComponentCheck,
    pub unfiltered: ComponentCheck,
}

fn component_check(summaries: &[RefSeasonSummary], min_games: u32) -> ComponentCheck {
    let points: Vec<ComponentPoint> = summaries
        .iter()
        .filter(|s| s.games >= min_games)
        .map(|s| ComponentPoint {
            referee: s.referee.clone(),
            games: s.games,
            calls_per_game: s.mean_calls_per_game,
            pct_swing_per_call: s.mean_swing_per_call.map(|c| c * 100.0),
            mean_rim: s.mean_rim,
            mean_abs_disparity: s.mean_abs_disparity,
        })
        .collect();
    let (calls, swing): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|p| p.pct_swing_per_call.map(|s| (p.calls_per_game, s)))
        .unzip();
    let rim: Vec<f64> = points.iter().map(|p| p.mean_rim).collect();
    let disp: Vec<f64> = points.iter().map(|p| p.mean_abs_disparity).collect();
    ComponentCheck {
        min_games,
        corr_calls_swing: pearson(&calls, &swing),
        corr_rim_disparity: pearson(&rim, &disp),
        points,
    }
}

/// Scatter data for the volume-vs-leverage and RIM-vs-disparity checks,
/// with and without the games threshold.
pub fn component_check_tables(summaries: &[RefSeasonSummary], min_games: u32) -> ComponentChecks {
    ComponentChecks {
        qualified: component_check(summaries, min_games.max(1)),
        unfiltered: component_check(summaries, 1),
    }
}

/// Referee-game expansion count: Σ crew size over games of one type.
pub fn referee_game_rows(games: &[GameMetrics], season_type: SeasonType) -> usize {
    games
        .iter()
        .filter(|g| g.season_type == season_type)
        .map(|g| g.crew.len())
        .sum()
}
