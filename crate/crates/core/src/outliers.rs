//! Referee-team screening against an additive referee + team baseline.
//!
//! For each (referee, team) cell the excess is
//! `x = y - (a + b - m)`, where `y` is the cell mean, `a` the referee mean,
//! `b` the team mean and `m` the grand mean. All four are means over the
//! expanded referee-team-game panel, so every game counts once per row.
//! Outputs are screening statistics: an impact signal, not a bias verdict.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::abs;
use crate::metrics::GameMetrics;
use crate::model::{RefereeName, SeasonType, Side, TeamId};
use crate::stats::{mean, pearson, sample_sd};

/// Default minimum shared games for a qualified referee-team pair.
pub const MIN_PAIR_GAMES: u32 = 5;

/// One (game, crew member, team side) observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub game_id: String,
    pub referee: RefereeName,
    pub team: TeamId,
    pub opponent: TeamId,
    pub season: String,
    pub is_home: bool,
    pub signed_team_rim: f64,
    pub signed_disparity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OutcomeMetric {
    SignedTeamRim,
    SignedDisparity,
}

impl OutcomeMetric {
    pub fn of(self, row: &PanelRow) -> f64 {
        match self {
            OutcomeMetric::SignedTeamRim => row.signed_team_rim,
            OutcomeMetric::SignedDisparity => row.signed_disparity,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RefTeamPanel {
    pub rows: Vec<PanelRow>,
    pub games_used: usize,
    pub games_without_crew: usize,
}

/// Expands games into referee-team-game rows: crew size × 2 rows per game.
/// `season_type = None` keeps every game.
pub fn build_ref_team_panel(games: &[GameMetrics], season_type: Option<SeasonType>) -> RefTeamPanel {
    let mut sorted: Vec<&GameMetrics> = games
        .iter()
        .filter(|g| season_type.is_none_or(|t| t == g.season_type))
        .collect();
    sorted.sort_by(|a, b| a.game_id.cmp(&b.game_id));
    let mut panel = RefTeamPanel::default();
    for g in sorted {
        if g.crew.is_empty() {
            panel.games_without_crew += 1;
            continue;
        }
        panel.games_used += 1;
        for r in &g.crew {
            for side in [Side::Home, Side::Away] {
                let row = g.row(side);
                panel.rows.push(PanelRow {
                    game_id: g.game_id.clone(),
                    referee: r.clone(),
                    team: row.team.clone(),
                    opponent: row.opponent.clone(),
                    season: row.season.clone(),
                    is_home: row.is_home,
                    signed_team_rim: row.signed_team_rim,
                    signed_disparity: f64::from(row.signed_disparity),
                });
            }
        }
    }
    panel
}

/// Excess over the additive baseline.
pub fn excess(y: f64, a: f64, b: f64, m: f64) -> f64 {
    y - (a + b - m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessParts {
    pub y: f64,
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefTeamCell {
    pub referee: RefereeName,
    pub team: TeamId,
    pub games: u32,
    pub rim: ExcessParts,
    pub disparity: ExcessParts,
    pub z_rim: Option<f64>,
    pub z_disp: Option<f64>,
    pub z_combined: Option<f64>,
}

impl RefTeamCell {
    pub fn parts(&self, metric: OutcomeMetric) -> &ExcessParts {
        match metric {
            OutcomeMetric::SignedTeamRim => &self.rim,
            OutcomeMetric::SignedDisparity => &self.disparity,
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Sum {
    n: u32,
    rim: f64,
    disp: f64,
}

impl Sum {
    fn add(&mut self, r: &PanelRow) {
        self.n += 1;
        self.rim += r.signed_team_rim;
        self.disp += r.signed_disparity;
    }

    fn means(&self) -> (f64, f64) {
        let n = f64::from(self.n);
        (self.rim / n, self.disp / n)
    }
}

/// Groups panel rows into (referee, team) cells with both metrics' excess.
/// Cells are unqualified and carry no z-scores; order is (referee, team).
pub fn build_cells(panel: &RefTeamPanel) -> Vec<RefTeamCell> {
    let mut by_ref: BTreeMap<&RefereeName, Sum> = BTreeMap::new();
    let mut by_team: BTreeMap<&TeamId, Sum> = BTreeMap::new();
    let mut by_cell: BTreeMap<(&RefereeName, &TeamId), Sum> = BTreeMap::new();
    let mut all = Sum::default();
    for r in &panel.rows {
        by_ref.entry(&r.referee).or_default().add(r);
        by_team.entry(&r.team).or_default().add(r);
        by_cell.entry((&r.referee, &r.team)).or_default().add(r);
        all.add(r);
    }
    if all.n == 0 {
        return Vec::new();
    }
    let (m_rim, m_disp) = all.means();
    by_cell
        .into_iter()
        .map(|((referee, team), s)| {
            let (y_rim, y_disp) = s.means();
            let (a_rim, a_disp) = by_ref[referee].means();
            let (b_rim, b_disp) = by_team[team].means();
            let parts = |y, a, b, m| ExcessParts {
                y,
                a,
                b,
                m,
                x: excess(y, a, b, m),
            };
            RefTeamCell {
                referee: referee.clone(),
                team: team.clone(),
                games: s.n,
                rim: parts(y_rim, a_rim, b_rim, m_rim),
                disparity: parts(y_disp, a_disp, b_disp, m_disp),
                z_rim: None,
                z_disp: None,
                z_combined: None,
            }
        })
        .collect()
}

/// Keeps cells with at least `min_pair_games` games and standardizes each
/// metric's excess over that qualified set. A metric with zero spread gets
/// undefined z-scores.
pub fn qualify(cells: &[RefTeamCell], min_pair_games: u32) -> Vec<RefTeamCell> {
    let mut q: Vec<RefTeamCell> = cells
        .iter()
        .filter(|c| c.games >= min_pair_games.max(1))
        .cloned()
        .collect();
    let stats = |metric: OutcomeMetric, q: &[RefTeamCell]| {
        let xs: Vec<f64> = q.iter().map(|c| c.parts(metric).x).collect();
        match (mean(&xs), sample_sd(&xs)) {
            (Some(m), Some(sd)) if sd > 1e-12 => Some((m, sd)),
            _ => None,
        }
    };
    let rim = stats(OutcomeMetric::SignedTeamRim, &q);
    let disp = stats(OutcomeMetric::SignedDisparity, &q);
    for c in &mut q {
        c.z_rim = rim.map(|(m, sd)| (c.rim.x - m) / sd);
        c.z_disp = disp.map(|(m, sd)| (c.disparity.x - m) / sd);
        c.z_combined = match (c.z_rim, c.z_disp) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
    }
    q
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRow {
    pub referee: RefereeName,
    pub team: TeamId,
    pub games: u32,
    pub parts: ExcessParts,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierTable {
    pub metric: OutcomeMetric,
    /// Largest |x| first; sign retained (positive favors the listed team).
    pub rows: Vec<OutlierRow>,
    /// Fewer than `k` cells carried a nonzero excess.
    pub short: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub referee: RefereeName,
    pub team: TeamId,
    pub games: u32,
    pub x_disp: f64,
    pub x_rim: f64,
    pub z_disp: Option<f64>,
    pub z_rim: Option<f64>,
    pub z_combined: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub min_pair_games: u32,
    pub cells_total: usize,
    pub qualified: usize,
    pub rim: OutlierTable,
    pub disparity: OutlierTable,
    pub scatter: Vec<ScatterPoint>,
    /// Pearson r between excess RIM and excess disparity over qualified cells.
    pub corr_rim_disp: Option<f64>,
    pub z_rim_defined: bool,
    pub z_disp_defined: bool,
}

const ZERO_EXCESS: f64 = 1e-12;

fn ranked(qualified: &[RefTeamCell], metric: OutcomeMetric, k: usize) -> OutlierTable {
    let mut rows: Vec<OutlierRow> = qualified
        .iter()
        .filter(|c| abs(c.parts(metric).x) > ZERO_EXCESS)
        .map(|c| OutlierRow {
            referee: c.referee.clone(),
            team: c.team.clone(),
            games: c.games,
            parts: *c.parts(metric),
            z: match metric {
                OutcomeMetric::SignedTeamRim => c.z_rim,
                OutcomeMetric::SignedDisparity => c.z_disp,
            },
        })
        .collect();
    rows.sort_by(|a, b| {
        abs(b.parts.x)
            .total_cmp(&abs(a.parts.x))
            .then_with(|| a.referee.cmp(&b.referee))
            .then_with(|| a.team.cmp(&b.team))
    });
    let short = rows.len() < k;
    rows.truncate(k);
    OutlierTable { metric, rows, short }
}

/// Top-`k` tables by |excess| for both metrics plus the combined z map.
pub fn outlier_tables(cells: &[RefTeamCell], min_pair_games: u32, k: usize) -> OutlierReport {
    let q = qualify(cells, min_pair_games);
    let x_rim: Vec<f64> = q.iter().map(|c| c.rim.x).collect();
    let x_disp: Vec<f64> = q.iter().map(|c| c.disparity.x).collect();
    OutlierReport {
        min_pair_games,
        cells_total: cells.len(),
        qualified: q.len(),
        rim: ranked(&q, OutcomeMetric::SignedTeamRim, k),
        disparity: ranked(&q, OutcomeMetric::SignedDisparity, k),
        corr_rim_disp: pearson(&x_rim, &x_disp),
        z_rim_defined: q.iter().any(|c| c.z_rim.is_some()),
        z_disp_defined: q.iter().any(|c| c.z_disp.is_some()),
        scatter: q
            .iter()
            .map(|c| ScatterPoint {
                referee: c.referee.clone(),
                team: c.team.clone(),
                games: c.games,
                x_disp: c.disparity.x,
                x_rim: c.rim.x,
                z_disp: c.z_disp,
                z_rim: c.z_rim,
                z_combined: c.z_combined,
            })
            .collect(),
    }
}
