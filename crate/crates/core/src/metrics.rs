//! Per-game leverage quantities: event leverage, game RIM, swing per call,
//! signed foul disparity and signed team RIM.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::abs;
use crate::model::{
    FoulEvent, GameRecord, PeriodBucket, RefereeName, SeasonType, SeriesStateKey, Side,
    TeamGameRow, TeamId, WinProb,
};

/// Absolute win-probability movement across one foul.
pub fn event_leverage(pre: WinProb, post: WinProb) -> f64 {
    abs(post.value() - pre.value())
}

/// Game RIM: total leverage over the game's foul events.
pub fn game_rim(events: &[FoulEvent]) -> f64 {
    events
        .iter()
        .map(|e| event_leverage(e.pre_wp, e.post_wp))
        .sum()
}

/// Average swing per call. Games without calls get a distinct marker so
/// they are skipped rather than averaged in as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SwingPerCall {
    Value(f64),
    NoCalls,
}

impl SwingPerCall {
    pub fn value(self) -> Option<f64> {
        match self {
            SwingPerCall::Value(v) => Some(v),
            SwingPerCall::NoCalls => None,
        }
    }
}

pub fn avg_swing_per_call(game_rim: f64, n_calls: u32) -> SwingPerCall {
    if n_calls == 0 {
        SwingPerCall::NoCalls
    } else {
        SwingPerCall::Value(game_rim / f64::from(n_calls))
    }
}

/// Opponent fouls minus own fouls. Positive favors the team.
pub fn signed_disparity(own_fouls: u32, opp_fouls: u32) -> i32 {
    opp_fouls as i32 - own_fouls as i32
}

/// Net win-probability movement toward `perspective` over the events.
pub fn signed_team_rim(events: &[FoulEvent], perspective: Side) -> f64 {
    events
        .iter()
        .map(|e| {
            let (pre, post) = match perspective {
                Side::Home => (e.pre_wp, e.post_wp),
                Side::Away => (e.pre_wp.complement(), e.post_wp.complement()),
            };
            post.value() - pre.value()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BucketTotals {
    pub rim: f64,
    pub calls: u32,
    /// Home perspective: away fouls minus home fouls.
    pub disparity: i32,
}

/// Splits the game into Q1..Q4 and OT. All five buckets are always present.
pub fn per_period_decomposition(
    events: &[FoulEvent],
    home_team: &TeamId,
    away_team: &TeamId,
) -> BTreeMap<PeriodBucket, BucketTotals> {
    let mut out: BTreeMap<PeriodBucket, BucketTotals> = PeriodBucket::ALL
        .iter()
        .map(|b| (*b, BucketTotals::default()))
        .collect();
    for e in events {
        let slot = out
            .get_mut(&PeriodBucket::from_period(e.period))
            .expect("every bucket is pre-seeded");
        slot.rim += event_leverage(e.pre_wp, e.post_wp);
        slot.calls += 1;
        match &e.charged_team {
            Some(t) if t == home_team => slot.disparity -= 1,
            Some(t) if t == away_team => slot.disparity += 1,
            _ => {}
        }
    }
    out
}

/// Case-insensitive substring filter over foul descriptions. The default
/// keeps every foul.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FoulFilter {
    #[serde(default)]
    pub include: Vec<String>,
    #[serde(default)]
    pub exclude: Vec<String>,
}

impl FoulFilter {
    pub fn keeps(&self, event: &FoulEvent) -> bool {
        if self.include.is_empty() && self.exclude.is_empty() {
            return true;
        }
        let text = event.description.to_lowercase();
        let included = self.include.is_empty()
            || self.include.iter().any(|p| text.contains(&p.to_lowercase()));
        included && !self.exclude.iter().any(|p| text.contains(&p.to_lowercase()))
    }

    pub fn is_pass_through(&self) -> bool {
        self.include.is_empty() && self.exclude.is_empty()
    }
}

/// All per-game quantities plus the context aggregations need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameMetrics {
    pub game_id: String,
    pub season: String,
    pub season_type: SeasonType,
    pub crew: Vec<RefereeName>,
    pub series_key: Option<SeriesStateKey>,
    pub rim: f64,
    pub calls: u32,
    pub swing_per_call: SwingPerCall,
    pub per_period: BTreeMap<PeriodBucket, BucketTotals>,
    pub home: TeamGameRow,
    pub away: TeamGameRow,
}

impl GameMetrics {
    pub fn row(&self, side: Side) -> &TeamGameRow {
        match side {
            Side::Home => &self.home,
            Side::Away => &self.away,
        }
    }

    /// Absolute foul disparity (same for both sides).
    pub fn abs_disparity(&self) -> u32 {
        self.home.signed_disparity.unsigned_abs()
    }
}

/// Computes every per-game quantity over the events kept by `filter`.
///
/// Fouls without a charged team count toward calls and RIM but not toward
/// either team's foul total.
pub fn compute_game_metrics(game: &GameRecord, filter: &FoulFilter) -> GameMetrics {
    let kept: Vec<FoulEvent>;
    let events: &[FoulEvent] = if filter.is_pass_through() {
        &game.events
    } else {
        kept = game.events.iter().filter(|e| filter.keeps(e)).cloned().collect();
        &kept
    };

    let rim = game_rim(events);
    let calls = events.len() as u32;
    let home_fouls = events
        .iter()
        .filter(|e| e.charged_team.as_ref() == Some(&game.home_team))
        .count() as u32;
    let away_fouls = events
        .iter()
        .filter(|e| e.charged_team.as_ref() == Some(&game.away_team))
        .count() as u32;
    let series_key = game.series_key();

    let row = |side: Side| {
        let (own, opp) = match side {
            Side::Home => (home_fouls, away_fouls),
            Side::Away => (away_fouls, home_fouls),
        };
        TeamGameRow {
            game_id: game.game_id.clone(),
            team: game.team(side).clone(),
            opponent: game.team(side.opposite()).clone(),
            is_home: side == Side::Home,
            season: game.season.clone(),
            season_type: game.season_type,
            own_fouls: own,
            opp_fouls: opp,
            signed_disparity: signed_disparity(own, opp),
            signed_team_rim: signed_team_rim(events, side),
            game_rim: rim,
            n_calls: calls,
            series_state_normalized: series_key,
        }
    };

    GameMetrics {
        game_id: game.game_id.to_string(),
        season: game.season.clone(),
        season_type: game.season_type,
        crew: game.crew.clone(),
        series_key,
        rim,
        calls,
        swing_per_call: avg_swing_per_call(rim, calls),
        per_period: per_period_decomposition(events, &game.home_team, &game.away_team),
        home: row(Side::Home),
        away: row(Side::Away),
    }
}

/// Expands games into team-game rows, two per game.
pub fn team_game_rows(metrics: &[GameMetrics]) -> Vec<TeamGameRow> {
    metrics
        .iter()
        .flat_map(|m| [m.home.clone(), m.away.clone()])
        .collect()
}
