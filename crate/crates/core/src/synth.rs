//! Synthetic corpus generator with a ground-truth ledger, plus an
//! independent single-pass recomputation of the per-game metrics and the
//! referee-team excess used to cross-check the main code paths.
//!
//! Each game draws from its own ChaCha stream keyed by the game's global
//! index, so a corpus is a pure function of its [`SimConfig`].
//!
//! Leverage model: a foul moves the home win probability toward the team
//! that was not charged. Magnitudes are gamma distributed (right-skewed)
//! with a mean that grows late in the game, and are capped at 90% of the
//! probability headroom in the direction of the move.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    FoulEvent, GameRecord, RefereeName, SeasonType, SeriesState, SeriesStateKey, TeamId, WinProb,
    REGULATION_PERIOD_SECONDS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("crew size {crew} exceeds the referee pool of {pool}")]
    CrewTooLarge { crew: usize, pool: usize },
    #[error("need at least two teams, got {0}")]
    TooFewTeams(usize),
    #[error("unknown team `{0}` in injected effects")]
    UnknownTeam(String),
    #[error("unknown referee `{0}` in injected effects")]
    UnknownReferee(String),
    #[error("invalid series state `{0}`")]
    BadSeriesState(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Home-court shift for one team, in fouls of signed disparity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamHomeShift {
    pub team: String,
    pub shift: f64,
}

/// Shift in signed team RIM (probability units) for a team in games
/// officiated by a given referee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairShift {
    pub referee: String,
    pub team: String,
    pub shift: f64,
}

/// Shift in game RIM (probability units) for postseason games played at
/// a given canonical series state, e.g. `2--2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesShift {
    pub state: String,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    pub n_teams: usize,
    pub n_referees: usize,
    pub crew_size: usize,
    pub seasons: usize,
    pub first_season_start_year: u16,
    pub games_per_season: usize,
    pub postseason_games_per_season: usize,
    pub series_state_missing_rate: f64,
    pub no_crew_rate: f64,
    /// Mean fouls charged to one team per game.
    pub fouls_mean: f64,
    /// Negative-binomial shape for foul counts; `0` means Poisson.
    pub fouls_dispersion: f64,
    /// SD of per-team foul propensity (fouls per game).
    pub team_foul_sd: f64,
    /// Expected signed disparity in favor of the home team.
    pub home_foul_edge: f64,
    pub leverage_mean: f64,
    pub leverage_shape: f64,
    pub wp_drift_sd: f64,
    pub overtime_rate: f64,
    pub team_home_shifts: Vec<TeamHomeShift>,
    pub pair_shifts: Vec<PairShift>,
    pub series_shifts: Vec<SeriesShift>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            n_teams: 30,
            n_referees: 70,
            crew_size: 3,
            seasons: 1,
            first_season_start_year: 2021,
            games_per_season: 1230,
            postseason_games_per_season: 0,
            series_state_missing_rate: 0.0,
            no_crew_rate: 0.0,
            fouls_mean: 20.0,
            fouls_dispersion: 0.0,
            team_foul_sd: 1.0,
            home_foul_edge: 0.5,
            leverage_mean: 0.012,
            leverage_shape: 1.5,
            wp_drift_sd: 0.04,
            overtime_rate: 0.06,
            team_home_shifts: Vec::new(),
            pair_shifts: Vec::new(),
            series_shifts: Vec::new(),
        }
    }
}

pub fn team_name(i: usize) -> String {
    format!("T{:02}", i + 1)
}

pub fn referee_name(i: usize) -> String {
    format!("Referee {:02}", i + 1)
}

pub fn season_label(start_year: u16) -> String {
    format!("{}-{:02}", start_year, (start_year + 1) % 100)
}

/// Everything injected into a corpus, emitted beside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub regular_games: usize,
    pub postseason_games: usize,
    pub team_home_shifts: Vec<TeamHomeShift>,
    pub pair_shifts: Vec<PairShift>,
    pub series_shifts: Vec<SeriesShift>,
    pub team_foul_propensity: BTreeMap<String, f64>,
}

impl GroundTruth {
    /// No nonzero injected effect.
    pub fn is_null(&self) -> bool {
        self.team_home_shifts.iter().all(|s| s.shift == 0.0)
            && self.pair_shifts.iter().all(|s| s.shift == 0.0)
            && self.series_shifts.iter().all(|s| s.shift == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCorpus {
    pub games: Vec<GameRecord>,
    pub truth: GroundTruth,
}

struct Prepared {
    teams: Vec<TeamId>,
    referees: Vec<RefereeName>,
    propensity: Vec<f64>,
    home_shift: Vec<f64>,
    pair_shift: BTreeMap<(usize, usize), f64>,
    series_shift: BTreeMap<SeriesStateKey, f64>,
    foul_gamma: Option<f64>,
    leverage_gamma: Gamma<f64>,
}

fn check(cfg: &SimConfig) -> Result<Prepared, SimError> {
    if cfg.n_teams < 2 {
        return Err(SimError::TooFewTeams(cfg.n_teams));
    }
    if cfg.crew_size > cfg.n_referees {
        return Err(SimError::CrewTooLarge {
            crew: cfg.crew_size,
            pool: cfg.n_referees,
        });
    }
    if cfg.fouls_mean.is_nan() || cfg.fouls_mean <= 0.0 {
        return Err(SimError::InvalidParameter("fouls_mean must be positive"));
    }
    if cfg.fouls_dispersion.is_nan() || cfg.fouls_dispersion < 0.0 {
        return Err(SimError::InvalidParameter("fouls_dispersion must be >= 0"));
    }
    if !(cfg.leverage_mean > 0.0 && cfg.leverage_shape > 0.0) {
        return Err(SimError::InvalidParameter("leverage parameters must be positive"));
    }
    for rate in [cfg.series_state_missing_rate, cfg.no_crew_rate, cfg.overtime_rate] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(SimError::InvalidParameter("rates must be in [0, 1]"));
        }
    }
    if !(cfg.wp_drift_sd >= 0.0 && cfg.team_foul_sd >= 0.0) {
        return Err(SimError::InvalidParameter("standard deviations must be >= 0"));
    }

    let teams: Vec<TeamId> = (0..cfg.n_teams).map(|i| TeamId(team_name(i))).collect();
    let referees: Vec<RefereeName> =
        (0..cfg.n_referees).map(|i| RefereeName(referee_name(i))).collect();
    let team_idx = |name: &str| {
        teams
            .iter()
            .position(|t| t.as_str() == name)
            .ok_or_else(|| SimError::UnknownTeam(name.to_string()))
    };
    let ref_idx = |name: &str| {
        referees
            .iter()
            .position(|r| r.as_str() == name)
            .ok_or_else(|| SimError::UnknownReferee(name.to_string()))
    };

    let mut home_shift = alloc::vec![0.0; cfg.n_teams];
    for s in &cfg.team_home_shifts {
        home_shift[team_idx(&s.team)?] += s.shift;
    }
    let mut pair_shift = BTreeMap::new();
    for s in &cfg.pair_shifts {
        *pair_shift.entry((ref_idx(&s.referee)?, team_idx(&s.team)?)).or_insert(0.0) += s.shift;
    }
    let mut series_shift = BTreeMap::new();
    for s in &cfg.series_shifts {
        let key = SeriesStateKey::parse(&s.state)
            .ok_or_else(|| SimError::BadSeriesState(s.state.clone()))?;
        *series_shift.entry(key).or_insert(0.0) += s.shift;
    }

    // Team propensities come from a stream no game uses.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    let propensity = if cfg.team_foul_sd > 0.0 {
        let normal = Normal::new(0.0, cfg.team_foul_sd)
            .map_err(|_| SimError::InvalidParameter("team_foul_sd"))?;
        (0..cfg.n_teams).map(|_| normal.sample(&mut rng)).collect()
    } else {
        alloc::vec![0.0; cfg.n_teams]
    };

    Ok(Prepared {
        teams,
        referees,
        propensity,
        home_shift,
        pair_shift,
        series_shift,
        foul_gamma: (cfg.fouls_dispersion > 0.0).then_some(cfg.fouls_dispersion),
        leverage_gamma: Gamma::new(cfg.leverage_shape, 1.0 / cfg.leverage_shape)
            .map_err(|_| SimError::InvalidParameter("leverage_shape"))?,
    })
}

fn foul_count(rng: &mut ChaCha8Rng, mean: f64, shape: Option<f64>) -> u32 {
    let mean = mean.max(0.5);
    let lambda = match shape {
        Some(k) => Gamma::new(k, mean / k).map(|g| g.sample(rng)).unwrap_or(mean),
        None => mean,
    };
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|p| p.sample(rng) as u32).unwrap_or(0)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

fn gen_game(
    cfg: &SimConfig,
    p: &Prepared,
    season_start: u16,
    season_type: SeasonType,
    index: usize,
    stream: u64,
) -> GameRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);

    let home = rng.random_range(0..cfg.n_teams);
    let mut away = rng.random_range(0..cfg.n_teams - 1);
    if away >= home {
        away += 1;
    }

    // Partial Fisher-Yates over the referee pool.
    let mut pool: Vec<usize> = (0..cfg.n_referees).collect();
    for i in 0..cfg.crew_size {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut crew_idx: Vec<usize> = pool[..cfg.crew_size].to_vec();
    crew_idx.sort_unstable();
    if rng.random::<f64>() < cfg.no_crew_rate {
        crew_idx.clear();
    }

    let series_state = (season_type == SeasonType::Postseason).then(|| SeriesState {
        home_wins: rng.random_range(0..=3),
        away_wins: rng.random_range(0..=3),
    });
    let series_state = series_state.filter(|_| rng.random::<f64>() >= cfg.series_state_missing_rate);
    let series_extra = series_state
        .and_then(|s| s.key().ok())
        .and_then(|k| p.series_shift.get(&k).copied())
        .unwrap_or(0.0);

    let shift = p.home_shift[home];
    let home_mean = cfg.fouls_mean + p.propensity[home] - (cfg.home_foul_edge + shift) / 2.0;
    let away_mean = cfg.fouls_mean + p.propensity[away] + (cfg.home_foul_edge + shift) / 2.0;
    let n_home = foul_count(&mut rng, home_mean, p.foul_gamma);
    let n_away = foul_count(&mut rng, away_mean, p.foul_gamma);

    let mut ot_periods = 0u8;
    while ot_periods < 3 && rng.random::<f64>() < cfg.overtime_rate {
        ot_periods += 1;
    }
    let regulation = 4.0 * REGULATION_PERIOD_SECONDS;
    let total = regulation + f64::from(ot_periods) * 300.0;

    // (elapsed seconds, charged to home)
    let mut fouls: Vec<(f64, bool)> = Vec::with_capacity((n_home + n_away) as usize);
    for charged_home in core::iter::repeat_n(true, n_home as usize)
        .chain(core::iter::repeat_n(false, n_away as usize))
    {
        let t = libm::floor(rng.random::<f64>() * total * 10.0) / 10.0;
        fouls.push((t, charged_home));
    }
    fouls.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut extra_home = 0.0;
    for &r in &crew_idx {
        extra_home += p.pair_shift.get(&(r, home)).copied().unwrap_or(0.0);
        extra_home -= p.pair_shift.get(&(r, away)).copied().unwrap_or(0.0);
    }
    let n = fouls.len().max(1) as f64;

    let mut w = (0.5 + 0.08 * standard_normal(&mut rng)).clamp(0.15, 0.85);
    let mut events = Vec::with_capacity(fouls.len());
    for (i, (elapsed, charged_home)) in fouls.iter().enumerate() {
        w += cfg.wp_drift_sd * standard_normal(&mut rng) + 0.05 * (0.5 - w);
        w = w.clamp(0.03, 0.97);
        let pre = w;
        let late = (elapsed / regulation).min(1.2);
        let scale = cfg.leverage_mean * (0.5 + 1.5 * late * late);
        let raw = p.leverage_gamma.sample(&mut rng) * scale + series_extra / n;
        let dir = if *charged_home { -1.0 } else { 1.0 };
        let headroom = if dir > 0.0 { 1.0 - pre } else { pre };
        let lev = raw.min(0.9 * headroom).max(0.0);
        let post = (pre + dir * lev + extra_home / n).clamp(0.0, 1.0);
        w = post;

        let (period, clock) = if *elapsed < regulation {
            let q = libm::floor(elapsed / REGULATION_PERIOD_SECONDS);
            (q as u8 + 1, REGULATION_PERIOD_SECONDS - (elapsed - q * REGULATION_PERIOD_SECONDS))
        } else {
            let o = libm::floor((elapsed - regulation) / 300.0);
            (o as u8 + 5, 300.0 - (elapsed - regulation - o * 300.0))
        };
        let clock = libm::round(clock * 10.0) / 10.0;
        let charged = if *charged_home { home } else { away };
        events.push(FoulEvent {
            event_id: i as u32,
            period,
            clock_seconds_remaining: clock,
            charged_team: Some(p.teams[charged].clone()),
            pre_wp: WinProb::raw(pre),
            post_wp: WinProb::raw(post),
            description: String::from("Personal foul"),
        });
    }

    let tag = match season_type {
        SeasonType::Regular => 'R',
        SeasonType::Postseason => 'P',
    };
    let mut game = GameRecord {
        game_id: format!("{season_start}{tag}{index:05}"),
        season: season_label(season_start),
        season_type,
        home_team: p.teams[home].clone(),
        away_team: p.teams[away].clone(),
        crew: crew_idx.iter().map(|&r| p.referees[r].clone()).collect(),
        events,
        series_state,
    };
    game.sort_events();
    game
}

/// Generates a corpus and its ground-truth ledger.
pub fn generate(cfg: &SimConfig) -> Result<SimCorpus, SimError> {
    let prepared = check(cfg)?;
    let mut games = Vec::with_capacity(
        cfg.seasons * (cfg.games_per_season + cfg.postseason_games_per_season),
    );
    let mut stream = 0u64;
    for s in 0..cfg.seasons {
        let start = cfg.first_season_start_year + s as u16;
        for (season_type, count) in [
            (SeasonType::Regular, cfg.games_per_season),
            (SeasonType::Postseason, cfg.postseason_games_per_season),
        ] {
            for i in 0..count {
                games.push(gen_game(cfg, &prepared, start, season_type, i, stream));
                stream += 1;
            }
        }
    }
    let truth = GroundTruth {
        seed: cfg.seed,
        regular_games: cfg.seasons * cfg.games_per_season,
        postseason_games: cfg.seasons * cfg.postseason_games_per_season,
        team_home_shifts: cfg.team_home_shifts.clone(),
        pair_shifts: cfg.pair_shifts.clone(),
        series_shifts: cfg.series_shifts.clone(),
        team_foul_propensity: prepared
            .teams
            .iter()
            .zip(&prepared.propensity)
            .map(|(t, p)| (t.to_string(), *p))
            .collect(),
    };
    Ok(SimCorpus { games, truth })
}

/// Per-game metrics recomputed without the `metrics` module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleGame {
    pub game_id: String,
    pub rim: f64,
    pub calls: u32,
    pub swing_per_call: Option<f64>,
    pub home_disparity: i64,
    pub away_disparity: i64,
    pub home_signed_rim: f64,
    pub away_signed_rim: f64,
}

pub fn oracle_recompute(corpus: &[GameRecord]) -> Vec<OracleGame> {
    let mut out = Vec::with_capacity(corpus.len());
    for g in corpus {
        let mut rim = 0.0;
        let mut home_q = 0.0;
        let mut away_q = 0.0;
        let mut home_f: i64 = 0;
        let mut away_f: i64 = 0;
        for e in &g.events {
            let before = e.pre_wp.value();
            let after = e.post_wp.value();
            let d = after - before;
            rim += if d < 0.0 { -d } else { d };
            home_q += d;
            away_q += (1.0 - after) - (1.0 - before);
            if let Some(t) = &e.charged_team {
                if t.as_str() == g.home_team.as_str() {
                    home_f += 1;
                } else if t.as_str() == g.away_team.as_str() {
                    away_f += 1;
                }
            }
        }
        let calls = g.events.len() as u32;
        out.push(OracleGame {
            game_id: g.game_id.clone(),
            rim,
            calls,
            swing_per_call: if calls == 0 { None } else { Some(rim / calls as f64) },
            home_disparity: away_f - home_f,
            away_disparity: home_f - away_f,
            home_signed_rim: home_q,
            away_signed_rim: away_q,
        });
    }
    out
}

/// Referee-team excess recomputed straight from game records:
/// `(referee, team) -> (games, x_rim, x_disp)`.
pub fn oracle_excess(
    corpus: &[GameRecord],
    season_type: Option<SeasonType>,
) -> BTreeMap<(String, String), (u32, f64, f64)> {
    let per_game = oracle_recompute(corpus);
    // (count, rim sum, disparity sum)
    let mut refs: BTreeMap<String, (f64, f64, f64)> = BTreeMap::new();
    let mut teams: BTreeMap<String, (f64, f64, f64)> = BTreeMap::new();
    let mut cells: BTreeMap<(String, String), (f64, f64, f64)> = BTreeMap::new();
    let mut total = (0.0, 0.0, 0.0);
    let bump = |acc: &mut (f64, f64, f64), q: f64, s: f64| {
        acc.0 += 1.0;
        acc.1 += q;
        acc.2 += s;
    };
    for (g, o) in corpus.iter().zip(&per_game) {
        if season_type.is_some_and(|t| t != g.season_type) {
            continue;
        }
        let sides = [
            (g.home_team.as_str(), o.home_signed_rim, o.home_disparity as f64),
            (g.away_team.as_str(), o.away_signed_rim, o.away_disparity as f64),
        ];
        for r in &g.crew {
            for (team, q, s) in sides {
                bump(refs.entry(r.as_str().to_string()).or_default(), q, s);
                bump(teams.entry(team.to_string()).or_default(), q, s);
                bump(
                    cells.entry((r.as_str().to_string(), team.to_string())).or_default(),
                    q,
                    s,
                );
                bump(&mut total, q, s);
            }
        }
    }
    let mut out = BTreeMap::new();
    for ((r, t), c) in cells {
        let a = refs[&r];
        let b = teams[&t];
        let x_rim = c.1 / c.0 - a.1 / a.0 - b.1 / b.0 + total.1 / total.0;
        let x_disp = c.2 / c.0 - a.2 / a.0 - b.2 / b.0 + total.2 / total.0;
        out.insert((r, t), (c.0 as u32, x_rim, x_disp));
    }
    out
}
