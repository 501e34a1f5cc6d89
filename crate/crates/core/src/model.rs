//! Domain types shared by every stage of the pipeline.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds in a regulation quarter.
pub const REGULATION_PERIOD_SECONDS: f64 = 720.0;
/// Seconds in an overtime period.
pub const OVERTIME_PERIOD_SECONDS: f64 = 300.0;
/// Highest win count a team can carry into a best-of-seven game.
pub const MAX_SERIES_WINS: u8 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("win probability {0} outside [0, 1]")]
    WinProbOutOfRange(f64),
    #[error("series wins ({home}, {away}) outside 0..=3")]
    SeriesWinsOutOfRange { home: u8, away: u8 },
    #[error("unknown season type `{0}`")]
    UnknownSeasonType(String),
}

/// Win probability in `[0, 1]`, always from the home team's perspective.
///
/// Values loaded from disk are not range-checked on deserialization;
/// [`validate_game`] reports out-of-range values as violations.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WinProb(f64);

impl WinProb {
    pub fn new(value: f64) -> Result<Self, ModelError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(ModelError::WinProbOutOfRange(value))
        }
    }

    /// Wraps a value without the range check.
    pub const fn raw(value: f64) -> Self {
        Self(value)
    }

    pub const fn value(self) -> f64 {
        self.0
    }

    /// The same probability seen from the other team.
    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }

    pub fn is_valid(self) -> bool {
        (0.0..=1.0).contains(&self.0)
    }
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

string_id!(
    /// Team identifier (feed abbreviation, e.g. `LAL`).
    TeamId
);
string_id!(
    /// Canonicalized referee name. Public feeds carry no official IDs, so the
    /// name is the identifier.
    RefereeName
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeasonType {
    Regular,
    Postseason,
}

impl SeasonType {
    pub const ALL: [SeasonType; 2] = [SeasonType::Regular, SeasonType::Postseason];

    pub fn as_str(self) -> &'static str {
        match self {
            SeasonType::Regular => "regular",
            SeasonType::Postseason => "postseason",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ModelError> {
        match s {
            "regular" => Ok(SeasonType::Regular),
            "postseason" => Ok(SeasonType::Postseason),
            other => Err(ModelError::UnknownSeasonType(other.to_string())),
        }
    }
}

impl fmt::Display for SeasonType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Home,
    Away,
}

impl Side {
    pub fn opposite(self) -> Self {
        match self {
            Side::Home => Side::Away,
            Side::Away => Side::Home,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Home => "home",
            Side::Away => "away",
        }
    }
}

/// One whistle with the home win probability on either side of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoulEvent {
    pub event_id: u32,
    pub period: u8,
    pub clock_seconds_remaining: f64,
    /// Team charged with the foul; `None` when the feed does not say.
    pub charged_team: Option<TeamId>,
    pub pre_wp: WinProb,
    pub post_wp: WinProb,
    /// Raw play text, kept so foul classes can be filtered downstream.
    #[serde(default)]
    pub description: String,
}

/// Pregame playoff series standing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesState {
    pub home_wins: u8,
    pub away_wins: u8,
}

impl SeriesState {
    pub fn key(self) -> Result<SeriesStateKey, ModelError> {
        canonical_series_key(self.home_wins, self.away_wins)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub season: String,
    pub season_type: SeasonType,
    pub home_team: TeamId,
    pub away_team: TeamId,
    /// Empty when the feed lists no officials ("no-crew" games are kept for
    /// team analyses and skipped by referee analyses).
    pub crew: Vec<RefereeName>,
    pub events: Vec<FoulEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_state: Option<SeriesState>,
}

impl GameRecord {
    pub fn has_crew(&self) -> bool {
        !self.crew.is_empty()
    }

    pub fn team(&self, side: Side) -> &TeamId {
        match side {
            Side::Home => &self.home_team,
            Side::Away => &self.away_team,
        }
    }

    pub fn series_key(&self) -> Option<SeriesStateKey> {
        self.series_state.and_then(|s| s.key().ok())
    }

    /// Sorts events by (period asc, clock desc). The sort is stable, so
    /// fouls sharing a clock reading keep feed order.
    pub fn sort_events(&mut self) {
        self.events.sort_by(|a, b| {
            a.period.cmp(&b.period).then(
                b.clock_seconds_remaining
                    .partial_cmp(&a.clock_seconds_remaining)
                    .unwrap_or(core::cmp::Ordering::Equal),
            )
        });
    }
}

/// One team's side of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamGameRow {
    pub game_id: String,
    pub team: TeamId,
    pub opponent: TeamId,
    pub is_home: bool,
    pub season: String,
    pub season_type: SeasonType,
    pub own_fouls: u32,
    pub opp_fouls: u32,
    pub signed_disparity: i32,
    pub signed_team_rim: f64,
    pub game_rim: f64,
    pub n_calls: u32,
    pub series_state_normalized: Option<SeriesStateKey>,
}

/// Series standing with mirrored orderings collapsed: `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesStateKey {
    lo: u8,
    hi: u8,
}

impl SeriesStateKey {
    /// Reference level for series-state regressions.
    pub const START: SeriesStateKey = SeriesStateKey { lo: 0, hi: 0 };

    pub fn lo(self) -> u8 {
        self.lo
    }

    pub fn hi(self) -> u8 {
        self.hi
    }

    /// All ten canonical keys in ascending order.
    pub fn all() -> Vec<SeriesStateKey> {
        let mut out = Vec::new();
        for lo in 0..=MAX_SERIES_WINS {
            for hi in lo..=MAX_SERIES_WINS {
                out.push(SeriesStateKey { lo, hi });
            }
        }
        out
    }

    pub fn parse(s: &str) -> Option<SeriesStateKey> {
        let (a, b) = s.split_once("--")?;
        canonical_series_key(a.trim().parse().ok()?, b.trim().parse().ok()?).ok()
    }
}

impl fmt::Display for SeriesStateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}--{}", self.lo, self.hi)
    }
}

/// Collapses a (home, away) standing into its mirror-free key.
pub fn canonical_series_key(home_wins: u8, away_wins: u8) -> Result<SeriesStateKey, ModelError> {
    if home_wins > MAX_SERIES_WINS || away_wins > MAX_SERIES_WINS {
        return Err(ModelError::SeriesWinsOutOfRange {
            home: home_wins,
            away: away_wins,
        });
    }
    Ok(SeriesStateKey {
        lo: home_wins.min(away_wins),
        hi: home_wins.max(away_wins),
    })
}

/// Period bucket used by quarter decompositions. Every overtime period
/// lands in `OT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PeriodBucket {
    Q1,
    Q2,
    Q3,
    Q4,
    OT,
}

impl PeriodBucket {
    pub const ALL: [PeriodBucket; 5] = [
        PeriodBucket::Q1,
        PeriodBucket::Q2,
        PeriodBucket::Q3,
        PeriodBucket::Q4,
        PeriodBucket::OT,
    ];

    pub fn from_period(period: u8) -> Self {
        match period {
            0 | 1 => PeriodBucket::Q1,
            2 => PeriodBucket::Q2,
            3 => PeriodBucket::Q3,
            4 => PeriodBucket::Q4,
            _ => PeriodBucket::OT,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PeriodBucket::Q1 => "Q1",
            PeriodBucket::Q2 => "Q2",
            PeriodBucket::Q3 => "Q3",
            PeriodBucket::Q4 => "Q4",
            PeriodBucket::OT => "OT",
        }
    }
}

pub fn period_length_seconds(period: u8) -> f64 {
    if period <= 4 {
        REGULATION_PERIOD_SECONDS
    } else {
        OVERTIME_PERIOD_SECONDS
    }
}

/// A broken invariant found by [`validate_game`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: &str, rule: String) -> Self {
        Self {
            field: field.to_string(),
            rule,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Checks every invariant of a game record. An empty list means the record
/// is well formed. An empty crew is allowed (the game is a "no-crew" game).
pub fn validate_game(game: &GameRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if game.game_id.trim().is_empty() {
        out.push(Violation::new("game_id", "must be non-empty".into()));
    }
    if game.home_team == game.away_team {
        out.push(Violation::new(
            "home_team",
            format!("home and away team are both `{}`", game.home_team),
        ));
    }
    for (i, name) in game.crew.iter().enumerate() {
        if name.as_str().is_empty() {
            out.push(Violation::new("crew", format!("crew[{i}] is empty")));
        } else if canonicalize_referee_name(name.as_str()) != name.as_str() {
            out.push(Violation::new(
                "crew",
                format!("crew[{i}] `{name}` is not canonical"),
            ));
        }
    }
    match (game.season_type, game.series_state) {
        (SeasonType::Regular, Some(_)) => out.push(Violation::new(
            "series_state",
            "series state present on a regular-season game".into(),
        )),
        (SeasonType::Postseason, Some(s))
            if s.home_wins > MAX_SERIES_WINS || s.away_wins > MAX_SERIES_WINS =>
        {
            out.push(Violation::new(
                "series_state",
                format!("wins ({}, {}) outside 0..=3", s.home_wins, s.away_wins),
            ))
        }
        _ => {}
    }
    for (i, e) in game.events.iter().enumerate() {
        for (field, wp) in [("pre_wp", e.pre_wp), ("post_wp", e.post_wp)] {
            if !wp.is_valid() {
                out.push(Violation::new(
                    field,
                    format!("event {i}: win probability {} outside [0, 1]", wp.value()),
                ));
            }
        }
        if e.period == 0 {
            out.push(Violation::new("period", format!("event {i}: period must be >= 1")));
        }
        let len = period_length_seconds(e.period);
        if !(0.0..=len).contains(&e.clock_seconds_remaining) {
            out.push(Violation::new(
                "clock_seconds_remaining",
                format!(
                    "event {i}: clock {} outside [0, {len}]",
                    e.clock_seconds_remaining
                ),
            ));
        }
        if let Some(t) = &e.charged_team {
            if *t != game.home_team && *t != game.away_team {
                out.push(Violation::new(
                    "charged_team",
                    format!("event {i}: `{t}` is not playing in this game"),
                ));
            }
        }
    }
    for (i, pair) in game.events.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let ordered = a.period < b.period
            || (a.period == b.period && a.clock_seconds_remaining >= b.clock_seconds_remaining);
        if !ordered {
            out.push(Violation::new(
                "events",
                format!("events {i} and {} out of (period, clock) order", i + 1),
            ));
        }
    }
    out
}

const NAME_SUFFIXES: [&str; 6] = ["Jr.", "Sr.", "II", "III", "IV", "V"];

fn canonical_suffix(word: &str) -> Option<&'static str> {
    let bare = word.trim_end_matches('.');
    NAME_SUFFIXES
        .iter()
        .copied()
        .find(|s| s.trim_end_matches('.').eq_ignore_ascii_case(bare))
}

fn title_case_word(word: &str) -> String {
    // Mixed-case words (McCutchen, DeRosa) are already deliberate.
    let has_upper = word.chars().any(char::is_uppercase);
    let has_lower = word.chars().any(char::is_lowercase);
    if has_upper && has_lower {
        return word.to_string();
    }
    let mut out = String::with_capacity(word.len());
    let mut start = true;
    for c in word.chars() {
        if start {
            out.extend(c.to_uppercase());
        } else {
            out.extend(c.to_lowercase());
        }
        start = matches!(c, '-' | '\'' | '.');
    }
    out
}

/// Trim, collapse internal whitespace and title-case a referee name.
/// Generational suffixes are normalized (`jr` -> `Jr.`, `iii` -> `III`).
pub fn canonicalize_referee_name(raw: &str) -> String {
    let words: Vec<&str> = raw.split_whitespace().collect();
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match canonical_suffix(w) {
            Some(s) if i > 0 => out.push_str(s),
            _ => out.push_str(&title_case_word(w)),
        }
    }
    out
}

/// Known name variants, keyed by canonicalized variant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AliasTable {
    map: BTreeMap<String, String>,
}

impl AliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, variant: &str, canonical: &str) {
        self.map.insert(
            canonicalize_referee_name(variant),
            canonicalize_referee_name(canonical),
        );
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn resolve(&self, raw: &str) -> RefereeName {
        let canon = canonicalize_referee_name(raw);
        match self.map.get(&canon) {
            Some(target) => RefereeName(target.clone()),
            None => RefereeName(canon),
        }
    }
}
