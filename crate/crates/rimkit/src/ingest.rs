//! Game-summary and win-probability feed parsing, foul/sample alignment,
//! and the quarantine ledger.
//!
//! The summary document follows the public game-summary layout:
//! `header` (ids, season, competitors, series), `gameInfo.officials`,
//! `plays`, and optionally an embedded `winprobability` array and a
//! `predictor` block with the pregame home projection. The separate
//! win-probability document is either a bare array of samples or an object
//! carrying a `winprobability` array.

use std::collections::BTreeMap;

use log::info;
use rimkit_core::model::{canonicalize_referee_name, validate_game, AliasTable};
use rimkit_core::{FoulEvent, GameRecord, RefereeName, SeasonType, SeriesState, TeamId, WinProb};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_GAME_START_PRIOR: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("malformed document at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("invalid document: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPlay {
    pub play_id: String,
    pub sequence: u64,
    pub period: u8,
    pub clock_seconds_remaining: f64,
    pub description: String,
    pub is_foul: bool,
    pub charged_team: Option<TeamId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawWpSample {
    pub play_id: String,
    pub home_wp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameHeader {
    pub game_id: String,
    pub season: String,
    pub season_type: SeasonType,
    pub date: Option<String>,
    pub home_team: TeamId,
    pub away_team: TeamId,
    pub series_state: Option<SeriesState>,
    pub pregame_home_wp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSummary {
    pub header: GameHeader,
    pub crew: Vec<RefereeName>,
    pub plays: Vec<RawPlay>,
    pub embedded_wp: Vec<RawWpSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuarantineReason {
    ParseError,
    UnsupportedSeasonType,
    MissingWpFeed,
    WpOutOfRange,
    NoPostSample,
    InvalidGame,
}

impl QuarantineReason {
    pub fn as_str(self) -> &'static str {
        match self {
            QuarantineReason::ParseError => "parse-error",
            QuarantineReason::UnsupportedSeasonType => "unsupported-season-type",
            QuarantineReason::MissingWpFeed => "missing-wp-feed",
            QuarantineReason::WpOutOfRange => "wp-out-of-range",
            QuarantineReason::NoPostSample => "no-post-sample",
            QuarantineReason::InvalidGame => "invalid-game",
        }
    }
}

/// One quarantined document, game, sample or foul.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuarantineEntry {
    pub game_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub play_id: Option<String>,
    pub reason: QuarantineReason,
    pub detail: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Str(String),
    Num(serde_json::Number),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Str(s) => s.clone(),
            Scalar::Num(n) => n.to_string(),
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Str(s) => s.trim().parse().ok(),
            Scalar::Num(n) => n.as_f64(),
        }
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SummaryDoc {
    header: HeaderDoc,
    #[serde(default)]
    game_info: Option<GameInfoDoc>,
    #[serde(default)]
    plays: Vec<PlayDoc>,
    #[serde(default)]
    winprobability: Vec<WpDoc>,
    #[serde(default)]
    predictor: Option<PredictorDoc>,
}

#[derive(Deserialize)]
struct HeaderDoc {
    id: Scalar,
    season: SeasonDoc,
    competitions: Vec<CompetitionDoc>,
}

#[derive(Deserialize)]
struct SeasonDoc {
    year: i32,
    #[serde(rename = "type")]
    kind: i32,
}

#[derive(Deserialize)]
struct CompetitionDoc {
    #[serde(default)]
    date: Option<String>,
    competitors: Vec<CompetitorDoc>,
    #[serde(default)]
    series: Option<SeriesDoc>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CompetitorDoc {
    home_away: String,
    team: TeamDoc,
    #[serde(default)]
    winner: Option<bool>,
}

#[derive(Deserialize)]
struct TeamDoc {
    id: Scalar,
    abbreviation: String,
}

#[derive(Deserialize)]
struct SeriesDoc {
    #[serde(default)]
    competitors: Vec<SeriesCompetitorDoc>,
}

#[derive(Deserialize)]
struct SeriesCompetitorDoc {
    id: Scalar,
    wins: u8,
}

#[derive(Deserialize)]
struct GameInfoDoc {
    #[serde(default)]
    officials: Vec<OfficialDoc>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct OfficialDoc {
    display_name: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct PlayDoc {
    id: Scalar,
    sequence_number: Scalar,
    period: PeriodDoc,
    clock: ClockDoc,
    #[serde(default)]
    text: String,
    #[serde(rename = "type", default)]
    kind: Option<TypeDoc>,
    #[serde(default)]
    team: Option<TeamRefDoc>,
}

#[derive(Deserialize)]
struct PeriodDoc {
    number: u8,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ClockDoc {
    display_value: String,
}

#[derive(Deserialize)]
struct TypeDoc {
    #[serde(default)]
    text: String,
}

#[derive(Deserialize)]
struct TeamRefDoc {
    id: Scalar,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct WpDoc {
    play_id: Scalar,
    home_win_percentage: f64,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct PredictorDoc {
    #[serde(default)]
    home_team: Option<ProjectionDoc>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ProjectionDoc {
    game_projection: Scalar,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WpFeedDoc {
    Bare(Vec<WpDoc>),
    Wrapped { winprobability: Vec<WpDoc> },
}

/// Offset just past the last byte the parser consumed.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let mut offset = 0;
    for _ in 1..line {
        match bytes[offset..].iter().position(|&b| b == b'\n') {
            Some(p) => offset += p + 1,
            None => return bytes.len(),
        }
    }
    (offset + column).min(bytes.len())
}

fn decode<'a, T: Deserialize<'a>>(bytes: &'a [u8]) -> Result<T, IngestError> {
    serde_json::from_slice(bytes).map_err(|e| IngestError::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Season label from the feed's season year (the year the season ends).
pub fn season_label_for_year(end_year: i32) -> String {
    format!("{}-{:02}", end_year - 1, end_year.rem_euclid(100))
}

/// `"11:32"` or `"7.4"` to seconds.
pub fn parse_clock(display: &str) -> Option<f64> {
    let s = display.trim();
    let secs = match s.split_once(':') {
        Some((m, sec)) => m.parse::<f64>().ok()? * 60.0 + sec.parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    secs.is_finite().then_some(secs)
}

fn is_foul_play(kind: Option<&str>, text: &str) -> bool {
    match kind {
        Some(k) if !k.is_empty() => {
            let k = k.to_ascii_lowercase();
            k.contains("foul") || k.contains("charge")
        }
        _ => text.to_ascii_lowercase().contains(" foul"),
    }
}

/// Parses one stored game-summary document.
pub fn parse_game_summary(bytes: &[u8], aliases: &AliasTable) -> Result<ParsedSummary, IngestError> {
    let doc: SummaryDoc = decode(bytes)?;
    let game_id = doc.header.id.text();
    let comp = doc
        .header
        .competitions
        .first()
        .ok_or_else(|| IngestError::Schema(format!("{game_id}: no competitions")))?;
    let side = |tag: &str| {
        comp.competitors
            .iter()
            .find(|c| c.home_away.eq_ignore_ascii_case(tag))
            .ok_or_else(|| IngestError::Schema(format!("{game_id}: no {tag} competitor")))
    };
    let home = side("home")?;
    let away = side("away")?;
    let season_type = match doc.header.season.kind {
        2 => SeasonType::Regular,
        3 => SeasonType::Postseason,
        other => {
            return Err(IngestError::Schema(format!(
                "{game_id}: unsupported season type {other}"
            )))
        }
    };

    let team_by_id: BTreeMap<String, TeamId> = comp
        .competitors
        .iter()
        .map(|c| (c.team.id.text(), TeamId::new(c.team.abbreviation.trim())))
        .collect();

    // The feed reports the standing after this game; back out the winner's win.
    let series_state = match (season_type, &comp.series) {
        (SeasonType::Postseason, Some(series)) => {
            let wins = |c: &CompetitorDoc| {
                series
                    .competitors
                    .iter()
                    .find(|s| s.id.text() == c.team.id.text())
                    .map(|s| s.wins)
            };
            match (wins(home), wins(away), home.winner, away.winner) {
                (Some(h), Some(a), Some(true), _) if h > 0 => Some(SeriesState { home_wins: h - 1, away_wins: a }),
                (Some(h), Some(a), _, Some(true)) if a > 0 => Some(SeriesState { home_wins: h, away_wins: a - 1 }),
                _ => None,
            }
        }
        _ => None,
    };

    let pregame_home_wp = doc
        .predictor
        .as_ref()
        .and_then(|p| p.home_team.as_ref())
        .and_then(|h| h.game_projection.as_f64())
        .map(|pct| pct / 100.0)
        .filter(|p| (0.0..=1.0).contains(p));

    let crew = doc
        .game_info
        .map(|g| g.officials)
        .unwrap_or_default()
        .iter()
        .filter(|o| !canonicalize_referee_name(&o.display_name).is_empty())
        .map(|o| aliases.resolve(&o.display_name))
        .collect();

    let mut plays = Vec::with_capacity(doc.plays.len());
    for p in &doc.plays {
        let play_id = p.id.text();
        let sequence = p
            .sequence_number
            .as_f64()
            .filter(|s| *s >= 0.0 && s.fract() == 0.0)
            .ok_or_else(|| IngestError::Schema(format!("{game_id}: play {play_id} has a bad sequence number")))?
            as u64;
        let clock = parse_clock(&p.clock.display_value).ok_or_else(|| {
            IngestError::Schema(format!("{game_id}: play {play_id} has a bad clock"))
        })?;
        let kind = p.kind.as_ref().map(|k| k.text.as_str());
        let description = match kind {
            Some(k) if !k.is_empty() && !p.text.is_empty() => format!("{k} - {}", p.text),
            Some(k) if !k.is_empty() => k.to_string(),
            _ => p.text.clone(),
        };
        plays.push(RawPlay {
            play_id,
            sequence,
            period: p.period.number,
            clock_seconds_remaining: clock,
            is_foul: is_foul_play(kind, &p.text),
            charged_team: p.team.as_ref().and_then(|t| team_by_id.get(&t.id.text()).cloned()),
            description,
        });
    }

    Ok(ParsedSummary {
        header: GameHeader {
            game_id,
            season: season_label_for_year(doc.header.season.year),
            season_type,
            date: comp.date.clone(),
            home_team: TeamId::new(home.team.abbreviation.trim()),
            away_team: TeamId::new(away.team.abbreviation.trim()),
            series_state,
            pregame_home_wp,
        },
        crew,
        plays,
        embedded_wp: doc
            .winprobability
            .iter()
            .map(|w| RawWpSample { play_id: w.play_id.text(), home_wp: w.home_win_percentage })
            .collect(),
    })
}

/// Parses a stored win-probability document.
pub fn parse_wp_samples(bytes: &[u8]) -> Result<Vec<RawWpSample>, IngestError> {
    let items = match decode::<WpFeedDoc>(bytes)? {
        WpFeedDoc::Bare(v) | WpFeedDoc::Wrapped { winprobability: v } => v,
    };
    Ok(items
        .into_iter()
        .map(|w| RawWpSample { play_id: w.play_id.text(), home_wp: w.home_win_percentage })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Alignment {
    pub events: Vec<FoulEvent>,
    pub quarantined: Vec<QuarantineEntry>,
    /// Fouls whose pre value came from the game-start prior.
    pub used_prior: usize,
}

/// Attaches pre/post home win probabilities to each foul.
///
/// Pre is the sample of the last sampled play strictly before the foul, or
/// `prior` when there is none. Post is the foul's own sample, else the next
/// sampled play. Fouls with no post value are quarantined.
pub fn align_foul_wp(game_id: &str, plays: &[RawPlay], samples: &[RawWpSample], prior: f64) -> Alignment {
    let mut out = Alignment::default();
    let mut by_play: BTreeMap<&str, f64> = BTreeMap::new();
    for s in samples {
        if !(0.0..=1.0).contains(&s.home_wp) {
            out.quarantined.push(QuarantineEntry {
                game_id: game_id.to_string(),
                play_id: Some(s.play_id.clone()),
                reason: QuarantineReason::WpOutOfRange,
                detail: format!("home_wp {}", s.home_wp),
            });
            continue;
        }
        by_play.entry(s.play_id.as_str()).or_insert(s.home_wp);
    }

    let mut order: Vec<&RawPlay> = plays.iter().collect();
    order.sort_by_key(|p| p.sequence);
    let sample_at: Vec<Option<f64>> = order.iter().map(|p| by_play.get(p.play_id.as_str()).copied()).collect();

    // next_sample[i] = first sample at index >= i.
    let mut next_sample = vec![None; order.len() + 1];
    for i in (0..order.len()).rev() {
        next_sample[i] = sample_at[i].or(next_sample[i + 1]);
    }

    let mut last_before: Option<f64> = None;
    for (i, play) in order.iter().enumerate() {
        if play.is_foul {
            match next_sample[i] {
                Some(post) => {
                    let pre = last_before.unwrap_or_else(|| {
                        out.used_prior += 1;
                        info!("{game_id}: play {} uses the game-start prior {prior}", play.play_id);
                        prior
                    });
                    out.events.push(FoulEvent {
                        event_id: u32::try_from(play.sequence).unwrap_or(u32::MAX),
                        period: play.period,
                        clock_seconds_remaining: play.clock_seconds_remaining,
                        charged_team: play.charged_team.clone(),
                        pre_wp: WinProb::raw(pre),
                        post_wp: WinProb::raw(post),
                        description: play.description.clone(),
                    });
                }
                None => out.quarantined.push(QuarantineEntry {
                    game_id: game_id.to_string(),
                    play_id: Some(play.play_id.clone()),
                    reason: QuarantineReason::NoPostSample,
                    detail: format!("sequence {}", play.sequence),
                }),
            }
        }
        if let Some(w) = sample_at[i] {
            last_before = Some(w);
        }
    }
    out
}

/// Outcome of ingesting one summary (plus optional separate wp document).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestedGame {
    pub game: Option<GameRecord>,
    pub quarantined: Vec<QuarantineEntry>,
    pub no_crew: bool,
    pub fouls_seen: usize,
}

/// Parses, aligns and validates one game. Never panics on bad input; every
/// problem ends up in the quarantine list.
pub fn ingest_game(
    fallback_id: &str,
    summary: &[u8],
    wp: Option<&[u8]>,
    aliases: &AliasTable,
    default_prior: f64,
) -> IngestedGame {
    let mut out = IngestedGame::default();
    let quarantine = |reason, detail: String| QuarantineEntry {
        game_id: fallback_id.to_string(),
        play_id: None,
        reason,
        detail,
    };
    let parsed = match parse_game_summary(summary, aliases) {
        Ok(p) => p,
        Err(e) => {
            let reason = match &e {
                IngestError::Schema(m) if m.contains("unsupported season type") => {
                    QuarantineReason::UnsupportedSeasonType
                }
                _ => QuarantineReason::ParseError,
            };
            out.quarantined.push(quarantine(reason, e.to_string()));
            return out;
        }
    };
    let game_id = parsed.header.game_id.clone();
    out.fouls_seen = parsed.plays.iter().filter(|p| p.is_foul).count();

    let samples = match wp {
        Some(bytes) => match parse_wp_samples(bytes) {
            Ok(s) => s,
            Err(e) => {
                out.quarantined.push(QuarantineEntry {
                    game_id,
                    play_id: None,
                    reason: QuarantineReason::ParseError,
                    detail: format!("win-probability document: {e}"),
                });
                return out;
            }
        },
        None => parsed.embedded_wp.clone(),
    };
    if samples.is_empty() && out.fouls_seen > 0 {
        out.quarantined.push(QuarantineEntry {
            game_id,
            play_id: None,
            reason: QuarantineReason::MissingWpFeed,
            detail: format!("{} fouls without any samples", out.fouls_seen),
        });
        return out;
    }

    let prior = parsed.header.pregame_home_wp.unwrap_or(default_prior);
    let aligned = align_foul_wp(&game_id, &parsed.plays, &samples, prior);
    out.quarantined.extend(aligned.quarantined);

    let mut game = GameRecord {
        game_id: game_id.clone(),
        season: parsed.header.season,
        season_type: parsed.header.season_type,
        home_team: parsed.header.home_team,
        away_team: parsed.header.away_team,
        crew: parsed.crew,
        events: aligned.events,
        series_state: parsed.header.series_state,
    };
    game.sort_events();
    let violations = validate_game(&game);
    if !violations.is_empty() {
        let detail = violations
            .iter()
            .map(|v| format!("{}: {}", v.field, v.rule))
            .collect::<Vec<_>>()
            .join("; ");
        out.quarantined.push(QuarantineEntry {
            game_id,
            play_id: None,
            reason: QuarantineReason::InvalidGame,
            detail,
        });
        return out;
    }
    out.no_crew = !game.has_crew();
    out.game = Some(game);
    out
}
