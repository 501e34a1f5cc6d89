//! Design-matrix assembly for the fixed-effects specifications.
//!
//! Column order is fixed: intercept, home indicator, one block of dummies
//! per factor family (in [`FactorFamily`] order, levels ascending with the
//! reference level left out), then target columns.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::linalg::Matrix;
use super::InferenceError;
use crate::model::{RefereeName, SeriesStateKey, Side, TeamGameRow, TeamId};
use crate::outliers::PanelRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorFamily {
    Referee,
    Team,
    Opponent,
    HomeTeam,
    AwayTeam,
    Season,
    SeriesState,
}

impl FactorFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            FactorFamily::Referee => "referee",
            FactorFamily::Team => "team",
            FactorFamily::Opponent => "opponent",
            FactorFamily::HomeTeam => "home_team",
            FactorFamily::AwayTeam => "away_team",
            FactorFamily::Season => "season",
            FactorFamily::SeriesState => "series",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    SignedDisparity,
    SignedTeamRim,
    AbsDisparity,
    GameRim,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::SignedDisparity => "signed_disparity",
            Outcome::SignedTeamRim => "signed_team_rim",
            Outcome::AbsDisparity => "abs_disparity",
            Outcome::GameRim => "game_rim",
        }
    }
}

/// How a team-side target enters the design.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetForm {
    /// 1 on the team's rows on the given side, 0 elsewhere.
    Indicator,
    /// As `Indicator`, plus -1 on the opponent's mirrored row of the same
    /// games, so the column is antisymmetric within each game like the
    /// signed outcomes are.
    #[default]
    Paired,
}

impl TargetForm {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetForm::Indicator => "indicator",
            TargetForm::Paired => "paired",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    TeamSide {
        team: TeamId,
        side: Side,
        form: TargetForm,
    },
    RefTeam {
        referee: RefereeName,
        team: TeamId,
    },
}

impl Target {
    pub fn name(&self) -> String {
        match self {
            Target::TeamSide { team, side, .. } => format!("team_side[{team}@{}]", side.as_str()),
            Target::RefTeam { referee, team } => format!("ref_team[{referee}|{team}]"),
        }
    }

    fn value<R: DesignRow + ?Sized>(&self, row: &R) -> f64 {
        match self {
            Target::TeamSide { team, side, form } => {
                let on_side = |home: bool| match side {
                    Side::Home => home,
                    Side::Away => !home,
                };
                let Some(is_home) = row.is_home() else {
                    return 0.0;
                };
                if row.team() == Some(team) && on_side(is_home) {
                    1.0
                } else if *form == TargetForm::Paired
                    && row.opponent() == Some(team)
                    && on_side(!is_home)
                {
                    -1.0
                } else {
                    0.0
                }
            }
            Target::RefTeam { referee, team } => {
                if row.referee() == Some(referee) && row.team() == Some(team) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// An observation that can be placed in a design matrix.
pub trait DesignRow {
    fn outcome(&self, outcome: Outcome) -> Option<f64>;
    fn cluster(&self) -> &str;
    fn is_home(&self) -> Option<bool>;
    fn level(&self, family: FactorFamily) -> Option<String>;
    fn team(&self) -> Option<&TeamId> {
        None
    }
    fn opponent(&self) -> Option<&TeamId> {
        None
    }
    fn referee(&self) -> Option<&RefereeName> {
        None
    }
}

impl DesignRow for TeamGameRow {
    fn outcome(&self, outcome: Outcome) -> Option<f64> {
        match outcome {
            Outcome::SignedDisparity => Some(f64::from(self.signed_disparity)),
            Outcome::SignedTeamRim => Some(self.signed_team_rim),
            Outcome::AbsDisparity => Some(f64::from(self.signed_disparity.unsigned_abs())),
            Outcome::GameRim => Some(self.game_rim),
        }
    }

    fn cluster(&self) -> &str {
        &self.game_id
    }

    fn is_home(&self) -> Option<bool> {
        Some(self.is_home)
    }

    fn level(&self, family: FactorFamily) -> Option<String> {
        let (home, away) = if self.is_home {
            (&self.team, &self.opponent)
        } else {
            (&self.opponent, &self.team)
        };
        match family {
            FactorFamily::Team => Some(self.team.to_string()),
            FactorFamily::Opponent => Some(self.opponent.to_string()),
            FactorFamily::HomeTeam => Some(home.to_string()),
            FactorFamily::AwayTeam => Some(away.to_string()),
            FactorFamily::Season => Some(self.season.clone()),
            FactorFamily::SeriesState => self.series_state_normalized.map(|k| k.to_string()),
            FactorFamily::Referee => None,
        }
    }

    fn team(&self) -> Option<&TeamId> {
        Some(&self.team)
    }

    fn opponent(&self) -> Option<&TeamId> {
        Some(&self.opponent)
    }
}

impl DesignRow for PanelRow {
    fn outcome(&self, outcome: Outcome) -> Option<f64> {
        match outcome {
            Outcome::SignedDisparity => Some(self.signed_disparity),
            Outcome::SignedTeamRim => Some(self.signed_team_rim),
            _ => None,
        }
    }

    fn cluster(&self) -> &str {
        &self.game_id
    }

    fn is_home(&self) -> Option<bool> {
        Some(self.is_home)
    }

    fn level(&self, family: FactorFamily) -> Option<String> {
        match family {
            FactorFamily::Referee => Some(self.referee.to_string()),
            FactorFamily::Team => Some(self.team.to_string()),
            FactorFamily::Opponent => Some(self.opponent.to_string()),
            FactorFamily::Season => Some(self.season.clone()),
            _ => None,
        }
    }

    fn team(&self) -> Option<&TeamId> {
        Some(&self.team)
    }

    fn opponent(&self) -> Option<&TeamId> {
        Some(&self.opponent)
    }

    fn referee(&self) -> Option<&RefereeName> {
        Some(&self.referee)
    }
}

/// One row per game, for game-level outcomes such as absolute disparity or
/// game RIM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameLevelRow {
    pub game_id: String,
    pub season: String,
    pub home_team: TeamId,
    pub away_team: TeamId,
    pub series_key: Option<SeriesStateKey>,
    pub abs_disparity: f64,
    pub game_rim: f64,
}

impl DesignRow for GameLevelRow {
    fn outcome(&self, outcome: Outcome) -> Option<f64> {
        match outcome {
            Outcome::AbsDisparity => Some(self.abs_disparity),
            Outcome::GameRim => Some(self.game_rim),
            _ => None,
        }
    }

    fn cluster(&self) -> &str {
        &self.game_id
    }

    fn is_home(&self) -> Option<bool> {
        None
    }

    fn level(&self, family: FactorFamily) -> Option<String> {
        match family {
            FactorFamily::HomeTeam => Some(self.home_team.to_string()),
            FactorFamily::AwayTeam => Some(self.away_team.to_string()),
            FactorFamily::Season => Some(self.season.clone()),
            FactorFamily::SeriesState => self.series_key.map(|k| k.to_string()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub outcome: Outcome,
    pub intercept: bool,
    pub home: bool,
    pub families: Vec<FactorFamily>,
    /// Reference level overrides. Default: `0--0` for series state, the
    /// smallest level otherwise.
    #[serde(default)]
    pub references: BTreeMap<FactorFamily, String>,
    #[serde(default)]
    pub targets: Vec<Target>,
}

impl DesignSpec {
    pub fn new(outcome: Outcome, home: bool, families: &[FactorFamily]) -> Self {
        let mut families = families.to_vec();
        families.sort();
        families.dedup();
        Self {
            outcome,
            intercept: true,
            home,
            families,
            references: BTreeMap::new(),
            targets: Vec::new(),
        }
    }

    pub fn with_targets(mut self, targets: Vec<Target>) -> Self {
        self.targets = targets;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub outcome: Outcome,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub clusters: Vec<String>,
    pub columns: Vec<String>,
    /// Column index of each target, in spec order.
    pub target_columns: Vec<usize>,
    /// Reference level used per family.
    pub references: BTreeMap<FactorFamily, String>,
    /// Rows left out for a missing outcome, home flag or factor level.
    pub excluded_rows: usize,
    /// Outcome is constant over the used rows.
    pub degenerate: bool,
}

pub fn build_design<R: DesignRow>(rows: &[R], spec: &DesignSpec) -> Result<Design, InferenceError> {
    let mut families = spec.families.clone();
    families.sort();
    families.dedup();

    let mut used: Vec<(&R, f64, Vec<String>)> = Vec::with_capacity(rows.len());
    let mut excluded = 0;
    'rows: for r in rows {
        let Some(y) = r.outcome(spec.outcome) else {
            excluded += 1;
            continue;
        };
        if spec.home && r.is_home().is_none() {
            excluded += 1;
            continue;
        }
        let mut levels = Vec::with_capacity(families.len());
        for f in &families {
            match r.level(*f) {
                Some(l) => levels.push(l),
                None => {
                    excluded += 1;
                    continue 'rows;
                }
            }
        }
        used.push((r, y, levels));
    }
    if used.is_empty() {
        return Err(InferenceError::EmptyDesign);
    }
    let n = used.len();

    let mut columns: Vec<String> = Vec::new();
    let mut data: Vec<Vec<f64>> = Vec::new();
    if spec.intercept {
        columns.push("intercept".into());
        data.push(vec![1.0; n]);
    }
    if spec.home {
        columns.push("home".into());
        data.push(
            used.iter()
                .map(|(r, _, _)| if r.is_home() == Some(true) { 1.0 } else { 0.0 })
                .collect(),
        );
    }
    let mut references = BTreeMap::new();
    for (fi, f) in families.iter().enumerate() {
        let levels: BTreeSet<&str> = used.iter().map(|(_, _, l)| l[fi].as_str()).collect();
        let start = SeriesStateKey::START.to_string();
        let reference = match spec.references.get(f) {
            Some(r) if levels.contains(r.as_str()) => r.clone(),
            _ if *f == FactorFamily::SeriesState && levels.contains(start.as_str()) => start,
            _ => levels.iter().next().map(|s| s.to_string()).unwrap_or_default(),
        };
        for level in &levels {
            if *level == reference {
                continue;
            }
            columns.push(format!("{}[{level}]", f.as_str()));
            data.push(
                used.iter()
                    .map(|(_, _, l)| if l[fi] == *level { 1.0 } else { 0.0 })
                    .collect(),
            );
        }
        references.insert(*f, reference);
    }
    let mut target_columns = Vec::new();
    for t in &spec.targets {
        let col: Vec<f64> = used.iter().map(|(r, _, _)| t.value(*r)).collect();
        if col.iter().all(|v| *v == 0.0) {
            return Err(InferenceError::EmptyTarget(t.name()));
        }
        target_columns.push(columns.len());
        columns.push(t.name());
        data.push(col);
    }

    let y: Vec<f64> = used.iter().map(|(_, y, _)| *y).collect();
    let degenerate = y.iter().all(|v| *v == y[0]);
    Ok(Design {
        outcome: spec.outcome,
        x: Matrix::from_columns(n, data),
        clusters: used.iter().map(|(r, _, _)| r.cluster().to_string()).collect(),
        y,
        columns,
        target_columns,
        references,
        excluded_rows: excluded,
        degenerate,
    })
}
