//! The three fitted specifications: team-side effects, postseason series
//! state effects, and residual referee-team effects.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::covariance::{cluster_index, sandwich, Correction};
use super::design::{
    build_design, Design, DesignSpec, FactorFamily, GameLevelRow, Outcome, Target, TargetForm,
};
use super::linalg::Matrix;
use super::ols::fit_ols;
use super::robustness::robustness_rho;
use super::tdist::student_t_quantile;
use super::InferenceError;
use crate::math::sqrt;
use crate::metrics::GameMetrics;
use crate::model::{RefereeName, SeasonType, SeriesStateKey, Side, TeamGameRow, TeamId};
use crate::outliers::RefTeamPanel;

/// Degrees of freedom used for intervals and robustness values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DofMode {
    /// `n - rank(X)`.
    #[default]
    Residual,
    /// `G - 1`.
    Clusters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub correction: Correction,
    pub dof_mode: DofMode,
    pub level: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            correction: Correction::Cr1,
            dof_mode: DofMode::Residual,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    /// Undefined when the standard error is zero.
    pub t: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub rho: Option<f64>,
    pub is_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub outcome: Outcome,
    /// Kept columns in design order.
    pub coefficients: Vec<CoefficientRow>,
    /// Columns removed by the rank filter.
    pub dropped: Vec<String>,
    pub vcov: Matrix,
    pub n: usize,
    pub clusters: usize,
    pub rank: usize,
    pub dof: f64,
    pub dof_mode: DofMode,
    pub correction: Correction,
    pub level: f64,
    pub t_crit: f64,
    pub degenerate: bool,
    pub excluded_rows: usize,
    pub references: BTreeMap<FactorFamily, String>,
    pub fitted: Vec<f64>,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<&CoefficientRow> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn targets(&self) -> impl Iterator<Item = &CoefficientRow> {
        self.coefficients.iter().filter(|c| c.is_target)
    }
}

pub fn fit_design(design: &Design, opts: &FitOptions) -> Result<FitResult, InferenceError> {
    let fit = fit_ols(&design.x, &design.y)?;
    let (cluster_of, g) = cluster_index(&design.clusters);
    let vcov = sandwich(
        fit.qr(),
        &design.x,
        &fit.residuals,
        &cluster_of,
        g,
        opts.correction,
    )?;
    let dof = match opts.dof_mode {
        DofMode::Residual => fit.dof as f64,
        DofMode::Clusters => g as f64 - 1.0,
    };
    if dof < 1.0 {
        return Err(InferenceError::DofTooSmall(dof));
    }
    let t_crit = student_t_quantile(1.0 - (1.0 - opts.level) / 2.0, dof);
    let targets: BTreeSet<usize> = design.target_columns.iter().copied().collect();
    let mut coefficients = Vec::with_capacity(fit.rank);
    for (i, &j) in fit.kept().iter().enumerate() {
        let estimate = fit.coefficients[j].expect("kept column has a coefficient");
        let se = sqrt(vcov.get(i, i).max(0.0));
        let t = (se > 0.0).then(|| estimate / se);
        coefficients.push(CoefficientRow {
            name: design.columns[j].clone(),
            estimate,
            se,
            t,
            ci_low: estimate - t_crit * se,
            ci_high: estimate + t_crit * se,
            rho: t.and_then(|t| robustness_rho(t, dof).ok()),
            is_target: targets.contains(&j),
        });
    }
    Ok(FitResult {
        outcome: design.outcome,
        coefficients,
        dropped: fit.dropped().iter().map(|&j| design.columns[j].clone()).collect(),
        vcov,
        n: design.y.len(),
        clusters: g,
        rank: fit.rank,
        dof,
        dof_mode: opts.dof_mode,
        correction: opts.correction,
        level: opts.level,
        t_crit,
        degenerate: design.degenerate,
        excluded_rows: design.excluded_rows,
        references: design.references.clone(),
        fitted: fit.fitted,
    })
}

/// Regular-season team-side effects: baseline home, team, opponent and
/// season terms plus one column per (team, side) target.
pub fn team_side_effects(
    rows: &[TeamGameRow],
    targets: &[(TeamId, Side)],
    form: TargetForm,
    outcome: Outcome,
    opts: &FitOptions,
) -> Result<FitResult, InferenceError> {
    let regular: Vec<TeamGameRow> = rows
        .iter()
        .filter(|r| r.season_type == SeasonType::Regular)
        .cloned()
        .collect();
    let spec = DesignSpec::new(
        outcome,
        true,
        &[FactorFamily::Team, FactorFamily::Opponent, FactorFamily::Season],
    )
    .with_targets(
        targets
            .iter()
            .map(|(team, side)| Target::TeamSide {
                team: team.clone(),
                side: *side,
                form,
            })
            .collect(),
    );
    fit_design(&build_design(&regular, &spec)?, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStateFit {
    pub fit: FitResult,
    /// Keys with at least one game (reference included).
    pub keys_present: Vec<SeriesStateKey>,
    /// Keys with no games; no coefficient is reported for them.
    pub keys_omitted: Vec<SeriesStateKey>,
    pub games_without_state: usize,
}

/// Postseason series-state effects relative to `0--0`, one row per game,
/// controlling for home team, away team and season. Each game is its own
/// cluster.
pub fn series_state_effects(
    games: &[GameMetrics],
    outcome: Outcome,
    opts: &FitOptions,
) -> Result<SeriesStateFit, InferenceError> {
    let mut rows: Vec<GameLevelRow> = games
        .iter()
        .filter(|g| g.season_type == SeasonType::Postseason)
        .map(|g| GameLevelRow {
            game_id: g.game_id.clone(),
            season: g.season.clone(),
            home_team: g.home.team.clone(),
            away_team: g.away.team.clone(),
            series_key: g.series_key,
            abs_disparity: f64::from(g.abs_disparity()),
            game_rim: g.rim,
        })
        .collect();
    rows.sort_by(|a, b| a.game_id.cmp(&b.game_id));
    let games_without_state = rows.iter().filter(|r| r.series_key.is_none()).count();
    let present: BTreeSet<SeriesStateKey> = rows.iter().filter_map(|r| r.series_key).collect();
    let spec = DesignSpec::new(
        outcome,
        false,
        &[
            FactorFamily::HomeTeam,
            FactorFamily::AwayTeam,
            FactorFamily::Season,
            FactorFamily::SeriesState,
        ],
    );
    let fit = fit_design(&build_design(&rows, &spec)?, opts)?;
    Ok(SeriesStateFit {
        fit,
        keys_omitted: SeriesStateKey::all()
            .into_iter()
            .filter(|k| !present.contains(k))
            .collect(),
        keys_present: present.into_iter().collect(),
        games_without_state,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    pub fit: FitResult,
    /// Requested pairs below the minimum, with their game counts.
    pub excluded: Vec<(RefereeName, TeamId, u32)>,
}

/// Residual referee-team effects on the referee-team-game panel with
/// additive referee, team, opponent and season controls, clustered by game.
pub fn ref_team_residual_effects(
    panel: &RefTeamPanel,
    pairs: &[(RefereeName, TeamId)],
    outcome: Outcome,
    min_pair_games: u32,
    opts: &FitOptions,
) -> Result<PairFit, InferenceError> {
    let mut counts: BTreeMap<(&RefereeName, &TeamId), u32> = BTreeMap::new();
    for r in &panel.rows {
        *counts.entry((&r.referee, &r.team)).or_default() += 1;
    }
    let mut targets = Vec::new();
    let mut excluded = Vec::new();
    for (referee, team) in pairs {
        let games = counts.get(&(referee, team)).copied().unwrap_or(0);
        if games >= min_pair_games.max(1) {
            targets.push(Target::RefTeam {
                referee: referee.clone(),
                team: team.clone(),
            });
        } else {
            excluded.push((referee.clone(), team.clone(), games));
        }
    }
    let spec = DesignSpec::new(
        outcome,
        false,
        &[
            FactorFamily::Referee,
            FactorFamily::Team,
            FactorFamily::Opponent,
            FactorFamily::Season,
        ],
    )
    .with_targets(targets);
    let fit = fit_design(&build_design(&panel.rows, &spec)?, opts)?;
    Ok(PairFit { fit, excluded })
}
