//! Run configuration: defaults, then a flat TOML file (`--config` or
//! `RIMKIT_CONFIG`), then command-line overrides.

use std::path::{Path, PathBuf};

use rimkit_core::aggregate::{POSTSEASON_MIN_GAMES, REGULAR_MIN_GAMES};
use rimkit_core::inference::{Correction, DofMode, FitOptions, TargetForm};
use rimkit_core::metrics::FoulFilter;
use rimkit_core::outliers::MIN_PAIR_GAMES;
use rimkit_core::SeasonType;
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "RIMKIT_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// CSV of `variant,canonical` referee names.
    pub aliases: Option<PathBuf>,
    /// Empty keeps every season.
    pub seasons: Vec<String>,
    pub season_type: Option<SeasonType>,
    pub min_games_regular: u32,
    pub min_games_postseason: u32,
    pub min_pair_games: u32,
    pub correction: Correction,
    pub dof_mode: DofMode,
    pub level: f64,
    pub seed: u64,
    pub network: bool,
    pub rate_limit_per_minute: u32,
    pub summary_endpoint: Option<String>,
    pub wp_endpoint: Option<String>,
    pub game_start_prior: f64,
    pub foul_include: Vec<String>,
    pub foul_exclude: Vec<String>,
    /// Rows per side in the distribution side tables.
    pub side_table_k: usize,
    /// Rows per side in the bottom/mean/top table.
    pub top_bottom_k: usize,
    pub outlier_k: usize,
    pub team_side_k: usize,
    pub pair_targets_k: usize,
    pub target_form: TargetForm,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            cache: None,
            out: None,
            aliases: None,
            seasons: Vec::new(),
            season_type: None,
            min_games_regular: REGULAR_MIN_GAMES,
            min_games_postseason: POSTSEASON_MIN_GAMES,
            min_pair_games: MIN_PAIR_GAMES,
            correction: Correction::Cr1,
            dof_mode: DofMode::Residual,
            level: 0.95,
            seed: 2024,
            network: false,
            rate_limit_per_minute: 30,
            summary_endpoint: None,
            wp_endpoint: None,
            game_start_prior: 0.5,
            foul_include: Vec::new(),
            foul_exclude: Vec::new(),
            side_table_k: 10,
            top_bottom_k: 7,
            outlier_k: 10,
            team_side_k: 6,
            pair_targets_k: 5,
            target_form: TargetForm::Paired,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))
    }

    /// Explicit path, else `RIMKIT_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> anyhow::Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions { correction: self.correction, dof_mode: self.dof_mode, level: self.level }
    }

    pub fn foul_filter(&self) -> FoulFilter {
        FoulFilter { include: self.foul_include.clone(), exclude: self.foul_exclude.clone() }
    }

    pub fn min_games(&self, season_type: SeasonType) -> u32 {
        match season_type {
            SeasonType::Regular => self.min_games_regular,
            SeasonType::Postseason => self.min_games_postseason,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.min_games_regular >= 1 && self.min_games_postseason >= 1, "min_games must be >= 1");
        anyhow::ensure!(self.level > 0.0 && self.level < 1.0, "level must be in (0, 1)");
        anyhow::ensure!((0.0..=1.0).contains(&self.game_start_prior), "game_start_prior must be in [0, 1]");
        anyhow::ensure!(self.side_table_k >= 1 && self.top_bottom_k >= 1 && self.outlier_k >= 1, "table sizes must be >= 1");
        Ok(())
    }
}
