//! Shared plumbing for the analysis commands: select games, compute metrics.

use rimkit_core::metrics::compute_game_metrics;
use rimkit_core::{GameMetrics, GameRecord};

use crate::config::RunConfig;

/// Games matching the configured seasons and season type.
pub fn select_games(games: Vec<GameRecord>, cfg: &RunConfig) -> Vec<GameRecord> {
    games
        .into_iter()
        .filter(|g| cfg.seasons.is_empty() || cfg.seasons.iter().any(|s| s == &g.season))
        .filter(|g| cfg.season_type.is_none_or(|st| st == g.season_type))
        .collect()
}

/// Per-game metrics in game-id order.
pub fn compute_metrics(games: &[GameRecord], cfg: &RunConfig) -> Vec<GameMetrics> {
    let filter = cfg.foul_filter();
    let mut out: Vec<GameMetrics> = games.iter().map(|g| compute_game_metrics(g, &filter)).collect();
    out.sort_by(|a, b| a.game_id.cmp(&b.game_id));
    out
}

pub fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| s / n as f64)
}
