//! Fixed-effects least squares with game-clustered covariance, Student-t
//! intervals and the equal-strength omitted-variable robustness value.

use alloc::string::String;

use thiserror::Error;

mod covariance;
mod design;
mod fits;
pub mod linalg;
mod ols;
mod robustness;
pub mod tdist;

pub use covariance::{cluster_covariance, cr1_factor, Correction};
pub use design::{
    build_design, Design, DesignRow, DesignSpec, FactorFamily, GameLevelRow, Outcome, Target,
    TargetForm,
};
pub use fits::{
    fit_design, ref_team_residual_effects, series_state_effects, team_side_effects,
    CoefficientRow, DofMode, FitOptions, FitResult, PairFit, SeriesStateFit,
};
pub use linalg::{Matrix, RankFilteredQr};
pub use ols::{fit_ols, OlsFit};
pub use robustness::robustness_rho;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("no usable rows for the design")]
    EmptyDesign,
    #[error("design has rank 0")]
    RankZero,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
    #[error("clustered covariance needs at least two clusters, found {0}")]
    SingleCluster(usize),
    #[error("X'X is singular over the supplied columns; run the rank filter first (dropped {0} columns)")]
    Singular(usize),
    #[error("residual degrees of freedom must be >= 1, found {0}")]
    DofTooSmall(f64),
    #[error("target `{0}` has no rows")]
    EmptyTarget(String),
}
