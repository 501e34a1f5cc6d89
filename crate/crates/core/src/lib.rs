//! Core computations for the Ref Impact Metric (RIM) family of
//! leverage-weighted officiating statistics.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is pure:
//! feed parsing, dataset files and the command-line surface live in the
//! `rimkit` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod aggregate;
pub mod inference;
pub mod metrics;
pub mod model;
pub mod outliers;
pub mod stats;
pub mod synth;

mod math;

pub use metrics::{GameMetrics, SwingPerCall};
pub use model::{
    FoulEvent, GameRecord, PeriodBucket, RefereeName, SeasonType, SeriesState, SeriesStateKey,
    Side, TeamGameRow, TeamId, WinProb,
};
