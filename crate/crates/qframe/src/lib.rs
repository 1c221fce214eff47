//! Command-line front end and file formats for `qframe-core`: initial-state
//! specs, seeded random states, parallel sweeps and CSV/JSON reports.

pub mod cli;
pub mod commands;
pub mod error;
pub mod report;
pub mod state;
pub mod sweep;

pub use error::{AppError, AppResult};
