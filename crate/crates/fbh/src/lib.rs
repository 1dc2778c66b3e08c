//! File formats, verification suites and the `fbh` command line on top of
//! `fbh-core`.

pub mod cli;
pub mod io;
pub mod parallel;
pub mod report;
pub mod suites;

pub use cli::{run, run_with};
pub use report::{Outcome, RunReport, Status};
