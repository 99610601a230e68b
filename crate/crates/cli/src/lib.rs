//! Command-line front end for spectral density estimation: series
//! ingestion and preprocessing, single-run estimation with serial or
//! tempered chains, the autoregressive simulation study, and the bundled
//! solar activity analysis.

pub mod config;
pub mod io;
pub mod run;
pub mod study;
