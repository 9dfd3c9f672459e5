//! Experiment runner behind the `modcorr` binary.

pub mod config;
pub mod output;
pub mod run;
