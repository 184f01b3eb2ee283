//! Batch front end for the resonance toolkit.

pub mod config;
pub mod output;
pub mod run;
