//! Synthetic program evaluation benchmark toolkit.
//!
//! Generates short programs from a restricted Python-like subset, evaluates
//! them with an independent interpreter, and trains a character-level deep
//! LSTM to predict their printed output under four curriculum strategies.

pub mod cli;
pub mod curriculum;
pub mod dataset;
pub mod encode;
pub mod interp;
pub mod lstm;
pub mod progsynth;
pub mod stats;
pub mod taskgen;
pub mod train;

pub use progsynth::{GenConfig, Sample, Split};
pub use taskgen::Task;
