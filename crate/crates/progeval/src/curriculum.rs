//! Data-difficulty scheduling strategies and the per-sample difficulty draw.
//!
//! `baseline` always trains at the target difficulty; `naive` climbs one
//! length at a time (then nesting) whenever validation stalls; `mix` draws
//! uniformly over the whole difficulty grid; `combined` mixes per-sample
//! between the naive and mix draws.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Baseline,
    Naive,
    Mix,
    Combined,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Baseline,
        Strategy::Naive,
        Strategy::Mix,
        Strategy::Combined,
    ];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Baseline => "baseline",
            Strategy::Naive => "naive",
            Strategy::Mix => "mix",
            Strategy::Combined => "combined",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Strategy::Baseline),
            "naive" => Ok(Strategy::Naive),
            "mix" => Ok(Strategy::Mix),
            "combined" => Ok(Strategy::Combined),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumConfig {
    /// Target length (a).
    pub target_length: u32,
    /// Target nesting (b).
    pub target_nesting: u32,
    pub strategy: Strategy,
    /// Probability that a combined-strategy sample comes from the mix draw.
    pub combined_mix_prob: f64,
    /// Validation evaluations without improvement before advancing.
    pub stall_patience: u32,
    /// Accuracy improvement below this counts as no improvement.
    pub stall_min_delta: f64,
}

pub const DEFAULT_COMBINED_MIX_PROB: f64 = 0.5;
pub const DEFAULT_STALL_PATIENCE: u32 = 3;
pub const DEFAULT_STALL_MIN_DELTA: f64 = 0.001;

impl CurriculumConfig {
    pub fn new(target_length: u32, target_nesting: u32, strategy: Strategy) -> Self {
        assert!(target_length >= 1 && target_nesting >= 1);
        CurriculumConfig {
            target_length,
            target_nesting,
            strategy,
            combined_mix_prob: DEFAULT_COMBINED_MIX_PROB,
            stall_patience: DEFAULT_STALL_PATIENCE,
            stall_min_delta: DEFAULT_STALL_MIN_DELTA,
        }
    }
}

/// Current difficulty plus stall bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub current_length: u32,
    pub current_nesting: u32,
    pub best_val_accuracy: f64,
    pub evals_since_improvement: u32,
    pub reached_target: bool,
}

impl CurriculumState {
    pub fn new(config: &CurriculumConfig) -> Self {
        // baseline and mix sit at the target difficulty from the start;
        // naive and combined climb from (1, 1).
        let (length, nesting) = match config.strategy {
            Strategy::Baseline | Strategy::Mix => (config.target_length, config.target_nesting),
            Strategy::Naive | Strategy::Combined => (1, 1),
        };
        CurriculumState {
            current_length: length,
            current_nesting: nesting,
            best_val_accuracy: f64::NEG_INFINITY,
            evals_since_improvement: 0,
            reached_target: length == config.target_length && nesting == config.target_nesting,
        }
    }
}

/// Difficulty advancement produced by [`observe_validation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Advancement {
    pub from: (u32, u32),
    pub to: (u32, u32),
}

/// Draws the (length, nesting) to generate the next sample at.
pub fn draw_difficulty<R: Rng>(
    config: &CurriculumConfig,
    state: &CurriculumState,
    rng: &mut R,
) -> (u32, u32) {
    match config.strategy {
        Strategy::Baseline => (config.target_length, config.target_nesting),
        Strategy::Naive => (state.current_length, state.current_nesting),
        Strategy::Mix => mix_draw(config, rng),
        Strategy::Combined => {
            // The endpoints skip the coin so that prob 0/1 draw the exact
            // same stream as the pure strategies.
            let use_mix = if config.combined_mix_prob >= 1.0 {
                true
            } else if config.combined_mix_prob <= 0.0 {
                false
            } else {
                rng.gen::<f64>() < config.combined_mix_prob
            };
            if use_mix {
                mix_draw(config, rng)
            } else {
                (state.current_length, state.current_nesting)
            }
        }
    }
}

fn mix_draw<R: Rng>(config: &CurriculumConfig, rng: &mut R) -> (u32, u32) {
    let length = rng.gen_range(1..=config.target_length);
    let nesting = rng.gen_range(1..=config.target_nesting);
    (length, nesting)
}

/// Feeds one validation accuracy into the stall tracker; advances the naive
/// and combined difficulties when progress stops. Length advances before
/// nesting; the target difficulty is absorbing.
pub fn observe_validation(
    config: &CurriculumConfig,
    state: &mut CurriculumState,
    val_accuracy: f64,
) -> Option<Advancement> {
    if val_accuracy > state.best_val_accuracy + config.stall_min_delta {
        state.best_val_accuracy = val_accuracy;
        state.evals_since_improvement = 0;
        return None;
    }
    state.evals_since_improvement += 1;
    if state.evals_since_improvement < config.stall_patience {
        return None;
    }
    if !matches!(config.strategy, Strategy::Naive | Strategy::Combined) || state.reached_target {
        return None;
    }
    let from = (state.current_length, state.current_nesting);
    if state.current_length < config.target_length {
        state.current_length += 1;
    } else {
        state.current_length = 1;
        state.current_nesting += 1;
    }
    if state.current_length == config.target_length
        && state.current_nesting == config.target_nesting
    {
        state.reached_target = true;
    }
    // New difficulty, fresh stall tracking.
    state.best_val_accuracy = f64::NEG_INFINITY;
    state.evals_since_improvement = 0;
    Some(Advancement {
        from,
        to: (state.current_length, state.current_nesting),
    })
}
