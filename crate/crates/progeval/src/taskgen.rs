//! Addition and memorization task sample generators.

use num_bigint::{BigInt, BigUint, RandBigInt};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::encode::{render_target, END_MARKER};
use crate::progsynth::{assign_split, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Program,
    Addition,
    Memorize,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Program => "program",
            Task::Addition => "addition",
            Task::Memorize => "memorize",
        })
    }
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "program" => Ok(Task::Program),
            "addition" => Ok(Task::Addition),
            "memorize" => Ok(Task::Memorize),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaskGenError {
    #[error("length must be >= 1, got {0}")]
    BadLength(u32),
}

/// Addition of two numbers with exactly `length` digits each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdditionConfig {
    pub length: u32,
    pub seed: u64,
}

impl AdditionConfig {
    pub fn new(length: u32, seed: u64) -> Result<Self, TaskGenError> {
        if length < 1 {
            return Err(TaskGenError::BadLength(length));
        }
        Ok(AdditionConfig { length, seed })
    }
}

/// Memorization of a random digit sequence of the given length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemorizeConfig {
    pub length: u32,
    pub seed: u64,
}

impl MemorizeConfig {
    pub fn new(length: u32, seed: u64) -> Result<Self, TaskGenError> {
        if length < 1 {
            return Err(TaskGenError::BadLength(length));
        }
        Ok(MemorizeConfig { length, seed })
    }
}

/// Uniform over integers that render to exactly `length` digits.
fn exact_length_int<R: Rng>(length: u32, rng: &mut R) -> BigUint {
    let ten = BigUint::from(10u32);
    let low = ten.pow(length - 1);
    let high = ten.pow(length);
    if length == 1 {
        // [1, 9]; zero is excluded so operands always have a leading digit.
        rng.gen_biguint_range(&BigUint::from(1u32), &high)
    } else {
        rng.gen_biguint_range(&low, &high)
    }
}

/// `print(A+B).` with A, B uniform over exactly-length-digit integers.
pub fn gen_addition<R: Rng>(cfg: &AdditionConfig, rng: &mut R) -> Sample {
    let a = exact_length_int(cfg.length, rng);
    let b = exact_length_int(cfg.length, rng);
    let sum: BigInt = (&a + &b).into();
    let code = format!("print({a}+{b}){END_MARKER}");
    let target = render_target(&sum);
    let split = assign_split(&code);
    Sample {
        code,
        target,
        length: cfg.length,
        nesting: 1,
        split,
    }
}

/// Random digit string; the target is the same string. Leading zeros allowed.
pub fn gen_memorize<R: Rng>(cfg: &MemorizeConfig, rng: &mut R) -> Sample {
    let digits: String = (0..cfg.length)
        .map(|_| char::from(b'0' + rng.gen_range(0..10u8)))
        .collect();
    let code = format!("{digits}{END_MARKER}");
    let target = code.clone();
    let split = assign_split(&code);
    Sample {
        code,
        target,
        length: cfg.length,
        nesting: 1,
        split,
    }
}
