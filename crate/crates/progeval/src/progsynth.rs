//! Random program generator for the restricted subset.
//!
//! Programs are built bottom-up on a stack of evaluated fragments: each round
//! combines operands (popped fragments or fresh literals) with one of the
//! value operations {addition, subtraction, multiplication, if-expression,
//! for-loop}, and the final print statement sources its operand the same way.
//! Variable assignments enter through operand wrapping and for-loop
//! accumulators. Exact values are carried along during construction, so the
//! target of every sample is known without running the program.

use num_bigint::{BigInt, BigUint, RandBigInt};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::encode::render_target;

/// Probability that an operand slot pops the fragment stack when it is
/// non-empty (a fair coin, otherwise a fresh literal is drawn).
const POP_PROB: f64 = 0.5;
/// Probability that the final print operand pops the stack. Popping more
/// often than plain operand slots keeps composed values dominant in the
/// output distribution while still emitting bare `print(<literal>)` samples.
const FINAL_POP_PROB: f64 = 0.75;
/// Probability that a sourced operand is first bound to a fresh variable.
const WRAP_PROB: f64 = 0.1;

/// Fresh variable names, drawn without replacement per program.
const VAR_NAMES: [char; 10] = ['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j'];

pub const MAX_NESTING: u32 = VAR_NAMES.len() as u32;
pub const MAX_LENGTH: u32 = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("length must be in 1..={MAX_LENGTH}, got {0}")]
    BadLength(u32),
    #[error("nesting must be in 1..={MAX_NESTING}, got {0}")]
    BadNesting(u32),
}

/// Difficulty parameters of the program distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Digit count of unconstrained literals: drawn uniformly from [1, 10^length].
    pub length: u32,
    /// Number of composed operations.
    pub nesting: u32,
    pub seed: u64,
}

impl GenConfig {
    pub fn new(length: u32, nesting: u32, seed: u64) -> Result<Self, GenError> {
        if length < 1 || length > MAX_LENGTH {
            return Err(GenError::BadLength(length));
        }
        if nesting < 1 || nesting > MAX_NESTING {
            return Err(GenError::BadNesting(nesting));
        }
        Ok(GenConfig {
            length,
            nesting,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

/// One data point: program text (ending with the input end marker) and its
/// printed output (ending with the target end marker).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub code: String,
    pub target: String,
    pub length: u32,
    pub nesting: u32,
    pub split: Split,
}

/// 64-bit FNV-1a over raw bytes; fixed here so splits are stable across
/// platforms and releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Deterministic train/validation/test assignment: hash of the code mod 3.
pub fn assign_split(code: &str) -> Split {
    match fnv1a64(code.as_bytes()) % 3 {
        0 => Split::Train,
        1 => Split::Validation,
        _ => Split::Test,
    }
}

/// An evaluated program fragment: the statements it needs, the expression
/// that names its value, and the exact value itself.
#[derive(Debug, Clone)]
struct StackEntry {
    value: BigInt,
    stmts: Vec<String>,
    expr: String,
}

struct Builder<'a, R: Rng> {
    rng: &'a mut R,
    stack: Vec<StackEntry>,
    names: std::slice::Iter<'static, char>,
    names_left: usize,
    literal_bound: BigUint,
    small_bound: u64,
}

impl<'a, R: Rng> Builder<'a, R> {
    fn new(cfg: &GenConfig, rng: &'a mut R) -> Self {
        Builder {
            rng,
            stack: Vec::new(),
            names: VAR_NAMES.iter(),
            names_left: VAR_NAMES.len(),
            literal_bound: BigUint::from(10u32).pow(cfg.length),
            small_bound: u64::from(4 * cfg.length),
        }
    }

    fn fresh_name(&mut self) -> char {
        self.names_left -= 1;
        *self.names.next().expect("variable names exhausted")
    }

    /// Uniform in [1, 10^length].
    fn literal(&mut self) -> BigInt {
        let one = BigUint::from(1u32);
        let upper = &self.literal_bound + &one;
        self.rng.gen_biguint_range(&one, &upper).into()
    }

    /// Uniform in [1, 4*length]: for-loop ranges and one multiplication side.
    fn small(&mut self) -> u64 {
        self.rng.gen_range(1..=self.small_bound)
    }

    fn coin(&mut self, p: f64) -> bool {
        self.rng.gen::<f64>() < p
    }

    /// Pops with probability `pop_prob` when possible, otherwise draws a
    /// fresh literal. `reserve` names are kept for loop accumulators still to
    /// come; wrapping in an assignment is skipped when it would use them up.
    fn source(&mut self, pop_prob: f64, reserve: usize) -> StackEntry {
        let mut entry = if !self.stack.is_empty() && self.coin(pop_prob) {
            self.stack.pop().unwrap()
        } else {
            let value = self.literal();
            let expr = value.to_string();
            StackEntry {
                value,
                stmts: Vec::new(),
                expr,
            }
        };
        if self.names_left > reserve && self.coin(WRAP_PROB) {
            let name = self.fresh_name();
            entry.stmts.push(format!("{name}={}", entry.expr));
            entry.expr = name.to_string();
        }
        entry
    }

}

/// Generates one sample from the configured distribution.
pub fn generate<R: Rng>(cfg: &GenConfig, rng: &mut R) -> Sample {
    let mut b = Builder::new(cfg, rng);
    let nesting = cfg.nesting as usize;
    for i in 0..nesting {
        // Rounds after this one may each need one name for a loop accumulator.
        let reserve = nesting - i;
        let entry = match b.rng.gen_range(0..5u8) {
            0 => {
                let a = b.source(POP_PROB, reserve);
                let c = b.source(POP_PROB, reserve);
                StackEntry {
                    value: &a.value + &c.value,
                    stmts: concat(a.stmts, c.stmts),
                    expr: format!("({}+{})", a.expr, c.expr),
                }
            }
            1 => {
                let a = b.source(POP_PROB, reserve);
                let c = b.source(POP_PROB, reserve);
                StackEntry {
                    value: &a.value - &c.value,
                    stmts: concat(a.stmts, c.stmts),
                    expr: format!("({}-{})", a.expr, c.expr),
                }
            }
            2 => {
                // One side is constrained to a small literal.
                let a = b.source(POP_PROB, reserve);
                let m = b.small();
                let small_left = b.coin(0.5);
                let expr = if small_left {
                    format!("({m}*{})", a.expr)
                } else {
                    format!("({}*{m})", a.expr)
                };
                StackEntry {
                    value: &a.value * BigInt::from(m),
                    stmts: a.stmts,
                    expr,
                }
            }
            3 => {
                // (then if lhs cmp rhs else els)
                let then = b.source(POP_PROB, reserve);
                let lhs = b.source(POP_PROB, reserve);
                let rhs = b.source(POP_PROB, reserve);
                let els = b.source(POP_PROB, reserve);
                let less_than = b.coin(0.5);
                let cond = if less_than {
                    lhs.value < rhs.value
                } else {
                    lhs.value > rhs.value
                };
                let value = if cond {
                    then.value.clone()
                } else {
                    els.value.clone()
                };
                let sym = if less_than { '<' } else { '>' };
                let stmts = concat(
                    concat(then.stmts, lhs.stmts),
                    concat(rhs.stmts, els.stmts),
                );
                StackEntry {
                    value,
                    stmts,
                    expr: format!(
                        "({} if {}{sym}{} else {})",
                        then.expr, lhs.expr, rhs.expr, els.expr
                    ),
                }
            }
            _ => {
                // for-loop: accumulator = init; count times accumulator ∘= step
                let init = b.source(POP_PROB, reserve);
                let step = b.source(POP_PROB, reserve);
                let count = b.small();
                let add = b.coin(0.5);
                let name = b.fresh_name();
                let step_total = &step.value * BigInt::from(count);
                let value = if add {
                    &init.value + &step_total
                } else {
                    &init.value - &step_total
                };
                let op = if add { "+=" } else { "-=" };
                let mut stmts = concat(init.stmts, step.stmts);
                stmts.push(format!("{name}={}", init.expr));
                stmts.push(format!("for x in range({count}):"));
                stmts.push(format!("  {name}{op}{}", step.expr));
                StackEntry {
                    value,
                    stmts,
                    expr: name.to_string(),
                }
            }
        };
        b.stack.push(entry);
    }
    let final_entry = b.source(FINAL_POP_PROB, 0);

    let mut code = String::new();
    for stmt in &final_entry.stmts {
        code.push_str(stmt);
        code.push('\n');
    }
    code.push_str("print(");
    code.push_str(&final_entry.expr);
    code.push_str(").");

    let target = render_target(&final_entry.value);
    let split = assign_split(&code);
    Sample {
        code,
        target,
        length: cfg.length,
        nesting: cfg.nesting,
        split,
    }
}

fn concat(mut a: Vec<String>, b: Vec<String>) -> Vec<String> {
    a.extend(b);
    a
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScrambleError {
    #[error("permutation is not a bijection: `{0}` appears twice")]
    NotBijective(char),
    #[error("character `{0:?}` is outside the permutation's alphabet")]
    OutsideAlphabet(char),
}

/// A bijection over an alphabet, applied character-wise.
#[derive(Debug, Clone)]
pub struct Permutation {
    map: std::collections::HashMap<char, char>,
}

impl Permutation {
    /// Builds a permutation from (from, to) pairs; both sides must cover the
    /// same alphabet exactly once.
    pub fn new(pairs: impl IntoIterator<Item = (char, char)>) -> Result<Self, ScrambleError> {
        let mut map = std::collections::HashMap::new();
        let mut seen_to = std::collections::HashSet::new();
        for (from, to) in pairs {
            if map.insert(from, to).is_some() {
                return Err(ScrambleError::NotBijective(from));
            }
            if !seen_to.insert(to) {
                return Err(ScrambleError::NotBijective(to));
            }
        }
        // Domain and image must be the same set for a true bijection.
        for to in seen_to {
            if !map.contains_key(&to) {
                return Err(ScrambleError::OutsideAlphabet(to));
            }
        }
        Ok(Permutation { map })
    }

    pub fn identity(alphabet: &[char]) -> Self {
        Permutation {
            map: alphabet.iter().map(|&c| (c, c)).collect(),
        }
    }

    /// Fisher-Yates shuffle of the alphabet.
    pub fn shuffled<R: Rng>(alphabet: &[char], rng: &mut R) -> Self {
        let mut to: Vec<char> = alphabet.to_vec();
        for i in (1..to.len()).rev() {
            let j = rng.gen_range(0..=i);
            to.swap(i, j);
        }
        Permutation {
            map: alphabet.iter().copied().zip(to).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        Permutation {
            map: self.map.iter().map(|(&k, &v)| (v, k)).collect(),
        }
    }

    pub fn apply(&self, text: &str) -> Result<String, ScrambleError> {
        text.chars()
            .map(|c| {
                self.map
                    .get(&c)
                    .copied()
                    .ok_or(ScrambleError::OutsideAlphabet(c))
            })
            .collect()
    }
}

/// Character-wise substitution of `code` under `permutation`.
pub fn scramble(code: &str, permutation: &Permutation) -> Result<String, ScrambleError> {
    permutation.apply(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode;
    use crate::interp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn config_validation() {
        assert!(GenConfig::new(1, 1, 0).is_ok());
        assert_eq!(GenConfig::new(0, 1, 0), Err(GenError::BadLength(0)));
        assert_eq!(GenConfig::new(4, 0, 0), Err(GenError::BadNesting(0)));
        assert_eq!(GenConfig::new(4, 11, 0), Err(GenError::BadNesting(11)));
    }

    #[test]
    fn some_seed_produces_a_bare_single_digit_print() {
        // At (length=1, nesting=1) the final operand is a fresh literal about
        // a quarter of the time, so a small seed search must find `print(7).`.
        let cfg = GenConfig::new(1, 1, 0).unwrap();
        let found = (0..2000u64).any(|seed| {
            let s = generate(&cfg, &mut rng(seed));
            s.code == "print(7)." && s.target == "7."
        });
        assert!(found);
    }

    #[test]
    fn generated_targets_match_the_interpreter_oracle() {
        let cfg = GenConfig::new(4, 1, 0).unwrap();
        let mut r = rng(42);
        for _ in 0..10_000 {
            let s = generate(&cfg, &mut r);
            let value = interp::eval_code(&s.code).unwrap();
            assert_eq!(
                encode::render_target(&value),
                s.target,
                "oracle mismatch for program:\n{}",
                s.code
            );
        }
    }

    #[test]
    fn deeper_configs_also_match_the_oracle() {
        for (len, nest) in [(1, 3), (3, 2), (6, 3), (9, 4)] {
            let cfg = GenConfig::new(len, nest, 0).unwrap();
            let mut r = rng(u64::from(len * 100 + nest));
            for _ in 0..1000 {
                let s = generate(&cfg, &mut r);
                let value = interp::eval_code(&s.code).unwrap();
                assert_eq!(encode::render_target(&value), s.target, "\n{}", s.code);
            }
        }
    }

    #[test]
    fn no_dead_code() {
        // Every assigned variable must be read somewhere after its assignment.
        let cfg = GenConfig::new(3, 3, 0).unwrap();
        let mut r = rng(7);
        for _ in 0..2000 {
            let s = generate(&cfg, &mut r);
            let lines: Vec<&str> = s.code.lines().collect();
            for (idx, line) in lines.iter().enumerate() {
                let assigned = match line.split_once('=') {
                    Some((lhs, _)) if !lhs.ends_with(['+', '-']) => lhs.trim(),
                    _ => continue,
                };
                let read_later = lines[idx + 1..].iter().any(|later| {
                    later
                        .char_indices()
                        .any(|(i, c)| c.to_string() == assigned && !is_assignment_lhs(later, i))
                });
                assert!(read_later, "dead variable `{assigned}` in:\n{}", s.code);
            }
        }
    }

    fn is_assignment_lhs(line: &str, i: usize) -> bool {
        // `v=` or `v+=` / `v-=` at the start of a (possibly indented) line.
        let rest = &line[i + 1..];
        let at_start = line[..i].chars().all(|c| c == ' ');
        at_start && (rest.starts_with('=') && !rest.starts_with("==")
            || rest.starts_with("+=")
            || rest.starts_with("-="))
    }

    #[test]
    fn no_nested_for_loops_and_at_most_nesting_loops() {
        let cfg = GenConfig::new(2, 4, 0).unwrap();
        let mut r = rng(11);
        for _ in 0..2000 {
            let s = generate(&cfg, &mut r);
            let loops = s.code.matches("for ").count();
            assert!(loops <= 4);
            // Canonical form: a loop body is exactly one indented line, so a
            // nested loop would show up as an indented `for`.
            assert!(!s.code.contains("  for "));
        }
    }

    #[test]
    fn literal_magnitudes_respect_bounds() {
        use num_bigint::BigInt;
        let cfg = GenConfig::new(2, 3, 0).unwrap();
        let big_bound = BigInt::from(100);
        let small_bound = 8u64;
        let mut r = rng(13);
        for _ in 0..2000 {
            let s = generate(&cfg, &mut r);
            let ast = interp::parse(&s.code).unwrap();
            check_stmt_bounds(&ast, &big_bound, small_bound);
        }
    }

    fn check_stmt_bounds(ast: &interp::Ast, big: &num_bigint::BigInt, small: u64) {
        use interp::{Expr, Stmt};
        fn check_expr(e: &Expr, big: &num_bigint::BigInt, small: u64) {
            match e {
                Expr::Literal(v) => {
                    assert!(v >= &num_bigint::BigInt::from(1) && v <= big, "literal {v}")
                }
                Expr::Var(_) => {}
                Expr::Binary { op, lhs, rhs } => {
                    if *op == interp::BinOp::Mul {
                        let small_side = [lhs, rhs].into_iter().any(|side| {
                            matches!(&**side, Expr::Literal(v)
                                if v <= &num_bigint::BigInt::from(small))
                        });
                        assert!(small_side, "no constrained side in multiplication");
                    }
                    check_expr(lhs, big, small);
                    check_expr(rhs, big, small);
                }
                Expr::IfElse {
                    then,
                    lhs,
                    rhs,
                    els,
                    ..
                } => {
                    for sub in [then, lhs, rhs, els] {
                        check_expr(sub, big, small);
                    }
                }
            }
        }
        for stmt in &ast.stmts {
            match stmt {
                Stmt::Assign { expr, .. } => check_expr(expr, big, small),
                Stmt::For { count, step, .. } => {
                    assert!(*count >= 1 && *count <= small, "loop range {count}");
                    check_expr(step, big, small);
                }
            }
        }
        check_expr(&ast.print, big, small);
    }

    #[test]
    fn split_is_deterministic_and_exhaustive() {
        assert_eq!(assign_split("print(7)."), assign_split("print(7)."));
        let cfg = GenConfig::new(4, 1, 0).unwrap();
        let mut r = rng(3);
        let mut by_split: [HashSet<String>; 3] = Default::default();
        let mut counts = [0usize; 3];
        let mut seen = HashSet::new();
        let mut n = 0usize;
        while n < 30_000 {
            let s = generate(&cfg, &mut r);
            if !seen.insert(s.code.clone()) {
                continue;
            }
            n += 1;
            let idx = match s.split {
                Split::Train => 0,
                Split::Validation => 1,
                Split::Test => 2,
            };
            counts[idx] += 1;
            by_split[idx].insert(s.code);
        }
        for &c in &counts {
            let frac = c as f64 / 30_000.0;
            assert!((0.30..=0.37).contains(&frac), "split fraction {frac}");
        }
        assert!(by_split[0].is_disjoint(&by_split[1]));
        assert!(by_split[0].is_disjoint(&by_split[2]));
        assert!(by_split[1].is_disjoint(&by_split[2]));
    }

    #[test]
    fn scramble_identity_and_round_trip() {
        let vocab = crate::encode::Vocabulary::program();
        let alphabet = vocab.input_chars();
        let id = Permutation::identity(alphabet);
        let cfg = GenConfig::new(3, 2, 0).unwrap();
        let mut r = rng(5);
        let perm = Permutation::shuffled(alphabet, &mut r);
        let inv = perm.inverse();
        for _ in 0..1000 {
            let s = generate(&cfg, &mut r);
            assert_eq!(scramble(&s.code, &id).unwrap(), s.code);
            let scrambled = scramble(&s.code, &perm).unwrap();
            assert_eq!(scrambled.chars().count(), s.code.chars().count());
            assert_eq!(scramble(&scrambled, &inv).unwrap(), s.code);
        }
    }

    #[test]
    fn non_bijective_permutation_is_rejected() {
        assert!(matches!(
            Permutation::new([('a', 'x'), ('b', 'x')]),
            Err(ScrambleError::NotBijective('x'))
        ));
        assert!(Permutation::new([('a', 'b')]).is_err()); // image != domain
        assert!(Permutation::new([('a', 'b'), ('b', 'a')]).is_ok());
    }
}
