//! Single-pass interpreter for the restricted program subset.
//!
//! This is the ground-truth oracle: the generator computes every target value
//! on its own during construction, and this module re-derives the value from
//! the program text alone. The two code paths share nothing but the grammar.
//!
//! Accepted statement separators are newline and ';'. For-loop bodies may sit
//! inline after the colon or indented on the following line. A trailing '.'
//! input end marker is accepted and ignored.

use num_bigint::BigInt;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("empty input")]
    Empty,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InterpError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Gt,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Literal(BigInt),
    Var(String),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// `(then if lhs cmp rhs else els)`
    IfElse {
        then: Box<Expr>,
        cmp: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        els: Box<Expr>,
    },
}

/// Compound assignment operator inside a for-loop body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopOp {
    AddAssign,
    SubAssign,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Assign {
        name: String,
        expr: Expr,
    },
    /// `for <loop_var> in range(<count>): <target> (+=|-=) <step>`
    For {
        loop_var: String,
        count: u64,
        target: String,
        op: LoopOp,
        step: Expr,
    },
}

/// Parsed program: leading statements plus the single final print expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ast {
    pub stmts: Vec<Stmt>,
    pub print: Expr,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn skip_spaces(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    /// Skips statement separators: ';', newlines, and surrounding blanks.
    fn skip_separators(&mut self) {
        while matches!(
            self.peek(),
            Some(b' ') | Some(b'\t') | Some(b'\n') | Some(b'\r') | Some(b';')
        ) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        self.skip_spaces();
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{}`", b as char))
        }
    }

    fn word(&mut self) -> Option<String> {
        self.skip_spaces();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_lowercase()) {
            self.pos += 1;
        }
        if self.pos > start {
            Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
        } else {
            None
        }
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        self.skip_spaces();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected integer");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(text.parse().unwrap())
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_spaces();
        match self.peek() {
            Some(b'(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(Expr::Literal(self.integer()?)),
            Some(c) if c.is_ascii_lowercase() => {
                let save = self.pos;
                let w = self.word().unwrap();
                if is_keyword(&w) {
                    self.pos = save;
                    return self.err(format!("unexpected keyword `{w}`"));
                }
                Ok(Expr::Var(w))
            }
            _ => self.err("expected expression"),
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        loop {
            self.skip_spaces();
            if self.peek() == Some(b'*') {
                self.bump();
                let rhs = self.atom()?;
                lhs = Expr::Binary {
                    op: BinOp::Mul,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            self.skip_spaces();
            match self.peek() {
                Some(op @ (b'+' | b'-')) => {
                    // `+=`/`-=` belongs to a loop body, not an expression.
                    if self.src.get(self.pos + 1) == Some(&b'=') {
                        return Ok(lhs);
                    }
                    self.bump();
                    let rhs = self.multiplicative()?;
                    lhs = Expr::Binary {
                        op: if op == b'+' { BinOp::Add } else { BinOp::Sub },
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    };
                }
                _ => return Ok(lhs),
            }
        }
    }

    /// Expression with optional trailing conditional: `a [if l<r else b]`.
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let value = self.additive()?;
        let save = self.pos;
        self.skip_spaces();
        if let Some(w) = self.word() {
            if w == "if" {
                let lhs = self.additive()?;
                self.skip_spaces();
                let cmp = match self.bump() {
                    Some(b'<') => CmpOp::Lt,
                    Some(b'>') => CmpOp::Gt,
                    _ => return self.err("expected `<` or `>`"),
                };
                let rhs = self.additive()?;
                self.skip_spaces();
                match self.word() {
                    Some(k) if k == "else" => {}
                    _ => return self.err("expected `else`"),
                }
                let els = self.expr()?;
                return Ok(Expr::IfElse {
                    then: Box::new(value),
                    cmp,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                    els: Box::new(els),
                });
            }
        }
        self.pos = save;
        Ok(value)
    }

    fn for_stmt(&mut self) -> Result<Stmt, ParseError> {
        let loop_var = match self.word() {
            Some(w) if !is_keyword(&w) => w,
            _ => return self.err("expected loop variable"),
        };
        match self.word() {
            Some(k) if k == "in" => {}
            _ => return self.err("expected `in`"),
        }
        match self.word() {
            Some(k) if k == "range" => {}
            _ => return self.err("expected `range`"),
        }
        self.expect(b'(')?;
        let count = self.integer()?;
        let count = u64::try_from(&count).map_err(|_| ParseError::Syntax {
            pos: self.pos,
            msg: "loop range too large".into(),
        })?;
        self.expect(b')')?;
        self.expect(b':')?;
        // Body is either inline or on the next (indented) line.
        self.skip_spaces();
        if self.peek() == Some(b'\n') {
            self.bump();
            self.skip_spaces();
        }
        let target = match self.word() {
            Some(w) if !is_keyword(&w) => w,
            _ => return self.err("expected loop body variable"),
        };
        self.skip_spaces();
        let op = match (self.bump(), self.bump()) {
            (Some(b'+'), Some(b'=')) => LoopOp::AddAssign,
            (Some(b'-'), Some(b'=')) => LoopOp::SubAssign,
            _ => return self.err("expected `+=` or `-=`"),
        };
        let step = self.expr()?;
        Ok(Stmt::For {
            loop_var,
            count,
            target,
            op,
            step,
        })
    }

    fn program(&mut self) -> Result<Ast, ParseError> {
        let mut stmts = Vec::new();
        let mut print = None;
        loop {
            self.skip_separators();
            if self.peek().is_none() {
                break;
            }
            // Trailing input end marker.
            if self.peek() == Some(b'.') && print.is_some() {
                self.bump();
                self.skip_separators();
                if self.peek().is_none() {
                    break;
                }
                return self.err("content after end marker");
            }
            if print.is_some() {
                return self.err("statement after print");
            }
            match self.word() {
                Some(w) if w == "print" => {
                    self.expect(b'(')?;
                    print = Some(self.expr()?);
                    self.expect(b')')?;
                }
                Some(w) if w == "for" => {
                    stmts.push(self.for_stmt()?);
                }
                Some(w) if !is_keyword(&w) => {
                    self.expect(b'=')?;
                    let expr = self.expr()?;
                    stmts.push(Stmt::Assign { name: w, expr });
                }
                Some(w) => return self.err(format!("unexpected keyword `{w}`")),
                None => return self.err("expected statement"),
            }
        }
        match print {
            Some(print) => Ok(Ast { stmts, print }),
            None => {
                if self.src.is_empty() {
                    Err(ParseError::Empty)
                } else {
                    self.err("missing print statement")
                }
            }
        }
    }
}

fn is_keyword(w: &str) -> bool {
    matches!(w, "print" | "for" | "in" | "range" | "if" | "else")
}

/// Parses a program in the generator's canonical form (plus the tolerated
/// separator variants) into an [`Ast`].
pub fn parse(code: &str) -> Result<Ast, ParseError> {
    Parser::new(code).program()
}

struct Env {
    vars: HashMap<String, BigInt>,
    steps: u64,
}

impl Env {
    fn lookup(&self, name: &str) -> Result<BigInt, EvalError> {
        self.vars
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(name.to_owned()))
    }
}

fn eval_expr(expr: &Expr, env: &mut Env) -> Result<BigInt, EvalError> {
    env.steps += 1;
    match expr {
        Expr::Literal(v) => Ok(v.clone()),
        Expr::Var(name) => env.lookup(name),
        Expr::Binary { op, lhs, rhs } => {
            let l = eval_expr(lhs, env)?;
            let r = eval_expr(rhs, env)?;
            Ok(match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
            })
        }
        Expr::IfElse {
            then,
            cmp,
            lhs,
            rhs,
            els,
        } => {
            let l = eval_expr(lhs, env)?;
            let r = eval_expr(rhs, env)?;
            let cond = match cmp {
                CmpOp::Lt => l < r,
                CmpOp::Gt => l > r,
            };
            if cond {
                eval_expr(then, env)
            } else {
                eval_expr(els, env)
            }
        }
    }
}

fn run(ast: &Ast) -> Result<(BigInt, u64), EvalError> {
    let mut env = Env {
        vars: HashMap::new(),
        steps: 0,
    };
    for stmt in &ast.stmts {
        env.steps += 1;
        match stmt {
            Stmt::Assign { name, expr } => {
                let v = eval_expr(expr, &mut env)?;
                env.vars.insert(name.clone(), v);
            }
            Stmt::For {
                count,
                target,
                op,
                step,
                ..
            } => {
                // The step expression is pure: evaluate once, apply `count` times.
                let step_val = eval_expr(step, &mut env)?;
                let mut acc = env.lookup(target)?;
                for _ in 0..*count {
                    env.steps += 1;
                    match op {
                        LoopOp::AddAssign => acc += &step_val,
                        LoopOp::SubAssign => acc -= &step_val,
                    }
                }
                env.vars.insert(target.clone(), acc);
            }
        }
    }
    let value = eval_expr(&ast.print, &mut env)?;
    Ok((value, env.steps))
}

/// Evaluates a parsed program to its printed integer.
pub fn evaluate(ast: &Ast) -> Result<BigInt, EvalError> {
    run(ast).map(|(v, _)| v)
}

/// Like [`evaluate`] but also reports the number of evaluation steps taken,
/// for runtime-bound checks.
pub fn evaluate_counted(ast: &Ast) -> Result<(BigInt, u64), EvalError> {
    run(ast)
}

/// Parses and evaluates in one call.
pub fn eval_code(code: &str) -> Result<BigInt, InterpError> {
    let ast = parse(code)?;
    Ok(evaluate(&ast)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn eval(code: &str) -> BigInt {
        eval_code(code).unwrap()
    }

    #[test]
    fn print_of_literal() {
        let ast = parse("print(6652).").unwrap();
        assert!(ast.stmts.is_empty());
        assert_eq!(ast.print, Expr::Literal(BigInt::from(6652)));
        assert_eq!(eval("print(6652)."), BigInt::from(6652));
    }

    #[test]
    fn assignment_then_print_with_semicolon_separator() {
        let ast = parse("c=2060;\nprint((c-4387)).").unwrap();
        assert_eq!(ast.stmts.len(), 1);
        assert_eq!(eval("c=2060;\nprint((c-4387))."), BigInt::from(-2327));
    }

    #[test]
    fn empty_input_is_a_syntax_error() {
        assert_eq!(parse(""), Err(ParseError::Empty));
    }

    #[test]
    fn figure_examples() {
        assert_eq!(
            eval("j=8584\nfor x in range(8):\n  j+=920\nb=(1500+j)\nprint((b+7567))"),
            BigInt::from(25011)
        );
        assert_eq!(
            eval("i=8827\nc=(i-5347)\nprint((c+8704) if 2641<8500 else 5308)."),
            BigInt::from(12184)
        );
        assert_eq!(
            eval("e=1079\nfor x in range(10):\n  e+=4729\nprint(e)."),
            BigInt::from(48369)
        );
        assert_eq!(eval("print((5997-738))."), BigInt::from(5259));
    }

    #[test]
    fn inline_loop_body() {
        assert_eq!(
            eval("e=1079\nfor x in range(10):e+=4729\nprint(e)."),
            BigInt::from(48369)
        );
    }

    #[test]
    fn compound_comparison_operands() {
        assert_eq!(
            eval("d=8640;\nprint((7135 if 6710>((d+7080)*14) else 7200))."),
            BigInt::from(7200)
        );
        assert_eq!(
            eval("h=411671;\nprint((242648 if (h+31605)>679390 else 449699))."),
            BigInt::from(449699)
        );
    }

    #[test]
    fn unbound_variable_is_an_eval_error() {
        let ast = parse("print(q).").unwrap();
        assert_eq!(
            evaluate(&ast),
            Err(EvalError::UnboundVariable("q".into()))
        );
        let ast = parse("for x in range(3):\n  z+=1\nprint(1).");
        assert!(matches!(
            evaluate(&ast.unwrap()),
            Err(EvalError::UnboundVariable(_))
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse("print((3+)).") {
            Err(ParseError::Syntax { pos, .. }) => assert!(pos >= 8),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(parse("print(1)\nprint(2).").is_err());
        assert!(parse("x=3").is_err()); // no print
        assert!(parse("print(1).x=2").is_err()); // content after end marker
    }

    #[test]
    fn loop_semantics_match_closed_form() {
        // v = init; r times v -= e  ==  init - r*e
        let code = "d=6817\nfor x in range(7):\n  d-=(4581-2186)\nprint(d).";
        assert_eq!(eval(code), BigInt::from(6817 - 7 * (4581 - 2186)));
    }

    #[test]
    fn step_count_is_linear_in_tokens_plus_loop_ranges() {
        let code = "j=8584\nfor x in range(8):\n  j+=920\nb=(1500+j)\nprint((b+7567)).";
        let ast = parse(code).unwrap();
        let (_, steps) = evaluate_counted(&ast).unwrap();
        let loop_ranges = 8u64;
        assert!(steps <= 4 * (code.len() as u64 + loop_ranges));
    }
}
