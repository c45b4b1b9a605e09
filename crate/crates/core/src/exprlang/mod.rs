//! Generator expressions.
//!
//! A closed little language for real-valued functions of up to ten variables
//! `x0..x9` and an optional sequence index `n`. Every node has both a point
//! evaluator and a sound interval evaluator, which is what lets the
//! uniformity module certify inclusions instead of only sampling them.

mod interval;
mod parse;

use std::fmt;

pub use interval::{IBox, Interval};
pub use parse::{parse, ParseError};

use thiserror::Error;

/// Highest variable index accepted by the parser (`x0` through `x9`).
pub const MAX_VARS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Atan,
    Abs,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 6] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Atan,
        Func::Abs,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Atan => "atan",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

/// Expression tree. `pi` parses to `Const(PI)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    /// The sequence index `n`.
    Index,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("sqrt of negative argument {0}")]
    SqrtOfNegative(f64),
    #[error("sequence index `n` referenced but not supplied")]
    MissingIndex,
    #[error("variable x{index} out of range for a point of arity {arity}")]
    VarOutOfRange { index: usize, arity: usize },
    #[error("undefined result (NaN)")]
    Undefined,
    #[error("denominator interval {0} contains zero")]
    DenominatorContainsZero(Interval),
    #[error("sqrt argument interval {0} dips below zero")]
    SqrtIntervalNegative(Interval),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("operator arity mismatch: expression uses {needed} variables but {supplied} substitutes were supplied")]
pub struct ArityMismatch {
    pub needed: usize,
    pub supplied: usize,
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn call(f: Func, e: Expr) -> Expr {
        Expr::Call(f, Box::new(e))
    }

    pub fn pow(e: Expr, k: u32) -> Expr {
        Expr::Pow(Box::new(e), k)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    /// One more than the highest variable index, or 0 for closed expressions.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Index => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn uses_index(&self) -> bool {
        match self {
            Expr::Index => true,
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.uses_index(),
            Expr::Bin(_, a, b) => a.uses_index() || b.uses_index(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Index => 1,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => 1 + e.depth(),
            Expr::Bin(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Evaluates at a point. `n` must be supplied iff the expression uses the
    /// sequence index.
    pub fn eval_point(&self, p: &[f64], n: Option<u64>) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *p.get(*i).ok_or(EvalError::VarOutOfRange {
                index: *i,
                arity: p.len(),
            })?,
            Expr::Index => n.ok_or(EvalError::MissingIndex)? as f64,
            Expr::Neg(e) => -e.eval_point(p, n)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval_point(p, n)?;
                let b = b.eval_point(p, n)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(e, k) => pow_chain(e.eval_point(p, n)?, *k),
            Expr::Call(f, e) => {
                let x = e.eval_point(p, n)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Atan => x.atan(),
                    Func::Abs => x.abs(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::SqrtOfNegative(x));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if v.is_nan() {
            return Err(EvalError::Undefined);
        }
        Ok(v)
    }

    /// Evaluates a closed-in-`n` expression at sequence index `n`.
    pub fn eval_index(&self, n: u64) -> Result<f64, EvalError> {
        self.eval_point(&[], Some(n))
    }

    /// Substitutes `alphas[i]` for every `x{i}`; the sequence index is left
    /// untouched.
    pub fn compose(&self, alphas: &[Expr]) -> Result<Expr, ArityMismatch> {
        if self.arity() > alphas.len() {
            return Err(ArityMismatch {
                needed: self.arity(),
                supplied: alphas.len(),
            });
        }
        Ok(self.substitute(alphas))
    }

    fn substitute(&self, alphas: &[Expr]) -> Expr {
        match self {
            Expr::Var(i) => alphas[*i].clone(),
            Expr::Const(_) | Expr::Index => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(alphas))),
            Expr::Bin(op, a, b) => Expr::Bin(
                *op,
                Box::new(a.substitute(alphas)),
                Box::new(b.substitute(alphas)),
            ),
            Expr::Pow(e, k) => Expr::Pow(Box::new(e.substitute(alphas)), *k),
            Expr::Call(f, e) => Expr::Call(*f, Box::new(e.substitute(alphas))),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            // negative literals print as `(-c)` so they sit at atom level
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{})", -c)
            }
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Index => write!(f, "n"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_at(f, 4)
            }
            Expr::Bin(op, a, b) => {
                let p = self.precedence();
                a.fmt_at(f, p)?;
                write!(f, " {} ", op.symbol())?;
                // right operand of a left-associative chain binds tighter;
                // for * and / it must be a factor
                b.fmt_at(f, if p == 1 { 2 } else { 3 })
            }
            Expr::Pow(e, k) => {
                e.fmt_at(f, 5)?;
                write!(f, "^{k}")
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                e.fmt_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

/// Canonical printed form; re-parses to an identical tree whenever all
/// constants are non-negative and finite.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// `x^k` by left-to-right repeated multiplication. Both evaluators use this
/// exact chain so that rounding stays monotone in `|x|`.
pub(crate) fn pow_chain(x: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut acc = x;
    for _ in 1..k {
        acc *= x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p("x0^2").eval_point(&[3.0], None).unwrap(), 9.0);
        assert_eq!(p("atan(x0)").eval_point(&[0.0], None).unwrap(), 0.0);
        assert_eq!(
            p("1/x0").eval_point(&[0.0], None),
            Err(EvalError::DivisionByZero)
        );
        assert!(matches!(
            p("sqrt(x0)").eval_point(&[-1.0], None),
            Err(EvalError::SqrtOfNegative(_))
        ));
    }

    #[test]
    fn index_must_be_supplied() {
        let e = p("1/n");
        assert_eq!(e.eval_point(&[], None), Err(EvalError::MissingIndex));
        assert_eq!(e.eval_index(4).unwrap(), 0.25);
    }

    #[test]
    fn var_out_of_range() {
        assert_eq!(
            p("x1").eval_point(&[1.0], None),
            Err(EvalError::VarOutOfRange { index: 1, arity: 1 })
        );
    }

    #[test]
    fn compose_examples() {
        let omega = p("x0 + x1");
        let f = omega.compose(&[p("x0"), p("x0^2")]).unwrap();
        assert_eq!(f.eval_point(&[2.0], None).unwrap(), 6.0);

        let e = p("sin(x0) * x1 + 3");
        assert_eq!(p("x0").compose(&[e.clone()]).unwrap(), e);

        let g = p("exp(x0)").compose(&[p("atan(x0)")]).unwrap();
        assert_eq!(g.eval_point(&[0.0], None).unwrap(), 1.0);

        assert_eq!(
            p("x0 * x2").compose(&[p("x0")]),
            Err(ArityMismatch {
                needed: 3,
                supplied: 1
            })
        );
    }

    #[test]
    fn composed_value_matches_outer_on_inner_values() {
        let omega = p("x0 * x1 - cos(x0)");
        let alphas = [p("x0^3 + x1"), p("atan(x1) / 2")];
        let f = omega.compose(&alphas).unwrap();
        for pt in [[0.3, -1.2], [2.0, 5.0], [-7.5, 0.0]] {
            let inner: Vec<f64> = alphas
                .iter()
                .map(|a| a.eval_point(&pt, None).unwrap())
                .collect();
            assert_eq!(
                f.eval_point(&pt, None).unwrap(),
                omega.eval_point(&inner, None).unwrap()
            );
        }
    }

    #[test]
    fn printing_is_canonical() {
        assert_eq!(p("x0 - (x1 - x2)").to_string(), "x0 - (x1 - x2)");
        assert_eq!(p("(x0 - x1) - x2").to_string(), "x0 - x1 - x2");
        assert_eq!(p("-x0^2").to_string(), "-x0^2");
        assert_eq!(p("(-x0)^2").to_string(), "(-x0)^2");
        assert_eq!(p("2 * -x0").to_string(), "2 * -x0");
        assert_eq!(p("abs(x0 - sqrt(2))").to_string(), "abs(x0 - sqrt(2))");
        assert_eq!(p("(x0^2)^3").to_string(), "(x0^2)^3");
    }

    #[test]
    fn arity_and_index() {
        assert_eq!(p("x3 + x0").arity(), 4);
        assert_eq!(p("pi").arity(), 0);
        assert!(p("atan(n)").uses_index());
        assert!(!p("x0").uses_index());
    }
}
