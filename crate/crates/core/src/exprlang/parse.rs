//! Recursive descent parser.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := ("-")? power
//! power  := atom ("^" uint)?
//! atom   := number | "pi" | "n" | "x" digit | func "(" expr ")" | "(" expr ")"
//! ```

use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("`{func}` at byte {offset} takes 1 argument, found {found}")]
    CallArity {
        offset: usize,
        func: &'static str,
        found: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::CallArity { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    UInt(u64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::UInt(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((start, t));
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let mut integral = c != b'.';
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integral = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            match text.parse::<u64>() {
                Ok(u) if integral => out.push((start, Tok::UInt(u))),
                _ => out.push((start, Tok::Num(value))),
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: start,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {}", describe(self.peek())),
        }
    }

    fn expect(&mut self, t: Tok, wanted: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.power()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        match self.peek().clone() {
            Tok::UInt(k) => {
                let k = u32::try_from(k).map_err(|_| ParseError::Syntax {
                    offset: self.offset(),
                    message: format!("exponent {k} too large"),
                })?;
                self.bump();
                Ok(Expr::pow(base, k))
            }
            _ => Err(self.unexpected("a non-negative integer exponent")),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (offset, tok) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::UInt(u) => Ok(Expr::Const(u as f64)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(offset, name),
            other => Err(ParseError::Syntax {
                offset,
                message: format!("expected an operand, found {}", describe(&other)),
            }),
        }
    }

    fn ident(&mut self, offset: usize, name: String) -> Result<Expr, ParseError> {
        match name.as_str() {
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            "n" => return Ok(Expr::Index),
            _ => {}
        }
        let b = name.as_bytes();
        if b.len() == 2 && b[0] == b'x' && b[1].is_ascii_digit() {
            return Ok(Expr::Var(usize::from(b[1] - b'0')));
        }
        let Some(func) = Func::from_name(&name) else {
            return Err(ParseError::UnknownIdentifier { offset, name });
        };
        self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
        if *self.peek() == Tok::RParen {
            return Err(ParseError::CallArity {
                offset,
                func: func.name(),
                found: 0,
            });
        }
        let arg = self.expr()?;
        let mut found = 1;
        while *self.peek() == Tok::Comma {
            self.bump();
            self.expr()?;
            found += 1;
        }
        if found != 1 {
            return Err(ParseError::CallArity {
                offset,
                func: func.name(),
                found,
            });
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(Expr::call(func, arg))
    }
}

/// Parses a generator expression.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Func;

    #[test]
    fn single_productions() {
        assert_eq!(parse("x0^2").unwrap(), Expr::pow(Expr::Var(0), 2));
        assert_eq!(
            parse("atan(x0)").unwrap(),
            Expr::call(Func::Atan, Expr::Var(0))
        );
        assert_eq!(
            parse("abs(x0 - sqrt(2))").unwrap(),
            Expr::call(
                Func::Abs,
                Expr::bin(
                    BinOp::Sub,
                    Expr::Var(0),
                    Expr::call(Func::Sqrt, Expr::Const(2.0))
                )
            )
        );
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ binds tighter than unary minus
        assert_eq!(
            parse("-x0^2").unwrap(),
            Expr::neg(Expr::pow(Expr::Var(0), 2))
        );
        assert_eq!(
            parse("x0 - x1 - x2").unwrap(),
            Expr::bin(
                BinOp::Sub,
                Expr::bin(BinOp::Sub, Expr::Var(0), Expr::Var(1)),
                Expr::Var(2)
            )
        );
        assert_eq!(
            parse("1 + 2 * x0").unwrap(),
            Expr::bin(
                BinOp::Add,
                Expr::Const(1.0),
                Expr::bin(BinOp::Mul, Expr::Const(2.0), Expr::Var(0))
            )
        );
        assert_eq!(
            parse("x0 / x1 * x2").unwrap(),
            Expr::bin(
                BinOp::Mul,
                Expr::bin(BinOp::Div, Expr::Var(0), Expr::Var(1)),
                Expr::Var(2)
            )
        );
        // unary minus binds tighter than *
        assert_eq!(
            parse("-x0 * x1").unwrap(),
            Expr::bin(BinOp::Mul, Expr::neg(Expr::Var(0)), Expr::Var(1))
        );
    }

    #[test]
    fn atoms() {
        assert_eq!(parse(" pi ").unwrap(), Expr::Const(std::f64::consts::PI));
        assert_eq!(parse("n").unwrap(), Expr::Index);
        assert_eq!(parse("1e-4").unwrap(), Expr::Const(1e-4));
        assert_eq!(parse("2.5").unwrap(), Expr::Const(2.5));
        assert_eq!(parse("x9").unwrap(), Expr::Var(9));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let e = parse("x0 + ").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { offset: 5, .. }), "{e}");
        let e = parse("x0 $ 1").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { offset: 3, .. }), "{e}");
        let e = parse("(x0").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { offset: 3, .. }), "{e}");
        let e = parse("x0^2.5").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { offset: 3, .. }), "{e}");
        let e = parse("x0^-1").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { .. }), "{e}");
        let e = parse("--x0").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { offset: 1, .. }), "{e}");
        let e = parse("x0 x1").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { offset: 3, .. }), "{e}");
    }

    #[test]
    fn unknown_identifiers() {
        assert_eq!(
            parse("2 * y").unwrap_err(),
            ParseError::UnknownIdentifier {
                offset: 4,
                name: "y".into()
            }
        );
        assert!(matches!(
            parse("x10").unwrap_err(),
            ParseError::UnknownIdentifier { .. }
        ));
        assert!(matches!(
            parse("tan(x0)").unwrap_err(),
            ParseError::UnknownIdentifier { .. }
        ));
    }

    #[test]
    fn call_arity() {
        assert_eq!(
            parse("sin(x0, x1)").unwrap_err(),
            ParseError::CallArity {
                offset: 0,
                func: "sin",
                found: 2
            }
        );
        assert_eq!(
            parse("1 + exp()").unwrap_err(),
            ParseError::CallArity {
                offset: 4,
                func: "exp",
                found: 0
            }
        );
    }
}
