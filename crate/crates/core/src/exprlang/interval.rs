use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{pow_chain, BinOp, EvalError, Expr, Func};

/// Closed interval `[lo, hi]`. Endpoints may be infinite after overflow, in
/// which case [`Interval::is_unbounded`] reports it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// A box is one interval per variable.
pub type IBox = Vec<Interval>;

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Interval {
        Interval { lo: x, hi: x }
    }

    pub fn entire() -> Interval {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        !(self.lo.is_finite() && self.hi.is_finite())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_finite() && self.hi.is_finite() {
            let m = self.lo + 0.5 * (self.hi - self.lo);
            if m.is_finite() {
                return m;
            }
            return 0.5 * self.lo + 0.5 * self.hi;
        }
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, false) => self.lo.max(0.0),
            (false, true) => self.hi.min(0.0),
            _ => 0.0,
        }
    }

    pub fn split(&self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval::new(self.lo, m), Interval::new(m, self.hi))
    }

    /// Largest absolute value attained.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value attained.
    pub fn mig(&self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    fn widen(lo: f64, hi: f64) -> Interval {
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    /// Widening for results known to be non-negative: the lower endpoint is
    /// clamped at zero so that, e.g., `sqrt(x0^2)` stays well defined.
    fn widen_nonneg(lo: f64, hi: f64) -> Interval {
        Interval {
            lo: lo.next_down().max(0.0),
            hi: hi.next_up(),
        }
    }

    pub fn neg(self) -> Interval {
        Interval::widen(-self.hi, -self.lo)
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval::widen(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn sub(self, o: Interval) -> Interval {
        Interval::widen(self.lo - o.hi, self.hi - o.lo)
    }

    pub fn mul(self, o: Interval) -> Interval {
        let c = [
            mul0(self.lo, o.lo),
            mul0(self.lo, o.hi),
            mul0(self.hi, o.lo),
            mul0(self.hi, o.hi),
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::widen(lo, hi)
    }

    pub fn div(self, o: Interval) -> Result<Interval, EvalError> {
        if o.contains_zero() {
            return Err(EvalError::DenominatorContainsZero(o));
        }
        let recip = Interval::widen(1.0 / o.hi, 1.0 / o.lo);
        // a recip endpoint may have crossed zero through widening
        let recip = if o.lo > 0.0 {
            Interval::new(recip.lo.max(0.0), recip.hi)
        } else {
            Interval::new(recip.lo, recip.hi.min(-0.0))
        };
        Ok(self.mul(recip))
    }

    pub fn powi(self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(1.0);
        }
        if k % 2 == 1 {
            return Interval::widen(pow_chain(self.lo, k), pow_chain(self.hi, k));
        }
        let a = self.abs_exact();
        Interval::widen_nonneg(pow_chain(a.lo, k), pow_chain(a.hi, k))
    }

    fn abs_exact(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            Interval::new(-self.hi, -self.lo)
        } else {
            Interval::new(0.0, (-self.lo).max(self.hi))
        }
    }

    pub fn abs(self) -> Interval {
        let a = self.abs_exact();
        Interval::widen_nonneg(a.lo, a.hi)
    }

    pub fn exp(self) -> Interval {
        Interval::widen_nonneg(self.lo.exp(), self.hi.exp())
    }

    pub fn atan(self) -> Interval {
        let r = Interval::widen(self.lo.atan(), self.hi.atan());
        Interval::new(
            r.lo.max(-FRAC_PI_2.next_up()),
            r.hi.min(FRAC_PI_2.next_up()),
        )
    }

    pub fn sqrt(self) -> Result<Interval, EvalError> {
        if self.lo < 0.0 {
            return Err(EvalError::SqrtIntervalNegative(self));
        }
        Ok(Interval::widen_nonneg(self.lo.sqrt(), self.hi.sqrt()))
    }

    pub fn sin(self) -> Interval {
        self.periodic(f64::sin, FRAC_PI_2, -FRAC_PI_2)
    }

    pub fn cos(self) -> Interval {
        self.periodic(f64::cos, 0.0, PI)
    }

    /// Range of a 2π-periodic unit-amplitude function with maxima at
    /// `max_phase + 2kπ` and minima at `min_phase + 2kπ`.
    fn periodic(self, f: fn(f64) -> f64, max_phase: f64, min_phase: f64) -> Interval {
        const REDUCTION_LIMIT: f64 = 1e6;
        if self.is_unbounded()
            || self.width() >= TAU
            || self.lo.abs() > REDUCTION_LIMIT
            || self.hi.abs() > REDUCTION_LIMIT
        {
            return Interval::new(-1.0, 1.0);
        }
        let (a, b) = (f(self.lo), f(self.hi));
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if hits_phase(self.lo, self.hi, max_phase) {
            hi = 1.0;
        }
        if hits_phase(self.lo, self.hi, min_phase) {
            lo = -1.0;
        }
        let w = Interval::widen(lo, hi);
        Interval::new(w.lo.max(-1.0), w.hi.min(1.0))
    }
}

/// Whether `[lo, hi]` (slightly enlarged) contains `phase + 2kπ` for some k.
fn hits_phase(lo: f64, hi: f64, phase: f64) -> bool {
    const SLACK: f64 = 1e-9;
    let k_hi = ((hi - phase) / TAU + SLACK).floor();
    let k_lo = ((lo - phase) / TAU - SLACK).ceil();
    k_lo <= k_hi
}

/// Endpoint product with the interval convention `0 * inf = 0`.
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Expr {
    /// Sound enclosure of the range over a box: for every point `p` of the
    /// box, `eval_point(p)` lies in the returned interval.
    ///
    /// The sequence index, if referenced, is evaluated at `n`.
    pub fn eval_interval(&self, b: &[Interval], n: Option<u64>) -> Result<Interval, EvalError> {
        Ok(match self {
            Expr::Const(c) => Interval::point(*c),
            Expr::Var(i) => *b.get(*i).ok_or(EvalError::VarOutOfRange {
                index: *i,
                arity: b.len(),
            })?,
            Expr::Index => Interval::point(n.ok_or(EvalError::MissingIndex)? as f64),
            Expr::Neg(e) => e.eval_interval(b, n)?.neg(),
            Expr::Bin(op, l, r) => {
                let l = l.eval_interval(b, n)?;
                let r = r.eval_interval(b, n)?;
                match op {
                    BinOp::Add => l.add(r),
                    BinOp::Sub => l.sub(r),
                    BinOp::Mul => l.mul(r),
                    BinOp::Div => l.div(r)?,
                }
            }
            Expr::Pow(e, k) => e.eval_interval(b, n)?.powi(*k),
            Expr::Call(f, e) => {
                let x = e.eval_interval(b, n)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Atan => x.atan(),
                    Func::Abs => x.abs(),
                    Func::Sqrt => x.sqrt()?,
                }
            }
        })
    }
}
