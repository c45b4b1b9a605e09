#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use uds_core::exprlang::{BinOp, Func};
use uds_core::{Domain, Expr, Interval, Space};

/// Random expression of depth at most `depth` over `x0..x{vars-1}` with
/// non-negative constants.
pub fn random_expr<R: Rng>(rng: &mut R, depth: usize, vars: usize) -> Expr {
    if depth <= 1 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.4) {
            Expr::Const((rng.gen_range(0.0..4.0f64) * 100.0).round() / 100.0)
        } else {
            Expr::Var(rng.gen_range(0..vars))
        };
    }
    let sub = |rng: &mut R| random_expr(rng, depth - 1, vars);
    match rng.gen_range(0..12) {
        0 => Expr::neg(sub(rng)),
        1..=4 => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.gen_range(0..4)];
            let a = sub(rng);
            Expr::bin(op, a, sub(rng))
        }
        5 | 6 => Expr::pow(sub(rng), rng.gen_range(0..5)),
        _ => Expr::call(*Func::ALL.choose(rng).unwrap(), sub(rng)),
    }
}

/// Random box with centres in `[-3, 3]` and widths in `[0, 2]`, and a point
/// inside it.
pub fn random_box_point<R: Rng>(rng: &mut R, vars: usize) -> (Vec<Interval>, Vec<f64>) {
    let mut b = Vec::new();
    let mut p = Vec::new();
    for _ in 0..vars {
        let c = rng.gen_range(-3.0..3.0);
        let w = if rng.gen_bool(0.1) {
            0.0
        } else {
            rng.gen_range(0.0..2.0)
        };
        let (lo, hi) = (c - w / 2.0, c + w / 2.0);
        let x = (lo + rng.gen::<f64>() * (hi - lo)).clamp(lo, hi);
        b.push(Interval::new(lo, hi));
        p.push(x);
    }
    (b, p)
}

pub fn real_box(lo: f64, hi: f64, grid: usize, gens: &[&str]) -> Space {
    let d = Domain::Box {
        lo: vec![lo],
        hi: vec![hi],
        grid: vec![grid],
    };
    Space::from_sources("line", d, gens).unwrap()
}

pub fn finite_space(points: Vec<Vec<f64>>, gens: &[&str]) -> Space {
    Space::from_sources("finite", Domain::FiniteSet { points }, gens).unwrap()
}
