//! Inclusion verdicts against a dense pair-grid oracle.

use uds_core::uniformity::{certify_constraints, refute_constraints, PairConstraint, Verdict};
use uds_core::{parse, Interval};

struct Instance {
    name: &'static str,
    sub: (&'static [&'static str], f64),
    sup: (&'static [&'static str], f64),
    lo: f64,
    hi: f64,
    dim: usize,
}

const CATALOG: &[Instance] = &[
    Instance {
        name: "lipschitz square",
        sub: (&["x0"], 0.49),
        sup: (&["x0^2"], 1.0),
        lo: -1.0,
        hi: 1.0,
        dim: 1,
    },
    Instance {
        name: "loose square",
        sub: (&["x0"], 0.5),
        sup: (&["x0^2"], 0.5),
        lo: -1.0,
        hi: 1.0,
        dim: 1,
    },
    Instance {
        name: "boundary square",
        sub: (&["x0"], 1.0),
        sup: (&["x0^2"], 1.0),
        lo: -1.0,
        hi: 1.0,
        dim: 1,
    },
    Instance {
        name: "sine controls identity",
        sub: (&["sin(x0)"], 0.1),
        sup: (&["x0"], 1.0),
        lo: -1.0,
        hi: 1.0,
        dim: 1,
    },
    Instance {
        name: "steep exponential",
        sub: (&["x0"], 0.1),
        sup: (&["exp(x0)"], 0.3),
        lo: 0.0,
        hi: 2.0,
        dim: 1,
    },
    Instance {
        name: "arctangent controls identity",
        sub: (&["atan(x0)"], 0.05),
        sup: (&["x0"], 0.5),
        lo: -3.0,
        hi: 3.0,
        dim: 1,
    },
    Instance {
        name: "product",
        sub: (&["x0", "x1"], 0.1),
        sup: (&["x0 * x1"], 0.5),
        lo: -2.0,
        hi: 2.0,
        dim: 2,
    },
    Instance {
        name: "loose product",
        sub: (&["x0", "x1"], 0.3),
        sup: (&["x0 * x1"], 0.5),
        lo: -2.0,
        hi: 2.0,
        dim: 2,
    },
];

fn constraint(c: (&[&str], f64)) -> PairConstraint {
    PairConstraint {
        exprs: c.0.iter().map(|s| parse(s).unwrap()).collect(),
        epsilon: c.1,
    }
}

/// Direct arithmetic: every sub constraint strict, some sup gap at least
/// the sup radius.
fn violates(sub: &PairConstraint, sup: &PairConstraint, x: &[f64], y: &[f64]) -> bool {
    let gap = |e: &uds_core::Expr| {
        (e.eval_point(x, None).unwrap() - e.eval_point(y, None).unwrap()).abs()
    };
    sub.exprs.iter().all(|e| gap(e) < sub.epsilon)
        && sup.exprs.iter().any(|e| gap(e) >= sup.epsilon)
}

/// Dense grid with at least 10⁶ ordered pairs; returns a violating pair if
/// the grid contains one.
fn grid_oracle(
    inst: &Instance,
    sub: &PairConstraint,
    sup: &PairConstraint,
) -> (u64, Option<(Vec<f64>, Vec<f64>)>) {
    let per_axis = if inst.dim == 1 { 1001 } else { 32 };
    let axis: Vec<f64> = (0..per_axis)
        .map(|j| inst.lo + (inst.hi - inst.lo) * j as f64 / (per_axis - 1) as f64)
        .collect();
    let pts: Vec<Vec<f64>> = if inst.dim == 1 {
        axis.iter().map(|&a| vec![a]).collect()
    } else {
        axis.iter()
            .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
            .collect()
    };
    let mut pairs = 0u64;
    for x in &pts {
        for y in &pts {
            pairs += 1;
            if violates(sub, sup, x, y) {
                return (pairs, Some((x.clone(), y.clone())));
            }
        }
    }
    (pairs, None)
}

#[test]
fn verdicts_agree_with_dense_grid() {
    for inst in CATALOG {
        let (sub, sup) = (constraint(inst.sub), constraint(inst.sup));
        let (pairs, violation) = grid_oracle(inst, &sub, &sup);
        assert!(violation.is_some() || pairs >= 1_000_000, "{}", inst.name);
        let bx = vec![Interval::new(inst.lo, inst.hi); inst.dim];
        let mut certified_at = None;
        let mut refuted_at = None;
        for (step, budget) in [1u64, 10, 100, 1_000, 10_000, 100_000]
            .into_iter()
            .enumerate()
        {
            let c = certify_constraints(&sub, &sup, &bx, budget).unwrap();
            let r = refute_constraints(&sub, &sup, &bx, budget).unwrap();
            for v in [&c, &r] {
                match v {
                    Verdict::Certified { bound, .. } => {
                        assert!(
                            violation.is_none(),
                            "{}: certified a violated inclusion",
                            inst.name
                        );
                        assert!(*bound < sup.epsilon);
                        certified_at.get_or_insert(step);
                    }
                    Verdict::Refuted {
                        witness: (x, y),
                        margin,
                    } => {
                        assert!(
                            violates(&sub, &sup, x, y),
                            "{}: bad witness {x:?} {y:?}",
                            inst.name
                        );
                        assert!(*margin >= 0.0);
                        refuted_at.get_or_insert(step);
                    }
                    Verdict::Unknown { .. } => {}
                }
            }
            if let Some(s) = certified_at {
                assert!(
                    s <= step && !r.is_refuted() && !c.is_refuted(),
                    "{}: verdict flipped",
                    inst.name
                );
                if s < step {
                    assert!(
                        c.is_certified(),
                        "{}: certification lost with more budget",
                        inst.name
                    );
                }
            }
            if let Some(s) = refuted_at {
                if s < step {
                    assert!(
                        c.is_refuted() || r.is_refuted(),
                        "{}: refutation lost with more budget",
                        inst.name
                    );
                }
            }
        }
        assert!(
            certified_at.is_none() || refuted_at.is_none(),
            "{}",
            inst.name
        );
        if violation.is_some() {
            assert!(
                refuted_at.is_some(),
                "{}: grid violation not found",
                inst.name
            );
        }
    }
}

#[test]
fn boundary_instance_is_never_refuted_by_certification() {
    let inst = &CATALOG[2];
    let bx = vec![Interval::new(inst.lo, inst.hi)];
    for budget in [10, 1_000, 10_000] {
        let v =
            certify_constraints(&constraint(inst.sub), &constraint(inst.sup), &bx, budget).unwrap();
        assert!(!v.is_refuted(), "{v:?}");
    }
}
