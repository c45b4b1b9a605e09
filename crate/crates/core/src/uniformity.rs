//! Entourage inclusion and uniform continuity.
//!
//! `V(S, ε) ⊆ V(T, δ)` is a `∀`-statement over pairs, so it is attacked from
//! both sides: [`refute_inclusion`] searches for a pair inside the small
//! entourage and outside the large one, [`certify_inclusion`] runs an
//! interval branch-and-bound over pair boxes. Neither is complete; the
//! three-valued [`Verdict`] records which side, if any, succeeded.
//!
//! Uniform continuity of a map (`∀V ∃U, U ⊆ (f×f)⁻¹(V)`) is checked per
//! target entourage over a finite candidate schedule of source entourages.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::entourage::{Entourage, EntourageError, Pseudometric};
use crate::exprlang::{ArityMismatch, EvalError, Expr, Interval};
use crate::model::{Point, Space};

/// Outcome of an inclusion or continuity decision procedure.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    /// Every pair satisfying the small constraint satisfies the large one;
    /// `bound` is an upper bound on the large constraint's pseudometric over
    /// such pairs and is strictly below its radius.
    Certified { bound: f64, boxes_processed: u64 },
    /// `witness` satisfies the small constraint strictly and reaches the
    /// large radius by `margin ≥ 0`.
    Refuted {
        witness: (Point, Point),
        margin: f64,
    },
    /// Neither side succeeded. `best_bound` is the largest large-constraint
    /// value seen on feasible pairs (refutation) or the largest unresolved
    /// box bound (certification).
    Unknown {
        best_bound: f64,
        budget_exhausted: bool,
    },
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified { .. })
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }

    pub fn class(&self) -> &'static str {
        match self {
            Verdict::Certified { .. } => "certified",
            Verdict::Refuted { .. } => "refuted",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UniformityError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Entourage(#[from] EntourageError),
    #[error(transparent)]
    Arity(#[from] ArityMismatch),
    #[error("search box has arity {got}, space needs {need}")]
    BoxArity { got: usize, need: usize },
    #[error("search box is empty or unbounded")]
    BadBox,
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("map has {got} components but the target has arity {need}")]
    ComponentCount { got: usize, need: usize },
    #[error("map component {index} uses more variables than the source arity {arity}")]
    ComponentArity { index: usize, arity: usize },
    #[error("maps do not compose: first target and second source differ in arity")]
    Incompatible,
}

/// `{(x, y) : |e(x) − e(y)| < ε for every e}` for arbitrary expressions,
/// e.g. pulled-back generators.
#[derive(Debug, Clone, PartialEq)]
pub struct PairConstraint {
    pub exprs: Vec<Expr>,
    pub epsilon: f64,
}

impl PairConstraint {
    pub fn from_entourage(space: &Space, v: &Entourage) -> Result<PairConstraint, EntourageError> {
        v.check_against(space)?;
        Ok(PairConstraint {
            exprs: v.generators(space).into_iter().cloned().collect(),
            epsilon: v.epsilon(),
        })
    }

    /// `max_e |e(x) − e(y)|`.
    fn gap(&self, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
        let mut d: f64 = 0.0;
        for e in &self.exprs {
            d = d.max((e.eval_point(x, None)? - e.eval_point(y, None)?).abs());
        }
        Ok(d)
    }

    fn holds(&self, x: &[f64], y: &[f64]) -> Result<bool, EvalError> {
        for e in &self.exprs {
            let d = (e.eval_point(x, None)? - e.eval_point(y, None)?).abs();
            if !(d < self.epsilon) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn arity(&self) -> usize {
        self.exprs.iter().map(Expr::arity).max().unwrap_or(0)
    }
}

/// Re-checks a candidate witness by direct evaluation: every `sub`
/// constraint strict, some `sup` gap at least `sup.epsilon`. Returns the
/// margin by which `sup` is violated.
pub fn recheck_witness(
    sub: &PairConstraint,
    sup: &PairConstraint,
    x: &[f64],
    y: &[f64],
) -> Result<Option<f64>, EvalError> {
    if !sub.holds(x, y)? {
        return Ok(None);
    }
    let g = sup.gap(x, y)?;
    Ok((g >= sup.epsilon).then_some(g - sup.epsilon))
}

fn validate_box(b: &[Interval], need: usize) -> Result<(), UniformityError> {
    if b.len() < need {
        return Err(UniformityError::BoxArity { got: b.len(), need });
    }
    if b.is_empty() || b.iter().any(|i| i.is_unbounded() || !(i.lo <= i.hi)) {
        return Err(UniformityError::BadBox);
    }
    Ok(())
}

/// Steps of the geometric offset ladder walked from each base point.
const LADDER_STEPS: i32 = 64;
/// Bisection steps used to approach the edge of the small entourage.
const EDGE_BISECTIONS: u32 = 48;

struct RefuteSearch<'a> {
    sub: &'a PairConstraint,
    sup: &'a PairConstraint,
    bx: &'a [Interval],
    budget: u64,
    used: u64,
    best: f64,
}

enum Probe {
    Infeasible,
    Feasible,
    Witness(f64),
}

impl RefuteSearch<'_> {
    fn exhausted(&self) -> bool {
        self.used >= self.budget
    }

    fn probe(&mut self, x: &[f64], y: &[f64]) -> Result<Probe, EvalError> {
        self.used += 1;
        if !self.sub.holds(x, y)? {
            return Ok(Probe::Infeasible);
        }
        let g = self.sup.gap(x, y)?;
        self.best = self.best.max(g);
        Ok(if g >= self.sup.epsilon {
            Probe::Witness(g - self.sup.epsilon)
        } else {
            Probe::Feasible
        })
    }

    fn inside(&self, p: &[f64]) -> bool {
        self.bx.iter().zip(p).all(|(i, &v)| i.contains(v))
    }

    /// Walks `y = x + t·dir` down a geometric ladder of `t`; at the first
    /// feasible rung, bisects towards the last infeasible one, where the
    /// small constraint is nearly tight and the large one is most stretched.
    fn along(
        &mut self,
        x: &[f64],
        dir: &[f64],
        tmax: f64,
    ) -> Result<Option<(Point, f64)>, EvalError> {
        let at = |t: f64| -> Point { x.iter().zip(dir).map(|(&a, &d)| a + t * d).collect() };
        let mut infeasible_t: Option<f64> = None;
        for j in 0..=LADDER_STEPS {
            if self.exhausted() {
                return Ok(None);
            }
            let t = tmax * 2f64.powi(-j);
            let y = at(t);
            if !self.inside(&y) || y.as_slice() == x {
                continue;
            }
            match self.probe(x, &y)? {
                Probe::Witness(m) => return Ok(Some((y, m))),
                Probe::Infeasible => infeasible_t = Some(t),
                Probe::Feasible => {
                    let Some(mut hi) = infeasible_t else {
                        return Ok(None);
                    };
                    let mut lo = t;
                    for _ in 0..EDGE_BISECTIONS {
                        if self.exhausted() {
                            return Ok(None);
                        }
                        let mid = lo + 0.5 * (hi - lo);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        let y = at(mid);
                        match self.probe(x, &y)? {
                            Probe::Witness(m) => return Ok(Some((y, m))),
                            Probe::Feasible => lo = mid,
                            Probe::Infeasible => hi = mid,
                        }
                    }
                    return Ok(None);
                }
            }
        }
        Ok(None)
    }

    fn directions(&self) -> Vec<(Point, f64)> {
        let d = self.bx.len();
        let mut out = Vec::new();
        for axis in 0..d {
            let w = self.bx[axis].width();
            if w > 0.0 {
                for s in [-1.0, 1.0] {
                    let mut dir = vec![0.0; d];
                    dir[axis] = s;
                    out.push((dir, w));
                }
            }
        }
        if d > 1 {
            let w = self
                .bx
                .iter()
                .map(Interval::width)
                .fold(f64::INFINITY, f64::min);
            if w > 0.0 {
                for s in [-1.0, 1.0] {
                    out.push((vec![s; d], w));
                }
            }
        }
        out
    }

    /// Grid points at refinement `level` not already visited at coarser
    /// levels, boundary first.
    fn level_points(&self, level: u32) -> Option<Vec<Point>> {
        let d = self.bx.len();
        let per_axis = (1u64 << level) + 1;
        let total = per_axis.checked_pow(d as u32)?;
        if total > 4 * (self.budget - self.used) + 16 {
            return None;
        }
        let mut pts = Vec::new();
        let mut idx = vec![0u64; d];
        for _ in 0..total {
            let fresh = level == 0 || idx.iter().any(|&i| i % 2 == 1);
            if fresh {
                let p: Point = (0..d)
                    .map(|a| {
                        let i = self.bx[a];
                        if idx[a] + 1 == per_axis {
                            i.hi
                        } else {
                            i.lo + i.width() * idx[a] as f64 / (per_axis - 1) as f64
                        }
                    })
                    .collect();
                let depth = idx
                    .iter()
                    .map(|&i| i.min(per_axis - 1 - i))
                    .min()
                    .unwrap_or(0);
                pts.push((depth, p));
            }
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < per_axis {
                    break;
                }
                idx[a] = 0;
            }
        }
        pts.sort_by_key(|(depth, _)| *depth);
        Some(pts.into_iter().map(|(_, p)| p).collect())
    }

    fn run(&mut self) -> Result<Verdict, EvalError> {
        let dirs = self.directions();
        let mut level = 0;
        while !self.exhausted() && !dirs.is_empty() {
            let Some(points) = self.level_points(level) else {
                break;
            };
            for x in &points {
                for (dir, tmax) in &dirs {
                    if let Some((y, margin)) = self.along(x, dir, *tmax)? {
                        return Ok(Verdict::Refuted {
                            witness: (x.clone(), y),
                            margin,
                        });
                    }
                    if self.exhausted() {
                        break;
                    }
                }
            }
            level += 1;
        }
        Ok(Verdict::Unknown {
            best_bound: self.best,
            budget_exhausted: self.exhausted() || !dirs.is_empty(),
        })
    }
}

/// A verdict with the work spent reaching it: pair evaluations for
/// refutation, processed pair boxes for certification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counted {
    pub verdict: Verdict,
    pub work: u64,
}

/// Searches the box for a pair in `sub` but outside `sup`. `budget` counts
/// pair evaluations. Never returns `Certified`.
pub fn refute_constraints(
    sub: &PairConstraint,
    sup: &PairConstraint,
    search_box: &[Interval],
    budget: u64,
) -> Result<Verdict, UniformityError> {
    refute_counted(sub, sup, search_box, budget).map(|c| c.verdict)
}

pub fn refute_counted(
    sub: &PairConstraint,
    sup: &PairConstraint,
    search_box: &[Interval],
    budget: u64,
) -> Result<Counted, UniformityError> {
    validate_box(search_box, sub.arity().max(sup.arity()))?;
    if budget == 0 {
        return Err(UniformityError::ZeroBudget);
    }
    let mut search = RefuteSearch {
        sub,
        sup,
        bx: search_box,
        budget,
        used: 0,
        best: 0.0,
    };
    let verdict = search.run()?;
    Ok(Counted {
        verdict,
        work: search.used,
    })
}

pub fn refute_inclusion(
    space: &Space,
    sub: &Entourage,
    sup: &Entourage,
    search_box: &[Interval],
    budget: u64,
) -> Result<Verdict, UniformityError> {
    validate_box(search_box, space.arity())?;
    refute_constraints(
        &PairConstraint::from_entourage(space, sub)?,
        &PairConstraint::from_entourage(space, sup)?,
        search_box,
        budget,
    )
}

/// Refutation on boxes doubled about the centre of `start`, `0..=expansions`
/// times, splitting the evaluation budget evenly. Returns the verdict and
/// the box it was reached on.
pub fn refute_expanding(
    sub: &PairConstraint,
    sup: &PairConstraint,
    start: &[Interval],
    budget: u64,
    expansions: u32,
) -> Result<(Verdict, Vec<Interval>), UniformityError> {
    let per_box = (budget / (u64::from(expansions) + 1)).max(1);
    let mut best: f64 = 0.0;
    let mut last = start.to_vec();
    for k in 0..=expansions {
        let scale = 2f64.powi(k as i32);
        let bx: Vec<Interval> = start
            .iter()
            .map(|i| {
                let c = i.mid();
                let h = 0.5 * i.width() * scale;
                Interval::new(c - h, c + h)
            })
            .collect();
        if bx.iter().any(Interval::is_unbounded) {
            break;
        }
        match refute_constraints(sub, sup, &bx, per_box)? {
            v @ Verdict::Refuted { .. } => return Ok((v, bx)),
            Verdict::Unknown { best_bound, .. } => best = best.max(best_bound),
            Verdict::Certified { .. } => unreachable!("refutation never certifies"),
        }
        last = bx;
    }
    Ok((
        Verdict::Unknown {
            best_bound: best,
            budget_exhausted: true,
        },
        last,
    ))
}

struct Node {
    bx: Vec<Interval>,
    ub: f64,
    id: u64,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Max-heap order: largest upper bound first, then the older box.
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        self.ub.total_cmp(&o.ub).then_with(|| o.id.cmp(&self.id))
    }
}

enum Assessment {
    Infeasible,
    Bounded(f64),
}

/// Branch-and-bound certification of `sub ⊆ sup` over `b × b`; `budget`
/// counts processed pair boxes.
///
/// A `sup` expression that also appears in `sub` with a radius no larger
/// than `sup`'s is implied and dropped from the objective.
pub fn certify_constraints(
    sub: &PairConstraint,
    sup: &PairConstraint,
    b: &[Interval],
    budget: u64,
) -> Result<Verdict, UniformityError> {
    certify_counted(sub, sup, b, budget).map(|c| c.verdict)
}

pub fn certify_counted(
    sub: &PairConstraint,
    sup: &PairConstraint,
    b: &[Interval],
    budget: u64,
) -> Result<Counted, UniformityError> {
    let mut processed = 0;
    let verdict = certify_impl(sub, sup, b, budget, &mut processed)?;
    Ok(Counted {
        verdict,
        work: processed,
    })
}

fn certify_impl(
    sub: &PairConstraint,
    sup: &PairConstraint,
    b: &[Interval],
    budget: u64,
    processed: &mut u64,
) -> Result<Verdict, UniformityError> {
    validate_box(b, sub.arity().max(sup.arity()))?;
    if budget == 0 {
        return Err(UniformityError::ZeroBudget);
    }
    let d = b.len();
    let implied = |e: &Expr| sub.epsilon <= sup.epsilon && sub.exprs.contains(e);
    let objective: Vec<&Expr> = sup.exprs.iter().filter(|e| !implied(e)).collect();
    let mut bound = if objective.len() < sup.exprs.len() {
        sub.epsilon.next_down()
    } else {
        0.0
    };
    if objective.is_empty() {
        return Ok(Verdict::Certified {
            bound,
            boxes_processed: 0,
        });
    }

    let assess = |bx: &[Interval]| -> Result<Assessment, EvalError> {
        let (xs, ys) = bx.split_at(d);
        for e in &sub.exprs {
            let gap = e.eval_interval(xs, None)?.sub(e.eval_interval(ys, None)?);
            if gap.mig() >= sub.epsilon {
                return Ok(Assessment::Infeasible);
            }
        }
        let mut ub: f64 = 0.0;
        for e in &objective {
            let gap = e.eval_interval(xs, None)?.sub(e.eval_interval(ys, None)?);
            ub = ub.max(gap.mag());
        }
        Ok(Assessment::Bounded(ub))
    };

    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    let mut unresolved: Option<f64> = None;
    let root: Vec<Interval> = b.iter().chain(b.iter()).copied().collect();
    match assess(&root)? {
        Assessment::Infeasible => {}
        Assessment::Bounded(ub) if ub < sup.epsilon => bound = bound.max(ub),
        Assessment::Bounded(ub) => {
            heap.push(Node {
                bx: root,
                ub,
                id: next_id,
            });
            next_id += 1;
        }
    }

    while let Some(node) = heap.pop() {
        if *processed >= budget {
            return Ok(Verdict::Unknown {
                best_bound: node.ub,
                budget_exhausted: true,
            });
        }
        *processed += 1;
        let (xs, ys) = node.bx.split_at(d);
        let x: Point = xs.iter().map(Interval::mid).collect();
        let y: Point = ys.iter().map(Interval::mid).collect();
        if let Some(margin) = recheck_witness(sub, sup, &x, &y)? {
            return Ok(Verdict::Refuted {
                witness: (x, y),
                margin,
            });
        }

        let widest = |half: &[Interval], offset: usize| {
            half.iter()
                .enumerate()
                .map(|(i, iv)| (iv.width(), offset + i))
                .fold(
                    (f64::NEG_INFINITY, offset),
                    |a, c| if c.0 > a.0 { c } else { a },
                )
        };
        let wx = widest(xs, 0);
        let wy = widest(ys, d);
        let (width, axis) = if wy.0 > wx.0 { wy } else { wx };
        let (left, right) = node.bx[axis].split();
        if !(width > 0.0) || left.hi <= left.lo || right.hi <= right.lo {
            unresolved = Some(unresolved.map_or(node.ub, |u| u.max(node.ub)));
            continue;
        }
        for half in [left, right] {
            let mut child = node.bx.clone();
            child[axis] = half;
            match assess(&child)? {
                Assessment::Infeasible => {}
                Assessment::Bounded(ub) if ub < sup.epsilon => bound = bound.max(ub),
                Assessment::Bounded(ub) => {
                    heap.push(Node {
                        bx: child,
                        ub,
                        id: next_id,
                    });
                    next_id += 1;
                }
            }
        }
    }
    Ok(match unresolved {
        Some(best_bound) => Verdict::Unknown {
            best_bound,
            budget_exhausted: false,
        },
        None => Verdict::Certified {
            bound,
            boxes_processed: *processed,
        },
    })
}

pub fn certify_inclusion(
    space: &Space,
    sub: &Entourage,
    sup: &Entourage,
    b: &[Interval],
    budget: u64,
) -> Result<Verdict, UniformityError> {
    validate_box(b, space.arity())?;
    certify_constraints(
        &PairConstraint::from_entourage(space, sub)?,
        &PairConstraint::from_entourage(space, sup)?,
        b,
        budget,
    )
}

/// A map between spaces given by one expression per target coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceMap {
    pub source: Space,
    pub target: Space,
    pub components: Vec<Expr>,
}

impl SpaceMap {
    pub fn new(
        source: Space,
        target: Space,
        components: Vec<Expr>,
    ) -> Result<SpaceMap, UniformityError> {
        if components.len() != target.arity() {
            return Err(UniformityError::ComponentCount {
                got: components.len(),
                need: target.arity(),
            });
        }
        let arity = source.arity();
        if let Some(index) = components
            .iter()
            .position(|c| c.arity() > arity || c.uses_index())
        {
            return Err(UniformityError::ComponentArity { index, arity });
        }
        Ok(SpaceMap {
            source,
            target,
            components,
        })
    }

    pub fn identity(space: Space) -> SpaceMap {
        let components = (0..space.arity()).map(Expr::Var).collect();
        SpaceMap {
            source: space.clone(),
            target: space,
            components,
        }
    }

    pub fn apply(&self, p: &[f64]) -> Result<Point, EvalError> {
        self.components
            .iter()
            .map(|c| c.eval_point(p, None))
            .collect()
    }

    /// `e ∘ m` as an expression on the source.
    pub fn pull_back(&self, e: &Expr) -> Result<Expr, ArityMismatch> {
        e.compose(&self.components)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &SpaceMap) -> Result<SpaceMap, UniformityError> {
        if self.target.arity() != next.source.arity() {
            return Err(UniformityError::Incompatible);
        }
        let components = next
            .components
            .iter()
            .map(|c| c.compose(&self.components))
            .collect::<Result<_, _>>()?;
        Ok(SpaceMap {
            source: self.source.clone(),
            target: next.target.clone(),
            components,
        })
    }
}

/// `σ(x, y) = ρ(m(x), m(y))` for a target pseudometric `ρ`.
#[derive(Debug, Clone)]
pub struct PullbackPseudometric {
    map: SpaceMap,
    target: Pseudometric,
}

impl PullbackPseudometric {
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
        self.target
            .distance(&self.map.apply(x)?, &self.map.apply(y)?)
    }

    /// The same pseudometric with the generators composed symbolically.
    pub fn composed(&self) -> Result<Pseudometric, ArityMismatch> {
        Ok(Pseudometric::new(
            self.target
                .exprs()
                .iter()
                .map(|e| self.map.pull_back(e))
                .collect::<Result<_, _>>()?,
        ))
    }
}

pub fn pullback_pseudometric(
    m: &SpaceMap,
    target_gen_indices: &[usize],
) -> Result<PullbackPseudometric, EntourageError> {
    Ok(PullbackPseudometric {
        map: m.clone(),
        target: Pseudometric::for_generators(&m.target, target_gen_indices)?,
    })
}

/// Schedule and budgets for [`check_uniform_map`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapCheckOptions {
    /// Candidate radii are `δ·2^{-t}` for `t = 0..=levels`.
    pub levels: u32,
    /// Pair evaluations per candidate refutation, over all expansions.
    pub refute_budget: u64,
    /// Box doublings tried by the refutation search.
    pub expansions: u32,
    /// Pair boxes per candidate certification.
    pub certify_budget: u64,
    /// Largest generator subset tried; `None` means the whole family.
    pub max_subset: Option<usize>,
}

impl Default for MapCheckOptions {
    fn default() -> Self {
        MapCheckOptions {
            levels: 20,
            refute_budget: 20_000,
            expansions: 40,
            certify_budget: 10_000,
            max_subset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateOutcome {
    /// Candidate source entourage `V(S, ε)`.
    pub source: String,
    pub verdict: Verdict,
    /// Box the verdict was reached on.
    pub search_box: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum MapVerdict {
    /// `source` is a certified source entourage for the target.
    Certified {
        source: String,
        bound: f64,
        boxes_processed: u64,
    },
    /// Every candidate in the schedule was refuted; the witness is the one
    /// for the last (finest) candidate.
    Refuted {
        candidates: usize,
        witness: (Point, Point),
        margin: f64,
    },
    Unknown {
        candidates: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetReport {
    pub target: String,
    pub verdict: MapVerdict,
    pub candidates: Vec<CandidateOutcome>,
}

/// Non-empty subsets of `0..n` by size, then lexicographically.
fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for k in 1..=max.min(n) {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

fn check_target(
    m: &SpaceMap,
    target: &Entourage,
    source_box: &[Interval],
    opts: &MapCheckOptions,
) -> Result<TargetReport, UniformityError> {
    target.check_against(&m.target)?;
    let sup = PairConstraint {
        exprs: target
            .generators(&m.target)
            .into_iter()
            .map(|g| m.pull_back(g))
            .collect::<Result<_, _>>()?,
        epsilon: target.epsilon(),
    };
    let family = subsets(
        m.source.generators.len(),
        opts.max_subset.unwrap_or(usize::MAX),
    );
    let mut candidates = Vec::new();
    let mut all_refuted = true;
    let mut last_witness = None;
    for t in 0..=opts.levels {
        let eps = target.epsilon() * 2f64.powi(-(t as i32));
        for s in &family {
            let cand = Entourage::new(s.iter().copied(), eps)?;
            let sub = PairConstraint::from_entourage(&m.source, &cand)?;
            let (verdict, bx) =
                refute_expanding(&sub, &sup, source_box, opts.refute_budget, opts.expansions)?;
            let (verdict, bx) = if verdict.is_refuted() {
                (verdict, bx)
            } else {
                (
                    certify_constraints(&sub, &sup, source_box, opts.certify_budget)?,
                    source_box.to_vec(),
                )
            };
            match &verdict {
                Verdict::Certified {
                    bound,
                    boxes_processed,
                } => {
                    let v = MapVerdict::Certified {
                        source: cand.to_string(),
                        bound: *bound,
                        boxes_processed: *boxes_processed,
                    };
                    candidates.push(CandidateOutcome {
                        source: cand.to_string(),
                        verdict,
                        search_box: bx,
                    });
                    return Ok(TargetReport {
                        target: target.to_string(),
                        verdict: v,
                        candidates,
                    });
                }
                Verdict::Refuted { witness, margin } => {
                    last_witness = Some((witness.clone(), *margin));
                }
                Verdict::Unknown { .. } => all_refuted = false,
            }
            candidates.push(CandidateOutcome {
                source: cand.to_string(),
                verdict,
                search_box: bx,
            });
        }
    }
    let verdict = match (all_refuted, last_witness) {
        (true, Some((witness, margin))) => MapVerdict::Refuted {
            candidates: candidates.len(),
            witness,
            margin,
        },
        _ => MapVerdict::Unknown {
            candidates: candidates.len(),
        },
    };
    Ok(TargetReport {
        target: target.to_string(),
        verdict,
        candidates,
    })
}

/// Decides uniform continuity of `m` target by target.
///
/// For each target entourage `V(T, δ)` the generators in `T` are pulled back
/// through `m`, and candidate source entourages `V(S, δ·2^{-t})` are tried
/// coarsest radius first and, within a radius, smallest generator subset
/// first. A candidate is discarded when the refutation search finds a
/// counterexample pair on boxes expanding from `source_box`; otherwise it is
/// certified on `source_box` itself. The first certified candidate is
/// reported; when every candidate is refuted the target is `Refuted`.
///
/// Targets are checked in parallel; each report is independent of the
/// worker count.
pub fn check_uniform_map(
    m: &SpaceMap,
    targets: &[Entourage],
    source_box: &[Interval],
    opts: &MapCheckOptions,
) -> Result<Vec<TargetReport>, UniformityError> {
    validate_box(source_box, m.source.arity())?;
    targets
        .par_iter()
        .map(|t| check_target(m, t, source_box, opts))
        .collect()
}
