//! Extensions of a generated structure from `M` to a larger `N`.
//!
//! An extension assigns to each inner generator a function on `N`. It is a
//! genuine extension when it restricts to the inner generator on `M`;
//! whether it is continuous is judged at the scale of the outer grid by
//! comparing jumps across grid edges with the inner generators' own
//! oscillation at that step.
//!
//! The zero extension `f₀` (equal to `f` on `M`, zero elsewhere) is
//! piecewise and cannot be written in the expression language, so it is
//! evaluated directly on the samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exprlang::{parse, EvalError, Expr, ParseError};
use crate::model::{Domain, DomainDoc, Point, Sample, Space, SpaceDoc, SpaceError};

/// Relative tolerance for identifying inner sample points with outer ones;
/// grids over different boxes land on the same reals only up to rounding.
pub const MATCH_TOLERANCE: f64 = 1e-12;

/// Relative widening of the grid step when collecting inner neighbours.
const STEP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtensionError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("malformed extension document: {0}")]
    Schema(String),
    #[error("extended generator {index}: {source}")]
    Generator { index: usize, source: ParseError },
    #[error("{got} extended generators for {need} inner generators")]
    GeneratorCount { got: usize, need: usize },
    #[error("extended generator {index} does not fit the outer domain")]
    GeneratorArity { index: usize },
    #[error("zero extension refers to missing inner generator {0}")]
    BadInnerGenerator(usize),
    #[error("inner and outer domains have different arity")]
    DomainArity,
    #[error("inner sample point {0:?} is not in the outer sample")]
    NotContained(Point),
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Point, source: EvalError },
    #[error("continuity checks need a gridded box as outer domain")]
    NotBox,
    #[error("slack must be non-negative")]
    BadSlack,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExtendedGenerator {
    Expr(Expr),
    /// Inner generator `inner_generator` on `M`, zero on `N ∖ M`.
    ZeroExtension {
        inner_generator: usize,
    },
}

impl std::fmt::Display for ExtendedGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtendedGenerator::Expr(e) => write!(f, "{e}"),
            ExtendedGenerator::ZeroExtension { inner_generator } => {
                write!(f, "zero_extend(f{inner_generator})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSpec {
    pub inner: Space,
    pub outer_domain: Domain,
    pub generators: Vec<ExtendedGenerator>,
    inner_sample: Sample,
    outer_sample: Sample,
    /// For each outer sample point, the inner sample point it coincides with.
    inner_of_outer: Vec<Option<usize>>,
    /// For each inner sample point, the outer sample point it coincides with.
    outer_of_inner: Vec<usize>,
}

fn same_real(a: f64, b: f64) -> bool {
    (a - b).abs() <= MATCH_TOLERANCE * 1f64.max(a.abs()).max(b.abs())
}

fn same_point(p: &[f64], q: &[f64]) -> bool {
    p.len() == q.len() && p.iter().zip(q).all(|(&a, &b)| same_real(a, b))
}

/// Matches every inner point to an outer one.
fn match_samples(inner: &Sample, outer: &Sample) -> Result<Vec<usize>, ExtensionError> {
    let mut order: Vec<usize> = (0..outer.points.len()).collect();
    order.sort_by(|&a, &b| outer.points[a][0].total_cmp(&outer.points[b][0]));
    inner
        .points
        .iter()
        .map(|p| {
            let reach = MATCH_TOLERANCE * 1f64.max(p[0].abs()) * 2.0;
            let start = order.partition_point(|&i| outer.points[i][0] < p[0] - reach);
            order[start..]
                .iter()
                .take_while(|&&i| outer.points[i][0] <= p[0] + reach)
                .copied()
                .find(|&i| same_point(p, &outer.points[i]))
                .ok_or_else(|| ExtensionError::NotContained(p.clone()))
        })
        .collect()
}

fn eval_at(e: &Expr, p: &[f64]) -> Result<f64, ExtensionError> {
    e.eval_point(p, None)
        .map_err(|source| ExtensionError::Eval {
            point: p.to_vec(),
            source,
        })
}

impl ExtensionSpec {
    pub fn new(
        inner: Space,
        outer_domain: Domain,
        generators: Vec<ExtendedGenerator>,
    ) -> Result<ExtensionSpec, ExtensionError> {
        outer_domain.validate()?;
        if outer_domain.arity() != inner.arity() {
            return Err(ExtensionError::DomainArity);
        }
        if generators.len() != inner.generators.len() {
            return Err(ExtensionError::GeneratorCount {
                got: generators.len(),
                need: inner.generators.len(),
            });
        }
        for (index, g) in generators.iter().enumerate() {
            match g {
                ExtendedGenerator::Expr(e)
                    if e.arity() > outer_domain.arity() || e.uses_index() =>
                {
                    return Err(ExtensionError::GeneratorArity { index });
                }
                ExtendedGenerator::ZeroExtension { inner_generator }
                    if *inner_generator >= inner.generators.len() =>
                {
                    return Err(ExtensionError::BadInnerGenerator(*inner_generator));
                }
                _ => {}
            }
        }
        let inner_sample = inner.sample()?;
        let outer_sample = outer_domain.sample()?;
        let outer_of_inner = match_samples(&inner_sample, &outer_sample)?;
        let mut inner_of_outer = vec![None; outer_sample.points.len()];
        for (i, &o) in outer_of_inner.iter().enumerate() {
            inner_of_outer[o].get_or_insert(i);
        }
        Ok(ExtensionSpec {
            inner,
            outer_domain,
            generators,
            inner_sample,
            outer_sample,
            inner_of_outer,
            outer_of_inner,
        })
    }

    pub fn inner_sample(&self) -> &Sample {
        &self.inner_sample
    }

    pub fn outer_sample(&self) -> &Sample {
        &self.outer_sample
    }

    /// Whether outer sample point `j` lies in `M`.
    pub fn in_inner(&self, j: usize) -> bool {
        self.inner_of_outer[j].is_some()
    }

    /// Value of extended generator `k` at outer sample point `j`.
    pub fn value_at_outer(&self, k: usize, j: usize) -> Result<f64, ExtensionError> {
        match &self.generators[k] {
            ExtendedGenerator::Expr(e) => eval_at(e, &self.outer_sample.points[j]),
            ExtendedGenerator::ZeroExtension { inner_generator } => match self.inner_of_outer[j] {
                Some(i) => eval_at(
                    &self.inner.generators[*inner_generator],
                    &self.inner_sample.points[i],
                ),
                None => Ok(0.0),
            },
        }
    }

    /// Value of extended generator `k` at inner sample point `i`.
    pub fn value_at_inner(&self, k: usize, i: usize) -> Result<f64, ExtensionError> {
        match &self.generators[k] {
            ExtendedGenerator::Expr(e) => eval_at(e, &self.inner_sample.points[i]),
            ExtendedGenerator::ZeroExtension { inner_generator } => eval_at(
                &self.inner.generators[*inner_generator],
                &self.inner_sample.points[i],
            ),
        }
    }

    /// Values of extended generator `k` over the whole outer sample.
    pub fn outer_values(&self, k: usize) -> Result<Vec<f64>, ExtensionError> {
        (0..self.outer_sample.points.len())
            .map(|j| self.value_at_outer(k, j))
            .collect()
    }

    /// Outer sample index of inner sample point `i`.
    pub fn outer_index(&self, i: usize) -> usize {
        self.outer_of_inner[i]
    }
}

/// Extends every inner generator by zero off `M`.
pub fn zero_extend(inner: &Space, outer: &Domain) -> Result<ExtensionSpec, ExtensionError> {
    let generators = (0..inner.generators.len())
        .map(|inner_generator| ExtendedGenerator::ZeroExtension { inner_generator })
        .collect();
    ExtensionSpec::new(inner.clone(), outer.clone(), generators)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum RestrictionVerdict {
    Pass {
        checked: usize,
    },
    Fail {
        generator: usize,
        point: Point,
        extended: f64,
        inner: f64,
    },
}

/// Exact agreement of every extended generator with its inner counterpart
/// on the inner sample; reports the first mismatch in sample order.
pub fn restriction_check(ext: &ExtensionSpec) -> Result<RestrictionVerdict, ExtensionError> {
    let mut checked = 0;
    for (i, p) in ext.inner_sample.points.iter().enumerate() {
        for (k, f) in ext.inner.generators.iter().enumerate() {
            let extended = ext.value_at_inner(k, i)?;
            let inner = eval_at(f, p)?;
            if extended != inner {
                return Ok(RestrictionVerdict::Fail {
                    generator: k,
                    point: p.clone(),
                    extended,
                    inner,
                });
            }
            checked += 1;
        }
    }
    Ok(RestrictionVerdict::Pass { checked })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub from: Point,
    pub to: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ContinuityVerdict {
    ContinuousAtScale {
        max_jump: f64,
        modulus: f64,
    },
    /// First grid edge, in sample order, whose jump exceeds
    /// `modulus + slack`.
    Suspect {
        edge: Edge,
        jump: f64,
        max_jump: f64,
        modulus: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub generator: String,
    /// Largest grid step over the outer axes.
    pub step: f64,
    pub slack: f64,
    #[serde(flatten)]
    pub verdict: ContinuityVerdict,
}

/// Largest `|f(p) − f(q)|` over inner sample pairs with `0 < ‖p − q‖∞ ≤ h`.
fn oscillation(points: &[Point], values: &[f64], h: f64) -> f64 {
    let reach = h * (1.0 + STEP_SLACK);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    let mut best: f64 = 0.0;
    for (s, &a) in order.iter().enumerate() {
        for &b in &order[s + 1..] {
            if points[b][0] - points[a][0] > reach {
                break;
            }
            let dist = points[a]
                .iter()
                .zip(&points[b])
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if dist > 0.0 && dist <= reach {
                best = best.max((values[a] - values[b]).abs());
            }
        }
    }
    best
}

/// Compares, for each extended generator, the largest jump `J` across
/// adjacent outer grid points with the oscillation of the matching inner
/// generator at the same step. `ContinuousAtScale` when `J ≤ modulus +
/// slack`. A `Suspect` jump that persists as the grid is refined indicates
/// a discontinuous extension.
pub fn continuity_check(
    ext: &ExtensionSpec,
    slack: f64,
) -> Result<Vec<ContinuityReport>, ExtensionError> {
    let Domain::Box { lo, hi, grid } = &ext.outer_domain else {
        return Err(ExtensionError::NotBox);
    };
    if !(slack >= 0.0) {
        return Err(ExtensionError::BadSlack);
    }
    let d = grid.len();
    let step = (0..d)
        .map(|a| (hi[a] - lo[a]) / (grid[a] - 1) as f64)
        .fold(0.0, f64::max);
    let mut strides = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * grid[a + 1];
    }
    let pts = &ext.outer_sample.points;

    (0..ext.generators.len())
        .into_par_iter()
        .map(|k| {
            let values = ext.outer_values(k)?;
            let inner_values: Vec<f64> = ext
                .inner_sample
                .points
                .iter()
                .map(|p| eval_at(&ext.inner.generators[k], p))
                .collect::<Result<_, _>>()?;
            let modulus = oscillation(&ext.inner_sample.points, &inner_values, step);
            let limit = modulus + slack;
            let mut max_jump: f64 = 0.0;
            let mut first: Option<(usize, usize, f64)> = None;
            for j in 0..pts.len() {
                for a in 0..d {
                    if (j / strides[a]) % grid[a] + 1 == grid[a] {
                        continue;
                    }
                    let q = j + strides[a];
                    let jump = (values[j] - values[q]).abs();
                    let jump = if jump.is_nan() { f64::INFINITY } else { jump };
                    max_jump = max_jump.max(jump);
                    if first.is_none() && jump > limit {
                        first = Some((j, q, jump));
                    }
                }
            }
            let verdict = match first {
                None => ContinuityVerdict::ContinuousAtScale { max_jump, modulus },
                Some((p, q, jump)) => ContinuityVerdict::Suspect {
                    edge: Edge {
                        from: pts[p].clone(),
                        to: pts[q].clone(),
                    },
                    jump,
                    max_jump,
                    modulus,
                },
            };
            Ok(ContinuityReport {
                generator: ext.generators[k].to_string(),
                step,
                slack,
                verdict,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Difference {
    pub generator: usize,
    pub point: Point,
    pub left: f64,
    pub right: f64,
}

/// Generator values of two extensions of the same inner space on `N ∖ M`.
/// Only values on the outer sample are compared, not the structures they
/// generate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionComparison {
    pub points_compared: usize,
    pub differing: usize,
    pub first: Option<Difference>,
}

pub fn compare_off_inner(
    a: &ExtensionSpec,
    b: &ExtensionSpec,
) -> Result<ExtensionComparison, ExtensionError> {
    if a.outer_sample != b.outer_sample
        || a.generators.len() != b.generators.len()
        || a.inner != b.inner
    {
        return Err(ExtensionError::DomainArity);
    }
    let mut cmp = ExtensionComparison {
        points_compared: 0,
        differing: 0,
        first: None,
    };
    for j in (0..a.outer_sample.points.len()).filter(|&j| !a.in_inner(j)) {
        cmp.points_compared += 1;
        let mut differs = false;
        for k in 0..a.generators.len() {
            let (l, r) = (a.value_at_outer(k, j)?, b.value_at_outer(k, j)?);
            if l != r {
                differs = true;
                cmp.first.get_or_insert(Difference {
                    generator: k,
                    point: a.outer_sample.points[j].clone(),
                    left: l,
                    right: r,
                });
            }
        }
        cmp.differing += usize::from(differs);
    }
    Ok(cmp)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GeneratorsDoc {
    List(Vec<String>),
    Kind { kind: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionDoc {
    inner: SpaceDoc,
    outer_domain: DomainDoc,
    extended_generators: GeneratorsDoc,
}

/// Loads an extension spec from JSON.
pub fn load_extension(doc: &str) -> Result<ExtensionSpec, ExtensionError> {
    let doc: ExtensionDoc =
        serde_json::from_str(doc).map_err(|e| ExtensionError::Schema(e.to_string()))?;
    let inner = doc.inner.build()?;
    let outer = doc.outer_domain.build()?;
    match doc.extended_generators {
        GeneratorsDoc::Kind { kind } if kind == "zero_extend" => zero_extend(&inner, &outer),
        GeneratorsDoc::Kind { kind } => Err(ExtensionError::Schema(format!(
            "unknown extension kind {kind:?}"
        ))),
        GeneratorsDoc::List(srcs) => {
            let gens = srcs
                .iter()
                .enumerate()
                .map(|(index, s)| {
                    parse(s)
                        .map(ExtendedGenerator::Expr)
                        .map_err(|source| ExtensionError::Generator { index, source })
                })
                .collect::<Result<_, _>>()?;
            ExtensionSpec::new(inner, outer, gens)
        }
    }
}
