//! Generator-presented differential spaces.
//!
//! A [`Space`] is a domain `M` together with an ordered, finite generator
//! family `F`. The differential structure itself, the localization of the
//! superposition closure of `F`, is never materialized; everything downstream
//! works through `F`, as the uniform structure does.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exprlang::{parse, EvalError, Expr, Interval, ParseError};

pub type Point = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    FiniteSet {
        points: Vec<Point>,
    },
    Box {
        lo: Point,
        hi: Point,
        grid: Vec<usize>,
    },
    SequenceFamily {
        term: Expr,
        count: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    pub name: String,
    pub domain: Domain,
    pub generators: Vec<Expr>,
}

/// Finite desk-scale stand-in for `M`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Sample {
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("malformed space document: {0}")]
    Schema(String),
    #[error("empty generator family")]
    EmptyGenerators,
    #[error("missing domain")]
    MissingDomain,
    #[error("generator {index}: {source}")]
    Generator { index: usize, source: ParseError },
    #[error("generator {index} uses x{var} but the domain has arity {arity}")]
    GeneratorArity {
        index: usize,
        var: usize,
        arity: usize,
    },
    #[error("generator {index} references the sequence index `n`")]
    GeneratorUsesIndex { index: usize },
    #[error("sequence term: {0}")]
    Term(ParseError),
    #[error("sequence term must only reference `n`")]
    TermUsesVariables,
    #[error("finite domain has no points")]
    EmptyFiniteSet,
    #[error("finite domain points have mixed arity")]
    MixedArity,
    #[error("duplicate points at positions {0} and {1}")]
    DuplicatePoints(usize, usize),
    #[error("non-finite coordinate in domain")]
    NonFinite,
    #[error("box bounds and grid must have the same non-zero length")]
    BoxShape,
    #[error("box axis {0} has lo > hi")]
    InvertedBox(usize),
    #[error("box axis {0} needs at least 2 grid points")]
    CoarseGrid(usize),
    #[error("sequence count must be positive")]
    EmptySequence,
    #[error("sequence term at n = {n}: {source}")]
    TermEval { n: u64, source: EvalError },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainDoc {
    Finite {
        points: Vec<Vec<f64>>,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        grid: Vec<usize>,
    },
    Sequence {
        term: String,
        count: u64,
    },
}

/// JSON form of a space spec.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub domain: Option<DomainDoc>,
    #[serde(default)]
    pub generators: Vec<String>,
}

impl DomainDoc {
    pub fn build(&self) -> Result<Domain, SpaceError> {
        let d = match self {
            DomainDoc::Finite { points } => Domain::FiniteSet {
                points: points.clone(),
            },
            DomainDoc::Box { lo, hi, grid } => Domain::Box {
                lo: lo.clone(),
                hi: hi.clone(),
                grid: grid.clone(),
            },
            DomainDoc::Sequence { term, count } => Domain::SequenceFamily {
                term: parse(term).map_err(SpaceError::Term)?,
                count: *count,
            },
        };
        d.validate()?;
        Ok(d)
    }
}

impl SpaceDoc {
    pub fn build(&self) -> Result<Space, SpaceError> {
        let domain = self.domain.as_ref().map(DomainDoc::build).transpose()?;
        if self.generators.is_empty() {
            return Err(SpaceError::EmptyGenerators);
        }
        let generators = self
            .generators
            .iter()
            .enumerate()
            .map(|(index, g)| parse(g).map_err(|source| SpaceError::Generator { index, source }))
            .collect::<Result<Vec<_>, _>>()?;
        let domain = domain.ok_or(SpaceError::MissingDomain)?;
        Space::new(
            self.name.clone().unwrap_or_else(|| "space".to_string()),
            domain,
            generators,
        )
    }
}

/// Loads a space from its JSON spec document.
pub fn load_space(doc: &str) -> Result<Space, SpaceError> {
    let doc: SpaceDoc = serde_json::from_str(doc).map_err(|e| SpaceError::Schema(e.to_string()))?;
    doc.build()
}

/// Bit pattern used for exact point identity; `-0.0` and `0.0` coincide.
pub(crate) fn point_key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|x| (x + 0.0).to_bits()).collect()
}

impl Domain {
    pub fn arity(&self) -> usize {
        match self {
            Domain::FiniteSet { points } => points.first().map_or(0, Vec::len),
            Domain::Box { lo, .. } => lo.len(),
            Domain::SequenceFamily { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        match self {
            Domain::FiniteSet { points } => {
                let Some(first) = points.first() else {
                    return Err(SpaceError::EmptyFiniteSet);
                };
                let arity = first.len();
                let mut seen = std::collections::HashMap::new();
                for (i, p) in points.iter().enumerate() {
                    if p.len() != arity {
                        return Err(SpaceError::MixedArity);
                    }
                    if p.iter().any(|x| !x.is_finite()) {
                        return Err(SpaceError::NonFinite);
                    }
                    if let Some(j) = seen.insert(point_key(p), i) {
                        return Err(SpaceError::DuplicatePoints(j, i));
                    }
                }
            }
            Domain::Box { lo, hi, grid } => {
                if lo.is_empty() || lo.len() != hi.len() || lo.len() != grid.len() {
                    return Err(SpaceError::BoxShape);
                }
                for axis in 0..lo.len() {
                    if !lo[axis].is_finite() || !hi[axis].is_finite() {
                        return Err(SpaceError::NonFinite);
                    }
                    if lo[axis] > hi[axis] {
                        return Err(SpaceError::InvertedBox(axis));
                    }
                    if grid[axis] < 2 {
                        return Err(SpaceError::CoarseGrid(axis));
                    }
                }
            }
            Domain::SequenceFamily { term, count } => {
                if *count == 0 {
                    return Err(SpaceError::EmptySequence);
                }
                if term.arity() > 0 {
                    return Err(SpaceError::TermUsesVariables);
                }
            }
        }
        Ok(())
    }

    /// Coordinate `j` of a uniform grid of `count` points on `[lo, hi]`,
    /// inclusive of both endpoints.
    pub fn grid_coord(lo: f64, hi: f64, count: usize, j: usize) -> f64 {
        if j + 1 == count {
            hi
        } else {
            lo + (hi - lo) * (j as f64) / ((count - 1) as f64)
        }
    }

    /// Finite sample of the domain.
    ///
    /// Boxes are enumerated row-major: the last axis varies fastest.
    pub fn sample(&self) -> Result<Sample, SpaceError> {
        let points = match self {
            Domain::FiniteSet { points } => points.clone(),
            Domain::Box { lo, hi, grid } => {
                let total: usize = grid.iter().product();
                let mut out = Vec::with_capacity(total);
                let mut idx = vec![0usize; grid.len()];
                for _ in 0..total {
                    out.push(
                        (0..grid.len())
                            .map(|a| Domain::grid_coord(lo[a], hi[a], grid[a], idx[a]))
                            .collect(),
                    );
                    for a in (0..grid.len()).rev() {
                        idx[a] += 1;
                        if idx[a] < grid[a] {
                            break;
                        }
                        idx[a] = 0;
                    }
                }
                out
            }
            Domain::SequenceFamily { term, count } => (1..=*count)
                .map(|n| {
                    term.eval_index(n)
                        .map(|v| vec![v])
                        .map_err(|source| SpaceError::TermEval { n, source })
                })
                .collect::<Result<_, _>>()?,
        };
        Ok(Sample { points })
    }

    /// Interval hull of a box domain.
    pub fn as_box(&self) -> Option<Vec<Interval>> {
        match self {
            Domain::Box { lo, hi, .. } => Some(
                lo.iter()
                    .zip(hi)
                    .map(|(&l, &h)| Interval::new(l, h))
                    .collect(),
            ),
            _ => None,
        }
    }
}

/// Outcome of the separation check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Separation {
    Separates,
    /// Two distinct points with identical generator values.
    Collision(Point, Point),
}

impl Separation {
    pub fn separates(&self) -> bool {
        matches!(self, Separation::Separates)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WitnessError {
    #[error("sample point {0:?} is not covered by any piece")]
    Uncovered(Point),
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Point, source: EvalError },
}

/// Region of a local-witness piece.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Closed axis-aligned box.
    Box(Vec<Interval>),
    Points(Vec<Point>),
}

impl Region {
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Region::Box(b) => b.len() == p.len() && b.iter().zip(p).all(|(i, &x)| i.contains(x)),
            Region::Points(pts) => {
                let key = point_key(p);
                pts.iter().any(|q| point_key(q) == key)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub region: Region,
    pub witness: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum WitnessVerdict {
    Pass,
    Fail {
        point: Point,
        piece: usize,
        value: f64,
        witness_value: f64,
    },
}

impl Space {
    pub fn new(name: String, domain: Domain, generators: Vec<Expr>) -> Result<Space, SpaceError> {
        domain.validate()?;
        if generators.is_empty() {
            return Err(SpaceError::EmptyGenerators);
        }
        let arity = domain.arity();
        for (index, g) in generators.iter().enumerate() {
            if g.uses_index() {
                return Err(SpaceError::GeneratorUsesIndex { index });
            }
            if g.arity() > arity {
                return Err(SpaceError::GeneratorArity {
                    index,
                    var: g.arity() - 1,
                    arity,
                });
            }
        }
        Ok(Space {
            name,
            domain,
            generators,
        })
    }

    /// Convenience constructor from generator sources.
    pub fn from_sources(
        name: &str,
        domain: Domain,
        generators: &[&str],
    ) -> Result<Space, SpaceError> {
        let generators = generators
            .iter()
            .enumerate()
            .map(|(index, g)| parse(g).map_err(|source| SpaceError::Generator { index, source }))
            .collect::<Result<Vec<_>, _>>()?;
        Space::new(name.to_string(), domain, generators)
    }

    pub fn arity(&self) -> usize {
        self.domain.arity()
    }

    pub fn sample(&self) -> Result<Sample, SpaceError> {
        self.domain.sample()
    }

    /// The generator embedding `p ↦ (f(p))_{f ∈ F}`, in generator order.
    pub fn embed(&self, p: &[f64]) -> Result<Point, EvalError> {
        self.generators
            .iter()
            .map(|g| g.eval_point(p, None))
            .collect()
    }

    pub fn embed_all(&self, sample: &Sample) -> Result<Vec<Point>, EvalError> {
        sample.points.iter().map(|p| self.embed(p)).collect()
    }

    /// Whether the generators separate the points of `sample`; on failure
    /// returns a colliding pair.
    pub fn separates(&self, sample: &Sample) -> Result<Separation, EvalError> {
        let images = self.embed_all(sample)?;
        let mut order: Vec<usize> = (0..sample.points.len()).collect();
        let key = |i: usize| (point_key(&images[i]), point_key(&sample.points[i]));
        order.sort_by_cached_key(|&i| {
            let (img, pt) = key(i);
            (
                img.into_iter().map(ordered).collect::<Vec<_>>(),
                pt.into_iter().map(ordered).collect::<Vec<_>>(),
            )
        });
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            let same_image = images[a].iter().zip(&images[b]).all(|(x, y)| x == y);
            if same_image && point_key(&sample.points[a]) != point_key(&sample.points[b]) {
                return Ok(Separation::Collision(
                    sample.points[a].clone(),
                    sample.points[b].clone(),
                ));
            }
        }
        Ok(Separation::Separates)
    }

    /// Membership in the base open set `{p : a_i < α_i(p) < b_i}` of the
    /// initial topology.
    pub fn in_base_open(
        &self,
        gen_indices: &[usize],
        bounds: &[(f64, f64)],
        p: &[f64],
    ) -> Result<bool, BaseOpenError> {
        if gen_indices.len() != bounds.len() {
            return Err(BaseOpenError::LengthMismatch);
        }
        for (&i, &(a, b)) in gen_indices.iter().zip(bounds) {
            let g = self.generators.get(i).ok_or(BaseOpenError::BadIndex(i))?;
            if !(a < b) {
                return Err(BaseOpenError::EmptyBounds(a, b));
            }
            let v = g.eval_point(p, None)?;
            if !(a < v && v < b) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Checks that the supplied `(region, witness)` pieces exhibit `f` as a
    /// local function on the sample: on every piece containing a sample
    /// point, `f` and the piece's witness agree exactly there.
    pub fn local_witness_check(
        &self,
        f: &Expr,
        pieces: &[Piece],
        sample: &Sample,
    ) -> Result<WitnessVerdict, WitnessError> {
        for p in &sample.points {
            let mut covered = false;
            for (k, piece) in pieces.iter().enumerate() {
                if !piece.region.contains(p) {
                    continue;
                }
                covered = true;
                let eval = |e: &Expr| {
                    e.eval_point(p, None).map_err(|source| WitnessError::Eval {
                        point: p.clone(),
                        source,
                    })
                };
                let value = eval(f)?;
                let witness_value = eval(&piece.witness)?;
                if value != witness_value {
                    return Ok(WitnessVerdict::Fail {
                        point: p.clone(),
                        piece: k,
                        value,
                        witness_value,
                    });
                }
            }
            if !covered {
                return Err(WitnessError::Uncovered(p.clone()));
            }
        }
        Ok(WitnessVerdict::Pass)
    }
}

/// Maps an IEEE bit pattern to an integer with the numeric order.
fn ordered(bits: u64) -> i64 {
    let b = bits as i64;
    b ^ ((((b >> 63) as u64) >> 1) as i64)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaseOpenError {
    #[error("indices and bounds differ in length")]
    LengthMismatch,
    #[error("generator index {0} out of range")]
    BadIndex(usize),
    #[error("bounds ({0}, {1}) do not satisfy a < b")]
    EmptyBounds(f64, f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> Domain {
        Domain::FiniteSet {
            points: points.iter().map(|&x| vec![x]).collect(),
        }
    }

    #[test]
    fn load_minimal_spec() {
        let s = load_space(
            r#"{"domain":{"kind":"box","lo":[-1],"hi":[1],"grid":[5]},"generators":["x0"]}"#,
        )
        .unwrap();
        assert_eq!(s.generators.len(), 1);
        assert_eq!(s.arity(), 1);
    }

    #[test]
    fn load_errors() {
        assert_eq!(
            load_space(r#"{"generators":[]}"#),
            Err(SpaceError::EmptyGenerators)
        );
        assert_eq!(
            load_space(r#"{"domain":{"kind":"finite","points":[[0],[0]]}}"#),
            Err(SpaceError::DuplicatePoints(0, 1))
        );
        assert!(matches!(
            load_space(
                r#"{"domain":{"kind":"finite","points":[[0]]},"generators":["x0"],"extra":1}"#
            ),
            Err(SpaceError::Schema(_))
        ));
        assert!(matches!(
            load_space(r#"{"domain":{"kind":"finite","points":[[0]]},"generators":["x0 +"]}"#),
            Err(SpaceError::Generator { index: 0, .. })
        ));
        assert!(matches!(
            load_space(r#"{"domain":{"kind":"finite","points":[[0]]},"generators":["x0","x1"]}"#),
            Err(SpaceError::GeneratorArity { index: 1, .. })
        ));
        assert_eq!(
            load_space(
                r#"{"domain":{"kind":"box","lo":[0],"hi":[1],"grid":[1]},"generators":["x0"]}"#
            ),
            Err(SpaceError::CoarseGrid(0))
        );
        assert_eq!(
            load_space(
                r#"{"domain":{"kind":"box","lo":[2],"hi":[1],"grid":[3]},"generators":["x0"]}"#
            ),
            Err(SpaceError::InvertedBox(0))
        );
        assert_eq!(
            load_space(r#"{"generators":["x0"]}"#),
            Err(SpaceError::MissingDomain)
        );
    }

    #[test]
    fn samples() {
        let b = Domain::Box {
            lo: vec![0.0],
            hi: vec![1.0],
            grid: vec![3],
        };
        assert_eq!(
            b.sample().unwrap().points,
            vec![vec![0.0], vec![0.5], vec![1.0]]
        );

        let seq = Domain::SequenceFamily {
            term: parse("1/n").unwrap(),
            count: 3,
        };
        assert_eq!(
            seq.sample().unwrap().points,
            vec![vec![1.0], vec![0.5], vec![1.0 / 3.0]]
        );

        assert_eq!(
            line(&[1.0, 2.0]).sample().unwrap().points,
            vec![vec![1.0], vec![2.0]]
        );

        let bad = Domain::SequenceFamily {
            term: parse("1/(n - 2)").unwrap(),
            count: 3,
        };
        assert!(matches!(
            bad.sample(),
            Err(SpaceError::TermEval { n: 2, .. })
        ));
    }

    #[test]
    fn box_sample_row_major() {
        let b = Domain::Box {
            lo: vec![0.0, -1.0],
            hi: vec![1.0, 1.0],
            grid: vec![2, 3],
        };
        let pts = b.sample().unwrap().points;
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0.0, -1.0]);
        assert_eq!(pts[1], vec![0.0, 0.0]);
        assert_eq!(pts[5], vec![1.0, 1.0]);
    }

    #[test]
    fn embedding() {
        let s = Space::from_sources("s", line(&[2.0]), &["x0", "x0^2"]).unwrap();
        assert_eq!(s.embed(&[2.0]).unwrap(), vec![2.0, 4.0]);
        let s = Space::from_sources("s", line(&[0.0]), &["atan(x0)"]).unwrap();
        assert_eq!(s.embed(&[0.0]).unwrap(), vec![0.0]);
        let s = Space::from_sources("s", line(&[0.0]), &["1/x0"]).unwrap();
        assert_eq!(s.embed(&[0.0]), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn separation() {
        let d = line(&[-1.0, 1.0]);
        let sq = Space::from_sources("sq", d.clone(), &["x0^2"]).unwrap();
        let sample = d.sample().unwrap();
        assert_eq!(
            sq.separates(&sample).unwrap(),
            Separation::Collision(vec![-1.0], vec![1.0])
        );
        let both = Space::from_sources("both", d.clone(), &["x0^2", "x0^3"]).unwrap();
        assert!(both.separates(&sample).unwrap().separates());
        let id = Space::from_sources("id", line(&[-3.0, 0.0, 0.5, 7.0]), &["x0"]).unwrap();
        assert!(id.separates(&id.sample().unwrap()).unwrap().separates());
    }

    #[test]
    fn separation_ignores_signed_zero_and_repeats() {
        let s = Space::from_sources("s", line(&[0.0]), &["x0^2"]).unwrap();
        let sample = Sample {
            points: vec![vec![0.0], vec![-0.0], vec![0.0]],
        };
        assert!(s.separates(&sample).unwrap().separates());
    }

    #[test]
    fn base_open_sets() {
        let s = Space::from_sources("s", line(&[0.5]), &["x0^2", "x0"]).unwrap();
        assert!(s.in_base_open(&[0], &[(0.0, 1.0)], &[0.5]).unwrap());
        assert!(!s.in_base_open(&[0], &[(0.0, 1.0)], &[1.0]).unwrap());
        assert!(!s
            .in_base_open(&[0, 1], &[(0.0, 1.0), (0.6, 2.0)], &[0.5])
            .unwrap());
        assert_eq!(
            s.in_base_open(&[0], &[(1.0, 1.0)], &[0.5]),
            Err(BaseOpenError::EmptyBounds(1.0, 1.0))
        );
        assert_eq!(
            s.in_base_open(&[5], &[(0.0, 1.0)], &[0.5]),
            Err(BaseOpenError::BadIndex(5))
        );
    }

    #[test]
    fn local_witnesses() {
        let d = Domain::Box {
            lo: vec![-2.0],
            hi: vec![2.0],
            grid: vec![9],
        };
        let s = Space::from_sources("s", d.clone(), &["x0"]).unwrap();
        let sample = d.sample().unwrap();
        let f = parse("x0^2").unwrap();
        let whole = Region::Box(vec![Interval::new(-2.0, 2.0)]);
        let pass = s
            .local_witness_check(
                &f,
                &[Piece {
                    region: whole.clone(),
                    witness: f.clone(),
                }],
                &sample,
            )
            .unwrap();
        assert_eq!(pass, WitnessVerdict::Pass);

        let fail = s
            .local_witness_check(
                &f,
                &[Piece {
                    region: Region::Points(vec![vec![2.0]]),
                    witness: parse("x0").unwrap(),
                }],
                &Sample {
                    points: vec![vec![2.0]],
                },
            )
            .unwrap();
        assert!(
            matches!(fail, WitnessVerdict::Fail { ref point, value, witness_value, .. }
            if point == &vec![2.0] && value == 4.0 && witness_value == 2.0)
        );

        let uncovered = s.local_witness_check(
            &f,
            &[Piece {
                region: Region::Box(vec![Interval::new(-2.0, 0.0)]),
                witness: f.clone(),
            }],
            &sample,
        );
        assert_eq!(uncovered, Err(WitnessError::Uncovered(vec![0.5])));
    }

    #[test]
    fn abs_is_locally_a_generator_away_from_the_kink() {
        // |x| agrees with x on x >= 0 and with -x on x <= 0
        let d = Domain::Box {
            lo: vec![-1.0],
            hi: vec![1.0],
            grid: vec![21],
        };
        let s = Space::from_sources("s", d.clone(), &["x0"]).unwrap();
        let pieces = [
            Piece {
                region: Region::Box(vec![Interval::new(-1.0, 0.0)]),
                witness: parse("-x0").unwrap(),
            },
            Piece {
                region: Region::Box(vec![Interval::new(0.0, 1.0)]),
                witness: parse("x0").unwrap(),
            },
        ];
        let v = s
            .local_witness_check(&parse("abs(x0)").unwrap(), &pieces, &d.sample().unwrap())
            .unwrap();
        assert_eq!(v, WitnessVerdict::Pass);
    }
}
