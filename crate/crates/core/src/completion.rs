//! Cauchy probes and desk-scale completion.
//!
//! The uniform structure generated by a finite family has a countable base,
//! so sequences are enough to witness incompleteness. A [`ProbeSequence`]
//! is a user-chosen sequence in `M`; its images under the generator
//! embedding are tested for the Cauchy property against the entourages
//! `V(F, ε)`, and Cauchy limits that fall outside the sampled image are the
//! points the completion adds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exprlang::{parse, EvalError, Expr, ParseError};
use crate::model::{point_key, Domain, Point, Sample, Space, SpaceError};

/// Number of doublings above the tolerance in the Cauchy schedule.
pub const SCHEDULE_LEVELS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompletionError {
    #[error("probe {label:?}: count must be at least 8, got {count}")]
    ShortProbe { label: String, count: u64 },
    #[error("probe {label:?}: {source}")]
    Term { label: String, source: ParseError },
    #[error("probe {label:?}: term must only reference `n`")]
    TermUsesVariables { label: String },
    #[error("probe {label:?} has {got} coordinates, the space has arity {need}")]
    ProbeArity {
        label: String,
        got: usize,
        need: usize,
    },
    #[error("probe {label:?} at n = {n}: {source}")]
    Eval {
        label: String,
        n: u64,
        source: EvalError,
    },
    #[error("tolerance must be positive and finite")]
    BadTolerance,
    #[error("malformed probe document: {0}")]
    Schema(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Embed(#[from] EvalError),
    #[error("subset is empty")]
    EmptySubset,
    #[error("subset point {0:?} is not in the domain sample")]
    NotInSample(Point),
}

/// A sequence `n ↦ (t_1(n), …, t_d(n))`, `n = 1..=count`, in the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSequence {
    pub label: String,
    pub terms: Vec<Expr>,
    pub count: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TermDoc {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeDoc {
    label: String,
    term: TermDoc,
    count: u64,
}

impl ProbeSequence {
    pub fn new(
        label: &str,
        terms: Vec<Expr>,
        count: u64,
    ) -> Result<ProbeSequence, CompletionError> {
        let label = label.to_string();
        if count < 8 {
            return Err(CompletionError::ShortProbe { label, count });
        }
        if terms.is_empty() || terms.iter().any(|t| t.arity() > 0) {
            return Err(CompletionError::TermUsesVariables { label });
        }
        Ok(ProbeSequence {
            label,
            terms,
            count,
        })
    }

    /// One-dimensional probe from source text.
    pub fn parse(label: &str, term: &str, count: u64) -> Result<ProbeSequence, CompletionError> {
        let t = parse(term).map_err(|source| CompletionError::Term {
            label: label.to_string(),
            source,
        })?;
        ProbeSequence::new(label, vec![t], count)
    }

    pub fn term_text(&self) -> String {
        self.terms
            .iter()
            .map(Expr::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn point(&self, n: u64) -> Result<Point, CompletionError> {
        self.terms
            .iter()
            .map(|t| t.eval_index(n))
            .collect::<Result<_, _>>()
            .map_err(|source| CompletionError::Eval {
                label: self.label.clone(),
                n,
                source,
            })
    }

    /// Embedding images `(n, φ_F(x_n))` for `n = 1..=count`.
    pub fn images(&self, space: &Space) -> Result<Vec<(u64, Point)>, CompletionError> {
        if self.terms.len() != space.arity() {
            return Err(CompletionError::ProbeArity {
                label: self.label.clone(),
                got: self.terms.len(),
                need: space.arity(),
            });
        }
        (1..=self.count)
            .map(|n| {
                let p = self.point(n)?;
                let e = space.embed(&p).map_err(|source| CompletionError::Eval {
                    label: self.label.clone(),
                    n,
                    source,
                })?;
                Ok((n, e))
            })
            .collect()
    }
}

/// Parses a JSON list of probe specs (a single object is also accepted).
pub fn load_probes(doc: &str) -> Result<Vec<ProbeSequence>, CompletionError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Docs {
        Many(Vec<ProbeDoc>),
        One(ProbeDoc),
    }
    let docs =
        match serde_json::from_str(doc).map_err(|e| CompletionError::Schema(e.to_string()))? {
            Docs::Many(v) => v,
            Docs::One(d) => vec![d],
        };
    docs.into_iter()
        .map(|d| {
            let srcs = match d.term {
                TermDoc::One(s) => vec![s],
                TermDoc::Many(v) => v,
            };
            let terms = srcs
                .iter()
                .map(|s| {
                    parse(s).map_err(|source| CompletionError::Term {
                        label: d.label.clone(),
                        source,
                    })
                })
                .collect::<Result<_, _>>()?;
            ProbeSequence::new(&d.label, terms, d.count)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Cauchy,
    NotCauchy,
    Inconclusive,
}

/// Least tail start achieving diameter `< epsilon`, if any.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailStep {
    pub epsilon: f64,
    pub tail_start: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub point: Point,
    /// Diameter of the tail the estimate was taken from.
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyAnalysis {
    pub classification: Classification,
    pub schedule: Vec<TailStep>,
    /// Diameter of the last quarter of the images.
    pub final_quarter_diameter: f64,
    pub limit: Option<LimitEstimate>,
}

fn max_coord_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `diam[i]` is the max-coordinate diameter of `images[i..]`; non-increasing.
fn suffix_diameters(images: &[Point]) -> Vec<f64> {
    let dim = images.first().map_or(0, Vec::len);
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    let mut out = vec![0.0; images.len()];
    for (i, e) in images.iter().enumerate().rev() {
        let mut d: f64 = 0.0;
        for k in 0..dim {
            lo[k] = lo[k].min(e[k]);
            hi[k] = hi[k].max(e[k]);
            let w = hi[k] - lo[k];
            d = d.max(if w.is_nan() { f64::INFINITY } else { w });
        }
        out[i] = d;
    }
    out
}

/// Shortest tail accepted as evidence at the finest tolerance.
pub fn min_tail(count: u64) -> u64 {
    (count / 64).max(4)
}

/// Uses the last element of a tail as the limit, with the tail's diameter
/// as uncertainty.
pub fn estimate_limit(tail: &[Point]) -> Option<LimitEstimate> {
    let last = tail.last()?;
    Some(LimitEstimate {
        point: last.clone(),
        uncertainty: suffix_diameters(tail).first().copied().unwrap_or(0.0),
    })
}

/// Cauchy analysis of already computed images.
pub fn analyze_images(images: &[Point], tol: f64) -> CauchyAnalysis {
    let count = images.len() as u64;
    let diam = suffix_diameters(images);
    debug_assert!(diam.windows(2).all(|w| w[0] >= w[1] || w[0].is_nan()));
    let least = |eps: f64| diam.partition_point(|&d| !(d < eps));
    let schedule: Vec<TailStep> = (0..=SCHEDULE_LEVELS)
        .rev()
        .map(|k| {
            let epsilon = tol * 2f64.powi(k as i32);
            let i = least(epsilon);
            TailStep {
                epsilon,
                tail_start: (i < images.len()).then_some(i as u64 + 1),
            }
        })
        .collect();
    let quarter = images.len() - images.len() / 4;
    let final_quarter_diameter = diam.get(quarter).copied().unwrap_or(0.0);
    let i = least(tol);
    let (classification, limit) = if i < images.len() && count - i as u64 >= min_tail(count) {
        (Classification::Cauchy, estimate_limit(&images[i..]))
    } else if final_quarter_diameter > tol * 2f64.powi(SCHEDULE_LEVELS as i32) {
        (Classification::NotCauchy, None)
    } else {
        (Classification::Inconclusive, None)
    };
    CauchyAnalysis {
        classification,
        schedule,
        final_quarter_diameter,
        limit,
    }
}

/// Classifies a probe: `Cauchy` when the tail diameter under the embedding
/// drops below `tol` on a tail of at least [`min_tail`] terms, `NotCauchy`
/// when the last quarter still spans more than `tol·2^K`, otherwise
/// `Inconclusive`.
pub fn is_cauchy(
    space: &Space,
    probe: &ProbeSequence,
    tol: f64,
) -> Result<CauchyAnalysis, CompletionError> {
    check_tol(tol)?;
    let images: Vec<Point> = probe.images(space)?.into_iter().map(|(_, e)| e).collect();
    Ok(analyze_images(&images, tol))
}

fn check_tol(tol: f64) -> Result<(), CompletionError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CompletionError::BadTolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ProbeStatus {
    Analyzed {
        #[serde(flatten)]
        analysis: CauchyAnalysis,
        /// The limit is within tolerance of a sampled image point.
        existing: bool,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub label: String,
    pub term: String,
    pub count: u64,
    #[serde(flatten)]
    pub status: ProbeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewPoint {
    pub point: Point,
    pub tail_diameter: f64,
    pub probes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionReport {
    pub space: String,
    /// Cauchy tolerance; also the distance beyond which a limit is new and
    /// the resolution at which new points are merged.
    pub tolerance: f64,
    pub schedule_levels: u32,
    pub sample_size: usize,
    pub probes: Vec<ProbeReport>,
    pub new_points: Vec<NewPoint>,
    #[serde(skip)]
    pub sample_images: Vec<Point>,
}

impl CompletionReport {
    /// `φ_F(sample)` together with the new limit points.
    pub fn closure_points(&self) -> Vec<Point> {
        self.sample_images
            .iter()
            .cloned()
            .chain(self.new_points.iter().map(|p| p.point.clone()))
            .collect()
    }
}

fn near_any(p: &[f64], pts: &[Point], tol: f64) -> bool {
    pts.iter().any(|q| max_coord_distance(p, q) <= tol)
}

/// Desk-scale completion: the closure of `φ_F(sample)` plus the limits of
/// the Cauchy probes that are farther than `tol` from every sampled image.
/// New points closer than `tol` to an earlier one (in label order) are
/// merged into it.
pub fn complete(
    space: &Space,
    probes: &[ProbeSequence],
    tol: f64,
) -> Result<CompletionReport, CompletionError> {
    check_tol(tol)?;
    let sample = space.sample()?;
    let sample_images = space.embed_all(&sample)?;
    let mut order: Vec<&ProbeSequence> = probes.iter().collect();
    order.sort_by(|a, b| a.label.cmp(&b.label));
    let analyses: Vec<Result<CauchyAnalysis, CompletionError>> =
        order.par_iter().map(|p| is_cauchy(space, p, tol)).collect();

    let mut reports = Vec::new();
    let mut new_points: Vec<NewPoint> = Vec::new();
    for (probe, analysis) in order.iter().zip(analyses) {
        let status = match analysis {
            Err(e) => ProbeStatus::Error {
                message: e.to_string(),
            },
            Ok(analysis) => {
                let mut existing = false;
                if let Some(lim) = &analysis.limit {
                    existing = near_any(&lim.point, &sample_images, tol);
                    if !existing {
                        match new_points
                            .iter_mut()
                            .find(|q| max_coord_distance(&q.point, &lim.point) <= tol)
                        {
                            Some(q) => {
                                q.probes.push(probe.label.clone());
                                q.tail_diameter = q.tail_diameter.max(lim.uncertainty);
                            }
                            None => new_points.push(NewPoint {
                                point: lim.point.clone(),
                                tail_diameter: lim.uncertainty,
                                probes: vec![probe.label.clone()],
                            }),
                        }
                    }
                }
                ProbeStatus::Analyzed { analysis, existing }
            }
        };
        reports.push(ProbeReport {
            label: probe.label.clone(),
            term: probe.term_text(),
            count: probe.count,
            status,
        });
    }
    Ok(CompletionReport {
        space: space.name.clone(),
        tolerance: tol,
        schedule_levels: SCHEDULE_LEVELS,
        sample_size: sample.points.len(),
        probes: reports,
        new_points,
        sample_images,
    })
}

/// The uniform subspace on `subset`, presented as a finite space with the
/// same generators.
pub fn subspace_uniformity(space: &Space, subset: &Sample) -> Result<Space, CompletionError> {
    if subset.points.is_empty() {
        return Err(CompletionError::EmptySubset);
    }
    let ambient: std::collections::HashSet<Vec<u64>> = space
        .sample()?
        .points
        .iter()
        .map(|p| point_key(p))
        .collect();
    if let Some(p) = subset
        .points
        .iter()
        .find(|p| !ambient.contains(&point_key(p)))
    {
        return Err(CompletionError::NotInSample(p.clone()));
    }
    Ok(Space::new(
        format!("{}|subspace", space.name),
        Domain::FiniteSet {
            points: subset.points.clone(),
        },
        space.generators.clone(),
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Closedness {
    Consistent,
    /// A Cauchy probe converges farther than `tol` from the subset image.
    Violation {
        probe: String,
        limit: Point,
        distance: f64,
    },
}

/// Checks that no Cauchy probe escapes `subset`: every Cauchy limit must be
/// within `tol` of `φ_F(subset)`. Probes that fail to evaluate are skipped.
pub fn closedness_probe(
    space: &Space,
    subset: &Sample,
    probes: &[ProbeSequence],
    tol: f64,
) -> Result<Closedness, CompletionError> {
    check_tol(tol)?;
    let images = space.embed_all(subset)?;
    let mut order: Vec<&ProbeSequence> = probes.iter().collect();
    order.sort_by(|a, b| a.label.cmp(&b.label));
    for p in order {
        let Ok(a) = is_cauchy(space, p, tol) else {
            continue;
        };
        if let Some(lim) = a.limit {
            let distance = images
                .iter()
                .map(|q| max_coord_distance(&lim.point, q))
                .fold(f64::INFINITY, f64::min);
            if distance > tol {
                return Ok(Closedness::Violation {
                    probe: p.label.clone(),
                    limit: lim.point,
                    distance,
                });
            }
        }
    }
    Ok(Closedness::Consistent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entourage::Entourage;
    use std::f64::consts::FRAC_PI_2;

    fn real_line(gens: &[&str]) -> Space {
        let d = Domain::Box {
            lo: vec![-10.0],
            hi: vec![10.0],
            grid: vec![201],
        };
        Space::from_sources("R", d, gens).unwrap()
    }

    fn half_open() -> Space {
        let points = (1..=100).map(|k| vec![k as f64 / 100.0]).collect();
        Space::from_sources("(0,1]", Domain::FiniteSet { points }, &["x0"]).unwrap()
    }

    fn unit_interval() -> Space {
        let d = Domain::Box {
            lo: vec![0.0],
            hi: vec![1.0],
            grid: vec![101],
        };
        Space::from_sources("[0,1]", d, &["x0"]).unwrap()
    }

    #[test]
    fn reciprocal_is_cauchy_with_last_term_estimate() {
        let s = real_line(&["x0"]);
        let p = ProbeSequence::parse("inv", "1/n", 64).unwrap();
        let a = is_cauchy(&s, &p, 1e-3).unwrap();
        assert_eq!(a.classification, Classification::Cauchy);
        let lim = a.limit.unwrap();
        assert_eq!(lim.point, vec![1.0 / 64.0]);
        assert!(lim.uncertainty < 1e-3);
        assert_eq!(a.schedule.len(), SCHEDULE_LEVELS as usize + 1);
        let starts: Vec<u64> = a.schedule.iter().map(|s| s.tail_start.unwrap()).collect();
        assert!(starts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn divergent_identity_is_not_cauchy() {
        let s = real_line(&["x0"]);
        let p = ProbeSequence::parse("up", "n", 64).unwrap();
        let a = is_cauchy(&s, &p, 1e-3).unwrap();
        assert_eq!(a.classification, Classification::NotCauchy);
        assert!(a.limit.is_none());
    }

    #[test]
    fn slow_sequence_is_inconclusive() {
        let s = real_line(&["x0"]);
        // tail diameter of 1/sqrt(n) over n ≤ 64 stays near 0.03
        let p = ProbeSequence::parse("slow", "1/sqrt(n)", 64).unwrap();
        let a = is_cauchy(&s, &p, 1e-3).unwrap();
        assert_eq!(a.classification, Classification::Inconclusive);
    }

    #[test]
    fn constant_probe_has_zero_uncertainty() {
        let lim = estimate_limit(&vec![vec![0.25, -1.0]; 9]).unwrap();
        assert_eq!(lim.point, vec![0.25, -1.0]);
        assert_eq!(lim.uncertainty, 0.0);
    }

    #[test]
    fn suffix_diameters_oracle() {
        let imgs: Vec<Point> = [3.0, -1.0, 2.0, 2.5, 2.25]
            .iter()
            .map(|&x| vec![x])
            .collect();
        let d = suffix_diameters(&imgs);
        for i in 0..imgs.len() {
            let tail: Vec<f64> = imgs[i..].iter().map(|p| p[0]).collect();
            let w = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - tail.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(d[i], w);
        }
    }

    #[test]
    fn arctan_completion_adds_both_ends() {
        let s = real_line(&["atan(x0)"]);
        let probes = vec![
            ProbeSequence::parse("+", "n", 100_000).unwrap(),
            ProbeSequence::parse("-", "-n", 100_000).unwrap(),
        ];
        let r = complete(&s, &probes, 1e-4).unwrap();
        let mut ends: Vec<f64> = r.new_points.iter().map(|p| p.point[0]).collect();
        ends.sort_by(f64::total_cmp);
        assert_eq!(ends.len(), 2);
        assert!((ends[0] + FRAC_PI_2).abs() < 1e-4);
        assert!((ends[1] - FRAC_PI_2).abs() < 1e-4);
        assert!(r.new_points.iter().all(|p| p.tail_diameter <= 1e-4));
        assert_eq!(r.closure_points().len(), 201 + 2);
    }

    #[test]
    fn real_line_gains_nothing() {
        let s = real_line(&["x0"]);
        let r = complete(&s, &[ProbeSequence::parse("n", "n", 1000).unwrap()], 1e-4).unwrap();
        assert!(r.new_points.is_empty());
    }

    #[test]
    fn duplicate_limits_merge_and_report_is_deterministic() {
        let s = half_open();
        let probes = vec![
            ProbeSequence::parse("b", "1/n^2", 10_000).unwrap(),
            ProbeSequence::parse("a", "1/n", 10_000).unwrap(),
        ];
        let r = complete(&s, &probes, 1e-3).unwrap();
        assert_eq!(r.new_points.len(), 1);
        assert_eq!(r.new_points[0].probes, ["a", "b"]);
        assert!(r.new_points[0].point[0].abs() <= 1e-3);
        assert_eq!(r, complete(&s, &probes, 1e-3).unwrap());
    }

    #[test]
    fn finite_valued_probes_add_nothing() {
        let s = half_open();
        let probes = vec![
            ProbeSequence::parse("const", "0.37", 64).unwrap(),
            ProbeSequence::parse("alt", "0.5 + 0.25 * cos(pi * n)", 64).unwrap(),
        ];
        let r = complete(&s, &probes, 1e-3).unwrap();
        assert!(r.new_points.is_empty());
    }

    #[test]
    fn probe_errors_are_reported_per_probe() {
        let s = real_line(&["sqrt(x0)"]);
        let probes = vec![
            ProbeSequence::parse("bad", "-n", 16).unwrap(),
            ProbeSequence::parse("good", "1/n", 4096).unwrap(),
        ];
        let r = complete(&s, &probes, 1e-2);
        // sqrt of the negative sample half fails before any probe runs
        assert!(matches!(r, Err(CompletionError::Embed(_))));

        let s = unit_interval();
        let r = complete(
            &s,
            &[ProbeSequence::parse("bad", "1/(n - 3)", 16).unwrap()],
            1e-2,
        )
        .unwrap();
        assert!(matches!(r.probes[0].status, ProbeStatus::Error { .. }));
    }

    #[test]
    fn cauchy_tail_is_inside_the_entourage() {
        let s = real_line(&["x0", "atan(x0)"]);
        let p = ProbeSequence::parse("p", "2 + 1/n", 2000).unwrap();
        let tol = 1e-3;
        let a = is_cauchy(&s, &p, tol).unwrap();
        assert_eq!(a.classification, Classification::Cauchy);
        let start = a.schedule.last().unwrap().tail_start.unwrap();
        let v = Entourage::full(&s, tol).unwrap();
        let pts: Vec<Point> = (start..=p.count).map(|n| p.point(n).unwrap()).collect();
        for x in pts.iter().step_by(37) {
            for y in pts.iter().step_by(41) {
                assert!(v.member(&s, x, y).unwrap());
            }
        }
    }

    #[test]
    fn subspace_membership_agrees_with_ambient() {
        let s = unit_interval();
        let subset = Sample {
            points: (0..101)
                .step_by(7)
                .map(|k| vec![k as f64 / 100.0])
                .collect(),
        };
        let sub = subspace_uniformity(&s, &subset).unwrap();
        let v = Entourage::new([0], 0.15).unwrap();
        for x in &subset.points {
            for y in &subset.points {
                assert_eq!(v.member(&sub, x, y).unwrap(), v.member(&s, x, y).unwrap());
            }
        }
        let one = subspace_uniformity(
            &s,
            &Sample {
                points: vec![vec![0.0]],
            },
        )
        .unwrap();
        assert_eq!(one.sample().unwrap().points.len(), 1);
        assert!(matches!(
            subspace_uniformity(&s, &Sample::default()),
            Err(CompletionError::EmptySubset)
        ));
        assert!(matches!(
            subspace_uniformity(
                &s,
                &Sample {
                    points: vec![vec![0.005]]
                }
            ),
            Err(CompletionError::NotInSample(_))
        ));
    }

    #[test]
    fn closedness() {
        let full = unit_interval();
        let all = full.sample().unwrap();
        let mid = ProbeSequence::parse("mid", "1/n + 0.5", 10_000).unwrap();
        assert_eq!(
            closedness_probe(&full, &all, &[mid], 1e-3).unwrap(),
            Closedness::Consistent
        );
        assert_eq!(
            closedness_probe(&full, &all, &[], 1e-3).unwrap(),
            Closedness::Consistent
        );

        let s = half_open();
        let inv = ProbeSequence::parse("inv", "1/n", 10_000).unwrap();
        let v = closedness_probe(&s, &s.sample().unwrap(), &[inv], 1e-3).unwrap();
        assert!(matches!(v, Closedness::Violation { ref probe, .. } if probe == "inv"));
    }

    #[test]
    fn probe_documents() {
        let ps = load_probes(r#"[{"label":"up","term":"n","count":100},{"label":"v","term":["1/n","n/(n+1)"],"count":8}]"#)
            .unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[1].terms.len(), 2);
        assert!(load_probes(r#"{"label":"one","term":"1/n","count":8}"#).is_ok());
        assert!(matches!(
            load_probes(r#"{"label":"s","term":"n","count":3}"#),
            Err(CompletionError::ShortProbe { count: 3, .. })
        ));
        assert!(matches!(
            load_probes(r#"{"label":"x","term":"x0 + n","count":9}"#),
            Err(CompletionError::TermUsesVariables { .. })
        ));
        assert!(matches!(load_probes("{}"), Err(CompletionError::Schema(_))));
    }
}
