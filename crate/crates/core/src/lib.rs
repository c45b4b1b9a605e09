//! Desk-scale computations on generator-presented differential spaces.
//!
//! A space is a domain together with a finite family of generator
//! expressions. The family defines a uniform structure whose base entourages
//! are `V(f_1, …, f_k, ε)`; this crate evaluates, checks, certifies and
//! refutes statements about that structure:
//!
//! - [`exprlang`]: the generator expression language with point and sound
//!   interval evaluation, and superposition (`compose`);
//! - [`model`]: spaces, domains, samples, the generator embedding, point
//!   separation, base open sets and local-function witnesses;
//! - [`entourage`]: entourages, balls, doubling, pseudometrics, base and
//!   finite-model axiom checks;
//! - [`uniformity`]: entourage inclusion and uniform continuity of maps,
//!   decided by refutation search and interval branch-and-bound;
//! - [`completion`]: Cauchy probe sequences and completion as the closure of
//!   the embedded image;
//! - [`extension`]: extensions of a structure to a larger set and their
//!   continuity at a grid scale.

pub mod completion;
pub mod entourage;
pub mod exprlang;
pub mod extension;
pub mod model;
pub mod uniformity;

pub use entourage::{Entourage, Pseudometric};
pub use exprlang::{parse, EvalError, Expr, Interval};
pub use model::{load_space, Domain, Point, Sample, Space};
