//! Exact-rational toolkit for LP-based CSP approximation in the multi-pass
//! streaming model.
//!
//! The crate is organized around a handful of building blocks:
//!
//! - [`csp`]: truth-tabled predicate families, instances, exact value oracles.
//! - [`lp`]: the basic LP relaxation, an exact rational simplex, half-integrality
//!   checks and randomized rounding for directed-cut and 2SAT families.
//! - [`stream`]: a multi-pass streaming harness with pass and memory accounting.
//! - [`blowup`]: randomized bounded-degree blow-ups and the lazy query oracle
//!   that materializes them on the fly.
//! - [`approx`]: neighborhood extraction, the local LP estimator, the sampling
//!   estimator for the LP value of a blow-up, and the gap decider built on it.
//! - [`dihp`]: k-partite labeled matchings, Markov kernel sampling,
//!   distribution-labeled gap graphs, yes/no input samplers and the reduction
//!   back to constraint streams.
//! - [`fourier`]: exhaustive desk-scale verification of matching-space
//!   characters, kernel structure and Fourier decay bounds.
//! - [`curves`]: closed-form approximability threshold curves and empirical
//!   upper-bound search for arbitrary families.
//!
//! All randomized components draw from the splittable deterministic generator
//! in [`rng`]; equal seeds reproduce every byte of output.

pub mod approx;
pub mod blowup;
pub mod csp;
pub mod curves;
pub mod dihp;
pub mod fourier;
pub mod lp;
pub mod ratio;
pub mod rng;
pub mod stream;

pub use ratio::Rational;
