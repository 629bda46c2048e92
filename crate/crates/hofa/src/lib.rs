//! Higher-order Fourier analysis toolkit over small prime fields.
//!
//! The crate provides exact and Monte Carlo computation of uniformity
//! (Gowers) norms, non-classical polynomials with torsion values, polynomial
//! factors with energy-increment decompositions, restriction distributions
//! of functions along random affine embeddings, and a subspace-restriction
//! distance tester for affine-invariant properties, together with a small
//! CLI (`hofa`) and runnable examples for each capability.
//!
//! Everything is desk-scale by design: point spaces are capped at 2^26,
//! enumerations fail fast with capacity errors, and all randomized routines
//! are bit-reproducible from a master seed (see [`rng`]).

pub mod affine;
pub mod check;
pub mod cli;
pub mod decompose;
pub mod error;
pub mod factor;
pub mod field;
pub mod fourier;
pub mod function;
pub mod gowers;
pub mod linalg;
pub mod linear_forms;
pub mod mu;
pub mod pipeline;
pub mod poly;
pub mod property;
pub mod rng;
pub mod tester;
pub mod transfer;

pub use error::{Error, Result};
