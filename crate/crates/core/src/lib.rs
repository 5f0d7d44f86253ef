//! Haugazeau-type projection iterations and relaxed Mann iterations for
//! common fixed points of strict pseudocontractions, and extragradient
//! operators for monotone variational inequalities, in `R^d`.
//!
//! The building blocks are:
//! * [`hilbert`]: vectors and the inner product;
//! * [`convex`]: projections, the half-spaces `H(x, y)`, the closed-form
//!   Haugazeau projection and an exhaustive active-set QP oracle;
//! * [`operators`]: mappings with class tags, the `T`-class transforms and
//!   sampling certifiers;
//! * [`algorithms`]: the iteration drivers;
//! * [`problems`]: instances with independently known solutions;
//! * [`crosscheck`]: batch comparisons against the oracles;
//! * [`cli`]: the `tclass` command-line front end.

pub mod algorithms;
pub mod cli;
pub mod convex;
pub mod crosscheck;
pub mod error;
pub mod hilbert;
mod linalg;
pub mod operators;
pub mod problems;

pub use error::{Error, Result};
pub use hilbert::Vector;
pub use linalg::spectral_norm;
