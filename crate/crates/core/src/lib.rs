//! Favorite points of planar simple random walk.
//!
//! Simulation of walks stopped on leaving a disk or run on a torus, exact
//! potential theory of the killed walk, exact occupation identities of a
//! three-state chain, the pair exponents and their variational forms,
//! special point sets with clustered tuple counts, excursion counting across
//! annuli, and a Gaussian free field sampler for comparison.
//!
//! Numeric code is generic over the scalar type: the occupation identities
//! accept any [`Scalar`] (`f32`, `f64`, or exact [`BigRational`]), and the
//! solvers and exponent formulas accept any [`Real`] (`f32`, `f64`). The
//! aliases below fix the common choices.

pub mod error;
pub mod excursions;
pub mod exponents;
pub mod gff;
pub mod lattice;
pub mod occupation;
pub mod point_sets;
pub mod potential;
pub mod rng;
pub mod scalar;
pub mod walk;

pub use num_rational::BigRational;

pub use error::{Error, Result};
pub use lattice::LatticePoint;
pub use scalar::{Real, Scalar};

/// Three-state chain with exact rational transition probabilities.
pub type ExactChain = occupation::ThreeStateChain<BigRational>;
/// Three-state chain in double precision.
pub type Chain = occupation::ThreeStateChain<f64>;
pub type WMatrixF64 = potential::WMatrix<f64>;
pub type TwoPointChainF64 = potential::TwoPointChain<f64>;
pub type PairBoundsF64 = potential::PairBounds<f64>;
pub type DiskPotentialF64 = potential::DiskPotential<f64>;
pub type OptimumF64 = exponents::Optimum<f64>;
