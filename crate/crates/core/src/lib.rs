//! Exact transition operators, ladder-operator symmetries and duality checks
//! for generalized immediate exchange models, plus a Monte Carlo simulator
//! for the many-agent model on a graph.
//!
//! All building blocks are generic over [`Scalar`]: the verification path
//! uses [`Rational`] and the float path uses `f64`.

pub mod algebra;
pub mod dist;
pub mod error;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod scalar;
pub mod simulate;
pub mod suite;
pub mod statespace;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact arbitrary-precision fraction.
pub type Rational = num_rational::BigRational;
pub type ExactOperator = operator::SectorOperator<Rational>;
pub type FloatOperator = operator::SectorOperator<f64>;
pub type ExactPmf = dist::Pmf<Rational>;
pub type FloatPmf = dist::Pmf<f64>;
