//! Rotation theory for torus homeomorphisms.
//!
//! Lifts to the plane, rotation-interval and deviation estimators, raster
//! circloid topology, the semiconjugacy construction towards an irrational
//! circle rotation, and a compactified skew-product counterexample.

pub mod constants;
pub mod counterexample;
pub mod error;
pub mod experiment;
pub mod lifts;
pub mod oracle;
pub mod raster;
pub mod rotation;
pub mod scalar;
pub mod selftest;
pub mod semiconj;

pub use error::{Error, Result};
pub use lifts::{DeckMatrix, IntVec2, Lift, Vec2};
pub use scalar::{RealScalar, Scalar};

/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i64>;

pub type Lift64 = Lift<f64>;
pub type Lift32 = Lift<f32>;
pub type LiftQ = Lift<Rational>;
pub type Point64 = Vec2<f64>;
pub type Point32 = Vec2<f32>;
pub type PointQ = Vec2<Rational>;
