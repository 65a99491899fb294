//! Hidden-variable models of quantum correlations and a seeded Monte Carlo
//! test bench for them.
//!
//! The numerics are generic over [`Real`] (`f64` or `f32`). The aliases at the
//! crate root fix the scalar to `f64`, with `*32` variants for `f32`.

pub mod cli;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod ghz;
pub mod hardy;
pub mod inequalities;
pub mod models;
pub mod quantum;
pub mod scalar;

pub use error::{Error, Result};
pub use geometry::{sgn, RngStream, Sign};
pub use scalar::Real;

pub type Direction = geometry::Direction<f64>;
pub type Direction32 = geometry::Direction<f32>;
pub type Angle = quantum::Angle<f64>;
pub type Angle32 = quantum::Angle<f32>;
pub type HiddenPair = models::HiddenPair<f64>;
pub type HiddenPair32 = models::HiddenPair<f32>;
pub type TranscriptTb = models::TranscriptTb<f64>;
pub type ChainConfig = hardy::ChainConfig<f64>;
pub type ChainConfig32 = hardy::ChainConfig<f32>;
pub type NestedModel = models::NestedModel<f64>;
pub type HessModel = models::HessModel<f64>;
pub type DeterministicLhv = models::DeterministicLhv<f64>;
pub type StateVector4 = quantum::StateVector4<f64>;
