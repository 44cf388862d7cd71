//! Harmonic maps from grid domains into metric spaces with EVI₀ gradient
//! flows, and a numerical harness for the convexity, subharmonicity and
//! maximum-principle properties such maps enjoy.

// `!(x >= 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod rng;
pub mod scalar;
pub mod parallel;
pub mod space;
pub mod evi;
pub mod field;
pub mod dirichlet;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instances of the generic types.
pub type Domain = field::GridDomain<f64>;
pub type Quadratic = space::EuclidQuadratic<f64>;
pub type Linear = space::EuclidLinear<f64>;
pub type Quantile = space::QuantileEntropy<f64>;
pub type Tripod = space::TripodQuadratic<f64>;
pub type TripodPt = space::TripodPoint<f64>;
/// Euclidean and quantile fields both store `Vec<f64>` per node.
pub type VectorField = field::Field<f64, Vec<f64>>;
pub type TripodField = field::Field<f64, space::TripodPoint<f64>>;
