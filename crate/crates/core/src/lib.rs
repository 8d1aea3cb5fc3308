//! Ridge-function regression laboratory core.
//!
//! The statistical model is `Yᵢ = f(Xᵢᵗθ*) + εᵢ` with isotropic design rows of
//! norm `√p`. This crate provides the links and losses ([`model`]), synthetic
//! data ([`datagen`]), the empirical risk and its derivatives ([`risk`]),
//! Newton-flow solvers for both the under- and overparametrised regimes
//! ([`solver`]), and the closed-form finite-sample error radii together with
//! the auxiliary random-matrix and coupon-collector quantities ([`bounds`]).
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod datagen;
pub mod error;
pub mod model;
pub mod risk;
pub mod rng;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

pub type RidgeFunction64 = model::RidgeFunction<f64>;
pub type LossSpec64 = model::LossSpec<f64>;
pub type Design64 = datagen::Design<f64>;
pub type Dataset64 = datagen::Dataset<f64>;
pub type RiskContext64<'a> = risk::RiskContext<'a, f64>;
pub type HessianFactors64 = risk::HessianFactors<f64>;
pub type SvdFactors64 = solver::SvdFactors<f64>;
pub type StationaryPoint64 = solver::StationaryPoint<f64>;
pub type NewtonOptions64 = solver::NewtonOptions<f64>;
pub type BoundParams64 = bounds::BoundParams<f64>;
pub type CoverReport64 = bounds::CoverReport<f64>;

pub type RidgeFunction32 = model::RidgeFunction<f32>;
pub type LossSpec32 = model::LossSpec<f32>;
pub type Dataset32 = datagen::Dataset<f32>;
pub type BoundParams32 = bounds::BoundParams<f32>;
