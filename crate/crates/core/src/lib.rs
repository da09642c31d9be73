//! Missile-shot effectiveness experiments on constructive BVR air combat
//! data: a Latin Hypercube design drives an engagement simulator whose
//! launch records train and evaluate imbalanced binary classifiers.
//!
//! Numeric learning code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common double-precision instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod doe;
pub mod evalreport;
pub mod format;
pub mod harness;
pub mod models;
pub mod neighbors;
pub mod resample;
pub mod scalar;
pub mod seed;
pub mod sim;

pub use scalar::Scalar;
pub use seed::{derive_seed, SeedTag};

pub type LabeledMatrix64 = resample::LabeledMatrix<f64>;
pub type LabeledMatrix32 = resample::LabeledMatrix<f32>;
pub type ResampleOutcome64 = resample::ResampleOutcome<f64>;
pub type ResampleOutcome32 = resample::ResampleOutcome<f32>;
pub type TrainedModel64 = models::TrainedModel<f64>;
pub type TrainedModel32 = models::TrainedModel<f32>;
pub type ScalerParams64 = dataset::ScalerParams<f64>;
pub type ScalerParams32 = dataset::ScalerParams<f32>;
pub type ModelArtifact64 = models::ModelArtifact<f64>;
