//! Occlusion-attack robustness toolkit for classical face presentation-attack
//! detectors.
//!
//! The crate synthesizes landmark-anchored masks and glasses on face frames,
//! extracts LBP, image-quality and frame-difference motion descriptors, trains
//! SMO-based SVMs on them, and scores the result with FAR/FRR/HTER and
//! APCER/BPCER/ACER.
//!
//! Geometry, features, classifiers and metrics are generic over [`Scalar`]
//! (`f32` or `f64`); the aliases at the crate root fix the scalar to `f64`,
//! with `*32` variants for `f32`.

// `!(x > 0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod dataset;
pub mod error;
pub mod features;
pub mod harness;
pub mod imaging;
pub mod landmarks;
pub mod metrics;
pub mod occlusion;
pub mod scalar;
pub mod synthdata;

pub use error::{Error, Result};
pub use imaging::{Image, Rgb};
pub use scalar::Scalar;

pub type Point = imaging::Point<f64>;
pub type Polygon = imaging::Polygon<f64>;
pub type LandmarkSet = landmarks::LandmarkSet<f64>;
pub type FrameLandmarks = landmarks::FrameLandmarks<f64>;
pub type FaceRegion = landmarks::FaceRegion<f64>;
pub type OcclusionSpec = occlusion::OcclusionSpec<f64>;
pub type AssetPack = occlusion::AssetPack<f64>;
pub type FeatureVector = features::FeatureVector<f64>;
pub type SvmModel = classifier::SvmModel<f64>;
pub type LabeledSet = classifier::LabeledSet<f64>;
pub type ScoreSet = metrics::ScoreSet<f64>;
pub type MetricsReport = metrics::MetricsReport<f64>;

pub type Point32 = imaging::Point<f32>;
pub type Polygon32 = imaging::Polygon<f32>;
pub type LandmarkSet32 = landmarks::LandmarkSet<f32>;
pub type FeatureVector32 = features::FeatureVector<f32>;
pub type SvmModel32 = classifier::SvmModel<f32>;
pub type ScoreSet32 = metrics::ScoreSet<f32>;
