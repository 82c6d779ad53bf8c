//! Optomics: radiomics-style texture analysis for wide-field fluorescence
//! images.
//!
//! The crate covers the whole tissue-classification workflow:
//!
//! * [`imaging`]: background subtraction, calibration, unit-range
//!   normalization and gray-level quantization.
//! * [`filterbank`]: the 15 derivative images computed for every patch.
//! * [`features`]: 92 first-order and texture features per image, 1,472 per
//!   patch with the default bank.
//! * [`sampling`]: labeled patch sampling and slice-level partitioning.
//! * [`selection`], [`classifiers`], [`model_selection`]: feature ranking,
//!   the seven classifier families and the leave-one-slice-out grid search.
//! * [`thresholding`]: the intensity-threshold baseline.
//! * [`probmap`]: biharmonic spline probability maps.
//! * [`stats`]: paired t-test and run reports.
//! * [`phantom`]: synthetic studies with known ground truth.
//!
//! Numeric kernels that do not depend on a learned model are generic over the
//! [`Scalar`] trait (implemented for `f32` and `f64`). Concrete `f64` aliases
//! are exported at the crate root for the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod error;
pub mod features;
pub mod filterbank;
pub mod imaging;
pub mod io;
pub mod linalg;
pub mod model_selection;
pub mod phantom;
pub mod probmap;
pub mod sampling;
pub mod scalar;
pub mod selection;
pub mod stats;
pub mod thresholding;
mod util;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

/// Fluorescence image in `f64`.
pub type GrayImage = imaging::Image<f64>;
/// Fluorescence image in `f32`.
pub type GrayImageF32 = imaging::Image<f32>;
/// Labeled slice in `f64`.
pub type LabeledSlice = imaging::LabeledSlice<f64>;
/// Patch sample in `f64`.
pub type PatchSample = sampling::PatchSample<f64>;
/// Fitted spline in `f64`.
pub type SplineModel = probmap::SplineModel<f64>;
/// Dense probability map in `f64`.
pub type ProbabilityMap = probmap::ProbabilityMap<f64>;
/// ROC curve over `f64` intensities.
pub type RocCurve = thresholding::RocCurve<f64>;
/// Feature vector in `f64`.
pub type FeatureVector = features::FeatureVector<f64>;

pub use classifiers::{ClassifierKind, Model, Standardizer};
pub use features::FeatureMatrix;
pub use filterbank::{FilterKind, FilterSpec};
pub use model_selection::{AccuracyCube, TrainedPipeline};
pub use selection::{FeatureRanking, RankingMethod};
pub use thresholding::ConfusionMatrix;

/// Default scanner pixel pitch in millimeters (42 µm).
pub const DEFAULT_PIXEL_PITCH_MM: f64 = 0.042;
/// Default gray-level count for texture matrices.
pub const DEFAULT_GRAY_LEVELS: usize = 32;
/// Default patch side lengths in millimeters.
pub const DEFAULT_PATCH_SIZES_MM: [f64; 3] = [0.88, 1.39, 1.81];
