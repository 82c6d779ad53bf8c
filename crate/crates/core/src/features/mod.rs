//! The 92 per-image optomic features (18 first-order, 74 texture) and the
//! per-patch vector built over the filter bank.

mod emphasis;
pub mod first_order;
pub mod glcm;
pub mod gldm;
pub mod glrlm;
pub mod glszm;
pub mod ngtdm;

use ndarray::{Array2, ArrayView2};

use crate::filterbank::{apply_filter, FilterSpec};
use crate::imaging::quantize;
use crate::{Error, Result, Scalar};

pub use first_order::first_order;
pub use glcm::glcm_features;
pub use gldm::gldm_features;
pub use glrlm::glrlm_features;
pub use glszm::glszm_features;
pub use ngtdm::ngtdm_features;

/// Features per image: 18 + 23 + 16 + 16 + 14 + 5.
pub const FEATURES_PER_IMAGE: usize = 92;

/// `(class, feature names)` in canonical order.
pub fn feature_classes() -> [(&'static str, &'static [&'static str]); 6] {
    [
        ("firstorder", &first_order::NAMES),
        ("glcm", &glcm::NAMES),
        ("glrlm", &glrlm::NAMES),
        ("glszm", &glszm::NAMES),
        ("gldm", &gldm::NAMES),
        ("ngtdm", &ngtdm::NAMES),
    ]
}

/// Canonical `<filter>_<class>_<feature>` names for the original image
/// followed by every filter in `bank`.
pub fn feature_names(bank: &[FilterSpec]) -> Vec<String> {
    std::iter::once("original")
        .chain(bank.iter().map(|f| f.name.as_str()))
        .flat_map(|img| {
            feature_classes().into_iter().flat_map(move |(class, names)| {
                names.iter().map(move |n| format!("{img}_{class}_{n}"))
            })
        })
        .collect()
}

/// Per-patch optomic feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    pub names: Vec<String>,
    pub values: Vec<T>,
}

/// The 92 features of one unit-range image.
pub fn image_features<T: Scalar>(img: ArrayView2<'_, T>, ng: usize, pixel_area: T) -> Result<Vec<T>> {
    let values: Vec<T> = img.iter().copied().collect();
    let dp = quantize(img, ng)?;
    let mut out = Vec::with_capacity(FEATURES_PER_IMAGE);
    out.extend(first_order(&values, ng, pixel_area)?);
    out.extend(glcm_features::<T>(&dp)?);
    out.extend(glrlm::glrlm_features::<T>(&dp)?);
    out.extend(glszm_features::<T>(&dp)?);
    out.extend(gldm_features::<T>(&dp)?);
    out.extend(ngtdm_features::<T>(&dp)?);
    debug_assert_eq!(out.len(), FEATURES_PER_IMAGE);
    Ok(out)
}

/// Feature values for the original patch and each filtered patch, in
/// canonical order. Length is `(1 + bank.len()) * 92`.
pub fn optomic_values<T: Scalar>(
    patch: ArrayView2<'_, T>,
    bank: &[FilterSpec],
    ng: usize,
    pixel_pitch: T,
) -> Result<Vec<T>> {
    let area = pixel_pitch * pixel_pitch;
    let mut out = Vec::with_capacity((1 + bank.len()) * FEATURES_PER_IMAGE);
    out.extend(image_features(patch, ng, area)?);
    for spec in bank {
        let filtered = apply_filter(patch, spec, pixel_pitch)?;
        out.extend(image_features(filtered.view(), ng, area)?);
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(out)
}

pub fn optomic_vector<T: Scalar>(
    patch: ArrayView2<'_, T>,
    bank: &[FilterSpec],
    ng: usize,
    pixel_pitch: T,
) -> Result<FeatureVector<T>> {
    Ok(FeatureVector {
        names: feature_names(bank),
        values: optomic_values(patch, bank, ng, pixel_pitch)?,
    })
}

/// Metadata carried alongside each feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMeta {
    pub slice_id: String,
    pub patient_id: String,
    pub dose_group: u8,
    pub patch_id: usize,
    pub center_row: usize,
    pub center_col: usize,
    pub size_mm: f64,
}

/// Patch-level dataset: one row per patch, binary labels (1 = tumor).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub data: Array2<f64>,
    pub labels: Vec<u8>,
    pub meta: Vec<RowMeta>,
}

impl FeatureMatrix {
    pub fn new(
        names: Vec<String>,
        data: Array2<f64>,
        labels: Vec<u8>,
        meta: Vec<RowMeta>,
    ) -> Result<Self> {
        let m = Self {
            names,
            data,
            labels,
            meta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = self.data.dim();
        if self.names.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.names.len(),
            });
        }
        if self.labels.len() != n || self.meta.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.labels.len().min(self.meta.len()),
            });
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if self.labels.iter().any(|&l| l > 1) {
            return Err(Error::DegenerateInput("labels must be 0 or 1".into()));
        }
        if self.meta.iter().any(|m| m.slice_id.is_empty()) {
            return Err(Error::DegenerateInput("empty slice id".into()));
        }
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn slice_id(&self, row: usize) -> &str {
        &self.meta[row].slice_id
    }

    /// Distinct slice ids in first-appearance order.
    pub fn slice_ids(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in &self.meta {
            if !out.contains(&m.slice_id) {
                out.push(m.slice_id.clone());
            }
        }
        out
    }

    /// New matrix holding `rows` in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            data: self.data.select(ndarray::Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            meta: rows.iter().map(|&r| self.meta[r].clone()).collect(),
        }
    }

    pub fn rows_where(&self, pred: impl Fn(&RowMeta) -> bool) -> Vec<usize> {
        (0..self.nrows()).filter(|&r| pred(&self.meta[r])).collect()
    }
}
