//! Fluorescence image containers and the standardization chain:
//! background subtraction, calibration-target normalization, unit-range
//! rescaling and fixed-bin-count quantization.

use ndarray::{Array2, ArrayView2, Zip};

use crate::{Error, Result, Scalar, DEFAULT_PIXEL_PITCH_MM};

/// A 2D scalar field with a physical pixel pitch. Rows index `y`, columns `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    data: Array2<T>,
    pixel_pitch: T,
}

impl<T: Scalar> Image<T> {
    /// Wraps `data`, rejecting empty arrays, non-finite values and a
    /// non-positive pitch.
    pub fn new(data: Array2<T>, pixel_pitch: T) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidImage("image must be at least 1x1".into()));
        }
        if !(pixel_pitch > T::zero()) || !pixel_pitch.is_finite() {
            return Err(Error::InvalidImage(format!(
                "pixel pitch must be positive, got {pixel_pitch}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite pixel value".into()));
        }
        Ok(Self { data, pixel_pitch })
    }

    /// Image with the default 0.042 mm pitch.
    pub fn with_default_pitch(data: Array2<T>) -> Result<Self> {
        Self::new(data, T::c(DEFAULT_PIXEL_PITCH_MM))
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn height(&self) -> usize {
        self.data.nrows()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn pixel_pitch(&self) -> T {
        self.pixel_pitch
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.data.view()
    }

    pub fn into_values(self) -> Array2<T> {
        self.data
    }

    fn map_same(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            data: self.data.mapv(f),
            pixel_pitch: self.pixel_pitch,
        }
    }
}

/// Per-pixel tissue annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Label {
    Background = 0,
    Normal = 1,
    Tumor = 2,
    Calibration = 3,
}

impl Label {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Background),
            1 => Some(Label::Normal),
            2 => Some(Label::Tumor),
            3 => Some(Label::Calibration),
            _ => None,
        }
    }

    pub fn is_tissue(self) -> bool {
        matches!(self, Label::Normal | Label::Tumor)
    }
}

/// Imaging-agent dose group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DoseGroup {
    Low = 1,
    Mid = 2,
    High = 3,
}

impl DoseGroup {
    pub const ALL: [DoseGroup; 3] = [DoseGroup::Low, DoseGroup::Mid, DoseGroup::High];

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(DoseGroup::Low),
            2 => Some(DoseGroup::Mid),
            3 => Some(DoseGroup::High),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    /// Administered dose in nanomoles.
    pub fn nanomoles(self) -> u32 {
        match self {
            DoseGroup::Low => 30,
            DoseGroup::Mid => 90,
            DoseGroup::High => 171,
        }
    }
}

/// A fluorescence slice with its ground-truth label mask and study metadata.
#[derive(Debug, Clone)]
pub struct LabeledSlice<T> {
    pub image: Image<T>,
    pub labels: Array2<Label>,
    pub slice_id: String,
    pub patient_id: String,
    pub dose_group: DoseGroup,
}

impl<T: Scalar> LabeledSlice<T> {
    pub fn new(
        image: Image<T>,
        labels: Array2<Label>,
        slice_id: impl Into<String>,
        patient_id: impl Into<String>,
        dose_group: DoseGroup,
    ) -> Result<Self> {
        if labels.dim() != image.shape() {
            return Err(Error::ShapeMismatch(format!(
                "labels {:?} vs image {:?}",
                labels.dim(),
                image.shape()
            )));
        }
        Ok(Self {
            image,
            labels,
            slice_id: slice_id.into(),
            patient_id: patient_id.into(),
            dose_group,
        })
    }

    /// True if at least one pixel is normal or tumor tissue.
    pub fn has_tissue(&self) -> bool {
        self.labels.iter().any(|l| l.is_tissue())
    }

    pub fn mask_of(&self, label: Label) -> Array2<bool> {
        self.labels.mapv(|l| l == label)
    }

    pub fn tissue_mask(&self) -> Array2<bool> {
        self.labels.mapv(Label::is_tissue)
    }

    pub fn with_image(&self, image: Image<T>) -> Self {
        Self {
            image,
            labels: self.labels.clone(),
            slice_id: self.slice_id.clone(),
            patient_id: self.patient_id.clone(),
            dose_group: self.dose_group,
        }
    }
}

/// Quantized patch with entries in `1..=ng`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretePatch {
    levels: Array2<u16>,
    ng: usize,
}

impl DiscretePatch {
    pub fn new(levels: Array2<u16>, ng: usize) -> Result<Self> {
        if ng < 2 || ng > usize::from(u16::MAX) {
            return Err(Error::BadBinCount(ng));
        }
        if levels.is_empty() {
            return Err(Error::EmptyPatch);
        }
        if levels.iter().any(|&l| l == 0 || usize::from(l) > ng) {
            return Err(Error::InvalidImage(format!("level outside 1..={ng}")));
        }
        Ok(Self { levels, ng })
    }

    pub fn levels(&self) -> ArrayView2<'_, u16> {
        self.levels.view()
    }

    pub fn ng(&self) -> usize {
        self.ng
    }

    pub fn dim(&self) -> (usize, usize) {
        self.levels.dim()
    }
}

/// `max(x - background_mean, 0)` per pixel.
pub fn background_subtract<T: Scalar>(img: &Image<T>, background_mean: T) -> Image<T> {
    img.map_same(|v| (v - background_mean).max(T::zero()))
}

/// Mean intensity over the pixels where `mask` is set.
pub fn masked_mean<T: Scalar>(img: &Image<T>, mask: ArrayView2<'_, bool>) -> Option<T> {
    let mut sum = T::zero();
    let mut n = 0usize;
    Zip::from(img.values()).and(mask).for_each(|&v, &m| {
        if m {
            sum = sum + v;
            n += 1;
        }
    });
    (n > 0).then(|| sum / T::from_usize_lossy(n))
}

/// Divides by the mean intensity over the calibration target.
pub fn calibrate<T: Scalar>(img: &Image<T>, calib_mask: ArrayView2<'_, bool>) -> Result<Image<T>> {
    if calib_mask.dim() != img.shape() {
        return Err(Error::ShapeMismatch("calibration mask".into()));
    }
    let mean = masked_mean(img, calib_mask).ok_or(Error::ZeroCalibration)?;
    if !(mean > T::zero()) {
        return Err(Error::ZeroCalibration);
    }
    Ok(img.map_same(|v| v / mean))
}

/// Affine rescale to `[0, 1]`.
pub fn normalize_unit_range<T: Scalar>(img: &Image<T>) -> Result<Image<T>> {
    let (lo, hi) = min_max(img.values().iter().copied()).ok_or(Error::EmptyPatch)?;
    if hi == lo {
        return Err(Error::ConstantImage);
    }
    let span = hi - lo;
    Ok(img.map_same(|v| (v - lo) / span))
}

pub(crate) fn min_max<T: Scalar>(mut it: impl Iterator<Item = T>) -> Option<(T, T)> {
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
}

/// Full chain on a labeled slice: subtract the label-0 mean, divide by the
/// label-3 mean, rescale to `[0, 1]`.
pub fn standardize<T: Scalar>(slice: &LabeledSlice<T>) -> Result<LabeledSlice<T>> {
    let bg_mask = slice.mask_of(Label::Background);
    let bg = masked_mean(&slice.image, bg_mask.view()).unwrap_or(T::zero());
    let sub = background_subtract(&slice.image, bg);
    let cal = calibrate(&sub, slice.mask_of(Label::Calibration).view())?;
    let norm = normalize_unit_range(&cal)?;
    Ok(slice.with_image(norm))
}

/// Gray level for a unit-range value: `min(floor(v * ng) + 1, ng)`.
#[inline]
pub fn quantize_value<T: Scalar>(v: T, ng: usize) -> u16 {
    let ngf = T::from_usize_lossy(ng);
    let raw = (v * ngf).floor();
    let lvl = if raw < T::zero() {
        0
    } else {
        raw.to_usize().unwrap_or(ng)
    };
    (lvl + 1).min(ng) as u16
}

/// Fixed-bin-count discretization of a unit-range patch.
pub fn quantize<T: Scalar>(patch: ArrayView2<'_, T>, ng: usize) -> Result<DiscretePatch> {
    if ng < 2 {
        return Err(Error::BadBinCount(ng));
    }
    DiscretePatch::new(patch.mapv(|v| quantize_value(v, ng)), ng)
}
