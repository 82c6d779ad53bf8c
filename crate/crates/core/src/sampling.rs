//! Patch sampling inside labeled tissue regions and the slice-level
//! train/test partition.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::imaging::{DoseGroup, Label, LabeledSlice};
use crate::util::{rng, sub_seed};
use crate::{Error, Result, Scalar};

/// Odd patch side in pixels closest to `size_mm / pitch` (ties go up).
pub fn patch_side_px(size_mm: f64, pitch_mm: f64) -> usize {
    let x = size_mm / pitch_mm;
    let half = ((x - 1.0) / 2.0 + 0.5).floor().max(0.0);
    2 * half as usize + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSample<T> {
    pub pixels: Array2<T>,
    pub center: (usize, usize),
    pub size_mm: f64,
    pub size_px: usize,
    /// 0 = normal, 1 = tumor.
    pub label: u8,
    pub slice_id: String,
    pub patch_id: usize,
}

/// Centers with `label` whose `side x side` window lies inside the image,
/// in row-major order.
pub fn eligible_centers(labels: &Array2<Label>, label: Label, side: usize) -> Vec<(usize, usize)> {
    let (h, w) = labels.dim();
    let half = side / 2;
    if side > h || side > w {
        return Vec::new();
    }
    let mut out = Vec::new();
    for r in half..h - half {
        for c in half..w - half {
            if labels[[r, c]] == label {
                out.push((r, c));
            }
        }
    }
    out
}

fn tissue_label(label: Label) -> Result<u8> {
    match label {
        Label::Normal => Ok(0),
        Label::Tumor => Ok(1),
        other => Err(Error::BadConfig(format!(
            "patches are sampled from normal or tumor tissue, not {other:?}"
        ))),
    }
}

/// Draws `count` centers for `label`, eligible for a window of `side` pixels.
/// Without replacement when enough centers exist, otherwise with
/// replacement. The stream is seeded from `seed`, the slice id and the label
/// so that slices can be sampled in any order.
pub fn sample_centers<T: Scalar>(
    slice: &LabeledSlice<T>,
    label: Label,
    side: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    tissue_label(label)?;
    let eligible = eligible_centers(&slice.labels, label, side);
    if eligible.is_empty() {
        return Err(Error::EmptyRoi {
            slice_id: slice.slice_id.clone(),
            label: label as u8,
        });
    }
    let mut r = rng(sub_seed(seed, &format!("{}/{}", slice.slice_id, label as u8)));
    Ok(if eligible.len() >= count {
        index::sample(&mut r, eligible.len(), count)
            .into_iter()
            .map(|i| eligible[i])
            .collect()
    } else {
        (0..count)
            .map(|_| eligible[r.random_range(0..eligible.len())])
            .collect()
    })
}

/// Copies the `side x side` window centered at `center`.
pub fn extract_patch<T: Scalar>(
    slice: &LabeledSlice<T>,
    center: (usize, usize),
    side: usize,
) -> Result<Array2<T>> {
    let (h, w) = slice.image.shape();
    let half = side / 2;
    let (r, c) = center;
    if r < half || c < half || r + half >= h || c + half >= w {
        return Err(Error::ShapeMismatch(format!(
            "patch of side {side} at {center:?} leaves the {h}x{w} image"
        )));
    }
    Ok(slice
        .image
        .values()
        .slice(ndarray::s![r - half..=r + half, c - half..=c + half])
        .to_owned())
}

pub fn sample_patches<T: Scalar>(
    slice: &LabeledSlice<T>,
    label: Label,
    size_mm: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<PatchSample<T>>> {
    if count == 0 {
        return Err(Error::BadConfig("patch count must be at least 1".into()));
    }
    let side = patch_side_px(size_mm, slice.image.pixel_pitch().as_f64());
    let y = tissue_label(label)?;
    sample_centers(slice, label, side, count, seed)?
        .into_iter()
        .enumerate()
        .map(|(i, center)| {
            Ok(PatchSample {
                pixels: extract_patch(slice, center, side)?,
                center,
                size_mm,
                size_px: side,
                label: y,
                slice_id: slice.slice_id.clone(),
                patch_id: i,
            })
        })
        .collect()
}

/// Splits a per-slice patch budget between normal and tumor in proportion to
/// their eligible areas, giving each present class at least one patch.
pub fn allocate_budget(normal_area: usize, tumor_area: usize, budget: usize) -> (usize, usize) {
    let total = normal_area + tumor_area;
    if total == 0 || budget == 0 {
        return (0, 0);
    }
    let mut tumor = ((budget * tumor_area) as f64 / total as f64).round() as usize;
    if tumor_area > 0 {
        tumor = tumor.max(1);
    }
    if normal_area > 0 {
        tumor = tumor.min(budget.saturating_sub(1));
    }
    let normal = if normal_area > 0 { budget - tumor } else { 0 };
    (normal, if tumor_area > 0 { tumor } else { 0 })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudyPartition {
    pub train_slices: Vec<String>,
    pub test_slices: Vec<String>,
}

impl StudyPartition {
    pub fn is_train(&self, slice_id: &str) -> bool {
        self.train_slices.iter().any(|s| s == slice_id)
    }
}

/// Minimal per-slice metadata needed to partition a study.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceKey {
    pub slice_id: String,
    pub dose_group: DoseGroup,
}

/// Within each dose group, `round(fraction * n)` slices (kept within
/// `1..n`) go to training, chosen by a seeded shuffle of the id-sorted group.
pub fn partition_slices(slices: &[SliceKey], fraction: f64, seed: u64) -> Result<StudyPartition> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::BadConfig(format!(
            "train fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut groups: BTreeMap<DoseGroup, Vec<String>> = BTreeMap::new();
    for s in slices {
        groups
            .entry(s.dose_group)
            .or_default()
            .push(s.slice_id.clone());
    }
    let mut part = StudyPartition {
        train_slices: Vec::new(),
        test_slices: Vec::new(),
    };
    for (group, mut ids) in groups {
        if ids.len() < 2 {
            return Err(Error::GroupTooSmall(group.index()));
        }
        ids.sort();
        ids.dedup();
        let n = ids.len();
        let n_train = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
        ids.shuffle(&mut rng(sub_seed(seed, &format!("dose-group-{}", group.index()))));
        let (train, test) = ids.split_at(n_train);
        part.train_slices.extend(train.iter().cloned());
        part.test_slices.extend(test.iter().cloned());
    }
    part.train_slices.sort();
    part.test_slices.sort();
    Ok(part)
}
