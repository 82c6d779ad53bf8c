//! Synthetic fluorescence studies with known ground truth.
//!
//! Each slice has a background, a calibration square, an elliptical tissue
//! section of smooth normal tissue, and one or two tumor blobs with a
//! patchy, short-correlation texture. Part of the tumor is dim and part of
//! the normal tissue is bright (the intensity-overlap knob), so intensity
//! alone cannot separate the classes but texture can.

use ndarray::{Array2, Zip};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::imaging::{DoseGroup, Image, Label, LabeledSlice};
use crate::util::{reflect, rng, sub_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalTexture {
    pub mean: f64,
    /// Relative amplitude of the smooth variation.
    pub variation: f64,
    pub correlation_px: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TumorTexture {
    pub mean: f64,
    /// Relative amplitude of the patchy variation.
    pub heterogeneity: f64,
    pub correlation_px: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomConfig {
    pub patients: usize,
    pub slices_per_patient: usize,
    /// Brightness multiplier per dose group (low, mid, high).
    pub dose_multipliers: [f64; 3],
    pub size: usize,
    pub pixel_pitch: f64,
    pub background: f64,
    pub calibration: f64,
    /// Minimum ratio of mean tumor to mean background intensity.
    pub target_sbr: f64,
    pub normal_texture: NormalTexture,
    pub tumor_texture: TumorTexture,
    /// Fraction of tumor rendered dim; 0.8 times this fraction of normal
    /// tissue is rendered bright.
    pub intensity_overlap: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            patients: 12,
            slices_per_patient: 2,
            dose_multipliers: [1.0, 2.5, 4.0],
            size: 256,
            pixel_pitch: crate::DEFAULT_PIXEL_PITCH_MM,
            background: 0.1,
            calibration: 1.2,
            target_sbr: 10.0,
            normal_texture: NormalTexture {
                mean: 0.5,
                variation: 0.08,
                correlation_px: 12.0,
            },
            tumor_texture: TumorTexture {
                mean: 1.5,
                heterogeneity: 0.35,
                correlation_px: 1.5,
            },
            intensity_overlap: 0.25,
            noise_sd: 0.01,
            seed: 2023,
        }
    }
}

impl PhantomConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadConfig(format!("phantom: {m}")));
        if self.patients < 3 || self.slices_per_patient < 1 {
            return bad("need at least 3 patients and 1 slice per patient");
        }
        if self.size < 64 {
            return bad("image size must be at least 64");
        }
        if !(self.target_sbr >= 1.0) {
            return bad("target_sbr must be >= 1");
        }
        if !(self.noise_sd >= 0.0) {
            return bad("noise_sd must be >= 0");
        }
        if !(0.0..=0.9).contains(&self.intensity_overlap) {
            return bad("intensity_overlap must lie in [0, 0.9]");
        }
        if self.dose_multipliers.iter().any(|&m| !(m > 0.0))
            || !(self.background > 0.0)
            || !(self.calibration > 0.0)
            || !(self.pixel_pitch > 0.0)
        {
            return bad("intensities, multipliers and pitch must be positive");
        }
        let (n, t) = (&self.normal_texture, &self.tumor_texture);
        if !(n.mean > 0.0 && t.mean > 0.0 && n.correlation_px > 0.0 && t.correlation_px > 0.0) {
            return bad("texture means and correlation lengths must be positive");
        }
        if !(0.0..1.0).contains(&t.heterogeneity) || !(0.0..1.0).contains(&n.variation) {
            return bad("texture amplitudes must lie in [0, 1)");
        }
        Ok(())
    }

    /// Dose group of a 0-based patient index: patients are split into three
    /// consecutive, equally sized blocks.
    pub fn dose_group_of(&self, patient: usize) -> DoseGroup {
        let g = (patient * 3 / self.patients).min(2);
        DoseGroup::ALL[g]
    }

    pub fn n_slices(&self) -> usize {
        self.patients * self.slices_per_patient
    }
}

/// Slice id for a 0-based patient and slice index, e.g. `P03-S2`.
pub fn slice_id(patient: usize, slice: usize) -> String {
    format!("P{:02}-S{}", patient + 1, slice + 1)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil().max(1.0) as isize;
    let k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn blur(x: &Array2<f64>, sigma: f64) -> Array2<f64> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (h, w) = x.dim();
    let rows: Array2<f64> = Array2::from_shape_fn((h, w), |(i, j)| {
        k.iter()
            .enumerate()
            .map(|(t, &kv)| kv * x[[i, reflect(j as isize + t as isize - r, w)]])
            .sum::<f64>()
    });
    Array2::from_shape_fn((h, w), |(i, j)| {
        k.iter()
            .enumerate()
            .map(|(t, &kv)| kv * rows[[reflect(i as isize + t as isize - r, h), j]])
            .sum()
    })
}

/// Zero-mean, unit-variance Gaussian random field with the given
/// correlation length.
fn random_field(r: &mut impl Rng, shape: (usize, usize), corr: f64) -> Array2<f64> {
    let white = Array2::from_shape_simple_fn(shape, || StandardNormal.sample(r));
    let mut f = blur(&white, corr);
    let n = f.len() as f64;
    let m = f.sum() / n;
    let sd = (f.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
    f.mapv_inplace(|v| (v - m) / sd);
    f
}

/// Value of `field` below which a `fraction` of the masked pixels lie.
fn masked_quantile(field: &Array2<f64>, mask: &Array2<bool>, fraction: f64) -> f64 {
    let mut v: Vec<f64> = field
        .iter()
        .zip(mask.iter())
        .filter(|(_, &m)| m)
        .map(|(&f, _)| f)
        .collect();
    if v.is_empty() {
        return f64::NEG_INFINITY;
    }
    v.sort_by(f64::total_cmp);
    let i = ((fraction * v.len() as f64) as usize).min(v.len() - 1);
    v[i]
}

fn smoothstep(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One slice. `tumor_gain` varies tumor brightness between patients.
fn generate_slice(
    cfg: &PhantomConfig,
    patient: usize,
    slice: usize,
    tumor_gain: f64,
) -> Result<LabeledSlice<f64>> {
    let id = slice_id(patient, slice);
    let mut r = rng(sub_seed(cfg.seed, &format!("phantom/{id}")));
    let n = cfg.size;
    let s = n as f64 / 256.0;
    let shape = (n, n);

    // Geometry.
    let cy = n as f64 / 2.0 + r.random_range(-6.0..6.0) * s;
    let cx = n as f64 / 2.0 + r.random_range(-6.0..6.0) * s;
    let ea = r.random_range(96.0..110.0) * s;
    let eb = r.random_range(84.0..100.0) * s;
    let theta: f64 = r.random_range(0.0..std::f64::consts::PI);
    let (st, ct) = theta.sin_cos();
    let n_blobs = if r.random_bool(0.35) { 2 } else { 1 };
    let blobs: Vec<(f64, f64, f64, f64, f64)> = (0..n_blobs)
        .map(|b| {
            let rad = if n_blobs == 1 {
                r.random_range(46.0..60.0)
            } else {
                r.random_range(34.0..44.0)
            } * s;
            let ang: f64 = r.random_range(0.0..std::f64::consts::TAU);
            let off = if n_blobs == 1 {
                r.random_range(0.0..22.0)
            } else {
                42.0 + 4.0 * b as f64
            } * s;
            let ang = ang + b as f64 * std::f64::consts::PI;
            let phase: f64 = r.random_range(0.0..std::f64::consts::TAU);
            let wobble = r.random_range(0.06..0.14);
            (cy + off * ang.sin(), cx + off * ang.cos(), rad, phase, wobble)
        })
        .collect();
    let cal = ((20.0 * s).round() as usize).max(4);
    let cal_off = ((6.0 * s).round() as usize).max(1);

    let labels = Array2::from_shape_fn(shape, |(i, j)| {
        let (y, x) = (i as f64 - cy, j as f64 - cx);
        let u = (x * ct + y * st) / ea;
        let v = (-x * st + y * ct) / eb;
        if (cal_off..cal_off + cal).contains(&i) && (cal_off..cal_off + cal).contains(&j) {
            return Label::Calibration;
        }
        if u * u + v * v > 1.0 {
            return Label::Background;
        }
        for &(by, bx, rad, phase, wobble) in &blobs {
            let (dy, dx) = (i as f64 - by, j as f64 - bx);
            let a = dy.atan2(dx);
            let rr = rad * (1.0 + wobble * (3.0 * a + phase).sin());
            if dy * dy + dx * dx <= rr * rr {
                return Label::Tumor;
            }
        }
        Label::Normal
    });
    let tumor_mask = labels.mapv(|l| l == Label::Tumor);
    let normal_mask = labels.mapv(|l| l == Label::Normal);
    if !tumor_mask.iter().any(|&m| m) || !normal_mask.iter().any(|&m| m) {
        return Err(Error::BadConfig(format!(
            "phantom slice {id} lacks tumor or normal tissue; increase size"
        )));
    }

    // Texture fields.
    let nt = cfg.normal_texture;
    let tt = cfg.tumor_texture;
    let smooth = random_field(&mut r, shape, nt.correlation_px * s);
    let patchy = random_field(&mut r, shape, tt.correlation_px * s);
    let dim_field = random_field(&mut r, shape, 9.0 * s);
    let bright_field = random_field(&mut r, shape, 14.0 * s);
    let noise: Array2<f64> = Array2::from_shape_simple_fn(shape, || StandardNormal.sample(&mut r));

    let ov = cfg.intensity_overlap;
    let dim_q = masked_quantile(&dim_field, &tumor_mask, ov);
    let bright_q = masked_quantile(&bright_field, &normal_mask, 1.0 - 0.8 * ov);
    let dim_level = 0.38;
    let bright_level = 2.6;

    let mut clean = Array2::from_elem(shape, cfg.background);
    Zip::indexed(&mut clean).for_each(|(i, j), v| match labels[[i, j]] {
        Label::Calibration => *v = cfg.calibration,
        Label::Normal => {
            let b = if ov > 0.0 {
                smoothstep((bright_field[[i, j]] - bright_q) / 0.12)
            } else {
                0.0
            };
            let level = 1.0 + (bright_level - 1.0) * b;
            *v = nt.mean * level * (1.0 + nt.variation * smooth[[i, j]].tanh());
        }
        Label::Tumor => {
            let d = if ov > 0.0 {
                smoothstep((dim_q - dim_field[[i, j]]) / 0.12)
            } else {
                0.0
            };
            let level = 1.0 - (1.0 - dim_level) * d;
            *v = tt.mean
                * tumor_gain
                * level
                * (1.0 + tt.heterogeneity * (1.3 * patchy[[i, j]]).tanh());
        }
        Label::Background => {}
    });

    // Enforce the signal-to-background floor on the noise-free image.
    let (sum, cnt) = Zip::from(&clean)
        .and(&tumor_mask)
        .fold((0.0, 0usize), |(s, c), &v, &m| if m { (s + v, c + 1) } else { (s, c) });
    let tumor_mean = sum / cnt as f64;
    let floor = cfg.target_sbr * cfg.background;
    if tumor_mean < floor {
        let k = floor / tumor_mean;
        Zip::from(&mut clean)
            .and(&tumor_mask)
            .for_each(|v, &m| {
                if m {
                    *v *= k
                }
            });
    }

    let dose = cfg.dose_group_of(patient);
    let mult = cfg.dose_multipliers[usize::from(dose.index() - 1)];
    let img = Zip::from(&clean)
        .and(&noise)
        .map_collect(|&c, &e| (c * mult + cfg.noise_sd * e).max(0.0));
    LabeledSlice::new(
        Image::new(img, cfg.pixel_pitch)?,
        labels,
        id,
        format!("P{:02}", patient + 1),
        dose,
    )
}

/// Generates every slice of the study, ordered by patient then slice.
pub fn generate_study(cfg: &PhantomConfig) -> Result<Vec<LabeledSlice<f64>>> {
    cfg.validate()?;
    let gains: Vec<f64> = {
        let mut r = rng(sub_seed(cfg.seed, "phantom/patient-gain"));
        (0..cfg.patients).map(|_| r.random_range(0.88..1.12)).collect()
    };
    (0..cfg.n_slices())
        .into_par_iter()
        .map(|i| {
            let (p, s) = (i / cfg.slices_per_patient, i % cfg.slices_per_patient);
            generate_slice(cfg, p, s, gains[p])
        })
        .collect()
}

/// Mean of `img` over pixels with label `label`.
pub fn region_mean(slice: &LabeledSlice<f64>, label: Label) -> Option<f64> {
    crate::imaging::masked_mean(&slice.image, slice.mask_of(label).view())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PhantomConfig {
        PhantomConfig {
            patients: 3,
            slices_per_patient: 1,
            size: 128,
            ..PhantomConfig::default()
        }
    }

    #[test]
    fn deterministic_and_labeled() {
        let a = generate_study(&small()).unwrap();
        let b = generate_study(&small()).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.image.values(), y.image.values());
            assert_eq!(x.labels, y.labels);
            for l in [Label::Background, Label::Normal, Label::Tumor, Label::Calibration] {
                assert!(x.labels.iter().any(|&v| v == l), "{l:?} missing");
            }
        }
        let groups: Vec<u8> = a.iter().map(|s| s.dose_group.index()).collect();
        assert_eq!(groups, vec![1, 2, 3]);
    }

    #[test]
    fn rejects_bad_config() {
        let c = PhantomConfig {
            target_sbr: 0.5,
            ..small()
        };
        assert!(matches!(generate_study(&c), Err(Error::BadConfig(_))));
    }
}
