//! Histogram statistics of the continuous patch intensities.

use crate::imaging::quantize_value;
use crate::{Error, Result, Scalar};

pub const NAMES: [&str; 18] = [
    "Energy",
    "TotalEnergy",
    "Entropy",
    "Minimum",
    "Percentile10",
    "Percentile90",
    "Maximum",
    "Mean",
    "Median",
    "InterquartileRange",
    "Range",
    "MeanAbsoluteDeviation",
    "RobustMeanAbsoluteDeviation",
    "RootMeanSquared",
    "Skewness",
    "Kurtosis",
    "Variance",
    "Uniformity",
];

/// Linear-interpolation percentile of sorted data (`q` in `[0, 100]`).
pub fn percentile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = T::c(pos - lo as f64);
    if lo + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// The 18 first-order features. `Entropy` and `Uniformity` use the
/// `ng`-bin histogram shared with the texture matrices; `TotalEnergy` scales
/// `Energy` by the pixel area. Skewness and kurtosis are 0 for flat patches.
pub fn first_order<T: Scalar>(values: &[T], ng: usize, pixel_area: T) -> Result<[T; 18]> {
    if values.len() < 2 {
        return Err(Error::EmptyPatch);
    }
    if ng < 2 {
        return Err(Error::BadBinCount(ng));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let n = T::from_usize_lossy(values.len());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite intensities"));

    let energy: T = values.iter().map(|&v| v * v).sum();
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let mean = min + values.iter().map(|&v| v - min).sum::<T>() / n;
    let (mut m2, mut m3, mut m4, mut mad) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &v in values {
        let d = v - mean;
        m2 = m2 + d * d;
        m3 = m3 + d * d * d;
        m4 = m4 + d * d * d * d;
        mad = mad + d.abs();
    }
    let (m2, m3, m4, mad) = (m2 / n, m3 / n, m4 / n, mad / n);
    let (skew, kurt) = if m2 > T::zero() {
        (m3 / m2.powf(T::c(1.5)), m4 / (m2 * m2))
    } else {
        (T::zero(), T::zero())
    };

    let p10 = percentile_sorted(&sorted, 10.0);
    let p25 = percentile_sorted(&sorted, 25.0);
    let p50 = percentile_sorted(&sorted, 50.0);
    let p75 = percentile_sorted(&sorted, 75.0);
    let p90 = percentile_sorted(&sorted, 90.0);

    let robust: Vec<T> = sorted
        .iter()
        .copied()
        .filter(|&v| v >= p10 && v <= p90)
        .collect();
    // Tiny inputs can leave nothing between the interpolated percentiles.
    let rmad = match robust.first() {
        Some(&r0) => {
            let rn = T::from_usize_lossy(robust.len());
            let rmean = r0 + robust.iter().map(|&v| v - r0).sum::<T>() / rn;
            robust.iter().map(|&v| (v - rmean).abs()).sum::<T>() / rn
        }
        None => T::zero(),
    };

    let mut hist = vec![0usize; ng + 1];
    for &v in values {
        hist[usize::from(quantize_value(v, ng))] += 1;
    }
    let (mut entropy, mut uniformity) = (T::zero(), T::zero());
    for &c in hist.iter().filter(|&&c| c > 0) {
        let p = T::from_usize_lossy(c) / n;
        entropy = entropy - p * p.log2();
        uniformity = uniformity + p * p;
    }

    Ok([
        energy,
        energy * pixel_area,
        entropy,
        min,
        p10,
        p90,
        max,
        mean,
        p50,
        p75 - p25,
        max - min,
        mad,
        rmad,
        (energy / n).sqrt(),
        skew,
        kurt,
        m2,
        uniformity,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn get(f: &[f64; 18], name: &str) -> f64 {
        f[NAMES.iter().position(|n| *n == name).unwrap()]
    }

    #[test]
    fn constant_patch() {
        let f = first_order(&[0.4; 16], 32, 1.0).unwrap();
        assert_eq!(get(&f, "Mean"), 0.4);
        assert_eq!(get(&f, "Variance"), 0.0);
        assert_eq!(get(&f, "Range"), 0.0);
        assert_eq!(get(&f, "Entropy"), 0.0);
        assert_eq!(get(&f, "Uniformity"), 1.0);
        assert_eq!(get(&f, "Skewness"), 0.0);
    }

    #[test]
    fn symmetric_values_have_zero_skew() {
        let f = first_order(&[0.0, 0.5, 1.0], 32, 1.0).unwrap();
        assert!(get(&f, "Skewness").abs() < 1e-15);
        assert_eq!(get(&f, "Median"), 0.5);
    }

    #[test]
    fn total_energy_scales_by_area() {
        let f = first_order(&[0.1, 0.2, 0.3], 8, 0.042 * 0.042).unwrap();
        assert!((get(&f, "TotalEnergy") - get(&f, "Energy") * 0.042 * 0.042).abs() < 1e-18);
    }

    #[test]
    fn too_few_pixels() {
        assert!(matches!(
            first_order::<f64>(&[0.5], 8, 1.0),
            Err(Error::EmptyPatch)
        ));
    }
}
