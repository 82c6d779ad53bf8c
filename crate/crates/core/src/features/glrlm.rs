//! Gray-level run-length matrix features, averaged over four directions.

use ndarray::Array2;

use super::emphasis::emphasis_features;
use super::glcm::OFFSETS;
use crate::imaging::DiscretePatch;
use crate::{Error, Result, Scalar};

pub const NAMES: [&str; 16] = [
    "ShortRunEmphasis",
    "LongRunEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "GrayLevelVariance",
    "RunVariance",
    "RunEntropy",
    "LowGrayLevelRunEmphasis",
    "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis",
    "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",
    "LongRunHighGrayLevelEmphasis",
];

/// Run counts `R[level - 1, length - 1]` along `dir`.
pub fn glrlm_matrix(dp: &DiscretePatch, dir: (isize, isize)) -> Array2<usize> {
    let (h, w) = dp.dim();
    let lv = dp.levels();
    let inside = |r: isize, c: isize| r >= 0 && c >= 0 && r < h as isize && c < w as isize;
    let mut m = Array2::zeros((dp.ng(), h.max(w)));
    for r0 in 0..h as isize {
        for c0 in 0..w as isize {
            // Start each scan line at a pixel whose predecessor is outside.
            if inside(r0 - dir.0, c0 - dir.1) {
                continue;
            }
            let (mut r, mut c) = (r0, c0);
            let mut cur = lv[[r as usize, c as usize]];
            let mut len = 0usize;
            while inside(r, c) {
                let v = lv[[r as usize, c as usize]];
                if v == cur {
                    len += 1;
                } else {
                    m[[usize::from(cur) - 1, len - 1]] += 1;
                    cur = v;
                    len = 1;
                }
                r += dir.0;
                c += dir.1;
            }
            m[[usize::from(cur) - 1, len - 1]] += 1;
        }
    }
    m
}

/// Features of one direction's run-length matrix.
pub fn glrlm_direction_features<T: Scalar>(dp: &DiscretePatch, dir: (isize, isize)) -> Result<[T; 16]> {
    let (h, w) = dp.dim();
    emphasis_features(&glrlm_matrix(dp, dir), h * w)
        .ok_or_else(|| Error::DegenerateMatrix("no runs".into()))
}

pub fn glrlm_features<T: Scalar>(dp: &DiscretePatch) -> Result<[T; 16]> {
    let mut acc = [T::zero(); 16];
    for dir in OFFSETS {
        let f = glrlm_direction_features::<T>(dp, dir)?;
        for (a, v) in acc.iter_mut().zip(f) {
            *a = *a + v;
        }
    }
    let n = T::from_usize_lossy(OFFSETS.len());
    Ok(acc.map(|v| v / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_patch_horizontal_runs() {
        let n = 6;
        let dp = DiscretePatch::new(Array2::from_elem((n, n), 2), 4).unwrap();
        let m = glrlm_matrix(&dp, (0, 1));
        assert_eq!(m[[1, n - 1]], n);
        assert_eq!(m.iter().sum::<usize>(), n);
        let f = glrlm_direction_features::<f64>(&dp, (0, 1)).unwrap();
        assert_eq!(f[6], 1.0 / n as f64);
    }

    #[test]
    fn alternating_rows_give_unit_runs() {
        let dp = DiscretePatch::new(
            Array2::from_shape_fn((5, 6), |(_, c)| 1 + (c % 2) as u16),
            2,
        )
        .unwrap();
        let f = glrlm_direction_features::<f64>(&dp, (0, 1)).unwrap();
        assert_eq!(f[0], 1.0);
    }

    #[test]
    fn every_pixel_in_exactly_one_run() {
        let dp = DiscretePatch::new(
            Array2::from_shape_fn((7, 5), |(r, c)| 1 + ((r * 3 + c * c) % 4) as u16),
            4,
        )
        .unwrap();
        for dir in OFFSETS {
            let m = glrlm_matrix(&dp, dir);
            let covered: usize = m
                .indexed_iter()
                .map(|((_, l), &cnt)| cnt * (l + 1))
                .sum();
            assert_eq!(covered, 35);
        }
    }
}
