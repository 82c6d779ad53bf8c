//! Gray-level size-zone matrix features over 8-connected zones.

use ndarray::Array2;

use super::emphasis::emphasis_features;
use crate::imaging::DiscretePatch;
use crate::{Error, Result, Scalar};

pub const NAMES: [&str; 16] = [
    "SmallAreaEmphasis",
    "LargeAreaEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "ZonePercentage",
    "GrayLevelVariance",
    "ZoneVariance",
    "ZoneEntropy",
    "LowGrayLevelZoneEmphasis",
    "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
];

/// Zone counts `S[level - 1, size - 1]`.
pub fn glszm_matrix(dp: &DiscretePatch) -> Array2<usize> {
    let (h, w) = dp.dim();
    let lv = dp.levels();
    let mut seen = Array2::from_elem((h, w), false);
    let mut m = Array2::zeros((dp.ng(), h * w));
    let mut stack = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if seen[[r, c]] {
                continue;
            }
            let level = lv[[r, c]];
            seen[[r, c]] = true;
            stack.push((r, c));
            let mut size = 0usize;
            while let Some((pr, pc)) = stack.pop() {
                size += 1;
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        let (nr, nc) = (pr as isize + dr, pc as isize + dc);
                        if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                            continue;
                        }
                        let (nr, nc) = (nr as usize, nc as usize);
                        if !seen[[nr, nc]] && lv[[nr, nc]] == level {
                            seen[[nr, nc]] = true;
                            stack.push((nr, nc));
                        }
                    }
                }
            }
            m[[usize::from(level) - 1, size - 1]] += 1;
        }
    }
    m
}

pub fn glszm_features<T: Scalar>(dp: &DiscretePatch) -> Result<[T; 16]> {
    let (h, w) = dp.dim();
    emphasis_features(&glszm_matrix(dp), h * w)
        .ok_or_else(|| Error::DegenerateMatrix("no zones".into()))
}
