//! Gray-level dependence matrix features (alpha = 0, 8-neighborhood).

use ndarray::Array2;

use super::emphasis::emphasis_features;
use crate::imaging::DiscretePatch;
use crate::{Error, Result, Scalar};

pub const NAMES: [&str; 14] = [
    "SmallDependenceEmphasis",
    "LargeDependenceEmphasis",
    "GrayLevelNonUniformity",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "GrayLevelVariance",
    "DependenceVariance",
    "DependenceEntropy",
    "LowGrayLevelEmphasis",
    "HighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
];

/// Positions of the dependence features inside the shared emphasis set.
const PICK: [usize; 14] = [0, 1, 2, 4, 5, 7, 8, 9, 10, 11, 12, 13, 14, 15];

/// Number of in-bounds 8-neighbors with the same level as `(r, c)`.
pub fn dependence_count(dp: &DiscretePatch, r: usize, c: usize) -> usize {
    let (h, w) = dp.dim();
    let lv = dp.levels();
    let mut n = 0;
    for dr in -1isize..=1 {
        for dc in -1isize..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr >= 0 && nc >= 0 && nr < h as isize && nc < w as isize {
                n += usize::from(lv[[nr as usize, nc as usize]] == lv[[r, c]]);
            }
        }
    }
    n
}

/// `D[level - 1, j - 1]` where `j = 1 + dependence count` (1..=9).
pub fn gldm_matrix(dp: &DiscretePatch) -> Array2<usize> {
    let (h, w) = dp.dim();
    let mut m = Array2::zeros((dp.ng(), 9));
    for r in 0..h {
        for c in 0..w {
            let level = usize::from(dp.levels()[[r, c]]);
            m[[level - 1, dependence_count(dp, r, c)]] += 1;
        }
    }
    m
}

pub fn gldm_features<T: Scalar>(dp: &DiscretePatch) -> Result<[T; 14]> {
    let (h, w) = dp.dim();
    let all = emphasis_features::<T>(&gldm_matrix(dp), h * w)
        .ok_or_else(|| Error::DegenerateMatrix("empty dependence matrix".into()))?;
    Ok(PICK.map(|k| all[k]))
}
