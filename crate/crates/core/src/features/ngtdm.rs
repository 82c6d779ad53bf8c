//! Neighborhood gray-tone difference matrix features.

use crate::imaging::DiscretePatch;
use crate::{Error, Result, Scalar};

pub const NAMES: [&str; 5] = ["Coarseness", "Contrast", "Busyness", "Complexity", "Strength"];

/// Value reported for coarseness when every difference sum is zero.
pub const COARSENESS_CAP: f64 = 1e6;

/// Per-level `(n_i, s_i)`: pixel count and summed `|i - mean(8-neighbors)|`.
/// Pixels without any in-bounds neighbor are skipped.
pub fn ngtdm_sums<T: Scalar>(dp: &DiscretePatch) -> (Vec<usize>, Vec<T>) {
    let (h, w) = dp.dim();
    let lv = dp.levels();
    let mut n = vec![0usize; dp.ng()];
    let mut s = vec![T::zero(); dp.ng()];
    for r in 0..h {
        for c in 0..w {
            let (mut sum, mut cnt) = (0usize, 0usize);
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if nr >= 0 && nc >= 0 && nr < h as isize && nc < w as isize {
                        sum += usize::from(lv[[nr as usize, nc as usize]]);
                        cnt += 1;
                    }
                }
            }
            if cnt == 0 {
                continue;
            }
            let i = usize::from(lv[[r, c]]);
            let avg = T::from_usize_lossy(sum) / T::from_usize_lossy(cnt);
            n[i - 1] += 1;
            s[i - 1] = s[i - 1] + (T::from_usize_lossy(i) - avg).abs();
        }
    }
    (n, s)
}

pub fn ngtdm_features<T: Scalar>(dp: &DiscretePatch) -> Result<[T; 5]> {
    let (n, s) = ngtdm_sums::<T>(dp);
    let nvp: usize = n.iter().sum();
    if nvp == 0 {
        return Err(Error::DegenerateMatrix("no pixel has a neighborhood".into()));
    }
    let nvpf = T::from_usize_lossy(nvp);
    let occ: Vec<(T, T, T)> = (0..n.len())
        .filter(|&k| n[k] > 0)
        .map(|k| (T::from_usize_lossy(k + 1), T::from_usize_lossy(n[k]) / nvpf, s[k]))
        .collect();
    let ngp = occ.len();
    let ps_sum: T = occ.iter().map(|&(_, p, s)| p * s).sum();
    let s_sum: T = occ.iter().map(|&(_, _, s)| s).sum();

    let coarseness = if ps_sum > T::zero() {
        (T::one() / ps_sum).min(T::c(COARSENESS_CAP))
    } else {
        T::c(COARSENESS_CAP)
    };
    let (mut con, mut busy_den, mut complexity, mut strength_num) =
        (T::zero(), T::zero(), T::zero(), T::zero());
    for &(i, pi, si) in &occ {
        for &(j, pj, sj) in &occ {
            let d = i - j;
            con = con + pi * pj * d * d;
            busy_den = busy_den + (i * pi - j * pj).abs();
            complexity = complexity + d.abs() * (pi * si + pj * sj) / (pi + pj);
            strength_num = strength_num + (pi + pj) * d * d;
        }
    }
    let contrast = if ngp > 1 {
        let k = T::from_usize_lossy(ngp * (ngp - 1));
        con / k * s_sum / nvpf
    } else {
        T::zero()
    };
    let busyness = if busy_den > T::zero() {
        ps_sum / busy_den
    } else {
        T::zero()
    };
    let strength = if s_sum > T::zero() {
        strength_num / s_sum
    } else {
        T::zero()
    };
    Ok([coarseness, contrast, busyness, complexity / nvpf, strength])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn constant_patch_hits_cap() {
        let dp = DiscretePatch::new(Array2::from_elem((5, 5), 2), 4).unwrap();
        let (_, s) = ngtdm_sums::<f64>(&dp);
        assert!(s.iter().all(|&v| v == 0.0));
        let f = ngtdm_features::<f64>(&dp).unwrap();
        assert_eq!(f[0], COARSENESS_CAP);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn half_half_patch_differences_only_at_boundary() {
        // Rows 0..3 level 1, rows 3..6 level 2.
        let dp = DiscretePatch::new(
            Array2::from_shape_fn((6, 6), |(r, _)| if r < 3 { 1 } else { 2 }),
            2,
        )
        .unwrap();
        let (h, w) = dp.dim();
        for r in 0..h {
            for c in 0..w {
                let mut sum = 0.0;
                let mut cnt = 0.0;
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        let (nr, nc) = (r as isize + dr, c as isize + dc);
                        if (dr, dc) != (0, 0) && nr >= 0 && nc >= 0 && nr < 6 && nc < 6 {
                            sum += f64::from(dp.levels()[[nr as usize, nc as usize]]);
                            cnt += 1.0;
                        }
                    }
                }
                let diff = (f64::from(dp.levels()[[r, c]]) - sum / cnt).abs();
                assert_eq!(diff > 0.0, r == 2 || r == 3, "row {r}");
            }
        }
        let (_, s) = ngtdm_sums::<f64>(&dp);
        assert!(s[0] > 0.0 && s[1] > 0.0);
    }
}
