//! Feature set shared by the run-length, size-zone and dependence matrices:
//! a count matrix `M[i, s]` indexed by gray level `i` and an element size `s`
//! (run length, zone size, dependence count), both 1-based.

use ndarray::Array2;

use crate::Scalar;

/// Computes, in order: small emphasis, large emphasis, gray-level
/// non-uniformity (raw and normalized), size non-uniformity (raw and
/// normalized), percentage, gray-level variance, size variance, entropy, low
/// and high gray-level emphasis, and the four small/large x low/high
/// combinations. `None` if the matrix holds no elements.
pub(crate) fn emphasis_features<T: Scalar>(m: &Array2<usize>, n_pixels: usize) -> Option<[T; 16]> {
    let total: usize = m.iter().sum();
    if total == 0 {
        return None;
    }
    let nz = T::from_usize_lossy(total);
    let (ng, ns) = m.dim();
    let mut gl_marg = vec![T::zero(); ng];
    let mut sz_marg = vec![T::zero(); ns];
    let mut f = [T::zero(); 16];
    let (mut mu_i, mut mu_s) = (T::zero(), T::zero());
    for i in 0..ng {
        let fi = T::from_usize_lossy(i + 1);
        let i2 = fi * fi;
        for s in 0..ns {
            let c = m[[i, s]];
            if c == 0 {
                continue;
            }
            let fs = T::from_usize_lossy(s + 1);
            let s2 = fs * fs;
            let p = T::from_usize_lossy(c) / nz;
            gl_marg[i] = gl_marg[i] + T::from_usize_lossy(c);
            sz_marg[s] = sz_marg[s] + T::from_usize_lossy(c);
            f[0] = f[0] + p / s2;
            f[1] = f[1] + p * s2;
            f[9] = f[9] - p * p.log2();
            f[10] = f[10] + p / i2;
            f[11] = f[11] + p * i2;
            f[12] = f[12] + p / (i2 * s2);
            f[13] = f[13] + p * i2 / s2;
            f[14] = f[14] + p * s2 / i2;
            f[15] = f[15] + p * i2 * s2;
            mu_i = mu_i + p * fi;
            mu_s = mu_s + p * fs;
        }
    }
    let gln: T = gl_marg.iter().map(|&v| v * v).sum::<T>() / nz;
    let sn: T = sz_marg.iter().map(|&v| v * v).sum::<T>() / nz;
    f[2] = gln;
    f[3] = gln / nz;
    f[4] = sn;
    f[5] = sn / nz;
    f[6] = nz / T::from_usize_lossy(n_pixels);
    for i in 0..ng {
        for s in 0..ns {
            let c = m[[i, s]];
            if c == 0 {
                continue;
            }
            let p = T::from_usize_lossy(c) / nz;
            f[7] = f[7] + p * (T::from_usize_lossy(i + 1) - mu_i).powi(2);
            f[8] = f[8] + p * (T::from_usize_lossy(s + 1) - mu_s).powi(2);
        }
    }
    Some(f)
}
