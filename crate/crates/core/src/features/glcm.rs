//! Gray-level co-occurrence matrix features, averaged over four directions.

use ndarray::Array2;

use crate::imaging::DiscretePatch;
use crate::linalg::symmetric_eigenvalues;
use crate::{Error, Result, Scalar};

pub const NAMES: [&str; 23] = [
    "Autocorrelation",
    "JointAverage",
    "ClusterProminence",
    "ClusterShade",
    "ClusterTendency",
    "Contrast",
    "Correlation",
    "DifferenceAverage",
    "DifferenceEntropy",
    "DifferenceVariance",
    "JointEnergy",
    "JointEntropy",
    "Imc1",
    "Imc2",
    "Idm",
    "Idmn",
    "Id",
    "Idn",
    "InverseVariance",
    "MaximumProbability",
    "SumEntropy",
    "SumSquares",
    "MCC",
];

/// Distance-1 offsets `(d_row, d_col)`: 0°, 45°, 90°, 135°.
pub const OFFSETS: [(isize, isize); 4] = [(0, 1), (1, 1), (1, 0), (1, -1)];

/// Symmetric, normalized co-occurrence matrix (`ng x ng`, level `i` at index
/// `i - 1`) for one offset.
pub fn glcm_matrix<T: Scalar>(dp: &DiscretePatch, offset: (isize, isize)) -> Result<Array2<T>> {
    let ng = dp.ng();
    let lv = dp.levels();
    let (h, w) = dp.dim();
    let mut counts = Array2::<usize>::zeros((ng, ng));
    let mut pairs = 0usize;
    for r in 0..h {
        for c in 0..w {
            let (r2, c2) = (r as isize + offset.0, c as isize + offset.1);
            if r2 < 0 || c2 < 0 || r2 >= h as isize || c2 >= w as isize {
                continue;
            }
            let i = usize::from(lv[[r, c]]) - 1;
            let j = usize::from(lv[[r2 as usize, c2 as usize]]) - 1;
            counts[[i, j]] += 1;
            counts[[j, i]] += 1;
            pairs += 2;
        }
    }
    if pairs == 0 {
        return Err(Error::DegenerateMatrix(format!(
            "no pixel pairs at offset {offset:?}"
        )));
    }
    let total = T::from_usize_lossy(pairs);
    Ok(counts.mapv(|c| T::from_usize_lossy(c) / total))
}

fn xlog2<T: Scalar>(p: T) -> T {
    if p > T::zero() {
        p * p.log2()
    } else {
        T::zero()
    }
}

/// Features of one normalized co-occurrence matrix.
pub fn glcm_matrix_features<T: Scalar>(p: &Array2<T>) -> [T; 23] {
    let ng = p.nrows();
    let lvl = |i: usize| T::from_usize_lossy(i + 1);
    let px: Vec<T> = (0..ng).map(|i| p.row(i).sum()).collect();
    let py: Vec<T> = (0..ng).map(|j| p.column(j).sum()).collect();
    let mux: T = (0..ng).map(|i| lvl(i) * px[i]).sum();
    let muy: T = (0..ng).map(|j| lvl(j) * py[j]).sum();
    let varx: T = (0..ng).map(|i| (lvl(i) - mux).powi(2) * px[i]).sum();
    let vary: T = (0..ng).map(|j| (lvl(j) - muy).powi(2) * py[j]).sum();

    let mut psum = vec![T::zero(); 2 * ng + 1];
    let mut pdiff = vec![T::zero(); ng];
    let ngf = T::from_usize_lossy(ng);
    let (mut autoc, mut prom, mut shade, mut tend) = (T::zero(), T::zero(), T::zero(), T::zero());
    let (mut contrast, mut energy, mut hxy) = (T::zero(), T::zero(), T::zero());
    let (mut idm, mut idmn, mut id, mut idn, mut inv_var) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    let (mut maxp, mut hxy1, mut hxy2, mut sum_sq) = (T::zero(), T::zero(), T::zero(), T::zero());
    for i in 0..ng {
        for j in 0..ng {
            let (fi, fj) = (lvl(i), lvl(j));
            let pij = p[[i, j]];
            let d = fi - fj;
            let s = fi + fj - mux - muy;
            let pxy = px[i] * py[j];
            if pxy > T::zero() {
                hxy2 = hxy2 - pxy * pxy.log2();
            }
            if pij == T::zero() {
                continue;
            }
            psum[i + j + 2] = psum[i + j + 2] + pij;
            pdiff[i.abs_diff(j)] = pdiff[i.abs_diff(j)] + pij;
            autoc = autoc + fi * fj * pij;
            prom = prom + s.powi(4) * pij;
            shade = shade + s.powi(3) * pij;
            tend = tend + s * s * pij;
            contrast = contrast + d * d * pij;
            energy = energy + pij * pij;
            hxy = hxy - xlog2(pij);
            hxy1 = hxy1 - pij * pxy.log2();
            idm = idm + pij / (T::one() + d * d);
            idmn = idmn + pij / (T::one() + d * d / (ngf * ngf));
            id = id + pij / (T::one() + d.abs());
            idn = idn + pij / (T::one() + d.abs() / ngf);
            if i != j {
                inv_var = inv_var + pij / (d * d);
            }
            maxp = maxp.max(pij);
            sum_sq = sum_sq + (fi - mux).powi(2) * pij;
        }
    }
    let sigma = (varx * vary).sqrt();
    let correlation = if sigma > T::zero() {
        (autoc - mux * muy) / sigma
    } else {
        T::one()
    };
    let diff_avg: T = (0..ng).map(|k| T::from_usize_lossy(k) * pdiff[k]).sum();
    let diff_ent: T = -pdiff.iter().map(|&v| xlog2(v)).sum::<T>();
    let diff_var: T = (0..ng)
        .map(|k| (T::from_usize_lossy(k) - diff_avg).powi(2) * pdiff[k])
        .sum();
    let sum_ent: T = -psum.iter().map(|&v| xlog2(v)).sum::<T>();
    let hx: T = -px.iter().map(|&v| xlog2(v)).sum::<T>();
    let hy: T = -py.iter().map(|&v| xlog2(v)).sum::<T>();
    let hmax = hx.max(hy);
    let imc1 = if hmax > T::zero() {
        (hxy - hxy1) / hmax
    } else {
        T::zero()
    };
    let imc2 = (T::one() - (T::c(-2.0) * (hxy2 - hxy)).exp())
        .max(T::zero())
        .sqrt();

    [
        autoc,
        mux,
        prom,
        shade,
        tend,
        contrast,
        correlation,
        diff_avg,
        diff_ent,
        diff_var,
        energy,
        hxy,
        imc1,
        imc2,
        idm,
        idmn,
        id,
        idn,
        inv_var,
        maxp,
        sum_ent,
        sum_sq,
        mcc(p, &px),
    ]
}

/// Maximal correlation coefficient: square root of the second-largest
/// eigenvalue of `Q = D⁻¹ P D⁻¹ Pᵀ`, obtained from the symmetric similar
/// matrix `S = D^-1/2 P D^-1/2` (eigenvalues of `Q` are those of `S²`).
/// A single occupied gray level gives 1.
fn mcc<T: Scalar>(p: &Array2<T>, px: &[T]) -> T {
    let occ: Vec<usize> = (0..px.len()).filter(|&i| px[i] > T::zero()).collect();
    if occ.len() < 2 {
        return T::one();
    }
    let s = Array2::from_shape_fn((occ.len(), occ.len()), |(a, b)| {
        let (i, j) = (occ[a], occ[b]);
        p[[i, j]] / (px[i] * px[j]).sqrt()
    });
    let mut sq: Vec<T> = symmetric_eigenvalues(&s).into_iter().map(|l| l * l).collect();
    sq.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sq[1].max(T::zero()).min(T::one()).sqrt()
}

/// Direction-averaged co-occurrence features.
pub fn glcm_features<T: Scalar>(dp: &DiscretePatch) -> Result<[T; 23]> {
    let mut acc = [T::zero(); 23];
    for off in OFFSETS {
        let f = glcm_matrix_features(&glcm_matrix::<T>(dp, off)?);
        for (a, v) in acc.iter_mut().zip(f) {
            *a = *a + v;
        }
    }
    let n = T::from_usize_lossy(OFFSETS.len());
    Ok(acc.map(|v| v / n))
}
