//! Pixel-level tumor probability maps from patch-center probabilities by
//! biharmonic spline interpolation.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::linalg::lu_solve;
use crate::{Error, Result, Scalar};

/// Biharmonic Green's function `r^2 (ln r - 1)`, with `g(0) = 0`.
#[inline]
pub fn green<T: Scalar>(r: T) -> T {
    if r > T::zero() {
        r * r * (r.ln() - T::one())
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineModel<T> {
    /// `(row, col)` in pixels, pairwise distinct.
    pub centers: Vec<(T, T)>,
    pub weights: Vec<T>,
    pub values: Vec<T>,
    /// Constant term; nonzero only for a single-center model.
    pub offset: T,
}

fn dist<T: Scalar>(a: (T, T), b: (T, T)) -> T {
    let (dr, dc) = (a.0 - b.0, a.1 - b.1);
    (dr * dr + dc * dc).sqrt()
}

/// Averages the values of coincident centers, keeping first-appearance
/// order.
fn dedup<T: Scalar>(centers: &[(T, T)], values: &[T]) -> (Vec<(T, T)>, Vec<T>) {
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (centers[a], centers[b]);
        x.0.partial_cmp(&y.0)
            .unwrap()
            .then(x.1.partial_cmp(&y.1).unwrap())
            .then(a.cmp(&b))
    });
    // (first index, center, sum, count)
    let mut groups: Vec<(usize, (T, T), T, usize)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if g.1 == centers[i] => {
                g.2 = g.2 + values[i];
                g.3 += 1;
            }
            _ => groups.push((i, centers[i], values[i], 1)),
        }
    }
    groups.sort_by_key(|g| g.0);
    groups
        .into_iter()
        .map(|(_, c, s, n)| (c, s / T::from_usize_lossy(n)))
        .unzip()
}

/// Fits weights `w` with `(G + lambda I) w = v`, `G_ij = g(|c_i - c_j|)`.
/// `lambda` is `1e-10` times the mean absolute entry of `G`. A single center
/// yields the constant interpolant.
pub fn biharmonic_fit<T: Scalar>(centers: &[(T, T)], values: &[T]) -> Result<SplineModel<T>> {
    if centers.len() != values.len() {
        return Err(Error::LengthMismatch(centers.len(), values.len()));
    }
    if centers.is_empty() {
        return Err(Error::DegenerateInput("spline needs at least one center".into()));
    }
    if centers
        .iter()
        .any(|c| !c.0.is_finite() || !c.1.is_finite())
        || values.iter().any(|v| !v.is_finite())
    {
        return Err(Error::NonFiniteInput);
    }
    let (centers, values) = dedup(centers, values);
    let n = centers.len();
    if n == 1 {
        return Ok(SplineModel {
            centers,
            weights: vec![T::zero()],
            offset: values[0],
            values,
        });
    }
    let mut g = Array2::from_shape_fn((n, n), |(i, j)| green(dist(centers[i], centers[j])));
    let mean_abs = g.iter().map(|v| v.abs()).sum::<T>() / T::from_usize_lossy(n * n);
    let lambda = T::c(1e-10) * mean_abs;
    for i in 0..n {
        g[[i, i]] = g[[i, i]] + lambda;
    }
    let w = lu_solve(&g, &Array1::from(values.clone()))?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(SplineModel {
        centers,
        weights: w.to_vec(),
        values,
        offset: T::zero(),
    })
}

impl<T: Scalar> SplineModel<T> {
    /// Unclipped interpolant at `(row, col)`.
    pub fn eval_at(&self, p: (T, T)) -> T {
        self.centers
            .iter()
            .zip(&self.weights)
            .fold(self.offset, |acc, (&c, &w)| acc + w * green(dist(p, c)))
    }

    /// Unclipped interpolant on every pixel of an `(h, w)` grid.
    pub fn eval_grid(&self, shape: (usize, usize)) -> Array2<T> {
        par_rows(shape, |r, c| {
            self.eval_at((T::from_usize_lossy(r), T::from_usize_lossy(c)))
        })
    }
}

/// Fills an array row by row in parallel.
fn par_rows<T: Scalar>(shape: (usize, usize), f: impl Fn(usize, usize) -> T + Sync) -> Array2<T> {
    let (h, w) = shape;
    let data: Vec<T> = (0..h)
        .into_par_iter()
        .flat_map_iter(|r| (0..w).map(move |c| (r, c)).collect::<Vec<_>>())
        .map(|(r, c)| f(r, c))
        .collect();
    Array2::from_shape_vec(shape, data).expect("row-major fill")
}

/// Probability map on slice pixels; `values` are clipped to `[0, 1]` on
/// `valid` pixels and NaN elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap<T> {
    pub values: Array2<T>,
    pub valid: Array2<bool>,
}

/// Evaluates `model` on the pixels of `valid` and clips to `[0, 1]`.
pub fn biharmonic_eval<T: Scalar>(model: &SplineModel<T>, valid: &Array2<bool>) -> ProbabilityMap<T> {
    let values = par_rows(valid.dim(), |r, c| {
        if valid[[r, c]] {
            let p = model.eval_at((T::from_usize_lossy(r), T::from_usize_lossy(c)));
            p.max(T::zero()).min(T::one())
        } else {
            T::nan()
        }
    });
    ProbabilityMap {
        values,
        valid: valid.clone(),
    }
}

/// Elementwise mean of per-scale center probabilities. Every scale must
/// list the same centers in the same order.
pub fn fuse_scales<T: Scalar>(scales: &[Vec<((usize, usize), T)>]) -> Result<Vec<((usize, usize), T)>> {
    let first = scales
        .first()
        .ok_or_else(|| Error::DegenerateInput("no scales to fuse".into()))?;
    if scales
        .iter()
        .any(|s| s.len() != first.len() || s.iter().zip(first).any(|(a, b)| a.0 != b.0))
    {
        return Err(Error::CenterMismatch);
    }
    let k = T::from_usize_lossy(scales.len());
    Ok((0..first.len())
        .map(|i| {
            let s = scales.iter().map(|v| v[i].1).fold(T::zero(), |a, b| a + b);
            (first[i].0, s / k)
        })
        .collect())
}

/// Linear blue (p = 0) to yellow (p = 1) colormap.
pub fn colormap(p: f64) -> [u8; 3] {
    let p = p.clamp(0.0, 1.0);
    let v = (255.0 * p).round() as u8;
    [v, v, 255 - v]
}

/// RGB overlay: `base` (unit range) as gray, tissue pixels blended 50/50
/// with the colormap.
pub fn render_heatmap<T: Scalar>(map: &ProbabilityMap<T>, base: &Array2<T>) -> Result<Array2<[u8; 3]>> {
    if map.values.dim() != base.dim() {
        return Err(Error::ShapeMismatch(format!(
            "probability map {:?} vs base image {:?}",
            map.values.dim(),
            base.dim()
        )));
    }
    Ok(Array2::from_shape_fn(base.dim(), |(r, c)| {
        let g = (base[[r, c]].as_f64().clamp(0.0, 1.0) * 255.0).round();
        if map.valid[[r, c]] {
            let tint = colormap(map.values[[r, c]].as_f64());
            tint.map(|t| (0.5 * g + 0.5 * f64::from(t)).round() as u8)
        } else {
            [g as u8; 3]
        }
    }))
}
