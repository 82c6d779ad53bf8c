//! The 15-filter bank applied to every patch before feature extraction.
//!
//! Every filter returns an image of the input's shape, rescaled to `[0, 1]`
//! (a constant response becomes all zeros). Convolutions use symmetric
//! boundary padding.

use ndarray::{Array2, ArrayView2};

use crate::imaging::min_max;
use crate::util::reflect;
use crate::{Error, Result, Scalar};

/// Minimum patch side for the wavelet and Laplacian-of-Gaussian filters.
pub const MIN_CONV_SIDE: usize = 4;

/// Default Laplacian-of-Gaussian scales, in millimeters.
pub const DEFAULT_LOG_SIGMAS_MM: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    WaveletLL,
    WaveletLH,
    WaveletHL,
    WaveletHH,
    /// Scale in millimeters, converted to pixels with the patch pitch.
    LoG(f64),
    Square,
    SquareRoot,
    Logarithm,
    Exponential,
    Gradient,
    Lbp2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub name: String,
}

impl FilterSpec {
    pub fn new(kind: FilterKind) -> Self {
        let name = match kind {
            FilterKind::WaveletLL => "wavelet-LL".to_string(),
            FilterKind::WaveletLH => "wavelet-LH".to_string(),
            FilterKind::WaveletHL => "wavelet-HL".to_string(),
            FilterKind::WaveletHH => "wavelet-HH".to_string(),
            FilterKind::LoG(s) => format!("log-sigma-{}", format_sigma(s)),
            FilterKind::Square => "square".to_string(),
            FilterKind::SquareRoot => "squareroot".to_string(),
            FilterKind::Logarithm => "logarithm".to_string(),
            FilterKind::Exponential => "exponential".to_string(),
            FilterKind::Gradient => "gradient".to_string(),
            FilterKind::Lbp2D => "lbp-2D".to_string(),
        };
        Self { kind, name }
    }

    /// Parses a canonical filter name.
    pub fn from_name(name: &str) -> Option<Self> {
        let kind = match name {
            "wavelet-LL" => FilterKind::WaveletLL,
            "wavelet-LH" => FilterKind::WaveletLH,
            "wavelet-HL" => FilterKind::WaveletHL,
            "wavelet-HH" => FilterKind::WaveletHH,
            "square" => FilterKind::Square,
            "squareroot" => FilterKind::SquareRoot,
            "logarithm" => FilterKind::Logarithm,
            "exponential" => FilterKind::Exponential,
            "gradient" => FilterKind::Gradient,
            "lbp-2D" => FilterKind::Lbp2D,
            other => {
                let s: f64 = other.strip_prefix("log-sigma-")?.parse().ok()?;
                if !(s > 0.0) {
                    return None;
                }
                FilterKind::LoG(s)
            }
        };
        Some(Self::new(kind))
    }
}

fn format_sigma(s: f64) -> String {
    if (s * 10.0).fract() == 0.0 {
        format!("{s:.1}")
    } else {
        format!("{s}")
    }
}

/// The default 15-entry bank with the default LoG scales.
pub fn default_bank() -> Vec<FilterSpec> {
    bank_with_sigmas(&DEFAULT_LOG_SIGMAS_MM)
}

/// Four Haar subbands, one LoG per scale, then the six pointwise and
/// structural filters.
pub fn bank_with_sigmas(sigmas_mm: &[f64]) -> Vec<FilterSpec> {
    use FilterKind::*;
    let mut kinds = vec![WaveletLL, WaveletLH, WaveletHL, WaveletHH];
    kinds.extend(sigmas_mm.iter().map(|&s| LoG(s)));
    kinds.extend([Square, SquareRoot, Logarithm, Exponential, Gradient, Lbp2D]);
    kinds.into_iter().map(FilterSpec::new).collect()
}

/// Applies one filter to a unit-range patch and rescales the response.
pub fn apply_filter<T: Scalar>(
    patch: ArrayView2<'_, T>,
    spec: &FilterSpec,
    pixel_pitch: T,
) -> Result<Array2<T>> {
    let (h, w) = patch.dim();
    if h == 0 || w == 0 {
        return Err(Error::EmptyPatch);
    }
    let needs_conv = matches!(
        spec.kind,
        FilterKind::WaveletLL
            | FilterKind::WaveletLH
            | FilterKind::WaveletHL
            | FilterKind::WaveletHH
            | FilterKind::LoG(_)
    );
    if needs_conv && h.min(w) < MIN_CONV_SIDE {
        return Err(Error::PatchTooSmall {
            side: h.min(w),
            min: MIN_CONV_SIDE,
            filter: spec.name.clone(),
        });
    }
    let raw = match spec.kind {
        FilterKind::WaveletLL => haar_subband(patch, Subband::LL),
        FilterKind::WaveletLH => haar_subband(patch, Subband::LH),
        FilterKind::WaveletHL => haar_subband(patch, Subband::HL),
        FilterKind::WaveletHH => haar_subband(patch, Subband::HH),
        FilterKind::LoG(sigma_mm) => {
            let sigma_px = T::c(sigma_mm) / pixel_pitch;
            laplacian_of_gaussian(patch, sigma_px)
        }
        FilterKind::Square => patch.mapv(|v| v * v),
        FilterKind::SquareRoot => patch.mapv(|v| v.max(T::zero()).sqrt()),
        FilterKind::Logarithm => patch.mapv(|v| v.max(T::zero()).ln_1p()),
        FilterKind::Exponential => patch.mapv(|v| v.exp_m1()),
        FilterKind::Gradient => gradient_magnitude(patch),
        FilterKind::Lbp2D => lbp_riu2(patch).mapv(|c| T::c(f64::from(c))),
    };
    Ok(rescale_unit(raw))
}

/// Min-max rescale; responses whose span is at rounding level are treated as
/// constant and map to zeros.
pub fn rescale_unit<T: Scalar>(mut a: Array2<T>) -> Array2<T> {
    let Some((lo, hi)) = min_max(a.iter().copied()) else {
        return a;
    };
    let scale = T::one() + lo.abs().max(hi.abs());
    if hi - lo <= T::epsilon().sqrt() * scale {
        a.fill(T::zero());
        return a;
    }
    let span = hi - lo;
    a.mapv_inplace(|v| (v - lo) / span);
    a
}

#[derive(Debug, Clone, Copy)]
enum Subband {
    LL,
    LH,
    HL,
    HH,
}

/// Single-level Haar subband on 2x2 blocks, mean-preserving (the LL band of a
/// constant `c` is `c`), upsampled back to full resolution by replication.
/// The first letter is the filter along columns, the second along rows.
fn haar_subband<T: Scalar>(x: ArrayView2<'_, T>, band: Subband) -> Array2<T> {
    let (h, w) = x.dim();
    let q = T::c(0.25);
    let at = |r: usize, c: usize| x[[reflect(r as isize, h), reflect(c as isize, w)]];
    Array2::from_shape_fn((h, w), |(r, c)| {
        let (r0, c0) = (r - r % 2, c - c % 2);
        let (a, b) = (at(r0, c0), at(r0, c0 + 1));
        let (cc, d) = (at(r0 + 1, c0), at(r0 + 1, c0 + 1));
        q * match band {
            Subband::LL => a + b + cc + d,
            Subband::LH => (a + b) - (cc + d),
            Subband::HL => (a + cc) - (b + d),
            Subband::HH => (a + d) - (b + cc),
        }
    })
}

/// 1D Gaussian and zero-sum second-derivative taps for scale `sigma_px`.
/// The 2D kernel is `a(y) g(x) + g(y) a(x)`, scale-normalized by `sigma²`.
pub fn log_kernel_1d<T: Scalar>(sigma_px: T) -> (Vec<T>, Vec<T>) {
    let radius = (T::c(4.0) * sigma_px).ceil().to_usize().unwrap_or(1).max(1);
    let s2 = sigma_px * sigma_px;
    let offsets = (0..=2 * radius).map(|i| T::from_usize_lossy(i) - T::from_usize_lossy(radius));
    let mut g: Vec<T> = offsets
        .clone()
        .map(|m| (-(m * m) / (T::c(2.0) * s2)).exp())
        .collect();
    let gs: T = g.iter().copied().sum();
    g.iter_mut().for_each(|v| *v = *v / gs);
    let mut a: Vec<T> = offsets
        .zip(&g)
        .map(|(m, &gv)| (m * m / (s2 * s2) - T::one() / s2) * gv)
        .collect();
    let asum: T = a.iter().copied().sum();
    for (av, &gv) in a.iter_mut().zip(&g) {
        *av = (*av - asum * gv) * s2;
    }
    (g, a)
}

/// Full 2D Laplacian-of-Gaussian kernel (for inspection and tests).
pub fn log_kernel_2d<T: Scalar>(sigma_px: T) -> Array2<T> {
    let (g, a) = log_kernel_1d(sigma_px);
    let n = g.len();
    Array2::from_shape_fn((n, n), |(i, j)| a[i] * g[j] + g[i] * a[j])
}

/// Dense `n x n` operator equal to 1D convolution with `taps` under symmetric
/// padding. Kernels wider than the signal fold back onto it.
fn folded_operator<T: Scalar>(taps: &[T], n: usize) -> Array2<T> {
    let radius = (taps.len() / 2) as isize;
    let mut op = Array2::zeros((n, n));
    for i in 0..n {
        for (k, &t) in taps.iter().enumerate() {
            let j = reflect(i as isize + k as isize - radius, n);
            op[[i, j]] = op[[i, j]] + t;
        }
    }
    op
}

fn laplacian_of_gaussian<T: Scalar>(x: ArrayView2<'_, T>, sigma_px: T) -> Array2<T> {
    let (h, w) = x.dim();
    let (g, a) = log_kernel_1d(sigma_px);
    let (gr, ar) = (folded_operator(&g, h), folded_operator(&a, h));
    let (gc, ac) = (folded_operator(&g, w), folded_operator(&a, w));
    let xo = x.to_owned();
    let t1 = ar.dot(&xo).dot(&gc.t());
    let t2 = gr.dot(&xo).dot(&ac.t());
    t1 + t2
}

fn gradient_magnitude<T: Scalar>(x: ArrayView2<'_, T>) -> Array2<T> {
    let (h, w) = x.dim();
    let half = T::c(0.5);
    Array2::from_shape_fn((h, w), |(r, c)| {
        let (ri, ci) = (r as isize, c as isize);
        let gy = (x[[reflect(ri + 1, h), c]] - x[[reflect(ri - 1, h), c]]) * half;
        let gx = (x[[r, reflect(ci + 1, w)]] - x[[r, reflect(ci - 1, w)]]) * half;
        (gx * gx + gy * gy).sqrt()
    })
}

/// 8-neighbor, radius-1 rotation-invariant uniform LBP. Codes are the number
/// of set bits (0..=8) for uniform patterns and 9 otherwise.
pub fn lbp_riu2<T: Scalar>(x: ArrayView2<'_, T>) -> Array2<u8> {
    // Circular order around the center.
    const RING: [(isize, isize); 8] = [
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
        (1, 0),
        (1, -1),
        (0, -1),
    ];
    let (h, w) = x.dim();
    Array2::from_shape_fn((h, w), |(r, c)| {
        let center = x[[r, c]];
        let bits: [u8; 8] = std::array::from_fn(|k| {
            let (dr, dc) = RING[k];
            let v = x[[reflect(r as isize + dr, h), reflect(c as isize + dc, w)]];
            u8::from(v >= center)
        });
        let transitions = (0..8).filter(|&k| bits[k] != bits[(k + 1) % 8]).count();
        if transitions <= 2 {
            bits.iter().sum()
        } else {
            9
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_patch(seed: u64, n: usize) -> Array2<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, n), |_| rng.random::<f64>())
    }

    #[test]
    fn default_bank_has_fifteen_unique_names() {
        let bank = default_bank();
        assert_eq!(bank.len(), 15);
        let mut names: Vec<&str> = bank.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names[4], "log-sigma-0.5");
        assert_eq!(names[5], "log-sigma-1.0");
        assert_eq!(names[14], "lbp-2D");
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 15);
        assert_eq!(default_bank(), bank);
        for f in &bank {
            assert_eq!(FilterSpec::from_name(&f.name).as_ref(), Some(f));
        }
    }

    #[test]
    fn constant_patch_responses_are_zero() {
        let p = Array2::from_elem((9, 9), 0.37);
        for spec in default_bank() {
            let out = apply_filter(p.view(), &spec, 0.042).unwrap();
            assert!(out.iter().all(|&v| v == 0.0), "{}", spec.name);
        }
        // Raw high-pass Haar bands of a constant are exactly zero.
        for band in [Subband::LH, Subband::HL, Subband::HH] {
            assert!(haar_subband(p.view(), band).iter().all(|&v| v == 0.0));
        }
        assert!(haar_subband(p.view(), Subband::LL).iter().all(|&v| v == 0.37));
        assert!(gradient_magnitude(p.view()).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn square_matches_elementwise_before_rescale() {
        let p = random_patch(3, 8);
        let out = apply_filter(p.view(), &FilterSpec::new(FilterKind::Square), 0.042).unwrap();
        let sq = p.mapv(|v| v * v);
        let lo = sq.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (o, s) in out.iter().zip(sq.iter()) {
            assert!((o - (s - lo) / (hi - lo)).abs() < 1e-15);
        }
    }

    #[test]
    fn log_kernel_sums_to_zero() {
        for sigma_mm in DEFAULT_LOG_SIGMAS_MM {
            let k = log_kernel_2d(sigma_mm / 0.042);
            let s: f64 = k.iter().sum();
            assert!(s.abs() < 1e-10, "sigma {sigma_mm}: {s}");
        }
        let k = log_kernel_2d(1.3_f64);
        assert!(k.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn folded_log_matches_direct_padded_convolution() {
        let p = random_patch(5, 7);
        let sigma = 1.7;
        let k = log_kernel_2d(sigma);
        let r = (k.nrows() / 2) as isize;
        let fast = laplacian_of_gaussian(p.view(), sigma);
        for i in 0..7 {
            for j in 0..7 {
                let mut s = 0.0;
                for a in -r..=r {
                    for b in -r..=r {
                        let v = p[[reflect(i as isize + a, 7), reflect(j as isize + b, 7)]];
                        s += k[[(a + r) as usize, (b + r) as usize]] * v;
                    }
                }
                assert!((fast[[i, j]] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_patches_rejected_for_conv_filters() {
        let p = random_patch(1, 3);
        for spec in default_bank() {
            let r = apply_filter(p.view(), &spec, 0.042);
            match spec.kind {
                FilterKind::LoG(_)
                | FilterKind::WaveletLL
                | FilterKind::WaveletLH
                | FilterKind::WaveletHL
                | FilterKind::WaveletHH => {
                    assert!(matches!(r, Err(Error::PatchTooSmall { .. })))
                }
                _ => assert!(r.is_ok()),
            }
        }
    }

    #[test]
    fn outputs_finite_and_unit_range() {
        for seed in 0..20 {
            let p = random_patch(seed, 11);
            for spec in default_bank() {
                let out = apply_filter(p.view(), &spec, 0.042).unwrap();
                assert!(out.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn lbp_codes_in_alphabet() {
        let p = random_patch(8, 16);
        let codes = lbp_riu2(p.view());
        assert!(codes.iter().all(|&c| c <= 9));
        let distinct: std::collections::BTreeSet<u8> = codes.iter().copied().collect();
        assert!(distinct.len() > 3);
    }

    #[test]
    fn f32_bank_runs() {
        let p = random_patch(4, 9).mapv(|v| v as f32);
        for spec in default_bank() {
            let out = apply_filter(p.view(), &spec, 0.042_f32).unwrap();
            assert!(out.iter().all(|v| v.is_finite()));
        }
    }
}
