//! Small dense solvers used by the spline, discriminant analysis and the
//! co-occurrence correlation coefficient.

use ndarray::{Array1, Array2};

use crate::{Error, Result, Scalar};

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn lu_solve<T: Scalar>(a: &Array2<T>, b: &Array1<T>) -> Result<Array1<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut m = a.clone();
    let mut x = b.clone();
    let scale = m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let tiny = scale * T::epsilon() * T::from_usize_lossy(n.max(1));
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|r| (r, m[[r, k]].abs()))
            .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pv > tiny) {
            return Err(Error::SingularSystem);
        }
        if p != k {
            for c in 0..n {
                m.swap([k, c], [p, c]);
            }
            x.swap(k, p);
        }
        let piv = m[[k, k]];
        for r in k + 1..n {
            let f = m[[r, k]] / piv;
            if f == T::zero() {
                continue;
            }
            for c in k..n {
                let v = m[[k, c]];
                m[[r, c]] = m[[r, c]] - f * v;
            }
            x[r] = x[r] - f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for c in k + 1..n {
            s = s - m[[k, c]] * x[c];
        }
        x[k] = s / m[[k, k]];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(x)
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Scalar>(a: &Array2<T>) -> Result<Array2<T>> {
    let n = a.nrows();
    let mut l = Array2::<T>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s = s - l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if !(s > T::zero()) {
                    return Err(Error::SingularSystem);
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `l lᵀ x = b` given the Cholesky factor `l`.
pub fn cholesky_solve<T: Scalar>(l: &Array2<T>, b: &[T]) -> Vec<T> {
    let n = l.nrows();
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Eigenvalues of a symmetric matrix, sorted descending: Householder
/// reduction to tridiagonal form, then implicit QL with Wilkinson shifts.
pub fn symmetric_eigenvalues<T: Scalar>(a: &Array2<T>) -> Vec<T> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut m: Vec<T> = a.iter().copied().collect();
    let (mut d, mut e) = tridiagonalize(&mut m, n);
    tridiagonal_ql(&mut d, &mut e);
    d.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    d
}

/// Returns the diagonal and the subdiagonal (`e[i]` couples `i - 1` and `i`).
fn tridiagonalize<T: Scalar>(a: &mut [T], n: usize) -> (Vec<T>, Vec<T>) {
    let two = T::c(2.0);
    let mut e = vec![T::zero(); n];
    for i in (1..n).rev() {
        let l = i - 1;
        if l == 0 {
            e[i] = a[i * n + l];
            continue;
        }
        let scale: T = (0..=l).map(|k| a[i * n + k].abs()).sum();
        if scale == T::zero() {
            e[i] = a[i * n + l];
            continue;
        }
        let mut h = T::zero();
        for k in 0..=l {
            a[i * n + k] = a[i * n + k] / scale;
            h = h + a[i * n + k] * a[i * n + k];
        }
        let f = a[i * n + l];
        let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h = h - f * g;
        a[i * n + l] = f - g;
        let mut f = T::zero();
        for j in 0..=l {
            let mut g = T::zero();
            for k in 0..=j {
                g = g + a[j * n + k] * a[i * n + k];
            }
            for k in j + 1..=l {
                g = g + a[k * n + j] * a[i * n + k];
            }
            e[j] = g / h;
            f = f + e[j] * a[i * n + j];
        }
        let hh = f / (h * two);
        for j in 0..=l {
            let f = a[i * n + j];
            let g = e[j] - hh * f;
            e[j] = g;
            for k in 0..=j {
                a[j * n + k] = a[j * n + k] - (f * e[k] + g * a[i * n + k]);
            }
        }
    }
    let d = (0..n).map(|i| a[i * n + i]).collect();
    (d, e)
}

fn tridiagonal_ql<T: Scalar>(d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = T::c(2.0);
    for l in 0..n {
        for _iter in 0..60 {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r } else { -r });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                let r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                let gg = d[i + 1] - p;
                let rr = (d[i] - gg) * s + two * c * b;
                p = s * rr;
                d[i + 1] = gg + p;
                g = c * rr - b;
            }
            if deflated {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
}
