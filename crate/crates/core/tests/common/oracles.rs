//! Brute-force reference implementations of the per-image features. They
//! favor obviousness over speed: pair enumeration over all pixel pairs,
//! union-find zones, explicit neighbor loops.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use nalgebra::DMatrix;

pub type Levels = Vec<Vec<usize>>;

fn log2(x: f64) -> f64 {
    x.ln() / std::f64::consts::LN_2
}

fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * log2(p)
    } else {
        0.0
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn first_order(values: &[f64], ng: usize, area: f64) -> Vec<f64> {
    let n = values.len() as f64;
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = values.iter().sum::<f64>() / n;
    let central = |k: i32| values.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let energy: f64 = values.iter().map(|v| v * v).sum();
    let (p10, p90) = (percentile(&s, 10.0), percentile(&s, 90.0));
    let robust: Vec<f64> = values.iter().copied().filter(|&v| v >= p10 && v <= p90).collect();
    let rmean = robust.iter().sum::<f64>() / robust.len() as f64;
    let mut hist = vec![0usize; ng];
    for &v in values {
        hist[((v * ng as f64).floor().max(0.0) as usize).min(ng - 1)] += 1;
    }
    let probs: Vec<f64> = hist.iter().map(|&c| c as f64 / n).collect();
    vec![
        energy,
        energy * area,
        -probs.iter().map(|&p| xlogx(p)).sum::<f64>(),
        s[0],
        p10,
        p90,
        s[s.len() - 1],
        mean,
        percentile(&s, 50.0),
        percentile(&s, 75.0) - percentile(&s, 25.0),
        s[s.len() - 1] - s[0],
        values.iter().map(|v| (v - mean).abs()).sum::<f64>() / n,
        robust.iter().map(|v| (v - rmean).abs()).sum::<f64>() / robust.len() as f64,
        (energy / n).sqrt(),
        if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
        if m2 > 0.0 { m4 / (m2 * m2) } else { 0.0 },
        m2,
        probs.iter().map(|p| p * p).sum(),
    ]
}

const DIRS: [(i64, i64); 4] = [(0, 1), (1, 1), (1, 0), (1, -1)];

fn dims(x: &Levels) -> (i64, i64) {
    (x.len() as i64, x[0].len() as i64)
}

fn at(x: &Levels, r: i64, c: i64) -> Option<usize> {
    let (h, w) = dims(x);
    (r >= 0 && c >= 0 && r < h && c < w).then(|| x[r as usize][c as usize])
}

fn pixels(x: &Levels) -> Vec<(i64, i64)> {
    let (h, w) = dims(x);
    (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).collect()
}

fn glcm_one(x: &Levels, ng: usize, d: (i64, i64)) -> Vec<f64> {
    // Every ordered pixel pair, kept when the second is one step from the
    // first in either sense of the direction.
    let mut p = vec![vec![0.0; ng]; ng];
    let px_list = pixels(x);
    let mut total = 0.0;
    for &a in &px_list {
        for &b in &px_list {
            let (dr, dc) = (b.0 - a.0, b.1 - a.1);
            if (dr, dc) == d || (-dr, -dc) == d {
                p[x[a.0 as usize][a.1 as usize] - 1][x[b.0 as usize][b.1 as usize] - 1] += 1.0;
                total += 1.0;
            }
        }
    }
    for row in p.iter_mut() {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    let lv = |i: usize| (i + 1) as f64;
    let px: Vec<f64> = (0..ng).map(|i| p[i].iter().sum()).collect();
    let py: Vec<f64> = (0..ng).map(|j| (0..ng).map(|i| p[i][j]).sum()).collect();
    let mux: f64 = (0..ng).map(|i| lv(i) * px[i]).sum();
    let muy: f64 = (0..ng).map(|j| lv(j) * py[j]).sum();
    let sx = (0..ng).map(|i| (lv(i) - mux).powi(2) * px[i]).sum::<f64>().sqrt();
    let sy = (0..ng).map(|j| (lv(j) - muy).powi(2) * py[j]).sum::<f64>().sqrt();
    let sum = |f: &dyn Fn(f64, f64, f64) -> f64| -> f64 {
        let mut s = 0.0;
        for i in 0..ng {
            for j in 0..ng {
                s += f(lv(i), lv(j), p[i][j]);
            }
        }
        s
    };
    let mut pdiff = vec![0.0; ng];
    let mut psum = vec![0.0; 2 * ng + 1];
    for i in 0..ng {
        for j in 0..ng {
            pdiff[i.abs_diff(j)] += p[i][j];
            psum[i + j + 2] += p[i][j];
        }
    }
    let da: f64 = (0..ng).map(|k| k as f64 * pdiff[k]).sum();
    let hxy = -sum(&|_, _, q| xlogx(q));
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let m = px[i] * py[j];
            if m > 0.0 {
                hxy1 -= p[i][j] * log2(m);
                hxy2 -= m * log2(m);
            }
        }
    }
    let hx = -px.iter().map(|&v| xlogx(v)).sum::<f64>();
    let hy = -py.iter().map(|&v| xlogx(v)).sum::<f64>();
    let ngf = ng as f64;
    let corr = if sx * sy > 0.0 {
        (sum(&|i, j, q| i * j * q) - mux * muy) / (sx * sy)
    } else {
        1.0
    };
    vec![
        sum(&|i, j, q| i * j * q),
        mux,
        sum(&|i, j, q| (i + j - mux - muy).powi(4) * q),
        sum(&|i, j, q| (i + j - mux - muy).powi(3) * q),
        sum(&|i, j, q| (i + j - mux - muy).powi(2) * q),
        sum(&|i, j, q| (i - j).powi(2) * q),
        corr,
        da,
        -pdiff.iter().map(|&v| xlogx(v)).sum::<f64>(),
        (0..ng).map(|k| (k as f64 - da).powi(2) * pdiff[k]).sum(),
        sum(&|_, _, q| q * q),
        hxy,
        if hx.max(hy) > 0.0 { (hxy - hxy1) / hx.max(hy) } else { 0.0 },
        (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt(),
        sum(&|i, j, q| q / (1.0 + (i - j).powi(2))),
        sum(&|i, j, q| q / (1.0 + (i - j).powi(2) / (ngf * ngf))),
        sum(&|i, j, q| q / (1.0 + (i - j).abs())),
        sum(&|i, j, q| q / (1.0 + (i - j).abs() / ngf)),
        sum(&|i, j, q| if i != j { q / (i - j).powi(2) } else { 0.0 }),
        p.iter().flatten().fold(0.0, |a: f64, &b| a.max(b)),
        -psum.iter().map(|&v| xlogx(v)).sum::<f64>(),
        sum(&|i, _, q| (i - mux).powi(2) * q),
        mcc(&p, &px, &py),
    ]
}

/// Square root of the second-largest eigenvalue of
/// `Q[i][j] = sum_k p[i][k] p[j][k] / (px[i] py[k])` over occupied levels.
fn mcc(p: &[Vec<f64>], px: &[f64], py: &[f64]) -> f64 {
    let occ: Vec<usize> = (0..px.len()).filter(|&i| px[i] > 0.0).collect();
    if occ.len() < 2 {
        return 1.0;
    }
    let n = occ.len();
    let q = DMatrix::from_fn(n, n, |a, b| {
        occ.iter()
            .map(|&k| p[occ[a]][k] * p[occ[b]][k] / (px[occ[a]] * py[k]))
            .sum::<f64>()
    });
    let mut ev: Vec<f64> = q
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev[1].clamp(0.0, 1.0).sqrt()
}

pub fn glcm(x: &Levels, ng: usize) -> Vec<f64> {
    let per: Vec<Vec<f64>> = DIRS.iter().map(|&d| glcm_one(x, ng, d)).collect();
    (0..23).map(|k| per.iter().map(|f| f[k]).sum::<f64>() / 4.0).collect()
}

/// The 16 features shared by run-length, zone and dependence matrices, from
/// a list of `(level, size)` elements.
fn emphasis(elems: &[(usize, usize)], n_pixels: usize) -> Vec<f64> {
    let nz = elems.len() as f64;
    let mut m: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &e in elems {
        *m.entry(e).or_default() += 1.0;
    }
    let mut by_level: BTreeMap<usize, f64> = BTreeMap::new();
    let mut by_size: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(i, s), &c) in &m {
        *by_level.entry(i).or_default() += c;
        *by_size.entry(s).or_default() += c;
    }
    let e = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
        m.iter().map(|(&(i, s), &c)| c / nz * f(i as f64, s as f64)).sum()
    };
    let mu_i = e(&|i, _| i);
    let mu_s = e(&|_, s| s);
    let gln = by_level.values().map(|c| c * c).sum::<f64>() / nz;
    let sn = by_size.values().map(|c| c * c).sum::<f64>() / nz;
    vec![
        e(&|_, s| 1.0 / (s * s)),
        e(&|_, s| s * s),
        gln,
        gln / nz,
        sn,
        sn / nz,
        nz / n_pixels as f64,
        e(&|i, _| (i - mu_i).powi(2)),
        e(&|_, s| (s - mu_s).powi(2)),
        -m.values().map(|&c| xlogx(c / nz)).sum::<f64>(),
        e(&|i, _| 1.0 / (i * i)),
        e(&|i, _| i * i),
        e(&|i, s| 1.0 / (i * i * s * s)),
        e(&|i, s| i * i / (s * s)),
        e(&|i, s| s * s / (i * i)),
        e(&|i, s| i * i * s * s),
    ]
}

pub fn glrlm(x: &Levels) -> Vec<f64> {
    let n_pixels = pixels(x).len();
    let per: Vec<Vec<f64>> = DIRS
        .iter()
        .map(|&(dr, dc)| {
            let mut runs = Vec::new();
            for (r, c) in pixels(x) {
                let v = x[r as usize][c as usize];
                if at(x, r - dr, c - dc) == Some(v) {
                    continue;
                }
                let mut len = 0;
                while at(x, r + len * dr, c + len * dc) == Some(v) {
                    len += 1;
                }
                runs.push((v, len as usize));
            }
            emphasis(&runs, n_pixels)
        })
        .collect();
    (0..16).map(|k| per.iter().map(|f| f[k]).sum::<f64>() / 4.0).collect()
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

pub fn glszm(x: &Levels) -> Vec<f64> {
    let (h, w) = dims(x);
    let idx = |r: i64, c: i64| (r * w + c) as usize;
    let mut parent: Vec<usize> = (0..(h * w) as usize).collect();
    for (r, c) in pixels(x) {
        for dr in -1..=1 {
            for dc in -1..=1 {
                if at(x, r + dr, c + dc) == Some(x[r as usize][c as usize]) {
                    let (a, b) = (find(&mut parent, idx(r, c)), find(&mut parent, idx(r + dr, c + dc)));
                    parent[a] = b;
                }
            }
        }
    }
    let mut zones: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (r, c) in pixels(x) {
        let root = find(&mut parent, idx(r, c));
        let z = zones.entry(root).or_insert((x[r as usize][c as usize], 0));
        z.1 += 1;
    }
    let elems: Vec<(usize, usize)> = zones.into_values().collect();
    emphasis(&elems, (h * w) as usize)
}

pub fn gldm(x: &Levels) -> Vec<f64> {
    let elems: Vec<(usize, usize)> = pixels(x)
        .into_iter()
        .map(|(r, c)| {
            let v = x[r as usize][c as usize];
            let mut dep = 0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    if (dr, dc) != (0, 0) && at(x, r + dr, c + dc) == Some(v) {
                        dep += 1;
                    }
                }
            }
            (v, dep + 1)
        })
        .collect();
    let all = emphasis(&elems, elems.len());
    [0, 1, 2, 4, 5, 7, 8, 9, 10, 11, 12, 13, 14, 15]
        .iter()
        .map(|&k| all[k])
        .collect()
}

pub fn ngtdm(x: &Levels, ng: usize) -> Vec<f64> {
    let mut n = vec![0.0; ng + 1];
    let mut s = vec![0.0; ng + 1];
    for (r, c) in pixels(x) {
        let mut nb = Vec::new();
        for dr in -1..=1 {
            for dc in -1..=1 {
                if (dr, dc) != (0, 0) {
                    if let Some(v) = at(x, r + dr, c + dc) {
                        nb.push(v as f64);
                    }
                }
            }
        }
        let i = x[r as usize][c as usize];
        n[i] += 1.0;
        s[i] += (i as f64 - nb.iter().sum::<f64>() / nb.len() as f64).abs();
    }
    let nvp: f64 = n.iter().sum();
    let occ: Vec<usize> = (1..=ng).filter(|&i| n[i] > 0.0).collect();
    let p = |i: usize| n[i] / nvp;
    let ps: f64 = occ.iter().map(|&i| p(i) * s[i]).sum();
    let s_sum: f64 = occ.iter().map(|&i| s[i]).sum();
    let g = occ.len() as f64;
    let (mut con, mut busy, mut cplx, mut strength) = (0.0, 0.0, 0.0, 0.0);
    for &i in &occ {
        for &j in &occ {
            let d = i as f64 - j as f64;
            con += p(i) * p(j) * d * d;
            busy += (i as f64 * p(i) - j as f64 * p(j)).abs();
            cplx += d.abs() * (p(i) * s[i] + p(j) * s[j]) / (p(i) + p(j));
            strength += (p(i) + p(j)) * d * d;
        }
    }
    vec![
        if ps > 0.0 { (1.0 / ps).min(1e6) } else { 1e6 },
        if g > 1.0 { con / (g * (g - 1.0)) * s_sum / nvp } else { 0.0 },
        if busy > 0.0 { ps / busy } else { 0.0 },
        cplx / nvp,
        if s_sum > 0.0 { strength / s_sum } else { 0.0 },
    ]
}

/// Largest relative-or-absolute gap between two feature lists.
pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}
