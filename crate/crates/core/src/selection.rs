//! Filter-style feature rankers and top-k selection.

use std::fmt;

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::{Error, Result};

/// The seven rankers, in grid order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RankingMethod {
    Mrmr,
    Fscr,
    Chsq,
    Gini,
    Mim,
    Srcc,
    Prcc,
}

impl RankingMethod {
    pub const ALL: [RankingMethod; 7] = [
        RankingMethod::Mrmr,
        RankingMethod::Fscr,
        RankingMethod::Chsq,
        RankingMethod::Gini,
        RankingMethod::Mim,
        RankingMethod::Srcc,
        RankingMethod::Prcc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RankingMethod::Mrmr => "MRMR",
            RankingMethod::Fscr => "FSCR",
            RankingMethod::Chsq => "CHSQ",
            RankingMethod::Gini => "GINI",
            RankingMethod::Mim => "MIM",
            RankingMethod::Srcc => "SRCC",
            RankingMethod::Prcc => "PRCC",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        Self::ALL.get(usize::from(t)).copied()
    }
}

impl fmt::Display for RankingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    /// Equal-frequency bins used to discretize features for MI and
    /// chi-square.
    pub bins: usize,
    /// Number of greedy MRMR steps; the remainder of the order falls back to
    /// relevance.
    pub mrmr_steps: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            bins: 8,
            mrmr_steps: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub method: RankingMethod,
    /// Feature indices, best first.
    pub order: Vec<usize>,
    /// Score per feature index.
    pub scores: Vec<f64>,
}

/// Equal-frequency discretization: a value's bin is
/// `floor(#{x < v} * bins / n)`, so ties always share a bin.
pub fn equal_frequency_bins(x: &[f64], bins: usize) -> Vec<u16> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut out = vec![0u16; n];
    let mut below = 0usize;
    for k in 0..n {
        if k > 0 && x[idx[k]] != x[idx[k - 1]] {
            below = k;
        }
        out[idx[k]] = ((below * bins) / n).min(bins - 1) as u16;
    }
    out
}

/// Plug-in mutual information in bits between two discrete sequences.
pub fn mutual_information_discrete(a: &[u16], b: &[u16]) -> f64 {
    let n = a.len();
    let na = a.iter().copied().max().map_or(0, usize::from) + 1;
    let nb = b.iter().copied().max().map_or(0, usize::from) + 1;
    let mut joint = vec![0usize; na * nb];
    let mut ca = vec![0usize; na];
    let mut cb = vec![0usize; nb];
    for (&x, &y) in a.iter().zip(b) {
        joint[usize::from(x) * nb + usize::from(y)] += 1;
        ca[usize::from(x)] += 1;
        cb[usize::from(y)] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let c = joint[i * nb + j];
            if c > 0 {
                let c = c as f64;
                mi += c / nf * (c * nf / (ca[i] as f64 * cb[j] as f64)).log2();
            }
        }
    }
    mi.max(0.0)
}

fn check_binary(y: &[u8]) -> Result<()> {
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::DegenerateInput("labels contain a single class".into()));
    }
    Ok(())
}

/// `I(X;Y)` in bits with `x` discretized into `bins` equal-frequency bins.
pub fn mutual_information(x: &[f64], y: &[u8], bins: usize) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if bins < 2 {
        return Err(Error::BadBinCount(bins));
    }
    check_binary(y)?;
    let yd: Vec<u16> = y.iter().map(|&v| u16::from(v)).collect();
    Ok(mutual_information_discrete(
        &equal_frequency_bins(x, bins),
        &yd,
    ))
}

fn sort_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Average ranks (1-based), ties share their mean rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; n];
    let mut k = 0;
    while k < n {
        let mut e = k;
        while e + 1 < n && x[idx[e + 1]] == x[idx[k]] {
            e += 1;
        }
        let r = (k + e) as f64 / 2.0 + 1.0;
        for &i in &idx[k..=e] {
            ranks[i] = r;
        }
        k = e + 1;
    }
    ranks
}

fn fisher_score(x: &[f64], y: &[u8]) -> f64 {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for class in 0..=1u8 {
        let vals: Vec<f64> = x
            .iter()
            .zip(y)
            .filter(|(_, &l)| l == class)
            .map(|(&v, _)| v)
            .collect();
        let nc = vals.len() as f64;
        let mc = vals.iter().sum::<f64>() / nc;
        let var = vals.iter().map(|v| (v - mc) * (v - mc)).sum::<f64>() / nc;
        num += nc * (mc - mu) * (mc - mu);
        den += nc * var;
    }
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::MAX
    } else {
        0.0
    }
}

fn chi_square(xd: &[u16], y: &[u8], bins: usize) -> f64 {
    let n = xd.len() as f64;
    let mut table = vec![[0usize; 2]; bins];
    for (&b, &l) in xd.iter().zip(y) {
        table[usize::from(b)][usize::from(l)] += 1;
    }
    let col = [
        table.iter().map(|r| r[0]).sum::<usize>() as f64,
        table.iter().map(|r| r[1]).sum::<usize>() as f64,
    ];
    let mut chi = 0.0;
    for row in &table {
        let rs = (row[0] + row[1]) as f64;
        for k in 0..2 {
            let e = rs * col[k] / n;
            if e > 0.0 {
                let d = row[k] as f64 - e;
                chi += d * d / e;
            }
        }
    }
    chi
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Impurity decrease of the best single threshold split.
fn gini_gain(x: &[f64], y: &[u8]) -> f64 {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let total_pos = y.iter().filter(|&&l| l == 1).count() as f64;
    let parent = gini(total_pos, n as f64);
    let mut best = parent;
    let mut left_pos = 0.0;
    for k in 0..n - 1 {
        left_pos += f64::from(y[idx[k]]);
        if x[idx[k]] == x[idx[k + 1]] {
            continue;
        }
        let nl = (k + 1) as f64;
        let nr = (n - k - 1) as f64;
        let w = (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) / n as f64;
        best = best.min(w);
    }
    parent - best
}

/// Scores within this distance are treated as tied in the MRMR greedy step.
const MRMR_TIE: f64 = 1e-12;

fn mrmr(disc: &[Vec<u16>], yd: &[u16], steps: usize) -> (Vec<usize>, Vec<f64>) {
    let d = disc.len();
    let relevance: Vec<f64> = disc
        .par_iter()
        .map(|f| mutual_information_discrete(f, yd))
        .collect();
    let mut scores = relevance.clone();
    let mut chosen = vec![false; d];
    let mut order = Vec::with_capacity(d);
    let mut redundancy = vec![0.0; d];
    let steps = steps.min(d);
    for step in 0..steps {
        let mut best: Option<(usize, f64, f64)> = None;
        for f in (0..d).filter(|&f| !chosen[f]) {
            let red = if step == 0 {
                0.0
            } else {
                redundancy[f] / step as f64
            };
            let s = relevance[f] - red;
            let better = match best {
                None => true,
                Some((_, bs, br)) => s > bs + MRMR_TIE || ((s - bs).abs() <= MRMR_TIE && red < br),
            };
            if better {
                best = Some((f, s, red));
            }
        }
        let (pick, s, _) = best.expect("candidates remain while step < d");
        chosen[pick] = true;
        scores[pick] = s;
        order.push(pick);
        if step + 1 < steps {
            let sel = &disc[pick];
            let add: Vec<f64> = (0..d)
                .into_par_iter()
                .map(|f| {
                    if chosen[f] {
                        0.0
                    } else {
                        mutual_information_discrete(&disc[f], sel)
                    }
                })
                .collect();
            for (r, a) in redundancy.iter_mut().zip(add) {
                *r += a;
            }
        }
    }
    let rest: Vec<usize> = sort_by_score(&relevance)
        .into_iter()
        .filter(|&f| !chosen[f])
        .collect();
    order.extend(rest);
    (order, scores)
}

/// Ranks the columns of `x` against binary labels `y`.
pub fn rank_features(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    method: RankingMethod,
    cfg: &SelectionConfig,
) -> Result<FeatureRanking> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if d == 0 {
        return Err(Error::DegenerateInput("no features".into()));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos < 2 || n - pos < 2 || y.iter().any(|&v| v > 1) {
        return Err(Error::DegenerateInput(
            "ranking needs at least two samples of each class".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if cfg.bins < 2 {
        return Err(Error::BadBinCount(cfg.bins));
    }
    let cols: Vec<Vec<f64>> = (0..d).map(|j| x.column(j).to_vec()).collect();
    let yd: Vec<u16> = y.iter().map(|&v| u16::from(v)).collect();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();

    let (order, scores) = match method {
        RankingMethod::Mrmr => {
            let disc: Vec<Vec<u16>> = cols
                .par_iter()
                .map(|c| equal_frequency_bins(c, cfg.bins))
                .collect();
            mrmr(&disc, &yd, cfg.mrmr_steps)
        }
        _ => {
            let scores: Vec<f64> = cols
                .par_iter()
                .map(|c| match method {
                    RankingMethod::Fscr => fisher_score(c, y),
                    RankingMethod::Chsq => chi_square(&equal_frequency_bins(c, cfg.bins), y, cfg.bins),
                    RankingMethod::Gini => gini_gain(c, y),
                    RankingMethod::Mim => {
                        mutual_information_discrete(&equal_frequency_bins(c, cfg.bins), &yd)
                    }
                    RankingMethod::Srcc => pearson(&average_ranks(c), &average_ranks(&yf)).abs(),
                    RankingMethod::Prcc => pearson(c, &yf).abs(),
                    RankingMethod::Mrmr => unreachable!(),
                })
                .collect();
            (sort_by_score(&scores), scores)
        }
    };
    Ok(FeatureRanking {
        method,
        order,
        scores,
    })
}

/// The first `k` indices of the ranking.
pub fn select_top_k(r: &FeatureRanking, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > r.order.len() {
        return Err(Error::BadK {
            k,
            max: r.order.len(),
        });
    }
    Ok(r.order[..k].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};

    fn balanced_labels(n: usize) -> Vec<u8> {
        (0..n).map(|i| (i % 2) as u8).collect()
    }

    #[test]
    fn mi_identity_and_independence() {
        let y = balanced_labels(40);
        let x: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        assert!((mutual_information(&x, &y, 8).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(mutual_information(&[3.0; 40], &y, 8).unwrap(), 0.0);
        assert!(matches!(
            mutual_information(&x, &[1u8; 40], 8),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn mi_matches_hand_table() {
        // 4x2 counts: rows a=0..3, cols b=0..1.
        let table = [[3usize, 1], [1, 3], [2, 0], [0, 2]];
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, row) in table.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                for _ in 0..c {
                    a.push(i as u16);
                    b.push(j as u16);
                }
            }
        }
        // Plug-in value from the table: n = 12, p(b) = 1/2 each.
        let n = 12.0_f64;
        let mut want = 0.0;
        for row in &table {
            let ra: f64 = (row[0] + row[1]) as f64;
            for &c in row {
                if c > 0 {
                    let c = c as f64;
                    want += c / n * ((c / n) / ((ra / n) * 0.5)).log2();
                }
            }
        }
        assert!((mutual_information_discrete(&a, &b) - want).abs() < 1e-9);
    }

    #[test]
    fn equal_frequency_ties_share_bins() {
        let x = [1.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = equal_frequency_bins(&x, 4);
        assert_eq!(b, vec![0, 0, 0, 1, 2, 2, 3, 3]);
    }

    fn redundancy_fixture() -> (Array2<f64>, Vec<u8>) {
        let n = 64;
        let y = balanced_labels(n);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((n, 3), |(i, j)| match j {
            0 | 1 => f64::from(y[i]),
            _ => rng.random::<f64>(),
        });
        (x, y)
    }

    #[test]
    fn mrmr_demotes_redundant_copy() {
        let (x, y) = redundancy_fixture();
        let r = rank_features(x.view(), &y, RankingMethod::Mrmr, &SelectionConfig::default()).unwrap();
        assert_eq!(r.order, vec![0, 2, 1]);
        let m = rank_features(x.view(), &y, RankingMethod::Mim, &SelectionConfig::default()).unwrap();
        assert_eq!(&m.order[..2], &[0, 1]);
    }

    #[test]
    fn prcc_perfect_linear() {
        let y = balanced_labels(20);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((20, 3), |(i, j)| {
            if j == 1 {
                2.0 * f64::from(y[i])
            } else {
                rng.random::<f64>()
            }
        });
        let r = rank_features(x.view(), &y, RankingMethod::Prcc, &SelectionConfig::default()).unwrap();
        assert_eq!(r.order[0], 1);
        assert!((r.scores[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn top_k_prefix() {
        let r = FeatureRanking {
            method: RankingMethod::Mim,
            order: (0..30).rev().collect(),
            scores: vec![0.0; 30],
        };
        let a = select_top_k(&r, 25).unwrap();
        assert_eq!(a.len(), 25);
        assert_eq!(&select_top_k(&r, 30).unwrap()[..25], &a[..]);
        assert!(matches!(select_top_k(&r, 0), Err(Error::BadK { .. })));
        assert!(matches!(select_top_k(&r, 31), Err(Error::BadK { .. })));
    }

    #[test]
    fn ranking_requires_two_per_class() {
        let x = Array2::zeros((4, 2));
        assert!(rank_features(x.view(), &[0, 0, 0, 1], RankingMethod::Mim, &SelectionConfig::default()).is_err());
    }

    #[test]
    fn average_ranks_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn method_names_roundtrip() {
        for m in RankingMethod::ALL {
            assert_eq!(RankingMethod::from_name(m.name()), Some(m));
            assert_eq!(RankingMethod::from_tag(m.tag()), Some(m));
        }
    }
}
