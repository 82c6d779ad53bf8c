use ndarray::{Array2, ArrayView2};

use super::bayes::logistic;
use crate::linalg::{cholesky, cholesky_solve};
use crate::Result;

/// Two-class linear discriminant analysis with a ridged pooled covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Lda {
    pub w: Vec<f64>,
    pub b: f64,
}

impl Lda {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], ridge: f64) -> Result<Self> {
        let (n, d) = x.dim();
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        let mut count = [0usize; 2];
        for (i, row) in x.outer_iter().enumerate() {
            let c = usize::from(y[i]);
            count[c] += 1;
            for (m, v) in mean[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
        }
        let mut s = Array2::<f64>::zeros((d, d));
        for (i, row) in x.outer_iter().enumerate() {
            let m = &mean[usize::from(y[i])];
            let e: Vec<f64> = row.iter().zip(m).map(|(a, b)| a - b).collect();
            for a in 0..d {
                for b in 0..=a {
                    s[[a, b]] += e[a] * e[b];
                }
            }
        }
        let dof = if n > 2 { (n - 2) as f64 } else { n as f64 };
        for a in 0..d {
            for b in 0..=a {
                let v = s[[a, b]] / dof;
                s[[a, b]] = v;
                s[[b, a]] = v;
            }
            s[[a, a]] += ridge;
        }
        let l = cholesky(&s)?;
        let diff: Vec<f64> = mean[1].iter().zip(&mean[0]).map(|(a, b)| a - b).collect();
        let w = cholesky_solve(&l, &diff);
        let mid: f64 = w
            .iter()
            .zip(mean[1].iter().zip(&mean[0]))
            .map(|(wi, (a, b))| wi * (a + b) / 2.0)
            .sum();
        let b = -mid + (count[1] as f64 / count[0] as f64).ln();
        Ok(Self { w, b })
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let z: f64 = self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b;
        logistic(z)
    }
}
