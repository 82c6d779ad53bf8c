use ndarray::ArrayView2;

/// Gaussian naive Bayes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    /// Log class priors, index 0 = normal.
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], var_floor: f64) -> Self {
        let (n, d) = x.dim();
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        let mut var = [vec![0.0; d], vec![0.0; d]];
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
        for (i, row) in x.outer_iter().enumerate() {
            let c = usize::from(y[i]);
            for j in 0..d {
                let e = row[j] - mean[c][j];
                var[c][j] += e * e;
            }
        }
        for c in 0..2 {
            var[c]
                .iter_mut()
                .for_each(|v| *v = (*v / count[c] as f64).max(var_floor));
        }
        let log_prior = [
            (count[0] as f64 / n as f64).ln(),
            (count[1] as f64 / n as f64).ln(),
        ];
        Self {
            log_prior,
            mean,
            var,
        }
    }

    fn log_joint(&self, c: usize, x: &[f64]) -> f64 {
        let mut l = self.log_prior[c];
        for ((&v, &m), &s2) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
            l -= 0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / s2);
        }
        l
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        logistic(self.log_joint(1, x) - self.log_joint(0, x))
    }
}

/// `1 / (1 + exp(-z))` without overflow.
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
