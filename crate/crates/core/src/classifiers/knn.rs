use ndarray::{Array2, ArrayView2};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub x: Array2<f64>,
    pub y: Vec<u8>,
}

impl KnnModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], k: usize) -> Self {
        Self {
            k: k.clamp(1, x.nrows()),
            x: x.to_owned(),
            y: y.to_vec(),
        }
    }

    /// Tumor fraction among the `k` nearest training rows (Euclidean; equal
    /// distances resolved toward the lower row index).
    pub fn predict_proba(&self, q: &[f64]) -> f64 {
        let mut d: Vec<(f64, usize)> = self
            .x
            .outer_iter()
            .enumerate()
            .map(|(i, r)| {
                let s: f64 = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                (s, i)
            })
            .collect();
        let k = self.k.min(d.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        d.select_nth_unstable_by(k - 1, cmp);
        let votes = d[..k].iter().filter(|(_, i)| self.y[*i] == 1).count();
        votes as f64 / k as f64
    }
}
