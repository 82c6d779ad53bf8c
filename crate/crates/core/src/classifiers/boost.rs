use ndarray::ArrayView2;

use super::tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub rounds: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self { rounds: 100 }
    }
}

/// AdaBoost.M1 over depth-1 stumps.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoost {
    pub n_features: usize,
    pub stumps: Vec<DecisionTree>,
    pub alphas: Vec<f64>,
}

const STUMP: TreeParams = TreeParams {
    max_depth: 1,
    min_leaf: 1,
    max_features: None,
};

impl AdaBoost {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &BoostParams) -> Self {
        let n = x.nrows();
        let mut w = vec![1.0 / n as f64; n];
        let mut stumps = Vec::new();
        let mut alphas = Vec::new();
        for _ in 0..params.rounds.max(1) {
            let stump = DecisionTree::fit(x, y, &w, STUMP, None);
            let miss: Vec<bool> = (0..n)
                .map(|i| {
                    let row: Vec<f64> = x.row(i).to_vec();
                    u8::from(stump.predict_proba(&row) >= 0.5) != y[i]
                })
                .collect();
            let wsum: f64 = w.iter().sum();
            let err: f64 = w
                .iter()
                .zip(&miss)
                .filter(|(_, &m)| m)
                .map(|(w, _)| w)
                .sum::<f64>()
                / wsum;
            if err >= 0.5 {
                if stumps.is_empty() {
                    stumps.push(stump);
                    alphas.push(1.0);
                }
                break;
            }
            let e = err.max(1e-10);
            let alpha = ((1.0 - e) / e).ln();
            stumps.push(stump);
            alphas.push(alpha);
            if err <= 1e-10 {
                break;
            }
            for (wi, &m) in w.iter_mut().zip(&miss) {
                if m {
                    *wi *= alpha.exp();
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        }
        Self {
            n_features: x.ncols(),
            stumps,
            alphas,
        }
    }

    /// Weighted fraction of votes for the tumor class.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let total: f64 = self.alphas.iter().sum();
        let pos: f64 = self
            .stumps
            .iter()
            .zip(&self.alphas)
            .filter(|(s, _)| s.predict_proba(x) >= 0.5)
            .map(|(_, a)| a)
            .sum();
        pos / total
    }
}
