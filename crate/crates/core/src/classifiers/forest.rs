use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;

use super::tree::{DecisionTree, TreeParams};
use crate::util::{rng, sub_seed};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
    /// Features tried per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 100,
            tree: TreeParams::default(),
            bootstrap: true,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &ForestParams, seed: u64) -> Self {
        let (n, d) = x.dim();
        let m = params
            .max_features
            .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
            .min(d);
        let trees = (0..params.trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut r = rng(sub_seed(seed, &format!("tree-{t}")));
                let mut w = vec![0.0; n];
                if params.bootstrap {
                    for _ in 0..n {
                        w[r.random_range(0..n)] += 1.0;
                    }
                } else {
                    w.fill(1.0);
                }
                let tp = TreeParams {
                    max_features: Some(m),
                    ..params.tree
                };
                DecisionTree::fit(x, y, &w, tp, Some(&mut r))
            })
            .collect();
        Self {
            n_features: d,
            trees,
        }
    }

    /// Mean of the trees' leaf probabilities.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_proba(x)).sum::<f64>() / self.trees.len() as f64
    }
}
