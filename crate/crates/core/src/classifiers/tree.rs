//! CART with Gini impurity and sample weights.

use ndarray::ArrayView2;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` tries all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_leaf: 5,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        proba: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    w: &'a [f64],
    params: TreeParams,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

impl Grower<'_> {
    fn leaf(&mut self, pos: f64, total: f64) -> usize {
        let proba = if total > 0.0 { pos / total } else { 0.5 };
        self.nodes.push(Node::Leaf { proba });
        self.nodes.len() - 1
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let total: f64 = rows.iter().map(|&r| self.w[r]).sum();
        let pos: f64 = rows
            .iter()
            .filter(|&&r| self.y[r] == 1)
            .map(|&r| self.w[r])
            .sum();
        let min_leaf = self.params.min_leaf.max(1);
        if depth >= self.params.max_depth
            || rows.len() < 2 * min_leaf
            || pos <= 0.0
            || pos >= total
        {
            return self.leaf(pos, total);
        }
        let d = self.x.ncols();
        let features: Vec<usize> = match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = index::sample(rng, d, m.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        };

        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = rows.to_vec();
        for &f in &features {
            order.sort_by(|&a, &b| {
                self.x[[a, f]]
                    .partial_cmp(&self.x[[b, f]])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let (mut lw, mut lp) = (0.0, 0.0);
            for i in 0..order.len() - 1 {
                let r = order[i];
                lw += self.w[r];
                if self.y[r] == 1 {
                    lp += self.w[r];
                }
                let (v, vn) = (self.x[[r, f]], self.x[[order[i + 1], f]]);
                if i + 1 < min_leaf || order.len() - i - 1 < min_leaf || v == vn {
                    continue;
                }
                let (rw, rp) = (total - lw, pos - lp);
                let imp = (lw * gini(lp, lw) + rw * gini(rp, rw)) / total;
                if best.is_none_or(|(b, _, _)| imp < b - 1e-15) {
                    let mut thr = v + (vn - v) / 2.0;
                    if thr >= vn {
                        thr = v;
                    }
                    best = Some((imp, f, thr));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(pos, total);
        };
        let split = partition(rows, |r| self.x[[r, feature]] <= threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { proba: 0.0 });
        let (l, r) = rows.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Stable in-place partition; returns the count of rows satisfying `pred`.
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| pred(r));
    let k = yes.len();
    for (dst, src) in rows.iter_mut().zip(yes.into_iter().chain(no)) {
        *dst = src;
    }
    k
}

impl DecisionTree {
    /// Grows a tree on rows with positive weight. `rng` is only consulted
    /// when `max_features` is below the feature count.
    pub fn fit(
        x: ArrayView2<'_, f64>,
        y: &[u8],
        w: &[f64],
        params: TreeParams,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Self {
        let mut rows: Vec<usize> = (0..x.nrows()).filter(|&r| w[r] > 0.0).collect();
        let mut g = Grower {
            x,
            y,
            w,
            params,
            rng,
            nodes: Vec::new(),
        };
        g.grow(&mut rows, 0);
        DecisionTree {
            n_features: x.ncols(),
            nodes: g.nodes,
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { proba } => return proba,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}
