//! The seven classifier families, z-score standardization and a binary
//! encoding of fitted models.

mod bayes;
mod boost;
pub mod codec;
mod forest;
mod knn;
mod lda;
mod standardizer;
pub mod svm;
pub mod tree;

use std::fmt;

use ndarray::ArrayView2;

use crate::{Error, Result};

pub use bayes::GaussianNb;
pub use boost::{AdaBoost, BoostParams};
pub use forest::{ForestParams, RandomForest};
pub use knn::KnnModel;
pub use lda::Lda;
pub use standardizer::Standardizer;
pub use svm::{SvmModel, SvmParams};
pub use tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    Rf,
    Knn,
    Dt,
    Svm,
    Bst,
    By,
    Da,
}

impl ClassifierKind {
    /// Grid order; also the tie-break order when choosing a winner.
    pub const ALL: [ClassifierKind; 7] = [
        ClassifierKind::Rf,
        ClassifierKind::Knn,
        ClassifierKind::Dt,
        ClassifierKind::Svm,
        ClassifierKind::Bst,
        ClassifierKind::By,
        ClassifierKind::Da,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Rf => "RF",
            ClassifierKind::Knn => "KNN",
            ClassifierKind::Dt => "DT",
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Bst => "BST",
            ClassifierKind::By => "BY",
            ClassifierKind::Da => "DA",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
    }

    pub fn tag(self) -> u8 {
        Self::ALL.iter().position(|&k| k == self).unwrap() as u8 + 1
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        Self::ALL.get(usize::from(t).checked_sub(1)?).copied()
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierParams {
    pub svm: SvmParams,
    pub knn_k: usize,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub boost: BoostParams,
    pub nb_var_floor: f64,
    pub lda_ridge: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            svm: SvmParams::default(),
            knn_k: 5,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            boost: BoostParams::default(),
            nb_var_floor: 1e-9,
            lda_ridge: 1e-6,
        }
    }
}

/// A fitted classifier. Immutable once trained.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Svm(SvmModel),
    Rf(RandomForest),
    Knn(KnnModel),
    Dt(DecisionTree),
    Bst(AdaBoost),
    By(GaussianNb),
    Da(Lda),
}

/// Fits `kind` on standardized rows `x` with labels `y` (1 = tumor).
pub fn train(
    kind: ClassifierKind,
    x: ArrayView2<'_, f64>,
    y: &[u8],
    params: &ClassifierParams,
    seed: u64,
) -> Result<Model> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() || y.iter().any(|&v| v > 1) {
        return Err(Error::SingleClass);
    }
    let x = x.as_standard_layout();
    let x = x.view();
    let ones = vec![1.0; y.len()];
    Ok(match kind {
        ClassifierKind::Svm => Model::Svm(SvmModel::fit(x, y, &params.svm)?),
        ClassifierKind::Rf => Model::Rf(RandomForest::fit(x, y, &params.forest, seed)),
        ClassifierKind::Knn => Model::Knn(KnnModel::fit(x, y, params.knn_k)),
        ClassifierKind::Dt => Model::Dt(DecisionTree::fit(x, y, &ones, params.tree, None)),
        ClassifierKind::Bst => Model::Bst(AdaBoost::fit(x, y, &params.boost)),
        ClassifierKind::By => Model::By(GaussianNb::fit(x, y, params.nb_var_floor)),
        ClassifierKind::Da => Model::Da(Lda::fit(x, y, params.lda_ridge)?),
    })
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::Svm(_) => ClassifierKind::Svm,
            Model::Rf(_) => ClassifierKind::Rf,
            Model::Knn(_) => ClassifierKind::Knn,
            Model::Dt(_) => ClassifierKind::Dt,
            Model::Bst(_) => ClassifierKind::Bst,
            Model::By(_) => ClassifierKind::By,
            Model::Da(_) => ClassifierKind::Da,
        }
    }

    /// Number of features the model was trained on.
    pub fn dim(&self) -> usize {
        match self {
            Model::Svm(m) => m.support.ncols(),
            Model::Knn(m) => m.x.ncols(),
            Model::By(m) => m.mean[0].len(),
            Model::Da(m) => m.w.len(),
            Model::Rf(m) => m.n_features,
            Model::Dt(m) => m.n_features,
            Model::Bst(m) => m.n_features,
        }
    }

    fn raw_proba(&self, x: &[f64]) -> f64 {
        match self {
            Model::Svm(m) => m.predict_proba(x),
            Model::Rf(m) => m.predict_proba(x),
            Model::Knn(m) => m.predict_proba(x),
            Model::Dt(m) => m.predict_proba(x),
            Model::Bst(m) => m.predict_proba(x),
            Model::By(m) => m.predict_proba(x),
            Model::Da(m) => m.predict_proba(x),
        }
    }

    /// Tumor probability for one standardized row.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let p = self.raw_proba(x);
        Ok(if p.is_nan() { 0.5 } else { p.clamp(0.0, 1.0) })
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.predict_proba(x)? >= 0.5))
    }

    pub fn predict_proba_rows(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        x.outer_iter()
            .map(|r| self.predict_proba(&r.to_vec()))
            .collect()
    }
}
