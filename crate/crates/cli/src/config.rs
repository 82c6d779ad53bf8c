//! Run configuration: a flat TOML table where every key is optional.

use std::path::{Path, PathBuf};

use optomx::classifiers::{BoostParams, ClassifierParams, ForestParams, SvmParams, TreeParams};
use optomx::model_selection::GridSpec;
use optomx::phantom::PhantomConfig;
use optomx::selection::SelectionConfig;
use optomx::{ClassifierKind, Error, RankingMethod, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Study manifest CSV. Empty: use `<out_dir>/study/manifest.csv`,
    /// generating a phantom study there when `run` finds none.
    pub manifest: String,
    pub out_dir: String,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,

    pub train_fraction: f64,
    pub gray_levels: usize,
    pub log_sigmas_mm: Vec<f64>,
    pub patch_sizes_mm: Vec<f64>,
    /// Patch size used for the per-slice accuracy comparison.
    pub primary_patch_mm: f64,
    /// Patch budget per training slice, split between the classes by area.
    pub train_patches_per_slice: usize,
    pub test_patches_per_slice: usize,

    pub classifiers: Vec<String>,
    pub selectors: Vec<String>,
    pub feature_counts: Vec<usize>,
    pub plateau_c: f64,
    pub selection_bins: usize,
    pub mrmr_steps: usize,

    pub svm_c: f64,
    /// RBF width; 0 means `1 / k`.
    pub svm_gamma: f64,
    pub svm_tol: f64,
    pub svm_max_iter: usize,
    pub knn_k: usize,
    pub tree_max_depth: usize,
    pub tree_min_leaf: usize,
    pub forest_trees: usize,
    pub forest_bootstrap: bool,
    pub boost_rounds: usize,
    pub nb_var_floor: f64,
    pub lda_ridge: f64,

    pub phantom_patients: usize,
    pub phantom_slices_per_patient: usize,
    pub phantom_size: usize,
    pub phantom_dose_multipliers: Vec<f64>,
    pub phantom_target_sbr: f64,
    pub phantom_intensity_overlap: f64,
    pub phantom_noise_sd: f64,
    pub phantom_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ph = PhantomConfig::default();
        let cp = ClassifierParams::default();
        let sel = SelectionConfig::default();
        Self {
            manifest: String::new(),
            out_dir: "optomx-out".into(),
            seed: 2023,
            threads: 0,
            train_fraction: 0.75,
            gray_levels: optomx::DEFAULT_GRAY_LEVELS,
            log_sigmas_mm: optomx::filterbank::DEFAULT_LOG_SIGMAS_MM.to_vec(),
            patch_sizes_mm: optomx::DEFAULT_PATCH_SIZES_MM.to_vec(),
            primary_patch_mm: 1.81,
            train_patches_per_slice: 304,
            test_patches_per_slice: 304,
            classifiers: ClassifierKind::ALL.iter().map(|k| k.name().into()).collect(),
            selectors: RankingMethod::ALL.iter().map(|m| m.name().into()).collect(),
            feature_counts: optomx::model_selection::default_ks(),
            plateau_c: 1.5,
            selection_bins: sel.bins,
            mrmr_steps: sel.mrmr_steps,
            svm_c: cp.svm.c,
            svm_gamma: 0.0,
            svm_tol: cp.svm.tol,
            svm_max_iter: cp.svm.max_iter,
            knn_k: cp.knn_k,
            tree_max_depth: cp.tree.max_depth,
            tree_min_leaf: cp.tree.min_leaf,
            forest_trees: cp.forest.trees,
            forest_bootstrap: cp.forest.bootstrap,
            boost_rounds: cp.boost.rounds,
            nb_var_floor: cp.nb_var_floor,
            lda_ridge: cp.lda_ridge,
            phantom_patients: ph.patients,
            phantom_slices_per_patient: ph.slices_per_patient,
            phantom_size: ph.size,
            phantom_dose_multipliers: ph.dose_multipliers.to_vec(),
            phantom_target_sbr: ph.target_sbr,
            phantom_intensity_overlap: ph.intensity_overlap,
            phantom_noise_sd: ph.noise_sd,
            phantom_seed: ph.seed,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadConfig(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| bad(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(bad("train_fraction must lie in (0, 1)"));
        }
        if self.gray_levels < 2 {
            return Err(Error::BadBinCount(self.gray_levels));
        }
        if self.log_sigmas_mm.iter().any(|&s| !(s > 0.0)) {
            return Err(bad("log_sigmas_mm must be positive"));
        }
        if self.patch_sizes_mm.is_empty() || self.patch_sizes_mm.iter().any(|&s| !(s > 0.0)) {
            return Err(bad("patch_sizes_mm must be a non-empty list of positive sizes"));
        }
        if !self.patch_sizes_mm.contains(&self.primary_patch_mm) {
            return Err(bad("primary_patch_mm must be one of patch_sizes_mm"));
        }
        let mut names: Vec<String> = self.patch_sizes_mm.iter().map(|&s| size_tag(s)).collect();
        names.sort();
        names.dedup();
        if names.len() != self.patch_sizes_mm.len() {
            return Err(bad("patch_sizes_mm entries must differ at 0.01 mm"));
        }
        if self.train_patches_per_slice < 2 || self.test_patches_per_slice < 2 {
            return Err(bad("patch budgets must be at least 2 per slice"));
        }
        self.grid()?;
        if !(self.plateau_c >= 0.0) {
            return Err(bad("plateau_c must be non-negative"));
        }
        if self.selection_bins < 2 {
            return Err(Error::BadBinCount(self.selection_bins));
        }
        if !(self.svm_c > 0.0) || !(self.svm_gamma >= 0.0) || !(self.svm_tol > 0.0) || self.svm_max_iter == 0 {
            return Err(bad("svm_c and svm_tol must be positive, svm_gamma non-negative"));
        }
        if self.knn_k == 0 || self.tree_max_depth == 0 || self.tree_min_leaf == 0 {
            return Err(bad("knn_k, tree_max_depth and tree_min_leaf must be at least 1"));
        }
        if self.forest_trees == 0 || self.boost_rounds == 0 {
            return Err(bad("forest_trees and boost_rounds must be at least 1"));
        }
        if !(self.nb_var_floor > 0.0) || !(self.lda_ridge >= 0.0) {
            return Err(bad("nb_var_floor must be positive and lda_ridge non-negative"));
        }
        self.phantom()?.validate()
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let classifiers = self
            .classifiers
            .iter()
            .map(|n| ClassifierKind::from_name(n).ok_or_else(|| bad(format!("unknown classifier {n:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let selectors = self
            .selectors
            .iter()
            .map(|n| RankingMethod::from_name(n).ok_or_else(|| bad(format!("unknown selector {n:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let grid = GridSpec {
            classifiers,
            selectors,
            ks: self.feature_counts.clone(),
        };
        if grid.n_cells() == 0 {
            return Err(bad("classifiers, selectors and feature_counts must be non-empty"));
        }
        if self.feature_counts.contains(&0) {
            return Err(bad("feature_counts must be positive"));
        }
        Ok(grid)
    }

    pub fn classifier_params(&self) -> ClassifierParams {
        let tree = TreeParams {
            max_depth: self.tree_max_depth,
            min_leaf: self.tree_min_leaf,
            max_features: None,
        };
        ClassifierParams {
            svm: SvmParams {
                c: self.svm_c,
                gamma: (self.svm_gamma > 0.0).then_some(self.svm_gamma),
                tol: self.svm_tol,
                max_iter: self.svm_max_iter,
            },
            knn_k: self.knn_k,
            tree,
            forest: ForestParams {
                trees: self.forest_trees,
                tree,
                bootstrap: self.forest_bootstrap,
                max_features: None,
            },
            boost: BoostParams {
                rounds: self.boost_rounds,
            },
            nb_var_floor: self.nb_var_floor,
            lda_ridge: self.lda_ridge,
        }
    }

    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            bins: self.selection_bins,
            mrmr_steps: self.mrmr_steps,
        }
    }

    pub fn phantom(&self) -> Result<PhantomConfig> {
        let m: [f64; 3] = self
            .phantom_dose_multipliers
            .as_slice()
            .try_into()
            .map_err(|_| bad("phantom_dose_multipliers needs exactly 3 values"))?;
        Ok(PhantomConfig {
            patients: self.phantom_patients,
            slices_per_patient: self.phantom_slices_per_patient,
            size: self.phantom_size,
            dose_multipliers: m,
            target_sbr: self.phantom_target_sbr,
            intensity_overlap: self.phantom_intensity_overlap,
            noise_sd: self.phantom_noise_sd,
            seed: self.phantom_seed,
            ..PhantomConfig::default()
        })
    }

    /// SHA-256 of the canonical TOML form, ignoring keys that cannot change
    /// any result (`threads`, `out_dir`).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = 0;
        c.out_dir = String::new();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }

    pub fn out(&self) -> PathBuf {
        PathBuf::from(&self.out_dir)
    }

    pub fn manifest_path(&self) -> PathBuf {
        if self.manifest.is_empty() {
            self.out().join("study").join("manifest.csv")
        } else {
            PathBuf::from(&self.manifest)
        }
    }
}

/// File-name tag for a patch size, e.g. `1.81`.
pub fn size_tag(size_mm: f64) -> String {
    format!("{size_mm:.2}")
}
