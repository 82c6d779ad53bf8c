//! Leave-one-slice-out grid search over classifier, ranking method and
//! feature count; the plateau rule for the feature count; the final fitted
//! pipeline and its file format.

use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::classifiers::codec::{Decoder, Encoder};
use crate::classifiers::{train, ClassifierKind, ClassifierParams, Model, Standardizer};
use crate::features::FeatureMatrix;
use crate::selection::{rank_features, RankingMethod, SelectionConfig};
use crate::util::{pairwise_sum, sub_seed};
use crate::{Error, Result};

/// Feature counts 5, 10, ..., 100.
pub fn default_ks() -> Vec<usize> {
    (1..=20).map(|i| 5 * i).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub classifiers: Vec<ClassifierKind>,
    pub selectors: Vec<RankingMethod>,
    pub ks: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            classifiers: ClassifierKind::ALL.to_vec(),
            selectors: RankingMethod::ALL.to_vec(),
            ks: default_ks(),
        }
    }
}

impl GridSpec {
    pub fn n_cells(&self) -> usize {
        self.classifiers.len() * self.selectors.len() * self.ks.len()
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.classifiers.is_empty() || self.selectors.is_empty() || self.ks.is_empty() {
            return Err(Error::BadConfig("grid has an empty axis".into()));
        }
        if let Some(&k) = self.ks.iter().find(|&&k| k == 0 || k > d) {
            return Err(Error::BadK { k, max: d });
        }
        Ok(())
    }
}

/// Per-fold validation accuracies over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCube {
    pub grid: GridSpec,
    /// Held-out slice of each fold, sorted.
    pub folds: Vec<String>,
    /// Indexed `[classifier][selector][k][fold]`, row-major.
    pub fold_accuracy: Vec<f64>,
}

impl AccuracyCube {
    fn offset(&self, c: usize, s: usize, k: usize) -> usize {
        let g = &self.grid;
        ((c * g.selectors.len() + s) * g.ks.len() + k) * self.folds.len()
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    /// Fold accuracies of cell `(classifier, selector, k)` by axis index.
    pub fn folds_of(&self, c: usize, s: usize, k: usize) -> &[f64] {
        let o = self.offset(c, s, k);
        &self.fold_accuracy[o..o + self.folds.len()]
    }

    /// Unweighted mean over folds.
    pub fn mean(&self, c: usize, s: usize, k: usize) -> f64 {
        pairwise_sum(self.folds_of(c, s, k)) / self.folds.len() as f64
    }

    /// Mean accuracy per k for one classifier/selector pair.
    pub fn curve(&self, c: usize, s: usize) -> Vec<f64> {
        (0..self.grid.ks.len()).map(|k| self.mean(c, s, k)).collect()
    }
}

/// Standardized training and validation rows of one fold.
type FoldData = (Array2<f64>, Vec<u8>, Array2<f64>, Vec<u8>);

fn check_classes(y: &[u8], held_out: &str) -> Result<()> {
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::FoldDegenerate(held_out.to_string()));
    }
    Ok(())
}

fn accuracy(model: &Model, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<f64> {
    let p = model.predict_proba_rows(x)?;
    let correct = p
        .iter()
        .zip(y)
        .filter(|(&p, &t)| u8::from(p >= 0.5) == t)
        .count();
    Ok(correct as f64 / y.len() as f64)
}

/// Runs the leave-one-slice-out grid. Every fold fits its standardizer,
/// rankings and models on the other slices only; a ranking is computed once
/// per fold and selector and shared by all feature counts and classifiers.
pub fn loocv_grid(
    train_set: &FeatureMatrix,
    grid: &GridSpec,
    params: &ClassifierParams,
    sel: &SelectionConfig,
    seed: u64,
) -> Result<AccuracyCube> {
    grid.validate(train_set.ncols())?;
    let mut folds = train_set.slice_ids();
    folds.sort();
    if folds.len() < 2 {
        return Err(Error::DegenerateInput(
            "cross-validation needs at least two slices".into(),
        ));
    }
    let (nc, ns, nk) = (grid.classifiers.len(), grid.selectors.len(), grid.ks.len());

    // One unit per (fold, selector); each yields accuracies [classifier][k].
    let units: Vec<(usize, usize)> = (0..folds.len())
        .flat_map(|f| (0..ns).map(move |s| (f, s)))
        .collect();
    let prepared: Vec<FoldData> = folds
        .par_iter()
        .map(|held| {
            let tr = train_set.rows_where(|m| &m.slice_id != held);
            let va = train_set.rows_where(|m| &m.slice_id == held);
            let ytr: Vec<u8> = tr.iter().map(|&r| train_set.labels[r]).collect();
            let yva: Vec<u8> = va.iter().map(|&r| train_set.labels[r]).collect();
            check_classes(&ytr, held)?;
            let xtr = train_set.data.select(Axis(0), &tr);
            let xva = train_set.data.select(Axis(0), &va);
            let st = Standardizer::fit(xtr.view())?;
            Ok((st.transform(xtr.view())?, ytr, st.transform(xva.view())?, yva))
        })
        .collect::<Result<_>>()?;

    let results: Vec<Vec<f64>> = units
        .par_iter()
        .map(|&(f, s)| {
            let (xtr, ytr, xva, yva) = &prepared[f];
            let method = grid.selectors[s];
            let ranking = rank_features(xtr.view(), ytr, method, sel)?;
            let jobs: Vec<(usize, usize)> = (0..nc)
                .flat_map(|c| (0..nk).map(move |k| (c, k)))
                .collect();
            jobs.par_iter()
                .map(|&(c, k)| {
                    let kind = grid.classifiers[c];
                    let cols = &ranking.order[..grid.ks[k]];
                    let xs = xtr.select(Axis(1), cols);
                    let tag = format!("cv/{}/{}/{}/{}", folds[f], method, kind, grid.ks[k]);
                    let model = train(kind, xs.view(), ytr, params, sub_seed(seed, &tag))?;
                    accuracy(&model, xva.select(Axis(1), cols).view(), yva)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let nf = folds.len();
    let mut fold_accuracy = vec![0.0; nc * ns * nk * nf];
    for (u, &(f, s)) in units.iter().enumerate() {
        for c in 0..nc {
            for k in 0..nk {
                fold_accuracy[((c * ns + s) * nk + k) * nf + f] = results[u][c * nk + k];
            }
        }
    }
    Ok(AccuracyCube {
        grid: grid.clone(),
        folds,
        fold_accuracy,
    })
}

/// Smallest feature count whose accuracy lies within `mean +/- c * sd` of
/// the plateau, the accuracies at the largest half of the feature counts
/// (sample standard deviation). `ks` must be ascending.
pub fn plateau_select(ks: &[usize], curve: &[f64], c: f64) -> Result<usize> {
    if ks.is_empty() || ks.len() != curve.len() {
        return Err(Error::LengthMismatch(ks.len(), curve.len()));
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadConfig("feature counts must be ascending".into()));
    }
    let n = ks.len();
    let plateau = &curve[n - n.div_ceil(2)..];
    let m = plateau.iter().sum::<f64>() / plateau.len() as f64;
    let sd = if plateau.len() > 1 {
        (plateau.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (plateau.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    // Slack for accuracies that are exact fractions compared against a
    // computed bound.
    let eps = 1e-12;
    let (lo, hi) = (m - c * sd - eps, m + c * sd + eps);
    Ok(ks
        .iter()
        .zip(curve)
        .find(|(_, &a)| a >= lo && a <= hi)
        .map(|(&k, _)| k)
        .unwrap_or(ks[n - 1]))
}

/// The grid winner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub classifier: ClassifierKind,
    pub selector: RankingMethod,
    pub k: usize,
    /// Mean validation accuracy of the winning cell at `k`.
    pub mean_accuracy: f64,
}

/// The classifier/selector pair owning the best cell (ties: fewer features,
/// then grid order of classifiers, then of selectors), with its feature
/// count chosen by [`plateau_select`] on that pair's curve.
pub fn choose_hyperparameters(cube: &AccuracyCube, plateau_c: f64) -> Result<Selection> {
    let g = &cube.grid;
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for k in 0..g.ks.len() {
        for c in 0..g.classifiers.len() {
            for s in 0..g.selectors.len() {
                let m = cube.mean(c, s, k);
                if best.is_none_or(|(b, ..)| m > b) {
                    best = Some((m, k, c, s));
                }
            }
        }
    }
    let (_, _, c, s) = best.ok_or_else(|| Error::DegenerateInput("empty grid".into()))?;
    let mut order: Vec<usize> = (0..g.ks.len()).collect();
    order.sort_by_key(|&i| g.ks[i]);
    let ks: Vec<usize> = order.iter().map(|&i| g.ks[i]).collect();
    let curve: Vec<f64> = order.iter().map(|&i| cube.mean(c, s, i)).collect();
    let k = plateau_select(&ks, &curve, plateau_c)?;
    let ki = g.ks.iter().position(|&x| x == k).unwrap();
    Ok(Selection {
        classifier: g.classifiers[c],
        selector: g.selectors[s],
        k,
        mean_accuracy: cube.mean(c, s, ki),
    })
}

/// Standardizer, selected features and classifier fitted on one training
/// set. Applied to raw (unstandardized) feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPipeline {
    pub n_features: usize,
    pub selector: RankingMethod,
    /// Top of the ranking, best first.
    pub selected: Vec<usize>,
    /// Standardizer restricted to `selected`.
    pub standardizer: Standardizer,
    pub model: Model,
    pub seed: u64,
    pub config_hash: String,
}

/// Fits standardizer, ranking and model on all of `train_set`.
pub fn fit_final(
    train_set: &FeatureMatrix,
    kind: ClassifierKind,
    selector: RankingMethod,
    k: usize,
    params: &ClassifierParams,
    sel: &SelectionConfig,
    seed: u64,
) -> Result<TrainedPipeline> {
    let d = train_set.ncols();
    if k == 0 || k > d {
        return Err(Error::BadK { k, max: d });
    }
    let st = Standardizer::fit(train_set.data.view())?;
    let z = st.transform(train_set.data.view())?;
    let ranking = rank_features(z.view(), &train_set.labels, selector, sel)?;
    let selected = ranking.order[..k].to_vec();
    let xs = z.select(Axis(1), &selected);
    let model = train(
        kind,
        xs.view(),
        &train_set.labels,
        params,
        sub_seed(seed, &format!("final/{selector}/{kind}/{k}")),
    )?;
    Ok(TrainedPipeline {
        n_features: d,
        selector,
        standardizer: st.subset(&selected),
        selected,
        model,
        seed,
        config_hash: String::new(),
    })
}

/// Fits the pipeline of one cross-validation fold: everything except the
/// rows of `held_out`.
#[allow(clippy::too_many_arguments)]
pub fn fit_fold(
    train_set: &FeatureMatrix,
    held_out: &str,
    kind: ClassifierKind,
    selector: RankingMethod,
    k: usize,
    params: &ClassifierParams,
    sel: &SelectionConfig,
    seed: u64,
) -> Result<TrainedPipeline> {
    let rows = train_set.rows_where(|m| m.slice_id != held_out);
    let sub = train_set.select_rows(&rows);
    check_classes(&sub.labels, held_out)?;
    fit_final(&sub, kind, selector, k, params, sel, seed)
}

const MAGIC: &[u8; 4] = b"OPTX";
const VERSION: u16 = 1;

impl TrainedPipeline {
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let picked: Vec<f64> = self.selected.iter().map(|&j| row[j]).collect();
        self.model
            .predict_proba(&self.standardizer.transform_row(&picked)?)
    }

    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        Ok(u8::from(self.predict_proba(row)? >= 0.5))
    }

    pub fn predict_proba_rows(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        x.outer_iter()
            .map(|r| self.predict_proba(&r.to_vec()))
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::default();
        e.buf.extend_from_slice(MAGIC);
        e.u16(VERSION);
        e.u8(self.model.kind().tag());
        e.u8(self.selector.tag());
        e.u64(self.seed);
        e.bytes(self.config_hash.as_bytes());
        e.u32(self.n_features);
        self.standardizer.encode(&mut e);
        e.u32(self.selected.len());
        self.selected.iter().for_each(|&i| e.u32(i));
        self.model.encode(&mut e);
        let crc = crc32fast::hash(&e.buf);
        e.buf.extend_from_slice(&crc.to_le_bytes());
        e.buf
    }

    pub fn from_bytes(bytes: &[u8], path: &str) -> Result<Self> {
        if bytes.len() < 4 + 2 + 4 {
            return Err(Error::format(path, "file too short"));
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
            return Err(Error::format(path, "checksum mismatch"));
        }
        if &body[..4] != MAGIC {
            return Err(Error::format(path, "not a model file"));
        }
        let mut d = Decoder::new(&body[4..], path);
        let version = d.u16()?;
        if version != VERSION {
            return Err(d.bad(format!("unsupported version {version}")));
        }
        let kind_tag = d.u8()?;
        let sel_tag = d.u8()?;
        let selector =
            RankingMethod::from_tag(sel_tag).ok_or_else(|| d.bad("unknown ranking method"))?;
        let seed = d.u64()?;
        let config_hash =
            String::from_utf8(d.bytes()?).map_err(|_| d.bad("config hash is not UTF-8"))?;
        let n_features = d.u32()?;
        let standardizer = Standardizer::decode(&mut d)?;
        let k = d.u32()?;
        if k != standardizer.dim() || k > n_features {
            return Err(d.bad("selected-feature block is inconsistent"));
        }
        let selected = (0..k).map(|_| d.u32()).collect::<Result<Vec<_>>>()?;
        if selected.iter().any(|&i| i >= n_features) {
            return Err(d.bad("selected feature index out of range"));
        }
        let model = Model::decode(&mut d)?;
        if model.kind().tag() != kind_tag || model.dim() != k {
            return Err(d.bad("model block disagrees with header"));
        }
        if !d.buf.is_empty() {
            return Err(d.bad("trailing bytes"));
        }
        Ok(Self {
            n_features,
            selector,
            selected,
            standardizer,
            model,
            seed,
            config_hash,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }
}
