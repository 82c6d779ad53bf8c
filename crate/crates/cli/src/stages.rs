//! Pipeline stages. Each stage reads its inputs from the output directory and
//! writes its artifacts there, stamped with the config hash.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use optomx::features::{feature_names, optomic_values, RowMeta};
use optomx::filterbank::bank_with_sigmas;
use optomx::imaging::{standardize, DoseGroup, Label, LabeledSlice};
use optomx::io;
use optomx::model_selection::{choose_hyperparameters, fit_final, loocv_grid, AccuracyCube, Selection};
use optomx::probmap::{biharmonic_eval, biharmonic_fit, fuse_scales, render_heatmap};
use optomx::sampling::{allocate_budget, eligible_centers, extract_patch, partition_slices, patch_side_px, sample_centers, SliceKey};
use optomx::stats::{build_report, SliceComparison};
use optomx::thresholding::{classify_pixels, optimal_cutoff, pooled_tissue_pixels, roc_curve, ConfusionMatrix};
use optomx::{ClassifierKind, Error, FeatureMatrix, RankingMethod, Result, TrainedPipeline};
use rayon::prelude::*;

use crate::config::{size_tag, RunConfig};

/// A failed stage and its cause.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

pub type StageResult<T> = std::result::Result<T, StageError>;

pub(crate) trait Context<T> {
    fn stage(self, stage: &'static str) -> StageResult<T>;
}

impl<T> Context<T> for Result<T> {
    fn stage(self, stage: &'static str) -> StageResult<T> {
        self.map_err(|source| StageError { stage, source })
    }
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub hash: String,
    pub out: PathBuf,
}

fn log(stage: &str, msg: impl AsRef<str>) {
    eprintln!("[{stage}] {}", msg.as_ref());
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::Io {
        path: p.display().to_string(),
        source: e,
    })
}

fn bad_row(path: &Path, line: usize, what: &str) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: format!("line {line}: {what}"),
    }
}

/// Parses a stamped CSV: checks the hash and header, returns the rows split
/// on commas.
fn read_table(path: &Path, hash: &str, header: &str) -> Result<Vec<Vec<String>>> {
    let body = io::read_stamped(path, hash)?;
    let mut lines = body.lines();
    if lines.next() != Some(header) {
        return Err(bad_row(path, 2, &format!("expected header {header}")));
    }
    let width = header.split(',').count();
    lines
        .enumerate()
        .map(|(i, l)| {
            let cols: Vec<String> = l.split(',').map(str::to_string).collect();
            if cols.len() != width {
                return Err(bad_row(path, i + 3, "wrong column count"));
            }
            Ok(cols)
        })
        .collect()
}

fn parse<T: std::str::FromStr>(path: &Path, s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Format {
        path: path.display().to_string(),
        reason: format!("bad {what}: {s:?}"),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Self {
        let hash = cfg.hash();
        let out = cfg.out();
        Self { cfg, hash, out }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn features_path(&self, size: f64) -> PathBuf {
        self.path(&format!("features_{}.csv", size_tag(size)))
    }

    fn model_path(&self, size: f64) -> PathBuf {
        self.path(&format!("model_{}.optx", size_tag(size)))
    }

    fn predictions_path(&self, size: f64) -> PathBuf {
        self.path(&format!("predictions_{}.csv", size_tag(size)))
    }

    // ---- phantom -------------------------------------------------------

    pub fn phantom(&self) -> StageResult<PathBuf> {
        const S: &str = "phantom";
        let pc = self.cfg.phantom().stage(S)?;
        log(S, format!("generating {} slices", pc.n_slices()));
        let slices = optomx::phantom::generate_study(&pc).stage(S)?;
        let dir = self.cfg.manifest_path();
        let dir = dir.parent().unwrap_or(Path::new("."));
        mkdir(dir).stage(S)?;
        let manifest = io::write_study(dir, &slices).stage(S)?;
        let body = fs::read_to_string(&manifest).map_err(|e| Error::Io {
            path: manifest.display().to_string(),
            source: e,
        });
        io::write_stamped(&manifest, &self.hash, &body.stage(S)?).stage(S)?;
        log(S, format!("wrote {}", manifest.display()));
        Ok(manifest)
    }

    // ---- preprocess ----------------------------------------------------

    pub fn preprocess(&self) -> StageResult<()> {
        let manifest = self.cfg.manifest_path();
        log("ingest", format!("reading {}", manifest.display()));
        let raw = io::load_study(&manifest).stage("ingest")?;
        const S: &str = "preprocess";
        let dir = self.path("standardized");
        mkdir(&dir).stage(S)?;
        let std: Vec<LabeledSlice<f64>> = raw
            .par_iter()
            .map(standardize)
            .collect::<Result<_>>()
            .stage(S)?;
        let mut index = String::from("slice_id,patient_id,dose_group\n");
        for s in &std {
            io::write_slice(&dir.join(format!("{}.opsi", s.slice_id)), s, &self.hash).stage(S)?;
            writeln!(index, "{},{},{}", s.slice_id, s.patient_id, s.dose_group.index()).unwrap();
        }
        io::write_stamped(&dir.join("index.csv"), &self.hash, &index).stage(S)?;
        log(S, format!("standardized {} slices", std.len()));
        Ok(())
    }

    fn slice_index(&self) -> Result<Vec<(String, String, DoseGroup)>> {
        let path = self.path("standardized").join("index.csv");
        read_table(&path, &self.hash, "slice_id,patient_id,dose_group")?
            .into_iter()
            .map(|r| {
                let g: u8 = parse(&path, &r[2], "dose_group")?;
                let g = DoseGroup::from_index(g).ok_or_else(|| bad_row(&path, 0, "dose_group"))?;
                Ok((r[0].clone(), r[1].clone(), g))
            })
            .collect()
    }

    fn load_slices(&self, ids: &[String]) -> Result<Vec<LabeledSlice<f64>>> {
        let dir = self.path("standardized");
        ids.par_iter()
            .map(|id| io::read_slice(&dir.join(format!("{id}.opsi")), &self.hash))
            .collect()
    }

    // ---- partition -----------------------------------------------------

    pub fn partition(&self) -> StageResult<()> {
        const S: &str = "partition";
        let keys: Vec<SliceKey> = self
            .slice_index()
            .stage(S)?
            .into_iter()
            .map(|(slice_id, _, dose_group)| SliceKey { slice_id, dose_group })
            .collect();
        let part = partition_slices(&keys, self.cfg.train_fraction, self.cfg.seed).stage(S)?;
        let mut body = String::from("slice_id,set\n");
        for id in &part.train_slices {
            writeln!(body, "{id},train").unwrap();
        }
        for id in &part.test_slices {
            writeln!(body, "{id},test").unwrap();
        }
        io::write_stamped(&self.path("partition.csv"), &self.hash, &body).stage(S)?;
        log(
            S,
            format!("{} train / {} test slices", part.train_slices.len(), part.test_slices.len()),
        );
        Ok(())
    }

    /// `(train, test)` slice ids, sorted.
    fn read_partition(&self) -> Result<(Vec<String>, Vec<String>)> {
        let path = self.path("partition.csv");
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for r in read_table(&path, &self.hash, "slice_id,set")? {
            match r[1].as_str() {
                "train" => train.push(r[0].clone()),
                "test" => test.push(r[0].clone()),
                other => return Err(bad_row(&path, 0, &format!("unknown set {other:?}"))),
            }
        }
        Ok((train, test))
    }

    // ---- sample --------------------------------------------------------

    /// One center list per slice, shared by every patch size: centers are
    /// drawn among pixels eligible for the largest size.
    pub fn sample(&self) -> StageResult<()> {
        const S: &str = "sample";
        let (train, test) = self.read_partition().stage(S)?;
        let max_size = self.cfg.patch_sizes_mm.iter().copied().fold(0.0, f64::max);
        let mut jobs: Vec<(String, &str, usize)> = Vec::new();
        jobs.extend(train.iter().map(|id| (id.clone(), "train", self.cfg.train_patches_per_slice)));
        jobs.extend(test.iter().map(|id| (id.clone(), "test", self.cfg.test_patches_per_slice)));
        let ids: Vec<String> = jobs.iter().map(|j| j.0.clone()).collect();
        let slices = self.load_slices(&ids).stage(S)?;
        let rows: Vec<String> = jobs
            .par_iter()
            .zip(&slices)
            .map(|((id, set, budget), s)| {
                let side = patch_side_px(max_size, s.image.pixel_pitch());
                let n_area = eligible_centers(&s.labels, Label::Normal, side).len();
                let t_area = eligible_centers(&s.labels, Label::Tumor, side).len();
                let (n_norm, n_tum) = allocate_budget(n_area, t_area, *budget);
                let mut centers = Vec::new();
                for (label, count, y) in [(Label::Normal, n_norm, 0u8), (Label::Tumor, n_tum, 1u8)] {
                    if count > 0 {
                        for c in sample_centers(s, label, side, count, self.cfg.seed)? {
                            centers.push((c, y));
                        }
                    }
                }
                let mut out = String::new();
                for (i, ((r, c), y)) in centers.into_iter().enumerate() {
                    writeln!(out, "{id},{set},{i},{r},{c},{y}").unwrap();
                }
                Ok(out)
            })
            .collect::<Result<_>>()
            .stage(S)?;
        let mut body = String::from("slice_id,set,patch_id,center_row,center_col,label\n");
        rows.iter().for_each(|r| body.push_str(r));
        io::write_stamped(&self.path("patches.csv"), &self.hash, &body).stage(S)?;
        log(S, format!("sampled {} patch centers", body.lines().count() - 1));
        Ok(())
    }

    fn read_patches(&self) -> Result<Vec<PatchRow>> {
        let path = self.path("patches.csv");
        read_table(&path, &self.hash, "slice_id,set,patch_id,center_row,center_col,label")?
            .into_iter()
            .map(|r| {
                Ok(PatchRow {
                    slice_id: r[0].clone(),
                    patch_id: parse(&path, &r[2], "patch_id")?,
                    center: (parse(&path, &r[3], "center_row")?, parse(&path, &r[4], "center_col")?),
                    label: parse(&path, &r[5], "label")?,
                })
            })
            .collect()
    }

    // ---- extract -------------------------------------------------------

    pub fn extract(&self) -> StageResult<()> {
        const S: &str = "extract";
        let patches = self.read_patches().stage(S)?;
        let index = self.slice_index().stage(S)?;
        let mut ids: Vec<String> = patches.iter().map(|p| p.slice_id.clone()).collect();
        ids.dedup();
        let slices = self.load_slices(&ids).stage(S)?;
        let by_id: BTreeMap<&str, &LabeledSlice<f64>> =
            slices.iter().map(|s| (s.slice_id.as_str(), s)).collect();
        let bank = bank_with_sigmas(&self.cfg.log_sigmas_mm);
        let names = feature_names(&bank);
        for &size in &self.cfg.patch_sizes_mm {
            let rows: Vec<Vec<f64>> = patches
                .par_iter()
                .map(|p| {
                    let s = by_id.get(p.slice_id.as_str()).ok_or_else(|| {
                        Error::DegenerateInput(format!("unknown slice {}", p.slice_id))
                    })?;
                    let pitch = s.image.pixel_pitch();
                    let patch = extract_patch(s, p.center, patch_side_px(size, pitch))?;
                    optomic_values(patch.view(), &bank, self.cfg.gray_levels, pitch)
                })
                .collect::<Result<_>>()
                .stage(S)?;
            let mut data = Array2::zeros((rows.len(), names.len()));
            for (mut dst, src) in data.axis_iter_mut(Axis(0)).zip(&rows) {
                dst.assign(&ndarray::ArrayView1::from(src.as_slice()));
            }
            let meta = patches
                .iter()
                .map(|p| {
                    let (_, patient, group) = index
                        .iter()
                        .find(|e| e.0 == p.slice_id)
                        .ok_or_else(|| Error::DegenerateInput(format!("slice {} not in index", p.slice_id)))?;
                    Ok(RowMeta {
                        slice_id: p.slice_id.clone(),
                        patient_id: patient.clone(),
                        dose_group: group.index(),
                        patch_id: p.patch_id,
                        center_row: p.center.0,
                        center_col: p.center.1,
                        size_mm: size,
                    })
                })
                .collect::<Result<_>>()
                .stage(S)?;
            let labels = patches.iter().map(|p| p.label).collect();
            let m = FeatureMatrix::new(names.clone(), data, labels, meta).stage(S)?;
            io::write_features(&self.features_path(size), &m, &self.hash).stage(S)?;
            log(S, format!("{} mm: {} patches x {} features", size_tag(size), m.nrows(), m.ncols()));
        }
        Ok(())
    }

    /// Rows of the feature table for `size` restricted to one side of the
    /// partition.
    fn feature_split(&self, size: f64, train: bool) -> Result<FeatureMatrix> {
        let m = io::read_features(&self.features_path(size), &self.hash)?;
        let (tr, te) = self.read_partition()?;
        let ids = if train { tr } else { te };
        let rows = m.rows_where(|r| ids.contains(&r.slice_id));
        Ok(m.select_rows(&rows))
    }

    // ---- cv ------------------------------------------------------------

    pub fn cv(&self) -> StageResult<()> {
        const S: &str = "cv";
        let grid = self.cfg.grid().stage(S)?;
        let train = self.feature_split(self.cfg.primary_patch_mm, true).stage(S)?;
        log(
            S,
            format!("{} cells x {} folds on {} patches", grid.n_cells(), train.slice_ids().len(), train.nrows()),
        );
        let cube = loocv_grid(
            &train,
            &grid,
            &self.cfg.classifier_params(),
            &self.cfg.selection(),
            self.cfg.seed,
        )
        .stage(S)?;
        self.write_cube(&cube).stage(S)?;
        let sel = choose_hyperparameters(&cube, self.cfg.plateau_c).stage(S)?;
        let body = format!(
            "classifier={}\nselector={}\nk={}\nmean_accuracy={:?}\n",
            sel.classifier, sel.selector, sel.k, sel.mean_accuracy
        );
        io::write_stamped(&self.path("selection.txt"), &self.hash, &body).stage(S)?;
        log(
            S,
            format!("selected {} + {} with k = {} (mean accuracy {:.4})", sel.classifier, sel.selector, sel.k, sel.mean_accuracy),
        );
        Ok(())
    }

    fn write_cube(&self, cube: &AccuracyCube) -> Result<()> {
        let g = &cube.grid;
        let mut folds = String::from("classifier,selector,k,fold,accuracy\n");
        let mut summary = String::from("classifier,selector,k,mean_accuracy,sd_accuracy\n");
        for (c, kind) in g.classifiers.iter().enumerate() {
            for (s, sel) in g.selectors.iter().enumerate() {
                for (ki, k) in g.ks.iter().enumerate() {
                    let acc = cube.folds_of(c, s, ki);
                    for (f, a) in cube.folds.iter().zip(acc) {
                        writeln!(folds, "{kind},{sel},{k},{f},{a:?}").unwrap();
                    }
                    let mean = cube.mean(c, s, ki);
                    let sd = if acc.len() > 1 {
                        (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (acc.len() - 1) as f64).sqrt()
                    } else {
                        0.0
                    };
                    writeln!(summary, "{kind},{sel},{k},{mean:?},{sd:?}").unwrap();
                }
            }
        }
        io::write_stamped(&self.path("cv_folds.csv"), &self.hash, &folds)?;
        io::write_stamped(&self.path("cv_summary.csv"), &self.hash, &summary)
    }

    fn read_selection(&self) -> Result<Selection> {
        let path = self.path("selection.txt");
        let body = io::read_stamped(&path, &self.hash)?;
        let kv: BTreeMap<&str, &str> = body.lines().filter_map(|l| l.split_once('=')).collect();
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad_row(&path, 0, &format!("missing {k}")));
        Ok(Selection {
            classifier: ClassifierKind::from_name(get("classifier")?)
                .ok_or_else(|| bad_row(&path, 0, "classifier"))?,
            selector: RankingMethod::from_name(get("selector")?).ok_or_else(|| bad_row(&path, 0, "selector"))?,
            k: parse(&path, get("k")?, "k")?,
            mean_accuracy: parse(&path, get("mean_accuracy")?, "mean_accuracy")?,
        })
    }

    // ---- train ---------------------------------------------------------

    /// Fits one pipeline per patch size with the selected hyperparameters.
    pub fn train(&self) -> StageResult<()> {
        const S: &str = "train";
        let sel = self.read_selection().stage(S)?;
        for &size in &self.cfg.patch_sizes_mm {
            let train = self.feature_split(size, true).stage(S)?;
            let mut p = fit_final(
                &train,
                sel.classifier,
                sel.selector,
                sel.k,
                &self.cfg.classifier_params(),
                &self.cfg.selection(),
                self.cfg.seed,
            )
            .stage(S)?;
            p.config_hash = self.hash.clone();
            p.save(&self.model_path(size)).stage(S)?;
            log(S, format!("{} mm: fitted on {} patches", size_tag(size), train.nrows()));
        }
        Ok(())
    }

    fn load_model(&self, size: f64) -> Result<TrainedPipeline> {
        let path = self.model_path(size);
        let p = TrainedPipeline::load(&path)?;
        io::check_hash(&path, &p.config_hash, &self.hash)?;
        Ok(p)
    }

    // ---- eval-threshold ------------------------------------------------

    pub fn eval_threshold(&self) -> StageResult<()> {
        const S: &str = "eval-threshold";
        let (train, test) = self.read_partition().stage(S)?;
        let tr = self.load_slices(&train).stage(S)?;
        let refs: Vec<&LabeledSlice<f64>> = tr.iter().collect();
        let (values, labels) = pooled_tissue_pixels(&refs);
        let roc = roc_curve(&values, &labels).stage(S)?;
        let ocp = optimal_cutoff(&roc);
        let mut roc_body = String::from("threshold,tpr,fpr,accuracy\n");
        for j in 0..roc.thresholds.len() {
            writeln!(
                roc_body,
                "{:?},{:?},{:?},{:?}",
                roc.thresholds[j], roc.tpr[j], roc.fpr[j], roc.accuracy[j]
            )
            .unwrap();
        }
        io::write_stamped(&self.path("roc.csv"), &self.hash, &roc_body).stage(S)?;

        let dir = self.path("threshold_masks");
        mkdir(&dir).stage(S)?;
        let te = self.load_slices(&test).stage(S)?;
        let mut body = format!("{METRICS_HEADER}\n");
        for s in &te {
            let (mask, cm) = classify_pixels(s, ocp);
            io::write_mask(&dir.join(format!("{}.png", s.slice_id)), &mask, &self.hash).stage(S)?;
            writeln!(body, "{}", metrics_row(&s.slice_id, ocp, &cm).stage(S)?).unwrap();
        }
        io::write_stamped(&self.path("threshold_metrics.csv"), &self.hash, &body).stage(S)?;
        log(S, format!("OCP = {ocp:.6} on {} training pixels", values.len()));
        Ok(())
    }

    // ---- eval-optomics -------------------------------------------------

    pub fn eval_optomics(&self) -> StageResult<()> {
        const S: &str = "eval-optomics";
        let mut body = format!("{METRICS_HEADER}\n");
        for &size in &self.cfg.patch_sizes_mm {
            let model = self.load_model(size).stage(S)?;
            let test = self.feature_split(size, false).stage(S)?;
            let proba = model.predict_proba_rows(test.data.view()).stage(S)?;
            let mut pred = String::from("slice_id,patch_id,center_row,center_col,label,probability,prediction\n");
            let mut per_slice: BTreeMap<&str, ConfusionMatrix> = BTreeMap::new();
            for (i, m) in test.meta.iter().enumerate() {
                let yhat = u8::from(proba[i] >= 0.5);
                writeln!(
                    pred,
                    "{},{},{},{},{},{:?},{}",
                    m.slice_id, m.patch_id, m.center_row, m.center_col, test.labels[i], proba[i], yhat
                )
                .unwrap();
                per_slice.entry(&m.slice_id).or_default().add(test.labels[i], yhat);
            }
            io::write_stamped(&self.predictions_path(size), &self.hash, &pred).stage(S)?;
            for (id, cm) in &per_slice {
                writeln!(body, "{}", metrics_row(id, size, cm).stage(S)?).unwrap();
            }
            log(S, format!("{} mm: scored {} test patches", size_tag(size), test.nrows()));
        }
        io::write_stamped(&self.path("optomics_metrics.csv"), &self.hash, &body).stage(S)?;
        Ok(())
    }

    fn read_predictions(&self, size: f64) -> Result<Vec<Prediction>> {
        let path = self.predictions_path(size);
        read_table(
            &path,
            &self.hash,
            "slice_id,patch_id,center_row,center_col,label,probability,prediction",
        )?
        .into_iter()
        .map(|r| {
            Ok((
                r[0].clone(),
                parse(&path, &r[1], "patch_id")?,
                (parse(&path, &r[2], "center_row")?, parse(&path, &r[3], "center_col")?),
                parse(&path, &r[5], "probability")?,
            ))
        })
        .collect()
    }

    // ---- probmap -------------------------------------------------------

    /// Pixel-level maps from the patch-center probabilities averaged over
    /// every patch size.
    pub fn probmap(&self) -> StageResult<()> {
        const S: &str = "probmap";
        let (_, test) = self.read_partition().stage(S)?;
        let preds: Vec<_> = self
            .cfg
            .patch_sizes_mm
            .iter()
            .map(|&s| self.read_predictions(s))
            .collect::<Result<_>>()
            .stage(S)?;
        let dir = self.path("probmaps");
        mkdir(&dir).stage(S)?;
        let slices = self.load_slices(&test).stage(S)?;
        let mut body = String::from("slice_id,centers,pixels,accuracy\n");
        for s in &slices {
            let scales: Vec<Vec<((usize, usize), f64)>> = preds
                .iter()
                .map(|p| {
                    p.iter()
                        .filter(|r| r.0 == s.slice_id)
                        .map(|r| (r.2, r.3))
                        .collect()
                })
                .collect();
            let fused = fuse_scales(&scales).stage(S)?;
            if fused.is_empty() {
                continue;
            }
            let centers: Vec<(f64, f64)> = fused.iter().map(|(c, _)| (c.0 as f64, c.1 as f64)).collect();
            let values: Vec<f64> = fused.iter().map(|f| f.1).collect();
            let model = biharmonic_fit(&centers, &values).stage(S)?;
            let map = biharmonic_eval(&model, &s.tissue_mask());
            io::write_probmap(&dir.join(format!("{}.opmp", s.slice_id)), &map, &self.hash).stage(S)?;
            let rgb = render_heatmap(&map, &s.image.values().to_owned()).stage(S)?;
            io::write_rgb(&dir.join(format!("{}.png", s.slice_id)), &rgb, &self.hash).stage(S)?;
            let mut cm = ConfusionMatrix::default();
            ndarray::Zip::from(&map.values).and(&s.labels).for_each(|&p, &l| {
                if l.is_tissue() {
                    cm.add(u8::from(l == Label::Tumor), u8::from(p >= 0.5));
                }
            });
            let acc = cm.metrics().stage(S)?.accuracy;
            writeln!(body, "{},{},{},{acc:?}", s.slice_id, centers.len(), cm.total()).unwrap();
        }
        io::write_stamped(&self.path("probmap_metrics.csv"), &self.hash, &body).stage(S)?;
        log(S, format!("rendered {} maps", slices.len()));
        Ok(())
    }

    // ---- report --------------------------------------------------------

    pub fn report(&self) -> StageResult<()> {
        const S: &str = "report";
        let thr = self.read_metrics("threshold_metrics.csv", None).stage(S)?;
        let opt = self
            .read_metrics("optomics_metrics.csv", Some(self.cfg.primary_patch_mm))
            .stage(S)?;
        let rows: Vec<SliceComparison> = thr
            .iter()
            .map(|(id, t)| {
                let o = opt
                    .iter()
                    .find(|(oid, _)| oid == id)
                    .map(|(_, a)| *a)
                    .ok_or_else(|| Error::MissingMetrics(format!("no optomics accuracy for slice {id}")))?;
                Ok(SliceComparison {
                    slice_id: id.clone(),
                    thresholding_accuracy: *t,
                    optomics_accuracy: o,
                })
            })
            .collect::<Result<_>>()
            .stage(S)?;
        let rep = build_report(&rows, &self.hash).stage(S)?;
        io::write_file(&self.path("report.txt"), rep.text.as_bytes()).stage(S)?;
        io::write_file(&self.path("report.csv"), rep.csv.as_bytes()).stage(S)?;
        print!("{}", rep.text);
        Ok(())
    }

    /// `(slice_id, accuracy)` rows; `size` filters the second column.
    fn read_metrics(&self, name: &str, size: Option<f64>) -> Result<Vec<(String, f64)>> {
        let path = self.path(name);
        let mut out = Vec::new();
        for r in read_table(&path, &self.hash, METRICS_HEADER)? {
            let param: f64 = parse(&path, &r[1], "parameter")?;
            if size.is_some_and(|s| s != param) {
                continue;
            }
            out.push((r[0].clone(), parse(&path, &r[2], "accuracy")?));
        }
        Ok(out)
    }

    // ---- run -----------------------------------------------------------

    pub fn run(&self) -> StageResult<()> {
        if self.cfg.manifest.is_empty() && !self.cfg.manifest_path().exists() {
            self.phantom()?;
        }
        self.preprocess()?;
        self.partition()?;
        self.sample()?;
        self.extract()?;
        self.cv()?;
        self.train()?;
        self.eval_threshold()?;
        self.eval_optomics()?;
        self.probmap()?;
        self.report()
    }
}

/// Second column: the OCP for thresholding, the patch size for optomics.
const METRICS_HEADER: &str = "slice_id,parameter,accuracy,sensitivity,specificity,fnr,fpr,tp,fp,tn,fn";

fn metrics_row(id: &str, param: f64, cm: &ConfusionMatrix) -> Result<String> {
    let m = cm.metrics()?;
    Ok(format!(
        "{id},{param:?},{:?},{},{},{},{},{},{},{},{}",
        m.accuracy,
        opt(m.sensitivity),
        opt(m.specificity),
        opt(m.fnr),
        opt(m.fpr),
        cm.tp,
        cm.fp,
        cm.tn,
        cm.fn_
    ))
}

/// `(slice_id, patch_id, center, probability)`.
type Prediction = (String, usize, (usize, usize), f64);

struct PatchRow {
    slice_id: String,
    patch_id: usize,
    center: (usize, usize),
    label: u8,
}
