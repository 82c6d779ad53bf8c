use ndarray::Array2;
use optomx::classifiers::ClassifierParams;
use optomx::features::RowMeta;
use optomx::model_selection::{
    choose_hyperparameters, default_ks, fit_fold, fit_final, loocv_grid, plateau_select, GridSpec,
};
use optomx::selection::SelectionConfig;
use optomx::{ClassifierKind, FeatureMatrix, RankingMethod};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `slices` slices of `per` rows each; the first `informative` columns
/// carry the label signal, the rest are noise.
fn synthetic(slices: usize, per: usize, d: usize, informative: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = slices * per;
    let mut data = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut meta = Vec::with_capacity(n);
    for i in 0..n {
        let y = u8::from(i % 2 == 0);
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            let shift = if j < informative && y == 1 { 1.5 } else { 0.0 };
            data[[i, j]] = z + shift;
        }
        labels.push(y);
        meta.push(RowMeta {
            slice_id: format!("S{:02}", i / per),
            patient_id: format!("P{:02}", i / per / 2),
            dose_group: 1,
            patch_id: i % per,
            center_row: 0,
            center_col: 0,
            size_mm: 1.81,
        });
    }
    FeatureMatrix::new((0..d).map(|j| format!("f{j}")).collect(), data, labels, meta).unwrap()
}

fn small_grid() -> GridSpec {
    GridSpec {
        classifiers: vec![ClassifierKind::Svm, ClassifierKind::Knn],
        selectors: vec![RankingMethod::Mrmr, RankingMethod::Fscr],
        ks: vec![2, 4, 6, 8],
    }
}

#[test]
fn default_grid_has_980_cells() {
    let g = GridSpec::default();
    assert_eq!(g.n_cells(), 980);
    assert_eq!(g.ks, (1..=20).map(|i| 5 * i).collect::<Vec<_>>());
}

#[test]
fn one_fold_per_training_slice() {
    let fm = synthetic(18, 10, 10, 3, 1);
    let cube = loocv_grid(&fm, &small_grid(), &ClassifierParams::default(), &SelectionConfig::default(), 4)
        .unwrap();
    assert_eq!(cube.folds.len(), 18);
    assert_eq!(cube.n_cells(), 16);
    assert_eq!(cube.fold_accuracy.len(), 16 * 18);
    assert!(cube.fold_accuracy.iter().all(|a| (0.0..=1.0).contains(a)));
    // Fold accuracies on 10 rows are multiples of 0.1.
    for a in &cube.fold_accuracy {
        assert!((a * 10.0 - (a * 10.0).round()).abs() < 1e-9);
    }
    let sel = choose_hyperparameters(&cube, 1.5).unwrap();
    assert!(sel.mean_accuracy > 0.7, "{sel:?}");
}

#[test]
fn grid_is_deterministic_across_thread_counts() {
    let fm = synthetic(6, 12, 10, 3, 2);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                loocv_grid(&fm, &small_grid(), &ClassifierParams::default(), &SelectionConfig::default(), 9)
                    .unwrap()
            })
    };
    let a = run(1);
    let b = run(4);
    let bits = |c: &optomx::model_selection::AccuracyCube| {
        c.fold_accuracy.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn held_out_rows_never_reach_the_fold_model() {
    let fm = synthetic(6, 12, 10, 3, 3);
    let params = ClassifierParams::default();
    let sel = SelectionConfig::default();
    let fit = |m: &FeatureMatrix| {
        fit_fold(m, "S02", ClassifierKind::Svm, RankingMethod::Mrmr, 4, &params, &sel, 11)
            .unwrap()
            .to_bytes()
    };
    let base = fit(&fm);

    let mut held = fm.clone();
    for r in held.rows_where(|m| m.slice_id == "S02") {
        for v in held.data.row_mut(r) {
            *v = *v * 7.0 + 100.0;
        }
        held.labels[r] ^= 1;
    }
    assert_eq!(fit(&held), base);

    let mut trained = fm.clone();
    let r = trained.rows_where(|m| m.slice_id == "S03")[0];
    trained.data[[r, 0]] += 5.0;
    assert_ne!(fit(&trained), base);
}

#[test]
fn final_pipeline_keeps_k_features_and_is_reproducible() {
    let fm = synthetic(6, 12, 30, 5, 4);
    let params = ClassifierParams::default();
    let sel = SelectionConfig::default();
    let a = fit_final(&fm, ClassifierKind::Svm, RankingMethod::Mrmr, 25, &params, &sel, 1).unwrap();
    let b = fit_final(&fm, ClassifierKind::Svm, RankingMethod::Mrmr, 25, &params, &sel, 1).unwrap();
    assert_eq!(a.selected.len(), 25);
    assert_eq!(a.selected, b.selected);
    assert_eq!(a.to_bytes(), b.to_bytes());
    assert!(fit_final(&fm, ClassifierKind::Svm, RankingMethod::Mrmr, 31, &params, &sel, 1).is_err());
}

#[test]
fn fold_without_both_classes_is_reported() {
    let mut fm = synthetic(3, 4, 4, 2, 5);
    for r in fm.rows_where(|m| m.slice_id != "S00") {
        fm.labels[r] = 0;
    }
    let grid = GridSpec {
        classifiers: vec![ClassifierKind::Knn],
        selectors: vec![RankingMethod::Fscr],
        ks: vec![2],
    };
    let err = loocv_grid(&fm, &grid, &ClassifierParams::default(), &SelectionConfig::default(), 0);
    assert!(matches!(err, Err(optomx::Error::FoldDegenerate(s)) if s == "S00"));
}

#[test]
fn plateau_constant_and_rising_curves() {
    let ks = default_ks();
    assert_eq!(plateau_select(&ks, &[0.8; 20], 1.5).unwrap(), 5);
    let curve: Vec<f64> = ks
        .iter()
        .map(|&k| if k < 25 { 0.5 + 0.01 * k as f64 } else { 0.84 })
        .collect();
    assert_eq!(plateau_select(&ks, &curve, 1.5).unwrap(), 25);
}

#[test]
fn plateau_strictly_increasing_curve() {
    let ks = default_ks();
    // Plateau (k >= 55) symmetric about 0.9 with sample SD 0.01.
    let offsets: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
    let s = (offsets.iter().map(|o| o * o).sum::<f64>() / 9.0).sqrt();
    let mut curve: Vec<f64> = (0..10).map(|i| 0.80 + 0.008 * i as f64).collect();
    curve.extend(offsets.iter().map(|o| 0.9 + 0.01 * o / s));
    assert!(curve.windows(2).all(|w| w[0] < w[1]));

    let tail = &curve[10..];
    let mean = tail.iter().sum::<f64>() / 10.0;
    let sd = (tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
    assert!((mean - 0.9).abs() < 1e-12 && (sd - 0.01).abs() < 1e-12);
    let expected = ks[curve.iter().position(|&a| a >= 0.885).unwrap()];
    assert_eq!(plateau_select(&ks, &curve, 1.5).unwrap(), expected);
}

#[test]
fn plateau_rejects_bad_axes() {
    assert!(plateau_select(&[5, 10], &[0.5], 1.5).is_err());
    assert!(plateau_select(&[10, 5], &[0.5, 0.6], 1.5).is_err());
}
