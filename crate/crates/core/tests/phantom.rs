use std::sync::OnceLock;

use ndarray::Array2;
use optomx::imaging::{standardize, DoseGroup, Label, LabeledSlice};
use optomx::phantom::{generate_study, region_mean, PhantomConfig};
use optomx::sampling::{partition_slices, SliceKey};

fn study() -> &'static [LabeledSlice<f64>] {
    static S: OnceLock<Vec<LabeledSlice<f64>>> = OnceLock::new();
    S.get_or_init(|| generate_study(&PhantomConfig::default()).unwrap())
}

/// Mean 5x5 window variance over windows lying wholly inside `label`.
fn local_variance(img: &Array2<f64>, labels: &Array2<Label>, label: Label) -> f64 {
    let (h, w) = img.dim();
    let (mut sum, mut n) = (0.0, 0usize);
    for r in 0..h - 4 {
        for c in 0..w - 4 {
            let win = img.slice(ndarray::s![r..r + 5, c..c + 5]);
            if labels.slice(ndarray::s![r..r + 5, c..c + 5]).iter().any(|&l| l != label) {
                continue;
            }
            let m = win.sum() / 25.0;
            sum += win.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 24.0;
            n += 1;
        }
    }
    sum / n as f64
}

#[test]
fn default_study_has_eight_slices_per_group() {
    let s = study();
    assert_eq!(s.len(), 24);
    for g in DoseGroup::ALL {
        assert_eq!(s.iter().filter(|x| x.dose_group == g).count(), 8);
    }
    for x in s {
        assert_eq!(x.image.shape(), (256, 256));
        for l in [Label::Background, Label::Normal, Label::Tumor, Label::Calibration] {
            assert!(x.labels.iter().any(|&v| v == l), "{} lacks {l:?}", x.slice_id);
        }
        assert!(x.image.values().iter().all(|v| v.is_finite() && *v >= 0.0));
    }
    let mut ids: Vec<&str> = s.iter().map(|x| x.slice_id.as_str()).collect();
    ids.dedup();
    assert_eq!(ids.len(), 24);
}

#[test]
fn tumor_to_background_ratio_without_noise() {
    let cfg = PhantomConfig {
        noise_sd: 0.0,
        patients: 3,
        slices_per_patient: 2,
        ..PhantomConfig::default()
    };
    for x in generate_study(&cfg).unwrap() {
        let t = region_mean(&x, Label::Tumor).unwrap();
        let b = region_mean(&x, Label::Background).unwrap();
        assert!(t / b >= 10.0 - 1e-9, "{}: {}", x.slice_id, t / b);
    }
}

#[test]
fn tumor_texture_is_rougher_than_normal() {
    for x in study() {
        let z = standardize(x).unwrap();
        let v = z.image.values().to_owned();
        let ratio = local_variance(&v, &x.labels, Label::Tumor) / local_variance(&v, &x.labels, Label::Normal);
        assert!(ratio >= 4.0, "{}: {ratio}", x.slice_id);
    }
}

#[test]
fn standardization_removes_dose_brightness() {
    let s = study();
    let raw: Vec<f64> = DoseGroup::ALL
        .iter()
        .map(|&g| {
            let v: Vec<f64> = s
                .iter()
                .filter(|x| x.dose_group == g)
                .map(|x| region_mean(x, Label::Tumor).unwrap())
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    assert!(raw[2] / raw[0] > 3.0, "raw groups should differ: {raw:?}");

    let means: Vec<f64> = DoseGroup::ALL
        .iter()
        .map(|&g| {
            let v: Vec<f64> = s
                .iter()
                .filter(|x| x.dose_group == g)
                .map(|x| region_mean(&standardize(x).unwrap(), Label::Tumor).unwrap())
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    let spread = means.iter().cloned().fold(f64::MIN, f64::max) - means.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 0.05, "{means:?}");
}

#[test]
fn partition_is_eighteen_six_and_stratified() {
    let keys: Vec<SliceKey> = study()
        .iter()
        .map(|x| SliceKey {
            slice_id: x.slice_id.clone(),
            dose_group: x.dose_group,
        })
        .collect();
    let p = partition_slices(&keys, 0.75, 2023).unwrap();
    assert_eq!((p.train_slices.len(), p.test_slices.len()), (18, 6));
    for g in DoseGroup::ALL {
        let test = keys
            .iter()
            .filter(|k| k.dose_group == g && !p.is_train(&k.slice_id))
            .count();
        assert_eq!(test, 2);
    }
    assert_eq!(p, partition_slices(&keys, 0.75, 2023).unwrap());
}

#[test]
fn same_seed_same_images() {
    let cfg = PhantomConfig {
        patients: 3,
        slices_per_patient: 1,
        size: 96,
        ..PhantomConfig::default()
    };
    let a = generate_study(&cfg).unwrap();
    let b = generate_study(&cfg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let bx: Vec<u64> = x.image.values().iter().map(|v| v.to_bits()).collect();
        let by: Vec<u64> = y.image.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bx, by);
        assert_eq!(x.labels, y.labels);
    }
    let c = generate_study(&PhantomConfig { seed: 1, ..cfg }).unwrap();
    assert_ne!(a[0].image.values(), c[0].image.values());
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        PhantomConfig { target_sbr: 0.5, ..Default::default() },
        PhantomConfig { noise_sd: -1.0, ..Default::default() },
        PhantomConfig { patients: 2, ..Default::default() },
        PhantomConfig { size: 32, ..Default::default() },
    ] {
        assert!(matches!(generate_study(&cfg), Err(optomx::Error::BadConfig(_))));
    }
}
