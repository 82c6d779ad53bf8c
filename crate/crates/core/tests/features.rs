use std::collections::HashSet;

use ndarray::Array2;
use optomx::features::{feature_names, optomic_values, optomic_vector, FEATURES_PER_IMAGE};
use optomx::filterbank::default_bank;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn patch(side: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((side, side), |_| rng.random_range(0.0..1.0))
}

#[test]
fn counts_per_image_and_patch() {
    let bank = default_bank();
    assert_eq!(bank.len(), 15);
    assert_eq!(FEATURES_PER_IMAGE, 92);
    let names = feature_names(&bank);
    assert_eq!(names.len(), 1472);
    let v = optomic_vector(patch(21, 1).view(), &bank, 32, 0.042).unwrap();
    assert_eq!(v.values.len(), 1472);
    assert_eq!(v.names, names);
}

#[test]
fn names_are_unique_and_prefixed() {
    let names = feature_names(&default_bank());
    let set: HashSet<&String> = names.iter().collect();
    assert_eq!(set.len(), names.len());
    assert!(names[..92].iter().all(|n| n.starts_with("original_")));
    assert_eq!(names[0], "original_firstorder_Energy");
}

#[test]
fn constant_patch_is_finite() {
    let bank = default_bank();
    let v = optomic_values(Array2::from_elem((21, 21), 0.4f64).view(), &bank, 32, 0.042).unwrap();
    assert!(v.iter().all(|x| x.is_finite()));
}

#[test]
fn extraction_is_deterministic() {
    let bank = default_bank();
    let p = patch(33, 2);
    let a = optomic_values(p.view(), &bank, 32, 0.042).unwrap();
    let b = optomic_values(p.view(), &bank, 32, 0.042).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn single_precision_tracks_double() {
    let bank = default_bank();
    let p = patch(21, 3);
    let d = optomic_values(p.view(), &bank, 32, 0.042).unwrap();
    let s = optomic_values(p.mapv(|v| v as f32).view(), &bank, 32, 0.042f32).unwrap();
    // Quantization can move a handful of boundary pixels, so compare the
    // original-image first-order block where no binning is involved.
    for i in [3, 6, 7, 8, 13] {
        let rel = (d[i] - f64::from(s[i])).abs() / d[i].abs().max(1.0);
        assert!(rel < 1e-5, "feature {i}: {} vs {}", d[i], s[i]);
    }
}

#[test]
fn rejects_bad_patches() {
    let bank = default_bank();
    let mut p = patch(21, 4);
    p[[3, 3]] = f64::NAN;
    assert!(optomic_values(p.view(), &bank, 32, 0.042).is_err());
    assert!(optomic_values(patch(21, 4).view(), &bank, 1, 0.042).is_err());
}
