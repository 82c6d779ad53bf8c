use ndarray::Array2;
use optomx::features::RowMeta;
use optomx::imaging::{DoseGroup, Image, Label, LabeledSlice};
use optomx::io::{
    load_study, read_features, read_probmap, read_rgb, read_slice, read_stamped, write_features,
    write_probmap, write_rgb, write_slice, write_stamped, write_study,
};
use optomx::probmap::ProbabilityMap;
use optomx::{Error, FeatureMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn features(seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d) = (12, 6);
    // Awkward magnitudes: subnormal-adjacent, huge, negative zero, thirds.
    let mut data = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0) / 3.0);
    data[[0, 0]] = 1e-300;
    data[[1, 1]] = 1.7e308;
    data[[2, 2]] = -0.0;
    data[[3, 3]] = 0.1 + 0.2;
    let meta = (0..n)
        .map(|i| RowMeta {
            slice_id: format!("P{:02}-S{}", i / 4 + 1, i % 2 + 1),
            patient_id: format!("P{:02}", i / 4 + 1),
            dose_group: (i % 3 + 1) as u8,
            patch_id: i,
            center_row: 21 + i,
            center_col: 100 - i,
            size_mm: [0.88, 1.39, 1.81][i % 3],
        })
        .collect();
    let labels = (0..n).map(|i| (i % 2) as u8).collect();
    FeatureMatrix::new((0..d).map(|j| format!("Orig_GLCM_f{j}")).collect(), data, labels, meta).unwrap()
}

fn slice() -> LabeledSlice<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let img = Array2::from_shape_fn((9, 7), |_| rng.random_range(0.0..1.0));
    let labels = Array2::from_shape_fn((9, 7), |(r, c)| Label::from_u8(((r + c) % 4) as u8).unwrap());
    LabeledSlice::new(Image::new(img, 0.042).unwrap(), labels, "P01-S2", "P01", DoseGroup::Mid).unwrap()
}

#[test]
fn feature_table_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let m = features(1);
    write_features(&path, &m, "h1").unwrap();
    let back = read_features(&path, "h1").unwrap();
    assert_eq!(back.names, m.names);
    assert_eq!(back.labels, m.labels);
    assert_eq!(back.meta, m.meta);
    let bits = |x: &FeatureMatrix| x.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&m));

    // Writing the read-back table gives the same bytes.
    let again = dir.path().join("g.csv");
    write_features(&again, &back, "h1").unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn mismatched_hash_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    write_features(&path, &features(2), "aaa").unwrap();
    assert!(matches!(
        read_features(&path, "bbb"),
        Err(Error::ConfigHashMismatch { found, expected, .. }) if found == "aaa" && expected == "bbb"
    ));

    let s = dir.path().join("s.opsi");
    write_slice(&s, &slice(), "aaa").unwrap();
    assert!(matches!(read_slice(&s, "bbb"), Err(Error::ConfigHashMismatch { .. })));

    let t = dir.path().join("t.csv");
    write_stamped(&t, "aaa", "x\n1\n").unwrap();
    assert_eq!(read_stamped(&t, "aaa").unwrap(), "x\n1\n");
    assert!(matches!(read_stamped(&t, "zzz"), Err(Error::ConfigHashMismatch { .. })));
    std::fs::write(&t, "x\n1\n").unwrap();
    assert!(read_stamped(&t, "aaa").is_err());
}

#[test]
fn standardized_slice_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.opsi");
    let s = slice();
    write_slice(&path, &s, "h").unwrap();
    let back = read_slice(&path, "h").unwrap();
    assert_eq!(back.image.values(), s.image.values());
    assert_eq!(back.image.pixel_pitch(), s.image.pixel_pitch());
    assert_eq!(back.labels, s.labels);
    assert_eq!((back.slice_id.as_str(), back.patient_id.as_str()), ("P01-S2", "P01"));
    assert_eq!(back.dose_group, DoseGroup::Mid);

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[40] ^= 1;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_slice(&path, "h"), Err(Error::Format { .. })));
}

#[test]
fn probability_map_round_trips_as_f32() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.opmp");
    let valid = Array2::from_shape_fn((5, 8), |(r, c)| (r + c) % 3 != 0);
    let values = Array2::from_shape_fn((5, 8), |(r, c)| {
        if valid[[r, c]] {
            (r * 8 + c) as f64 / 40.0
        } else {
            f64::NAN
        }
    });
    let map = ProbabilityMap { values, valid };
    write_probmap(&path, &map, "hh").unwrap();
    let (back, hash) = read_probmap(&path).unwrap();
    assert_eq!(hash, "hh");
    assert_eq!(back.dim(), (5, 8));
    for ((&a, &b), &v) in back.iter().zip(&map.values).zip(&map.valid) {
        if v {
            assert_eq!(a, b as f32);
        } else {
            assert!(a.is_nan());
        }
    }
}

#[test]
fn overlay_png_keeps_pixels_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("o.png");
    let rgb = Array2::from_shape_fn((4, 6), |(r, c)| [r as u8 * 40, c as u8 * 30, 7]);
    write_rgb(&path, &rgb, "stamp").unwrap();
    let (back, hash) = read_rgb(&path).unwrap();
    assert_eq!(back, rgb);
    assert_eq!(hash.as_deref(), Some("stamp"));
}

#[test]
fn study_round_trips_through_png_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = slice();
    // Exact at the PNG's 1/1000 count resolution.
    s.image = Image::new(s.image.values().mapv(|v| (v * 1000.0).round() / 1000.0), 0.042).unwrap();
    let manifest = write_study(dir.path(), std::slice::from_ref(&s)).unwrap();
    let back = load_study(&manifest).unwrap();
    assert_eq!(back.len(), 1);
    assert_eq!(back[0].labels, s.labels);
    for (a, b) in back[0].image.values().iter().zip(s.image.values()) {
        assert!((a / 1000.0 - b).abs() < 1e-12);
    }
}
