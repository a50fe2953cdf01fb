use std::collections::BTreeSet;
use std::io::Write;

use mlang_data::*;
use proptest::prelude::*;

fn ids(n: usize) -> Dataset {
    Dataset::new(vec![Column::ints("id", ColumnKind::IntScalar, (0..n as i64).collect())]).unwrap()
}

fn id_values(d: &Dataset) -> Vec<i64> {
    match &d.column("id").unwrap().data {
        ColumnData::Int(v) => v.clone(),
        ColumnData::F32(_) => unreachable!(),
    }
}

fn labels(d: &Dataset) -> Vec<i64> {
    match &d.column("labels").unwrap().data {
        ColumnData::Int(v) => v.clone(),
        ColumnData::F32(_) => unreachable!(),
    }
}

fn floats(d: &Dataset, name: &str) -> Vec<f32> {
    match &d.column(name).unwrap().data {
        ColumnData::F32(v) => v.clone(),
        ColumnData::Int(_) => unreachable!(),
    }
}

#[test]
fn generators_are_pure_functions_of_seed() {
    assert_eq!(synthetic_text(4, 2, 8, 16, 0).unwrap(), synthetic_text(4, 2, 8, 16, 0).unwrap());
    assert_ne!(synthetic_text(4, 2, 8, 16, 0).unwrap(), synthetic_text(4, 2, 8, 16, 1).unwrap());
    let bits = |d: &Dataset| floats(d, "image").iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&synthetic_images(10, 3, 5).unwrap()), bits(&synthetic_images(10, 3, 5).unwrap()));
    assert_eq!(synthetic_series(20, 4, 9).unwrap(), synthetic_series(20, 4, 9).unwrap());
}

#[test]
fn text_labels_are_round_robin() {
    let d = synthetic_text(200, 2, 8, 16, 0).unwrap();
    let l = labels(&d);
    assert_eq!(l.iter().filter(|&&c| c == 0).count(), 100);
    assert_eq!(l.iter().filter(|&&c| c == 1).count(), 100);
    assert_eq!(d.schema()[0], ("text".to_string(), ColumnKind::IntSeq(8)));
}

#[test]
fn majority_baseline_tracks_split_balance() {
    let d = synthetic_text(200, 2, 8, 16, 0).unwrap();
    for seed in 0..5 {
        let (train, test) = train_test_split(&d, 0.8, seed).unwrap();
        let tr = labels(&train);
        let majority = (tr.iter().filter(|&&c| c == 1).count() * 2 > tr.len()) as i64;
        let te = labels(&test);
        let acc = te.iter().filter(|&&c| c == majority).count() as f64 / te.len() as f64;
        let ones = te.iter().filter(|&&c| c == 1).count() as f64 / te.len() as f64;
        let imbalance = (ones - 0.5).abs();
        assert!((acc - 0.5).abs() <= imbalance + 1e-12, "acc {acc} imbalance {imbalance}");
    }
}

#[test]
fn image_pixels_within_template_bound() {
    let d = synthetic_images(50, 4, 2).unwrap();
    assert_eq!(d.schema()[0].1, ColumnKind::F32Vec(64));
    assert!(floats(&d, "image").iter().all(|&p| (0.0..=1.2).contains(&p)));
}

#[test]
fn noise_free_series_is_exact() {
    let window = 6;
    let d = synthetic_series_with_noise(40, window, 3, 0.0).unwrap();
    for (i, t) in floats(&d, "target").iter().enumerate() {
        let expected = (0.1 * (i + window) as f64).sin() as f32;
        assert_eq!(t.to_bits(), expected.to_bits(), "row {i}");
    }
}

#[test]
fn mean_predictor_mse_matches_target_variance() {
    let d = synthetic_series(400, 8, 0).unwrap();
    let (train, test) = train_test_split(&d, 0.8, 0).unwrap();
    let mean = |v: &[f32]| v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64;
    let train_mean = mean(&floats(&train, "target"));
    let y = floats(&test, "target");
    let mse = y.iter().map(|&t| (t as f64 - train_mean).powi(2)).sum::<f64>() / y.len() as f64;
    let m = mean(&y);
    let var = y.iter().map(|&t| (t as f64 - m).powi(2)).sum::<f64>() / y.len() as f64;
    // mse = var + (mean shift)²; the shift between halves of a slow sine is small.
    assert!(mse >= var);
    assert!((mse - var) / var < 0.1, "mse {mse} var {var}");
}

fn temp(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

fn ab_schema() -> Vec<(String, ColumnKind)> {
    vec![("a".into(), ColumnKind::IntScalar), ("b".into(), ColumnKind::F32Scalar)]
}

#[test]
fn csv_one_row() {
    let f = temp("a,b\n1,2.5\n");
    let d = load_csv(f.path(), &ab_schema()).unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d.column("a").unwrap().data, ColumnData::Int(vec![1]));
    assert_eq!(d.column("b").unwrap().data, ColumnData::F32(vec![2.5]));
}

#[test]
fn missing_file_names_the_path() {
    let err = load_csv(std::path::Path::new("/no/such/file.csv"), &ab_schema()).unwrap_err();
    assert!(matches!(&err, DataError::Io { path, .. } if path == "/no/such/file.csv"));
    assert!(err.to_string().contains("/no/such/file.csv"));
    assert!(matches!(load_jsonl(std::path::Path::new("/no/such.jsonl")), Err(DataError::Io { .. })));
}

#[test]
fn wrong_arity_cites_row_two() {
    let f = temp("a,b\n1,2.5,7\n");
    let err = load_csv(f.path(), &ab_schema()).unwrap_err();
    assert!(matches!(err, DataError::Schema { row: 2, .. }), "{err:?}");
    assert!(err.to_string().contains("row 2"));
}

#[test]
fn split_of_ten_at_point_eight() {
    let d = ids(10);
    let (a, b) = train_test_split(&d, 0.8, 4).unwrap();
    assert_eq!((a.len(), b.len()), (8, 2));
    let (a2, b2) = train_test_split(&d, 0.8, 4).unwrap();
    assert_eq!((a, b), (a2, b2));
}

#[test]
fn thirty_two_rows_make_two_batches_of_sixteen() {
    let d = synthetic_text(32, 2, 8, 16, 0).unwrap().with_batch_size(16).unwrap();
    let batches = d.batches();
    assert_eq!(batches.len(), 2);
    for b in &batches {
        assert_eq!(b.get("text").unwrap().shape(), &[16, 8]);
        assert_eq!(b.get("labels").unwrap().shape(), &[16]);
    }
}

proptest! {
    #[test]
    fn split_is_a_partition(n in 1usize..200, ratio in 0.01f64..0.99, seed in any::<u64>()) {
        let (a, b) = train_test_split(&ids(n), ratio, seed).unwrap();
        prop_assert_eq!(a.len(), (ratio * n as f64 - 1e-9).ceil() as usize);
        let mut all: Vec<i64> = id_values(&a);
        all.extend(id_values(&b));
        let set: BTreeSet<i64> = all.iter().copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(set, (0..n as i64).collect::<BTreeSet<_>>());
    }

    #[test]
    fn batches_cover_every_row_once(n in 1usize..150, bs in 1usize..40, seed in proptest::option::of(any::<u64>())) {
        let d = ids(n).with_batch_size(bs).unwrap().with_shuffle(seed);
        let batches = d.batches();
        prop_assert_eq!(batches.len(), n.div_ceil(bs));
        let mut seen: Vec<i64> = Vec::new();
        for (i, b) in batches.iter().enumerate() {
            prop_assert!(b.len() <= bs);
            if i + 1 < batches.len() {
                prop_assert_eq!(b.len(), bs);
            }
            seen.extend(b.get("id").unwrap().data().iter().map(|&x| x as i64));
        }
        let expected: Vec<i64> = d.order().iter().map(|&i| i as i64).collect();
        prop_assert_eq!(&seen, &expected);
        seen.sort();
        prop_assert_eq!(seen, (0..n as i64).collect::<Vec<_>>());
    }
}
