use std::fs;

use mlang_model::*;
use mlang_tensor::{SplitMix64, Tensor};
use proptest::prelude::*;

fn bits(t: &Tensor) -> Vec<u32> {
    t.data().iter().map(|x| x.to_bits()).collect()
}

fn probe_for(m: &Model) -> Tensor {
    match m.name.as_str() {
        "bert-base-uncased" => Tensor::from_ints(vec![2, 8], &[3, 7, 1, 0, 0, 0, 0, 0, 9, 9, 250, 4, 2, 0, 0, 0]).unwrap(),
        "lstm" => Tensor::new(vec![2, 8], (0..16).map(|i| (i as f32 * 0.3).sin()).collect()).unwrap(),
        _ => Tensor::new(vec![2, 64], (0..128).map(|i| (i % 7) as f32 * 0.15).collect()).unwrap(),
    }
}

fn lin(i: usize, o: usize, seed: u64) -> Model {
    Model::layer(NodeKind::Linear { inp: i, out: o }, &mut SplitMix64::new(seed)).unwrap()
}

#[test]
fn zoo_save_load_forward_is_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in zoo::NAMES {
        let m = zoo::build(name).unwrap();
        let x = probe_for(&m);
        let before = m.forward(&x, Mode::Eval).unwrap();
        let path = dir.path().join(format!("{name}.mmod"));
        save_file(&m, &path).unwrap();
        let back = load_file(&path).unwrap();
        assert_eq!(back.provenance, Provenance::Loaded(path.display().to_string()));
        assert_eq!(back.config, m.config);
        assert_eq!(bits(&back.forward(&x, Mode::Eval).unwrap()), bits(&before), "{name}");
    }
}

#[test]
fn composed_models_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = SplitMix64::new(5);
    let relu = Model::layer(NodeKind::Relu, &mut rng).unwrap();
    let seq = Model::sequential(&[&lin(4, 6, 1), &relu, &lin(6, 3, 2)]).unwrap();
    let par = Model::parallel(&[&lin(4, 3, 3), &lin(4, 5, 4)], Combine::Concat).unwrap();
    let mean = Model::parallel(&[&seq, &lin(4, 3, 6)], Combine::Mean).unwrap();
    let x = Tensor::new(vec![3, 4], (0..12).map(|i| i as f32 * 0.1 - 0.5).collect()).unwrap();
    for (i, m) in [seq, par, mean].iter().enumerate() {
        let path = dir.path().join(format!("c{i}.mmod"));
        save_file(m, &path).unwrap();
        let back = load_file(&path).unwrap();
        assert_eq!(back.arch, m.arch);
        assert_eq!(
            bits(&back.forward(&x, Mode::Eval).unwrap()),
            bits(&m.forward(&x, Mode::Eval).unwrap())
        );
    }
}

#[test]
fn seeding_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::new(dir.path());
    assert_eq!(store.seed().unwrap().len(), 3);
    let snapshot = |p: &std::path::Path| {
        let mut files = vec![];
        for name in zoo::NAMES {
            files.push(fs::read(p.join("models").join(name).join("1.mmod")).unwrap());
        }
        files.push(fs::read(p.join("index.json")).unwrap());
        files
    };
    let first = snapshot(dir.path());
    assert!(store.seed().unwrap().is_empty());
    assert_eq!(snapshot(dir.path()), first);
    assert_eq!(
        String::from_utf8(first.last().unwrap().clone()).unwrap(),
        r#"{"bert-base-uncased":1,"lstm":1,"resnet50":1}"#
    );
}

#[test]
fn registry_resolution_and_versions() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::new(dir.path());
    assert!(matches!(store.resolve("bert-base-uncased", None), Err(ModelError::UnknownModel(_))));
    store.seed().unwrap();
    assert_eq!(store.resolve("bert-base-uncased", None).unwrap().version, 1);
    assert!(matches!(store.resolve("nonexistent", None), Err(ModelError::UnknownModel(_))));
    assert!(matches!(
        store.resolve("lstm", Some(4)),
        Err(ModelError::UnknownVersion { version: 4, .. })
    ));

    let m = store.load("lstm", None).unwrap();
    m.params()[0].1.set_data(vec![0.25; 16]);
    assert_eq!(store.save(&m, "lstm").unwrap(), 2);
    assert_eq!(store.resolve("lstm", None).unwrap().version, 2);
    assert_eq!(store.resolve("lstm", Some(1)).unwrap().version, 1);
    assert_eq!(store.read_index().unwrap()["lstm"], 2);
    let v2 = load_url("mstore://lstm", &store).unwrap();
    assert_eq!(v2.params()[0].1.data(), vec![0.25; 16]);
    assert_eq!(v2.provenance, Provenance::Registry { name: "lstm".into(), version: 2 });
    let v1 = load_url("mstore://lstm@v1", &store).unwrap();
    assert_ne!(v1.params()[0].1.data(), vec![0.25; 16]);
    assert_eq!(store.list().unwrap()[1], ("lstm".to_string(), vec![1, 2]));
}

#[test]
fn url_schemes() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::new(dir.path());
    store.seed().unwrap();
    let m = load_url("mstore://bert-base-uncased", &store).unwrap();
    assert_eq!(m.arch.out_width(), Some(2));
    assert!(load_url("bert-base-uncased", &store).is_ok());
    let path = dir.path().join("copy.mmod");
    save_file(&m, &path).unwrap();
    assert!(load_url(&format!("file://{}", path.display()), &store).is_ok());
    assert!(matches!(load_url("https://x", &store), Err(ModelError::UnsupportedScheme { .. })));
    assert!(matches!(load_url("http://hub/bert", &store), Err(ModelError::UnsupportedScheme { .. })));
    assert!(matches!(
        load_url("file:///definitely/missing.mmod", &store),
        Err(ModelError::Io { .. })
    ));
}

#[test]
fn import_bumps_existing_names() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::new(dir.path());
    store.seed().unwrap();
    let path = dir.path().join("r.mmod");
    save_file(&zoo::build("resnet50").unwrap(), &path).unwrap();
    assert_eq!(store.import(&path).unwrap(), ("resnet50".to_string(), 2));
}

#[test]
fn sequential_unit_law() {
    for name in zoo::NAMES {
        let m = zoo::build(name).unwrap();
        let x = probe_for(&m);
        let s = Model::sequential(&[&m]).unwrap();
        assert_eq!(
            bits(&s.forward(&x, Mode::Eval).unwrap()),
            bits(&m.forward(&x, Mode::Eval).unwrap()),
            "{name}"
        );
    }
}

#[test]
fn parallel_sum_with_zero_model_is_identity() {
    for name in zoo::NAMES {
        let m = zoo::build(name).unwrap();
        let x = probe_for(&m);
        let (inp, out) = match name {
            "bert-base-uncased" => (8, 2),
            "lstm" => (8, 1),
            _ => (64, 2),
        };
        let zero = lin(inp, out, 0);
        for (_, p) in zero.params() {
            p.set_data(vec![0.0; p.numel()]);
        }
        // For integer ids the zero linear layer reads them as numbers.
        let p = Model::parallel(&[&m, &zero], Combine::Sum).unwrap();
        assert_eq!(
            bits(&p.forward(&x, Mode::Eval).unwrap()),
            bits(&m.forward(&x, Mode::Eval).unwrap()),
            "{name}"
        );
    }
}

#[test]
fn parallel_concat_widths_add() {
    let p = Model::parallel(&[&lin(4, 3, 1), &lin(4, 5, 2)], Combine::Concat).unwrap();
    assert_eq!(p.arch.out_width(), Some(8));
    let y = p.forward(&Tensor::new(vec![2, 4], vec![0.1; 8]).unwrap(), Mode::Eval).unwrap();
    assert_eq!(y.shape(), &[2, 8]);
}

#[test]
fn composition_shares_weights() {
    let a = lin(2, 2, 1);
    let s = Model::sequential(&[&a]).unwrap();
    s.params()[0].1.set_data(vec![1.0; 4]);
    assert_eq!(a.params()[0].1.data(), vec![1.0; 4]);
}

proptest! {
    #[test]
    fn manifest_encoding_is_canonical(seed in any::<u64>(), i in 1usize..6, o in 1usize..6, v in 1u32..50, lr in -1e6f64..1e6) {
        let mut m = lin(i, o, seed);
        m.config.insert("lr".into(), ConfigValue::Float(lr));
        m.config.insert("tag".into(), ConfigValue::Str(format!("s{seed}")));
        m.config.insert("dims".into(), ConfigValue::List(vec![ConfigValue::Int(i as i64), ConfigValue::Bool(true)]));
        let text = Manifest::from_model(&m, v).encode().unwrap();
        let back = Manifest::decode(&text).unwrap();
        prop_assert_eq!(back.encode().unwrap(), text);
        prop_assert_eq!(back.version, v);
        prop_assert_eq!(back.config, m.config);
    }
}
