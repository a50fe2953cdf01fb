use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mlang_model::{load_file, save_file, zoo, Combine, Manifest, Mode, Model, NodeKind, Store};
use mlang_tensor::{SplitMix64, Tensor};

use crate::common::ensure;

fn bits(t: &Tensor) -> Vec<u32> {
    t.data().iter().map(|x| x.to_bits()).collect()
}

fn lin(i: usize, o: usize, seed: u64) -> Model {
    Model::layer(NodeKind::Linear { inp: i, out: o }, &mut SplitMix64::new(seed)).unwrap()
}

fn probe(name: &str) -> Tensor {
    match name {
        "bert-base-uncased" => Tensor::from_ints(vec![2, 6], &[5, 9, 2, 0, 0, 0, 255, 1, 3, 3, 8, 0]).unwrap(),
        "lstm" => Tensor::new(vec![3, 8], (0..24).map(|i| (i as f32 * 0.25).cos()).collect()).unwrap(),
        "resnet50" => Tensor::new(vec![2, 64], (0..128).map(|i| (i % 5) as f32 * 0.2).collect()).unwrap(),
        _ => Tensor::new(vec![3, 4], (0..12).map(|i| i as f32 * 0.1 - 0.5).collect()).unwrap(),
    }
}

fn models() -> Vec<(String, Model)> {
    let mut out: Vec<(String, Model)> = zoo::NAMES
        .iter()
        .map(|n| (n.to_string(), zoo::build(n).unwrap()))
        .collect();
    let mut rng = SplitMix64::new(9);
    let relu = Model::layer(NodeKind::Relu, &mut rng).unwrap();
    let tanh = Model::layer(NodeKind::Tanh, &mut rng).unwrap();
    let seq = Model::sequential(&[&lin(4, 6, 1), &relu, &lin(6, 3, 2)]).unwrap();
    let concat = Model::parallel(&[&lin(4, 3, 3), &lin(4, 5, 4)], Combine::Concat).unwrap();
    let sum = Model::parallel(&[&seq, &lin(4, 3, 5)], Combine::Sum).unwrap();
    let nested = Model::sequential(&[&Model::parallel(&[&seq, &lin(4, 3, 6)], Combine::Mean).unwrap(), &tanh]).unwrap();
    for (name, m) in [("seq", seq), ("concat", concat), ("sum", sum), ("nested", nested)] {
        out.push((name.to_string(), m));
    }
    out
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("read store dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                files.insert(rel, fs::read(&path).expect("read store file"));
            }
        }
    }
    files
}

pub fn check() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let all = models();
    for (name, m) in &all {
        let x = probe(name);
        let before = m.forward(&x, Mode::Eval).map_err(|e| format!("{name}: {e}"))?;
        let path = dir.path().join(format!("{name}.mmod"));
        save_file(m, &path).map_err(|e| e.to_string())?;
        let back = load_file(&path).map_err(|e| format!("{name}: {e}"))?;
        let after = back.forward(&x, Mode::Eval).map_err(|e| format!("{name}: {e}"))?;
        ensure(bits(&after) == bits(&before), || format!("{name}: forward changed after save/load"))?;

        let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let decoded = Manifest::decode(&text).map_err(|e| e.to_string())?;
        ensure(decoded.encode().map_err(|e| e.to_string())? == text, || {
            format!("{name}: manifest re-encoding differs")
        })?;
        let again = dir.path().join(format!("{name}.again.mmod"));
        save_file(&back, &again).map_err(|e| e.to_string())?;
        ensure(fs::read(&again).unwrap() == text.as_bytes(), || {
            format!("{name}: saving a loaded model changed the bytes")
        })?;
    }

    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    Store::new(a.path()).seed().map_err(|e| e.to_string())?;
    let first = snapshot(a.path());
    let written = Store::new(a.path()).seed().map_err(|e| e.to_string())?;
    ensure(written.is_empty(), || format!("second seed wrote {written:?}"))?;
    ensure(snapshot(a.path()) == first, || "second seed changed store bytes".into())?;
    Store::new(b.path()).seed().map_err(|e| e.to_string())?;
    ensure(snapshot(b.path()) == first, || "seeding two stores gave different bytes".into())?;

    Ok(format!(
        "{} models bitwise through save/load; seed idempotent over {} files",
        all.len(),
        first.len()
    ))
}
