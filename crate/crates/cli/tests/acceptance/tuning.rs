use mlang_data::{synthetic_text, train_test_split, Dataset};
use mlang_model::{
    auto_tune, evaluate, fine_tune, zoo, ConfigValue, FineTuneOptions, HyperparamSpace, Model, TuneOptions,
};
use mlang_tensor::mix;

use crate::common::ensure;

const SEED: u64 = 21;

fn space() -> HyperparamSpace {
    HyperparamSpace::new(vec![
        ("lr".into(), vec![ConfigValue::Float(1e-3), ConfigValue::Float(1e-2)]),
        ("batch_size".into(), vec![ConfigValue::Int(8), ConfigValue::Int(16)]),
    ])
    .expect("space")
}

fn options(parallel: bool) -> TuneOptions {
    TuneOptions {
        base: FineTuneOptions {
            epochs: 1,
            ..FineTuneOptions::default()
        },
        seed: SEED,
        parallel,
        ..TuneOptions::default()
    }
}

/// Exhaustive enumeration written apart from the tuner: nested loops in
/// name order (batch_size, then lr), a fresh clone per point, first
/// maximum wins.
fn enumerate(model: &Model, ds: &Dataset) -> ((i64, f64), f64, Vec<f64>) {
    let (train, val) = train_test_split(ds, 0.8, SEED).unwrap();
    let mut points = Vec::new();
    let mut scores = Vec::new();
    let mut index = 0u64;
    for batch_size in [8usize, 16] {
        for lr in [1e-3f64, 1e-2] {
            let m = model.deep_clone();
            let o = FineTuneOptions {
                epochs: 1,
                lr,
                batch_size,
                seed: mix(SEED ^ index),
                ..FineTuneOptions::default()
            };
            fine_tune(&m, &train, &o).unwrap();
            scores.push(evaluate(&m, &val, &["accuracy".into()]).unwrap().metrics["accuracy"]);
            points.push((batch_size as i64, lr));
            index += 1;
        }
    }
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    (points[best], scores[best], scores)
}

pub fn check() -> Result<String, String> {
    let model = zoo::build("bert-base-uncased").unwrap();
    let ds = synthetic_text(96, 2, 8, 16, 4).unwrap();
    let tune = |parallel| auto_tune(&model, &ds, &space(), &options(parallel)).map_err(|e| e.to_string());
    let first = tune(false)?;
    let second = tune(false)?;
    let concurrent = tune(true)?;

    let ((batch_size, lr), score, scores) = enumerate(&model, &ds);
    let expected = vec![
        ("batch_size".to_string(), ConfigValue::Int(batch_size)),
        ("lr".to_string(), ConfigValue::Float(lr)),
    ];
    let got: Vec<f64> = first.trials.iter().map(|t| t.score).collect();
    ensure(got == scores, || format!("trial scores {got:?} vs enumeration {scores:?}"))?;
    ensure(first.best_config() == &expected, || {
        format!("best {:?} vs enumeration {expected:?}", first.best_config())
    })?;
    ensure(first.best_score() == score, || format!("best score {} vs {score}", first.best_score()))?;
    ensure(first.trials == second.trials && first.best == second.best, || "two runs disagree".into())?;
    ensure(first.trials == concurrent.trials && first.best == concurrent.best, || {
        "sequential and concurrent runs disagree".into()
    })?;
    let w = |m: &Model| m.params().iter().map(|(_, p)| p.data()).collect::<Vec<_>>();
    ensure(w(&first.model) == w(&concurrent.model), || "best models differ".into())?;
    Ok(format!("best batch_size={batch_size} lr={lr} score {score:.3} over {} trials", scores.len()))
}
