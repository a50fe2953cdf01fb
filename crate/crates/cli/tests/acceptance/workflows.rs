use mlang_data::{synthetic_images, synthetic_series, synthetic_text, train_test_split, Dataset};

use crate::common::{ensure, m, parse_metrics, program, seeded_store};

enum Task {
    Classify,
    Regress,
}

struct Workflow {
    script: &'static str,
    task: Task,
    /// Train/test split built exactly as the script builds it.
    data: fn() -> (Dataset, Dataset),
}

fn split(ds: Dataset, ratio: f64, seed: u64) -> (Dataset, Dataset) {
    train_test_split(&ds, ratio, seed).expect("split")
}

const WORKFLOWS: [Workflow; 4] = [
    Workflow {
        script: "qa.m",
        task: Task::Classify,
        data: || split(synthetic_text(200, 2, 8, 16, 0).unwrap(), 0.8, 0),
    },
    Workflow {
        script: "jobs.m",
        task: Task::Classify,
        data: || split(synthetic_text(240, 2, 12, 24, 3).unwrap(), 0.75, 3),
    },
    Workflow {
        script: "faces.m",
        task: Task::Classify,
        data: || split(synthetic_images(240, 4, 5).unwrap(), 0.75, 5),
    },
    Workflow {
        script: "series.m",
        task: Task::Regress,
        data: || split(synthetic_series(400, 8, 11).unwrap(), 0.8, 11),
    },
];

fn column(d: &Dataset, name: &str) -> Vec<f64> {
    let c = d.column(name).expect("column");
    (0..d.len()).map(|i| c.row_f64(i)[0]).collect()
}

/// Accuracy on `test` of always predicting the most frequent training label.
fn majority_baseline(train: &Dataset, test: &Dataset) -> f64 {
    let mut counts = std::collections::BTreeMap::<i64, usize>::new();
    for l in column(train, "labels") {
        *counts.entry(l as i64).or_default() += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    let majority = counts.iter().find(|(_, &c)| c == top).map(|(&l, _)| l).unwrap_or(0);
    let test_labels = column(test, "labels");
    test_labels.iter().filter(|&&l| l as i64 == majority).count() as f64 / test_labels.len() as f64
}

/// MSE on `test` of always predicting the mean training target.
fn mean_baseline(train: &Dataset, test: &Dataset) -> f64 {
    let tr = column(train, "target");
    let mean = tr.iter().sum::<f64>() / tr.len() as f64;
    let te = column(test, "target");
    te.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / te.len() as f64
}

pub fn check() -> Result<String, String> {
    let store = seeded_store();
    let mut notes = Vec::new();
    for w in &WORKFLOWS {
        let out = m(&["run", &program(w.script)], store.path(), None);
        ensure(out.code == 0, || format!("{} exited {}: {}", w.script, out.code, out.stderr))?;
        ensure(out.secs < 30.0, || format!("{} took {:.1}s", w.script, out.secs))?;
        ensure(out.stdout.contains("loss history: ["), || format!("{} printed no loss history", w.script))?;
        let last = out.stdout.lines().last().unwrap_or_default();
        let metrics = parse_metrics(last).map_err(|e| format!("{}: {e}", w.script))?;
        let (train, test) = (w.data)();
        match w.task {
            Task::Classify => {
                let keys: Vec<_> = metrics.keys().map(String::as_str).collect();
                ensure(keys == ["accuracy", "f1"], || format!("{} reports {keys:?}", w.script))?;
                let base = majority_baseline(&train, &test);
                let acc = metrics["accuracy"];
                ensure(acc >= base + 0.3, || format!("{}: accuracy {acc} vs baseline {base}", w.script))?;
                notes.push(format!("{} acc {acc:.3} vs {base:.3}", w.script));
            }
            Task::Regress => {
                let keys: Vec<_> = metrics.keys().map(String::as_str).collect();
                ensure(keys == ["mse", "r2"], || format!("{} reports {keys:?}", w.script))?;
                let base = mean_baseline(&train, &test);
                let mse = metrics["mse"];
                ensure(mse <= 0.5 * base, || format!("{}: mse {mse} vs baseline {base}", w.script))?;
                notes.push(format!("{} mse {mse:.4} vs {base:.4}", w.script));
            }
        }
    }
    Ok(notes.join(", "))
}
