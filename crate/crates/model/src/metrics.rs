use mlang_data::Dataset;

use crate::error::{ModelError, Result};
use crate::model::{Mode, Model};
use crate::train::{roles, MetricReport};

pub const METRICS: [&str; 4] = ["accuracy", "f1", "mse", "r2"];

pub fn check_metric(name: &str) -> Result<()> {
    if METRICS.contains(&name) {
        Ok(())
    } else {
        Err(ModelError::UnknownMetric(name.to_string()))
    }
}

/// Larger is better for every metric except mse.
pub fn higher_is_better(metric: &str) -> bool {
    metric != "mse"
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Macro F1 over classes 0..classes. A class with no true or predicted
/// rows scores 0 and still counts toward the mean.
pub fn macro_f1(pred: &[usize], truth: &[usize], classes: usize) -> f64 {
    let mut sum = 0.0;
    for c in 0..classes {
        let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
        for (&p, &t) in pred.iter().zip(truth) {
            match (p == c, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fneg;
        if denom > 0 {
            sum += 2.0 * tp as f64 / denom as f64;
        }
    }
    sum / classes as f64
}

pub fn mse(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / truth.len() as f64
}

/// 1 − SS_res/SS_tot, or 0 when the targets are constant.
pub fn r2(pred: &[f64], truth: &[f64]) -> f64 {
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return 0.0;
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    1.0 - ss_res / ss_tot
}

/// Runs the model over the dataset in its iteration order and scores the
/// requested metrics.
pub fn evaluate(model: &Model, ds: &Dataset, metrics: &[String]) -> Result<MetricReport> {
    for m in metrics {
        check_metric(m)?;
    }
    let r = roles(ds)?;
    let wants_class = metrics.iter().any(|m| m == "accuracy" || m == "f1");
    let wants_reg = metrics.iter().any(|m| m == "mse" || m == "r2");
    if wants_class && !r.classification {
        return Err(ModelError::ColumnMismatch(
            "accuracy and f1 need an integer `labels` column".into(),
        ));
    }
    let cols = ds.columns();
    let mut pred_class = Vec::with_capacity(ds.len());
    let mut pred_value = Vec::with_capacity(ds.len());
    let mut width = 0;
    for rows in ds.batch_rows() {
        let out = model.forward(&cols[r.input].tensor(&rows), Mode::Eval)?;
        if wants_class {
            if out.rank() != 2 || out.shape()[0] != rows.len() {
                return Err(ModelError::shape("output", format!("({}, classes)", rows.len()), out.shape()));
            }
            width = out.shape()[1];
            pred_class.extend(out.argmax_last());
        }
        if wants_reg {
            if out.numel() != rows.len() {
                return Err(ModelError::shape("output", format!("({}, 1)", rows.len()), out.shape()));
            }
            pred_value.extend(out.data().iter().map(|&x| x as f64));
        }
    }
    let truth: Vec<f64> = ds
        .batch_rows()
        .concat()
        .iter()
        .map(|&i| cols[r.target].row_f64(i)[0])
        .collect();
    let labels: Vec<usize> = truth.iter().map(|&t| t.max(0.0) as usize).collect();
    let mut report = MetricReport::default();
    for m in metrics {
        let v = match m.as_str() {
            "accuracy" => accuracy(&pred_class, &labels),
            "f1" => {
                let classes = width.max(labels.iter().max().map_or(0, |&l| l + 1));
                macro_f1(&pred_class, &labels, classes)
            }
            "mse" => mse(&pred_value, &truth),
            "r2" => r2(&pred_value, &truth),
            _ => unreachable!("checked above"),
        };
        report.metrics.insert(m.clone(), v);
    }
    Ok(report)
}
