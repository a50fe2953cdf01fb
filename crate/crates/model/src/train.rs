use std::collections::{BTreeMap, BTreeSet};

use mlang_data::{ColumnKind, Dataset};
use mlang_tensor::{OptimKind, Optimizer, SplitMix64, Tensor};

use crate::config::ConfigValue;
use crate::error::{ModelError, Result};
use crate::model::{Mode, Model};

/// Metric values plus the per-epoch mean training loss.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub metrics: BTreeMap<String, f64>,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneOptions {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub optimizer: OptimKind,
    pub freeze: Vec<String>,
    pub seed: u64,
}

impl Default for FineTuneOptions {
    fn default() -> Self {
        FineTuneOptions {
            epochs: 3,
            lr: 1e-3,
            batch_size: 32,
            optimizer: OptimKind::adam(),
            freeze: vec![],
            seed: 0,
        }
    }
}

pub const TUNABLE: [&str; 4] = ["batch_size", "epochs", "lr", "optimizer"];

pub fn parse_optimizer(name: &str) -> Result<OptimKind> {
    match name.to_ascii_lowercase().as_str() {
        "adam" => Ok(OptimKind::adam()),
        "sgd" => Ok(OptimKind::Sgd),
        _ => Err(ModelError::Invalid(format!("unknown optimizer `{name}` (expected adam or sgd)"))),
    }
}

impl FineTuneOptions {
    /// Applies one tunable option by name.
    pub fn set(&mut self, name: &str, v: &ConfigValue) -> Result<()> {
        let bad = || ModelError::Invalid(format!("invalid value {v} for `{name}`"));
        let count = |v: &ConfigValue| v.as_i64().filter(|&n| n >= 0).map(|n| n as usize);
        match name {
            "epochs" => self.epochs = count(v).ok_or_else(bad)?,
            "batch_size" => self.batch_size = count(v).filter(|&n| n > 0).ok_or_else(bad)?,
            "lr" => self.lr = v.as_f64().filter(|x| x.is_finite() && *x > 0.0).ok_or_else(bad)?,
            "optimizer" => self.optimizer = parse_optimizer(v.as_str().ok_or_else(bad)?)?,
            _ => {
                return Err(ModelError::Invalid(format!(
                    "`{name}` is not a tunable fineTuneModel option (expected one of {})",
                    TUNABLE.join(", ")
                )))
            }
        }
        Ok(())
    }
}

/// Which columns feed the model and which hold the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roles {
    pub input: usize,
    pub target: usize,
    pub classification: bool,
}

/// The first column not named `labels`/`target` is the input; `labels`
/// (else `target`) is the target.
pub fn roles(ds: &Dataset) -> Result<Roles> {
    let cols = ds.columns();
    let target = cols
        .iter()
        .position(|c| c.name == "labels")
        .or_else(|| cols.iter().position(|c| c.name == "target"))
        .ok_or_else(|| ModelError::ColumnMismatch("no `labels` or `target` column".into()))?;
    let input = cols
        .iter()
        .position(|c| c.name != "labels" && c.name != "target")
        .ok_or_else(|| ModelError::ColumnMismatch("no feature column".into()))?;
    let classification = match cols[target].kind {
        ColumnKind::IntScalar => true,
        ColumnKind::F32Scalar => false,
        k => {
            return Err(ModelError::ColumnMismatch(format!(
                "target column `{}` must be a scalar, found {k}",
                cols[target].name
            )))
        }
    };
    Ok(Roles {
        input,
        target,
        classification,
    })
}

pub(crate) fn batch_loss(model: &Model, ds: &Dataset, r: Roles, rows: &[usize]) -> Result<Tensor> {
    let cols = ds.columns();
    let x = cols[r.input].tensor(rows);
    let y = cols[r.target].tensor(rows);
    let out = model.forward(&x, Mode::Train)?;
    if r.classification {
        if out.rank() != 2 || out.shape()[0] != rows.len() {
            return Err(ModelError::shape("output", format!("({}, classes)", rows.len()), out.shape()));
        }
        let targets = y.to_indices("label", out.shape()[1])?;
        Ok(out.cross_entropy(&targets)?)
    } else {
        if out.numel() != rows.len() {
            return Err(ModelError::shape("output", format!("({}, 1)", rows.len()), out.shape()));
        }
        Ok(out.mse(&y)?)
    }
}

/// Trains `model` in place. Each epoch visits the rows in a fresh
/// Fisher–Yates order drawn from one splitmix64(seed) stream.
pub fn fine_tune(model: &Model, ds: &Dataset, opts: &FineTuneOptions) -> Result<MetricReport> {
    if opts.batch_size == 0 {
        return Err(ModelError::Invalid("batch_size must be positive".into()));
    }
    if !(opts.lr.is_finite() && opts.lr > 0.0) {
        return Err(ModelError::Invalid(format!("lr must be positive, got {}", opts.lr)));
    }
    let r = roles(ds)?;
    let extra: BTreeSet<String> = model.expand_names(&opts.freeze)?;
    let mut report = MetricReport::default();
    if opts.epochs == 0 {
        return Ok(report);
    }
    let params = model.trainable(&extra);
    if params.is_empty() {
        return Err(ModelError::Invalid("every parameter is frozen; nothing to train".into()));
    }
    let frozen_view = {
        let mut m = model.clone();
        let all: Vec<String> = model.frozen().iter().cloned().chain(extra).collect();
        m.set_frozen(&all)?;
        m
    };
    let mut opt = Optimizer::new(opts.optimizer, opts.lr as f32, params);
    let mut rng = SplitMix64::new(opts.seed);
    for _ in 0..opts.epochs {
        let mut order: Vec<usize> = (0..ds.len()).collect();
        rng.shuffle(&mut order);
        let mut total = 0.0f64;
        let mut batches = 0usize;
        for rows in order.chunks(opts.batch_size) {
            opt.zero_grad();
            let loss = batch_loss(&frozen_view, ds, r, rows)?;
            total += loss.item()? as f64;
            batches += 1;
            loss.backward()?;
            opt.step()?;
        }
        report.history.push(total / batches as f64);
    }
    report.metrics.insert("loss".into(), *report.history.last().expect("epochs >= 1"));
    Ok(report)
}
