use std::thread;

use mlang_data::{train_test_split, Dataset};
use mlang_tensor::{mix, SplitMix64};

use crate::config::ConfigValue;
use crate::error::{ModelError, Result};
use crate::manifest::Manifest;
use crate::metrics::{check_metric, evaluate, higher_is_better};
use crate::model::Model;
use crate::train::{fine_tune, FineTuneOptions, TUNABLE};

pub type Point = Vec<(String, ConfigValue)>;

/// Candidate values per option name, kept sorted by name.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperparamSpace {
    dims: Vec<(String, Vec<ConfigValue>)>,
}

impl HyperparamSpace {
    pub fn new(mut dims: Vec<(String, Vec<ConfigValue>)>) -> Result<HyperparamSpace> {
        if dims.is_empty() || dims.iter().any(|(_, v)| v.is_empty()) {
            return Err(ModelError::EmptySpace);
        }
        dims.sort_by(|a, b| a.0.cmp(&b.0));
        for (i, (name, values)) in dims.iter().enumerate() {
            if !TUNABLE.contains(&name.as_str()) {
                return Err(ModelError::Invalid(format!(
                    "`{name}` is not a tunable fineTuneModel option (expected one of {})",
                    TUNABLE.join(", ")
                )));
            }
            if i > 0 && dims[i - 1].0 == *name {
                return Err(ModelError::Invalid(format!("`{name}` appears twice")));
            }
            let mut probe = FineTuneOptions::default();
            for v in values {
                probe.set(name, v)?;
            }
        }
        Ok(HyperparamSpace { dims })
    }

    pub fn dims(&self) -> &[(String, Vec<ConfigValue>)] {
        &self.dims
    }

    pub fn size(&self) -> usize {
        self.dims.iter().map(|(_, v)| v.len()).product()
    }

    /// Cartesian product; the first (alphabetically smallest) name varies
    /// slowest.
    pub fn grid(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.size());
        for mut k in 0..self.size() {
            let mut point = Vec::with_capacity(self.dims.len());
            for (name, values) in self.dims.iter().rev() {
                point.push((name.clone(), values[k % values.len()].clone()));
                k /= values.len();
            }
            point.reverse();
            out.push(point);
        }
        out
    }

    /// `trials` points drawn uniformly, one splitmix64(seed) stream.
    pub fn sample(&self, trials: usize, seed: u64) -> Vec<Point> {
        let mut rng = SplitMix64::new(seed);
        (0..trials)
            .map(|_| {
                self.dims
                    .iter()
                    .map(|(n, v)| (n.clone(), v[rng.below(v.len() as u64) as usize].clone()))
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Grid,
    Random,
}

impl Strategy {
    pub fn parse(s: &str) -> Option<Strategy> {
        match s {
            "grid" => Some(Strategy::Grid),
            "random" => Some(Strategy::Random),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOptions {
    pub strategy: Strategy,
    pub trials: usize,
    pub metric: String,
    pub val_split: f64,
    pub seed: u64,
    /// Run trials on worker threads. Ignored for models with custom nodes.
    pub parallel: bool,
    /// Options every trial starts from before its point is applied.
    pub base: FineTuneOptions,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            strategy: Strategy::Grid,
            trials: 0,
            metric: "accuracy".into(),
            val_split: 0.2,
            seed: 0,
            parallel: false,
            base: FineTuneOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub point: Point,
    pub seed: u64,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub best: usize,
    pub trials: Vec<Trial>,
    pub model: Model,
}

impl TuneResult {
    pub fn best_config(&self) -> &Point {
        &self.trials[self.best].point
    }

    pub fn best_score(&self) -> f64 {
        self.trials[self.best].score
    }
}

pub fn trial_seed(seed: u64, index: usize) -> u64 {
    mix(seed ^ index as u64)
}

pub fn trial_options(base: &FineTuneOptions, point: &Point, seed: u64) -> Result<FineTuneOptions> {
    let mut o = base.clone();
    for (name, v) in point {
        o.set(name, v)?;
    }
    o.seed = seed;
    Ok(o)
}

/// Fine-tunes `model` (already a private copy) and scores it on `val`.
pub fn score_trial(model: &Model, train: &Dataset, val: &Dataset, opts: &FineTuneOptions, metric: &str) -> Result<f64> {
    fine_tune(model, train, opts)?;
    Ok(evaluate(model, val, &[metric.to_string()])?.metrics[metric])
}

fn improves(candidate: f64, best: f64, higher: bool) -> bool {
    if best.is_nan() {
        return !candidate.is_nan();
    }
    if higher {
        candidate > best
    } else {
        candidate < best
    }
}

/// Index of the best score; ties go to the earliest.
pub fn pick_best(scores: &[f64], metric: &str) -> usize {
    let higher = higher_is_better(metric);
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if improves(s, scores[best], higher) {
            best = i;
        }
    }
    best
}

/// Searches `space`. Every trial starts from a clone of the original
/// weights, so trials are independent of each other and of execution
/// order. The returned model is the original re-trained on the train split
/// with the best point and that trial's seed.
pub fn auto_tune(model: &Model, ds: &Dataset, space: &HyperparamSpace, opts: &TuneOptions) -> Result<TuneResult> {
    check_metric(&opts.metric)?;
    if !(opts.val_split > 0.0 && opts.val_split < 1.0) {
        return Err(ModelError::Invalid(format!(
            "val_split must lie strictly between 0 and 1, got {}",
            opts.val_split
        )));
    }
    let points = match opts.strategy {
        Strategy::Grid => space.grid(),
        Strategy::Random => {
            if opts.trials == 0 {
                return Err(ModelError::Invalid("random search needs trials >= 1".into()));
            }
            space.sample(opts.trials, opts.seed)
        }
    };
    let (train, val) = train_test_split(ds, 1.0 - opts.val_split, opts.seed)?;
    let plans: Vec<(Point, u64, FineTuneOptions)> = points
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let s = trial_seed(opts.seed, i);
            let o = trial_options(&opts.base, &p, s)?;
            Ok((p, s, o))
        })
        .collect::<Result<_>>()?;

    let scores: Vec<f64> = if opts.parallel && !model.has_customs() {
        let manifest = Manifest::from_model(model, 1);
        let frozen: Vec<String> = model.frozen().iter().cloned().collect();
        let provenance = model.provenance.clone();
        let workers = thread::available_parallelism().map_or(2, |n| n.get());
        let mut scores = Vec::with_capacity(plans.len());
        for chunk in plans.chunks(workers) {
            let results: Vec<Result<f64>> = thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|(_, _, o)| {
                        let (manifest, frozen, provenance) = (&manifest, &frozen, &provenance);
                        let (train, val, metric) = (&train, &val, &opts.metric);
                        s.spawn(move || {
                            let mut m = manifest.to_model(provenance.clone())?;
                            m.set_frozen(frozen)?;
                            score_trial(&m, train, val, o, metric)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("trial thread panicked"))
                    .collect()
            });
            for r in results {
                scores.push(r?);
            }
        }
        scores
    } else {
        plans
            .iter()
            .map(|(_, _, o)| score_trial(&model.deep_clone(), &train, &val, o, &opts.metric))
            .collect::<Result<_>>()?
    };

    let best = pick_best(&scores, &opts.metric);
    let tuned = model.deep_clone();
    fine_tune(&tuned, &train, &plans[best].2)?;
    let trials = plans
        .into_iter()
        .zip(scores)
        .map(|((point, seed, _), score)| Trial { point, seed, score })
        .collect();
    Ok(TuneResult {
        best,
        trials,
        model: tuned,
    })
}
