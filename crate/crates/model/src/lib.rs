//! Model values for the M runtime: architecture graphs and forward
//! evaluation, the pretrained zoo, `.mmod` persistence and the versioned
//! registry, composition, fine-tuning, evaluation and hyperparameter search.

mod arch;
mod config;
mod error;
mod manifest;
mod metrics;
mod model;
mod store;
mod train;
mod tune;
pub mod zoo;

pub use arch::{ArchGraph, Node, NodeKind};
pub use config::{config_from_json, config_to_json, Config, ConfigValue};
pub use error::{ModelError, Result};
pub use manifest::{Manifest, Weight, FORMAT_VERSION};
pub use metrics::{accuracy, check_metric, evaluate, higher_is_better, macro_f1, mse, r2, METRICS};
pub use model::{Combine, CustomFn, Mode, Model, Provenance};
pub use store::{load_file, load_url, parse_ref, save_file, Store};
pub use train::{fine_tune, parse_optimizer, roles, FineTuneOptions, MetricReport, Roles, TUNABLE};
pub use tune::{
    auto_tune, pick_best, score_trial, trial_options, trial_seed, HyperparamSpace, Point, Strategy, Trial,
    TuneOptions, TuneResult,
};
