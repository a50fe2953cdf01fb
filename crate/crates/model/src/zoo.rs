//! Desk-scale stand-ins for well-known pretrained models. Weights are
//! Glorot-uniform from splitmix64(42) in parameter order.

use mlang_tensor::SplitMix64;

use crate::arch::{ArchGraph, NodeKind};
use crate::config::{Config, ConfigValue};
use crate::model::{Model, Provenance};

pub const ZOO_SEED: u64 = 42;
pub const NAMES: [&str; 3] = ["bert-base-uncased", "resnet50", "lstm"];

fn graph(name: &str) -> Option<(ArchGraph, Config)> {
    let lin = |inp, out| NodeKind::Linear { inp, out };
    let mut config = Config::new();
    let layers = match name {
        "bert-base-uncased" => {
            config.insert("num_labels".into(), ConfigValue::Int(2));
            config.insert("vocab".into(), ConfigValue::Int(256));
            vec![
                ("embed", NodeKind::Embedding { vocab: 256, dim: 32 }),
                ("pool", NodeKind::MeanPool),
                ("dense", lin(32, 32)),
                ("act", NodeKind::Tanh),
                ("head", lin(32, 2)),
            ]
        }
        "resnet50" => {
            config.insert("num_labels".into(), ConfigValue::Int(2));
            vec![
                ("flatten", NodeKind::Flatten),
                ("fc", lin(64, 32)),
                ("act", NodeKind::Relu),
                ("head", lin(32, 2)),
            ]
        }
        "lstm" => {
            config.insert("window".into(), ConfigValue::Int(8));
            vec![
                ("rnn", NodeKind::RnnCell { hidden: 16, window: 8 }),
                ("head", lin(16, 1)),
            ]
        }
        _ => return None,
    };
    let mut g = ArchGraph::chain(layers);
    let out = g.output();
    g.nodes[out].head = true;
    Some((g, config))
}

/// The zoo model `name` at version 1.
pub fn build(name: &str) -> Option<Model> {
    let (arch, config) = graph(name)?;
    let mut m = Model::from_arch(name, arch, &mut SplitMix64::new(ZOO_SEED)).expect("zoo graphs are valid");
    m.config = config;
    m.provenance = Provenance::Registry {
        name: name.to_string(),
        version: 1,
    };
    Some(m)
}
