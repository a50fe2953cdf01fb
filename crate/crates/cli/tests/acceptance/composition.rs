use mlang_data::{synthetic_images, synthetic_series, synthetic_text, Dataset};
use mlang_model::{fine_tune, zoo, Combine, FineTuneOptions, Mode, Model, NodeKind};
use mlang_tensor::{SplitMix64, Tensor};

use crate::common::ensure;

type Snapshot = Vec<(String, Vec<u32>)>;

fn bits(t: &Tensor) -> Vec<u32> {
    t.data().iter().map(|x| x.to_bits()).collect()
}

fn snapshot(m: &Model) -> Snapshot {
    m.params()
        .iter()
        .map(|(n, p)| (n.clone(), p.data().iter().map(|x| x.to_bits()).collect()))
        .collect()
}

struct Zoo {
    name: &'static str,
    probe: Tensor,
    /// Input and output width of a linear layer that accepts the probe.
    io: (usize, usize),
    data: Dataset,
    body: &'static [&'static str],
}

fn zoo_cases() -> Vec<Zoo> {
    vec![
        Zoo {
            name: "bert-base-uncased",
            probe: Tensor::from_ints(vec![2, 8], &[4, 8, 15, 16, 0, 0, 0, 0, 23, 42, 1, 2, 3, 0, 0, 0]).unwrap(),
            io: (8, 2),
            data: synthetic_text(64, 3, 8, 16, 1).unwrap(),
            body: &["embed", "dense"],
        },
        Zoo {
            name: "resnet50",
            probe: Tensor::new(vec![2, 64], (0..128).map(|i| (i % 9) as f32 * 0.1).collect()).unwrap(),
            io: (64, 2),
            data: synthetic_images(64, 3, 1).unwrap(),
            body: &["fc"],
        },
        Zoo {
            name: "lstm",
            probe: Tensor::new(vec![2, 8], (0..16).map(|i| (i as f32 * 0.4).sin()).collect()).unwrap(),
            io: (8, 1),
            data: synthetic_series(64, 8, 1).unwrap(),
            body: &["rnn"],
        },
    ]
}

fn is_head(param: &str) -> bool {
    param.starts_with("head.")
}

pub fn check() -> Result<String, String> {
    let opts = |freeze: &[&str]| FineTuneOptions {
        epochs: 2,
        lr: 1e-2,
        batch_size: 16,
        freeze: freeze.iter().map(|s| s.to_string()).collect(),
        ..FineTuneOptions::default()
    };
    for z in zoo_cases() {
        let m = zoo::build(z.name).unwrap();
        let direct = bits(&m.forward(&z.probe, Mode::Eval).map_err(|e| e.to_string())?);

        let unit = Model::sequential(&[&m]).map_err(|e| e.to_string())?;
        ensure(bits(&unit.forward(&z.probe, Mode::Eval).unwrap()) == direct, || {
            format!("{}: sequential of one model changed the output", z.name)
        })?;

        let zero = Model::layer(NodeKind::Linear { inp: z.io.0, out: z.io.1 }, &mut SplitMix64::new(3)).unwrap();
        for (_, p) in zero.params() {
            p.set_data(vec![0.0; p.numel()]);
        }
        let with_zero = Model::parallel(&[&m, &zero], Combine::Sum).map_err(|e| e.to_string())?;
        ensure(bits(&with_zero.forward(&z.probe, Mode::Eval).unwrap()) == direct, || {
            format!("{}: parallel sum with a zero model changed the output", z.name)
        })?;

        // Transfer: a new head leaves every body weight as the registry had it,
        // and fine-tuning with the body frozen keeps it that way.
        let registry = snapshot(&m);
        let mut tuned = m.deep_clone();
        let width = if z.name == "lstm" { 1 } else { 3 };
        tuned.resize_head(width, 5).map_err(|e| e.to_string())?;
        let body_of = |s: &Snapshot| s.iter().filter(|(n, _)| !is_head(n)).cloned().collect::<Vec<_>>();
        ensure(body_of(&snapshot(&tuned)) == body_of(&registry), || {
            format!("{}: head replacement touched the body", z.name)
        })?;
        let before = snapshot(&tuned);
        fine_tune(&tuned, &z.data, &opts(z.body)).map_err(|e| format!("{}: {e}", z.name))?;
        let after = snapshot(&tuned);
        ensure(body_of(&after) == body_of(&registry), || {
            format!("{}: frozen body changed during fine-tuning", z.name)
        })?;
        for ((name, b), (_, a)) in before.iter().zip(&after) {
            if is_head(name) {
                ensure(a != b, || format!("{}: unfrozen {name} did not train", z.name))?;
            }
        }
    }
    Ok("unit, zero-sum, transfer and freeze hold for all zoo models".into())
}
