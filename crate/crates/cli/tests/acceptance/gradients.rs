//! Analytic gradients against central differences of the f64 reference
//! implementations, 10 random instances per op and per zoo model.

use mlang_model::{zoo, Mode, Model};
use mlang_tensor::{Param, Tensor};
use mlang_testkit::{central_diff, grads_agree, reference as r, to_f32, to_f64, Xorshift, FD_ABS, FD_REL, FD_STEP};

const INSTANCES: usize = 10;

struct Input {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn input(shape: &[usize], data: Vec<f64>) -> Input {
    Input {
        shape: shape.to_vec(),
        data,
    }
}

type Engine = Box<dyn Fn(&[Tensor]) -> Tensor>;
type Oracle = Box<dyn Fn(&[Vec<f64>]) -> Vec<f64>>;
type Case = Box<dyn Fn(&mut Xorshift) -> (Vec<Input>, Engine, Oracle)>;

/// Compares d/dx_k of Σ w ⊙ op(x) for every input k.
fn compare(name: &str, inputs: Vec<Input>, engine: &Engine, oracle: &Oracle, rng: &mut Xorshift) -> Result<(), String> {
    let params: Vec<Param> = inputs
        .iter()
        .map(|i| Param::new(i.shape.clone(), to_f32(&i.data)))
        .collect();
    let tensors: Vec<Tensor> = params.iter().map(|p| p.tensor()).collect();
    let out = engine(&tensors);
    let w = rng.vec(out.numel(), -1.0, 1.0);
    let wt = Tensor::new(out.shape().to_vec(), to_f32(&w)).map_err(|e| e.to_string())?;
    out.mul(&wt)
        .and_then(|t| t.sum())
        .and_then(|t| t.backward())
        .map_err(|e| format!("{name}: {e}"))?;
    let values: Vec<Vec<f64>> = inputs.iter().map(|i| i.data.clone()).collect();
    for (k, p) in params.iter().enumerate() {
        let f = |xk: &[f64]| {
            let mut vs = values.clone();
            vs[k] = xk.to_vec();
            r::dot(&w, &oracle(&vs))
        };
        let numeric = central_diff(&f, &values[k], FD_STEP);
        let analytic = p.grad().unwrap_or_else(|| vec![0.0; numeric.len()]);
        grads_agree(&analytic, &numeric, FD_REL, FD_ABS).map_err(|e| format!("{name}, input {k}: {e}"))?;
    }
    Ok(())
}

fn dims(g: &mut Xorshift) -> (usize, usize) {
    (1 + g.below(4), 1 + g.below(4))
}

fn elementwise(f: fn(f64, f64) -> f64) -> Oracle {
    Box::new(move |v| v[0].iter().zip(&v[1]).map(|(&x, &y)| f(x, y)).collect())
}

fn op_cases() -> Vec<(&'static str, Case)> {
    vec![
        (
            "add",
            Box::new(|g| {
                let (a, b) = dims(g);
                (
                    vec![input(&[a, b], g.vec(a * b, -2.0, 2.0)), input(&[a, b], g.vec(a * b, -2.0, 2.0))],
                    Box::new(|t| t[0].add(&t[1]).unwrap()),
                    elementwise(|x, y| x + y),
                )
            }),
        ),
        (
            "sub",
            Box::new(|g| {
                let n = 1 + g.below(6);
                (
                    vec![input(&[n], g.vec(n, -2.0, 2.0)), input(&[n], g.vec(n, -2.0, 2.0))],
                    Box::new(|t| t[0].sub(&t[1]).unwrap()),
                    elementwise(|x, y| x - y),
                )
            }),
        ),
        (
            "mul",
            Box::new(|g| {
                let (a, b) = dims(g);
                (
                    vec![input(&[a, b], g.vec(a * b, -2.0, 2.0)), input(&[a, b], g.vec(a * b, -2.0, 2.0))],
                    Box::new(|t| t[0].mul(&t[1]).unwrap()),
                    elementwise(|x, y| x * y),
                )
            }),
        ),
        (
            "div",
            Box::new(|g| {
                let n = 1 + g.below(6);
                (
                    vec![
                        input(&[n], g.vec(n, -2.0, 2.0)),
                        input(&[n], g.vec_away_from_zero(n, -2.0, 2.0, 0.5)),
                    ],
                    Box::new(|t| t[0].div(&t[1]).unwrap()),
                    elementwise(|x, y| x / y),
                )
            }),
        ),
        (
            "scalar broadcast",
            Box::new(|g| {
                let n = 1 + g.below(6);
                (
                    vec![input(&[n], g.vec(n, -2.0, 2.0)), input(&[], g.vec(1, -2.0, 2.0))],
                    Box::new(|t| t[0].mul(&t[1]).unwrap().add(&t[1]).unwrap()),
                    Box::new(|v| v[0].iter().map(|x| x * v[1][0] + v[1][0]).collect()),
                )
            }),
        ),
        (
            "scale",
            Box::new(|g| {
                let n = 1 + g.below(6);
                let c = g.uniform(-3.0, 3.0) as f32;
                (
                    vec![input(&[n], g.vec(n, -2.0, 2.0))],
                    Box::new(move |t| t[0].scale(c).unwrap()),
                    Box::new(move |v| v[0].iter().map(|x| x * c as f64).collect()),
                )
            }),
        ),
        (
            "neg",
            Box::new(|g| {
                let n = 1 + g.below(6);
                (
                    vec![input(&[n], g.vec(n, -2.0, 2.0))],
                    Box::new(|t| t[0].neg().unwrap()),
                    Box::new(|v| v[0].iter().map(|x| -x).collect()),
                )
            }),
        ),
        (
            "relu",
            Box::new(|g| {
                let (a, b) = dims(g);
                (
                    vec![input(&[a, b], g.vec_away_from_zero(a * b, -2.0, 2.0, 0.01))],
                    Box::new(|t| t[0].relu().unwrap()),
                    Box::new(|v| r::relu(&v[0])),
                )
            }),
        ),
        (
            "tanh",
            Box::new(|g| {
                let (a, b) = dims(g);
                (
                    vec![input(&[a, b], g.vec(a * b, -2.0, 2.0))],
                    Box::new(|t| t[0].tanh().unwrap()),
                    Box::new(|v| r::tanh(&v[0])),
                )
            }),
        ),
        (
            "sigmoid",
            Box::new(|g| {
                let n = 1 + g.below(6);
                (
                    vec![input(&[n], g.vec(n, -3.0, 3.0))],
                    Box::new(|t| t[0].sigmoid().unwrap()),
                    Box::new(|v| r::sigmoid(&v[0])),
                )
            }),
        ),
        (
            "matmul",
            Box::new(|g| {
                let (m, k) = dims(g);
                let n = 1 + g.below(4);
                (
                    vec![input(&[m, k], g.vec(m * k, -1.0, 1.0)), input(&[k, n], g.vec(k * n, -1.0, 1.0))],
                    Box::new(|t| t[0].matmul(&t[1]).unwrap()),
                    Box::new(move |v| r::matmul(&v[0], m, k, &v[1], n)),
                )
            }),
        ),
        (
            "transpose",
            Box::new(|g| {
                let (a, b) = dims(g);
                (
                    vec![input(&[a, b], g.vec(a * b, -1.0, 1.0))],
                    Box::new(|t| t[0].transpose().unwrap()),
                    Box::new(move |v| r::transpose(&v[0], a, b)),
                )
            }),
        ),
        (
            "linear",
            Box::new(|g| {
                let (rows, inp) = dims(g);
                let out = 1 + g.below(4);
                (
                    vec![
                        input(&[rows, inp], g.vec(rows * inp, -1.0, 1.0)),
                        input(&[out, inp], g.vec(out * inp, -1.0, 1.0)),
                        input(&[out], g.vec(out, -1.0, 1.0)),
                    ],
                    Box::new(|t| t[0].linear(&t[1], Some(&t[2])).unwrap()),
                    Box::new(move |v| r::linear(&v[0], rows, inp, &v[1], out, Some(&v[2]))),
                )
            }),
        ),
        (
            "reshape",
            Box::new(|g| {
                let (a, b) = dims(g);
                (
                    vec![input(&[a, b], g.vec(a * b, -1.0, 1.0))],
                    Box::new(move |t| t[0].reshape(vec![b, a]).unwrap()),
                    Box::new(|v| v[0].clone()),
                )
            }),
        ),
        (
            "sum",
            Box::new(|g| {
                let (a, b) = dims(g);
                (
                    vec![input(&[a, b], g.vec(a * b, -1.0, 1.0))],
                    Box::new(|t| t[0].sum().unwrap()),
                    Box::new(|v| vec![v[0].iter().sum()]),
                )
            }),
        ),
        (
            "mean",
            Box::new(|g| {
                let (a, b) = dims(g);
                (
                    vec![input(&[a, b], g.vec(a * b, -1.0, 1.0))],
                    Box::new(|t| t[0].mean().unwrap()),
                    Box::new(|v| vec![v[0].iter().sum::<f64>() / v[0].len() as f64]),
                )
            }),
        ),
        (
            "softmax",
            Box::new(|g| {
                let (a, c) = (1 + g.below(4), 2 + g.below(3));
                (
                    vec![input(&[a, c], g.vec(a * c, -2.0, 2.0))],
                    Box::new(|t| t[0].softmax().unwrap()),
                    Box::new(move |v| r::softmax_rows(&v[0], c)),
                )
            }),
        ),
        (
            "cross_entropy",
            Box::new(|g| {
                let (b, c) = (1 + g.below(4), 2 + g.below(3));
                let targets: Vec<usize> = (0..b).map(|_| g.below(c)).collect();
                let t2 = targets.clone();
                (
                    vec![input(&[b, c], g.vec(b * c, -2.0, 2.0))],
                    Box::new(move |t| t[0].cross_entropy(&targets).unwrap()),
                    Box::new(move |v| vec![r::cross_entropy(&v[0], c, &t2)]),
                )
            }),
        ),
        (
            "mse",
            Box::new(|g| {
                let n = 1 + g.below(6);
                (
                    vec![input(&[n, 1], g.vec(n, -2.0, 2.0)), input(&[n], g.vec(n, -2.0, 2.0))],
                    Box::new(|t| t[0].mse(&t[1]).unwrap()),
                    Box::new(|v| vec![r::mse(&v[0], &v[1])]),
                )
            }),
        ),
        (
            "embedding",
            Box::new(|g| {
                let (vocab, d) = (2 + g.below(5), 1 + g.below(3));
                let (b, l) = dims(g);
                let ids: Vec<usize> = (0..b * l).map(|_| g.below(vocab)).collect();
                let as_i64: Vec<i64> = ids.iter().map(|&i| i as i64).collect();
                let id_t = Tensor::from_ints(vec![b, l], &as_i64).unwrap();
                (
                    vec![input(&[vocab, d], g.vec(vocab * d, -1.0, 1.0))],
                    Box::new(move |t| t[0].embedding(&id_t).unwrap()),
                    Box::new(move |v| r::embedding(&v[0], d, &ids)),
                )
            }),
        ),
        (
            "mean_pool",
            Box::new(|g| {
                let (b, l) = dims(g);
                let d = 1 + g.below(3);
                (
                    vec![input(&[b, l, d], g.vec(b * l * d, -1.0, 1.0))],
                    Box::new(|t| t[0].mean_pool().unwrap()),
                    Box::new(move |v| r::mean_pool(&v[0], b, l, d)),
                )
            }),
        ),
        (
            "flatten",
            Box::new(|g| {
                let (b, l) = dims(g);
                let d = 1 + g.below(3);
                (
                    vec![input(&[b, l, d], g.vec(b * l * d, -1.0, 1.0))],
                    Box::new(|t| t[0].flatten().unwrap()),
                    Box::new(|v| v[0].clone()),
                )
            }),
        ),
        (
            "concat",
            Box::new(|g| {
                let rows = 1 + g.below(3);
                let (w1, w2) = dims(g);
                (
                    vec![
                        input(&[rows, w1], g.vec(rows * w1, -1.0, 1.0)),
                        input(&[rows, w2], g.vec(rows * w2, -1.0, 1.0)),
                    ],
                    Box::new(|t| Tensor::concat(&[t[0].clone(), t[1].clone()]).unwrap()),
                    Box::new(move |v| r::concat_cols(&[(&v[0], w1), (&v[1], w2)], rows)),
                )
            }),
        ),
        (
            "slice_cols",
            Box::new(|g| {
                let rows = 1 + g.below(3);
                let cols = 2 + g.below(4);
                let start = g.below(cols - 1);
                let len = 1 + g.below(cols - start);
                (
                    vec![input(&[rows, cols], g.vec(rows * cols, -1.0, 1.0))],
                    Box::new(move |t| t[0].slice_cols(start, len).unwrap()),
                    Box::new(move |v| r::slice_cols(&v[0], rows, cols, start, len)),
                )
            }),
        ),
    ]
}

type Weights = Vec<Vec<f64>>;

/// One random zoo instance: fresh weights, input and targets.
struct ZooCase {
    model: Model,
    loss: Box<dyn Fn(&Model) -> Tensor>,
    oracle: Box<dyn Fn(&Weights) -> f64>,
}

type ZooBuilder = fn(&mut Xorshift) -> ZooCase;

fn randomize(m: &Model, g: &mut Xorshift) {
    for (_, p) in m.params() {
        p.set_data(to_f32(&g.vec(p.numel(), -0.5, 0.5)));
    }
}

fn weights(m: &Model) -> Weights {
    m.params().iter().map(|(_, p)| to_f64(&p.data())).collect()
}

fn bert_case(g: &mut Xorshift) -> ZooCase {
    let model = zoo::build("bert-base-uncased").unwrap();
    randomize(&model, g);
    let (b, l) = (1 + g.below(4), 1 + g.below(6));
    let ids: Vec<usize> = (0..b * l).map(|_| 1 + g.below(255)).collect();
    let targets: Vec<usize> = (0..b).map(|_| g.below(2)).collect();
    let id_t = Tensor::from_ints(vec![b, l], &ids.iter().map(|&i| i as i64).collect::<Vec<_>>()).unwrap();
    let t2 = targets.clone();
    ZooCase {
        model,
        loss: Box::new(move |m| m.forward(&id_t, Mode::Train).unwrap().cross_entropy(&t2).unwrap()),
        oracle: Box::new(move |w| {
            let e = r::embedding(&w[0], 32, &ids);
            let pooled = r::mean_pool(&e, b, l, 32);
            let h = r::tanh(&r::linear(&pooled, b, 32, &w[1], 32, Some(&w[2])));
            let logits = r::linear(&h, b, 32, &w[3], 2, Some(&w[4]));
            r::cross_entropy(&logits, 2, &targets)
        }),
    }
}

fn resnet_case(g: &mut Xorshift) -> ZooCase {
    let model = zoo::build("resnet50").unwrap();
    let b = 1 + g.below(4);
    // Redraw until no hidden pre-activation sits within reach of the relu
    // kink, where central differences are meaningless.
    let x = loop {
        randomize(&model, g);
        let x = to_f64(&to_f32(&g.vec(b * 64, 0.0, 1.2)));
        let w = weights(&model);
        let z = r::linear(&x, b, 64, &w[0], 32, Some(&w[1]));
        if z.iter().all(|v| v.abs() > 1e-2) {
            break x;
        }
    };
    let targets: Vec<usize> = (0..b).map(|_| g.below(2)).collect();
    let xt = Tensor::new(vec![b, 64], to_f32(&x)).unwrap();
    let t2 = targets.clone();
    ZooCase {
        model,
        loss: Box::new(move |m| m.forward(&xt, Mode::Train).unwrap().cross_entropy(&t2).unwrap()),
        oracle: Box::new(move |w| {
            let h = r::relu(&r::linear(&x, b, 64, &w[0], 32, Some(&w[1])));
            let logits = r::linear(&h, b, 32, &w[2], 2, Some(&w[3]));
            r::cross_entropy(&logits, 2, &targets)
        }),
    }
}

fn lstm_case(g: &mut Xorshift) -> ZooCase {
    let model = zoo::build("lstm").unwrap();
    randomize(&model, g);
    let b = 1 + g.below(4);
    let x = to_f64(&to_f32(&g.vec(b * 8, -1.0, 1.0)));
    let y = to_f64(&to_f32(&g.vec(b, -1.0, 1.0)));
    let xt = Tensor::new(vec![b, 8], to_f32(&x)).unwrap();
    let yt = Tensor::new(vec![b], to_f32(&y)).unwrap();
    ZooCase {
        model,
        loss: Box::new(move |m| m.forward(&xt, Mode::Train).unwrap().mse(&yt).unwrap()),
        oracle: Box::new(move |w| {
            let h = r::elman(&x, b, 8, &w[0], &w[1], &w[2], 16);
            let out = r::linear(&h, b, 16, &w[3], 1, Some(&w[4]));
            r::mse(&out, &y)
        }),
    }
}

fn compare_zoo(name: &str, c: ZooCase) -> Result<(), String> {
    let w = weights(&c.model);
    let loss = (c.loss)(&c.model);
    let expected = (c.oracle)(&w);
    let got = loss.item().map_err(|e| e.to_string())? as f64;
    if (got - expected).abs() > 1e-4 * (1.0 + expected.abs()) {
        return Err(format!("{name}: loss {got} vs reference {expected}"));
    }
    loss.backward().map_err(|e| e.to_string())?;
    for (k, (pname, p)) in c.model.params().iter().enumerate() {
        let f = |x: &[f64]| {
            let mut ws = w.clone();
            ws[k] = x.to_vec();
            (c.oracle)(&ws)
        };
        let numeric = central_diff(&f, &w[k], FD_STEP);
        let analytic = p.grad().ok_or_else(|| format!("{name}: {pname} has no gradient"))?;
        grads_agree(&analytic, &numeric, FD_REL, FD_ABS).map_err(|e| format!("{name}: {pname}: {e}"))?;
    }
    Ok(())
}

pub fn check() -> Result<String, String> {
    let cases = op_cases();
    let mut g = Xorshift::new(2024);
    for (name, case) in &cases {
        for _ in 0..INSTANCES {
            let (inputs, engine, oracle) = case(&mut g);
            compare(name, inputs, &engine, &oracle, &mut g)?;
        }
    }
    let zoo_cases: [(&str, ZooBuilder); 3] = [
        ("bert-base-uncased", bert_case),
        ("resnet50", resnet_case),
        ("lstm", lstm_case),
    ];
    for (name, build) in zoo_cases {
        for _ in 0..INSTANCES {
            compare_zoo(name, build(&mut g))?;
        }
    }
    Ok(format!(
        "{} ops and 3 zoo models x {INSTANCES} instances",
        cases.len()
    ))
}
