//! Analytic gradients against central differences of independent f64
//! reference implementations, 10 random instances per op.

use mlang_tensor::{Param, Tensor};
use mlang_testkit::{
    central_diff, grads_agree, reference as r, to_f32, Xorshift, FD_ABS, FD_REL, FD_STEP,
};

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

/// Checks d/dx_k of Σ w ⊙ op(x_0..x_n) for every input k.
fn check(name: &str, inputs: Vec<Input>, engine: &Engine, oracle: &Oracle, rng: &mut Xorshift) {
    let params: Vec<Param> = inputs
        .iter()
        .map(|i| Param::new(i.shape.clone(), to_f32(&i.data)))
        .collect();
    let tensors: Vec<Tensor> = params.iter().map(|p| p.tensor()).collect();
    let out = engine(&tensors);
    let w = rng.vec(out.numel(), -1.0, 1.0);
    let wt = Tensor::new(out.shape().to_vec(), to_f32(&w)).unwrap();
    out.mul(&wt).unwrap().sum().unwrap().backward().unwrap();

    let values: Vec<Vec<f64>> = inputs.iter().map(|i| i.data.clone()).collect();
    for (k, p) in params.iter().enumerate() {
        let f = |xk: &[f64]| {
            let mut vs = values.clone();
            vs[k] = xk.to_vec();
            r::dot(&w, &oracle(&vs))
        };
        let numeric = central_diff(&f, &values[k], FD_STEP);
        let analytic = p.grad().unwrap_or_else(|| vec![0.0; numeric.len()]);
        if let Err(e) = grads_agree(&analytic, &numeric, FD_REL, FD_ABS) {
            panic!("{name}, input {k}: {e}");
        }
    }
}

fn run(name: &str, mut case: impl FnMut(&mut Xorshift) -> (Vec<Input>, Engine, Oracle)) {
    let mut rng = Xorshift::new(name.len() as u64 * 7919 + 17);
    for _ in 0..10 {
        let (inputs, engine, oracle) = case(&mut rng);
        check(name, inputs, &engine, &oracle, &mut rng);
    }
}

fn dims(rng: &mut Xorshift) -> (usize, usize) {
    (1 + rng.below(4), 1 + rng.below(4))
}

#[test]
fn add_sub_mul_div() {
    run("add", |g| {
        let (a, b) = dims(g);
        (
            vec![
                input(&[a, b], g.vec(a * b, -2.0, 2.0)),
                input(&[a, b], g.vec(a * b, -2.0, 2.0)),
            ],
            Box::new(|t| t[0].add(&t[1]).unwrap()),
            Box::new(|v| v[0].iter().zip(&v[1]).map(|(x, y)| x + y).collect()),
        )
    });
    run("sub", |g| {
        let n = 1 + g.below(6);
        (
            vec![input(&[n], g.vec(n, -2.0, 2.0)), input(&[n], g.vec(n, -2.0, 2.0))],
            Box::new(|t| t[0].sub(&t[1]).unwrap()),
            Box::new(|v| v[0].iter().zip(&v[1]).map(|(x, y)| x - y).collect()),
        )
    });
    run("mul", |g| {
        let (a, b) = dims(g);
        (
            vec![
                input(&[a, b], g.vec(a * b, -2.0, 2.0)),
                input(&[a, b], g.vec(a * b, -2.0, 2.0)),
            ],
            Box::new(|t| t[0].mul(&t[1]).unwrap()),
            Box::new(|v| v[0].iter().zip(&v[1]).map(|(x, y)| x * y).collect()),
        )
    });
    run("div", |g| {
        let n = 1 + g.below(6);
        (
            vec![
                input(&[n], g.vec(n, -2.0, 2.0)),
                input(&[n], g.vec_away_from_zero(n, -2.0, 2.0, 0.5)),
            ],
            Box::new(|t| t[0].div(&t[1]).unwrap()),
            Box::new(|v| v[0].iter().zip(&v[1]).map(|(x, y)| x / y).collect()),
        )
    });
}

#[test]
fn scalar_broadcast() {
    run("broadcast mul", |g| {
        let n = 1 + g.below(6);
        (
            vec![input(&[n], g.vec(n, -2.0, 2.0)), input(&[], g.vec(1, -2.0, 2.0))],
            Box::new(|t| t[0].mul(&t[1]).unwrap()),
            Box::new(|v| v[0].iter().map(|x| x * v[1][0]).collect()),
        )
    });
    run("broadcast add", |g| {
        let n = 1 + g.below(6);
        (
            vec![input(&[], g.vec(1, -2.0, 2.0)), input(&[n], g.vec(n, -2.0, 2.0))],
            Box::new(|t| t[0].add(&t[1]).unwrap()),
            Box::new(|v| v[1].iter().map(|x| x + v[0][0]).collect()),
        )
    });
}

#[test]
fn unary_ops() {
    run("scale", |g| {
        let n = 1 + g.below(6);
        let c = g.uniform(-3.0, 3.0) as f32;
        (
            vec![input(&[n], g.vec(n, -2.0, 2.0))],
            Box::new(move |t| t[0].scale(c).unwrap()),
            Box::new(move |v| v[0].iter().map(|x| x * c as f64).collect()),
        )
    });
    run("neg", |g| {
        let n = 1 + g.below(6);
        (
            vec![input(&[n], g.vec(n, -2.0, 2.0))],
            Box::new(|t| t[0].neg().unwrap()),
            Box::new(|v| v[0].iter().map(|x| -x).collect()),
        )
    });
    run("relu", |g| {
        let (a, b) = dims(g);
        (
            vec![input(&[a, b], g.vec_away_from_zero(a * b, -2.0, 2.0, 0.01))],
            Box::new(|t| t[0].relu().unwrap()),
            Box::new(|v| r::relu(&v[0])),
        )
    });
    run("tanh", |g| {
        let (a, b) = dims(g);
        (
            vec![input(&[a, b], g.vec(a * b, -2.0, 2.0))],
            Box::new(|t| t[0].tanh().unwrap()),
            Box::new(|v| r::tanh(&v[0])),
        )
    });
    run("sigmoid", |g| {
        let n = 1 + g.below(6);
        (
            vec![input(&[n], g.vec(n, -3.0, 3.0))],
            Box::new(|t| t[0].sigmoid().unwrap()),
            Box::new(|v| r::sigmoid(&v[0])),
        )
    });
}

#[test]
fn matmul_transpose_linear() {
    run("matmul", |g| {
        let (m, k) = dims(g);
        let n = 1 + g.below(4);
        (
            vec![
                input(&[m, k], g.vec(m * k, -1.0, 1.0)),
                input(&[k, n], g.vec(k * n, -1.0, 1.0)),
            ],
            Box::new(|t| t[0].matmul(&t[1]).unwrap()),
            Box::new(move |v| r::matmul(&v[0], m, k, &v[1], n)),
        )
    });
    run("transpose", |g| {
        let (a, b) = dims(g);
        (
            vec![input(&[a, b], g.vec(a * b, -1.0, 1.0))],
            Box::new(|t| t[0].transpose().unwrap()),
            Box::new(move |v| r::transpose(&v[0], a, b)),
        )
    });
    run("linear", |g| {
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
    });
}

#[test]
fn reductions_and_losses() {
    run("sum", |g| {
        let (a, b) = dims(g);
        (
            vec![input(&[a, b], g.vec(a * b, -1.0, 1.0))],
            Box::new(|t| t[0].sum().unwrap()),
            Box::new(|v| vec![v[0].iter().sum()]),
        )
    });
    run("mean", |g| {
        let (a, b) = dims(g);
        (
            vec![input(&[a, b], g.vec(a * b, -1.0, 1.0))],
            Box::new(|t| t[0].mean().unwrap()),
            Box::new(|v| vec![v[0].iter().sum::<f64>() / v[0].len() as f64]),
        )
    });
    run("softmax", |g| {
        let (a, c) = (1 + g.below(4), 2 + g.below(3));
        (
            vec![input(&[a, c], g.vec(a * c, -2.0, 2.0))],
            Box::new(|t| t[0].softmax().unwrap()),
            Box::new(move |v| r::softmax_rows(&v[0], c)),
        )
    });
    run("cross_entropy", |g| {
        let (b, c) = (1 + g.below(4), 2 + g.below(3));
        let targets: Vec<usize> = (0..b).map(|_| g.below(c)).collect();
        let t2 = targets.clone();
        (
            vec![input(&[b, c], g.vec(b * c, -2.0, 2.0))],
            Box::new(move |t| t[0].cross_entropy(&targets).unwrap()),
            Box::new(move |v| vec![r::cross_entropy(&v[0], c, &t2)]),
        )
    });
    run("mse", |g| {
        let n = 1 + g.below(6);
        (
            vec![input(&[n, 1], g.vec(n, -2.0, 2.0)), input(&[n], g.vec(n, -2.0, 2.0))],
            Box::new(|t| t[0].mse(&t[1]).unwrap()),
            Box::new(|v| vec![r::mse(&v[0], &v[1])]),
        )
    });
}

#[test]
fn gathers_and_layout() {
    run("embedding", |g| {
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
    });
    run("mean_pool", |g| {
        let (b, l) = dims(g);
        let d = 1 + g.below(3);
        (
            vec![input(&[b, l, d], g.vec(b * l * d, -1.0, 1.0))],
            Box::new(|t| t[0].mean_pool().unwrap()),
            Box::new(move |v| r::mean_pool(&v[0], b, l, d)),
        )
    });
    run("flatten", |g| {
        let (b, l) = dims(g);
        let d = 1 + g.below(3);
        (
            vec![input(&[b, l, d], g.vec(b * l * d, -1.0, 1.0))],
            Box::new(|t| t[0].flatten().unwrap()),
            Box::new(|v| v[0].clone()),
        )
    });
    run("concat", |g| {
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
    });
    run("slice_cols", |g| {
        let rows = 1 + g.below(3);
        let cols = 2 + g.below(4);
        let start = g.below(cols - 1);
        let len = 1 + g.below(cols - start);
        (
            vec![input(&[rows, cols], g.vec(rows * cols, -1.0, 1.0))],
            Box::new(move |t| t[0].slice_cols(start, len).unwrap()),
            Box::new(move |v| r::slice_cols(&v[0], rows, cols, start, len)),
        )
    });
}
