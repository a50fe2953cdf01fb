//! The gradient tape: an append-only list of nodes in evaluation order.

use std::cell::RefCell;
use std::rc::Rc;

use crate::error::{Result, TensorError};
use crate::param::Param;

#[derive(Debug)]
pub(crate) enum Op {
    Leaf(Param),
    Const,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Scale(usize, f32),
    Neg(usize),
    Relu(usize),
    Tanh(usize),
    Sigmoid(usize),
    MatMul(usize, usize),
    Transpose(usize),
    Linear {
        x: usize,
        w: usize,
        b: Option<usize>,
    },
    Sum(usize),
    Mean(usize),
    Softmax(usize),
    CrossEntropy {
        logits: usize,
        targets: Vec<usize>,
        probs: Vec<f32>,
    },
    Mse {
        pred: usize,
        target: usize,
    },
    Embedding {
        table: usize,
        ids: Vec<usize>,
    },
    MeanPool(usize),
    Reshape(usize),
    Concat(Vec<usize>),
    SliceCols {
        x: usize,
        start: usize,
    },
}

#[derive(Debug)]
pub(crate) struct Node {
    pub op: Op,
    pub shape: Vec<usize>,
    pub value: Rc<[f32]>,
    pub needs_grad: bool,
}

#[derive(Debug, Default)]
pub(crate) struct TapeInner {
    pub nodes: Vec<Node>,
    pub consumed: bool,
}

/// Shared handle to one tape. Cheap to clone.
#[derive(Debug, Clone, Default)]
pub struct Tape(pub(crate) Rc<RefCell<TapeInner>>);

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn same(&self, other: &Tape) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }

    pub fn len(&self) -> usize {
        self.0.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_consumed(&self) -> bool {
        self.0.borrow().consumed
    }

    pub(crate) fn push(&self, op: Op, shape: Vec<usize>, value: Rc<[f32]>) -> usize {
        let mut t = self.0.borrow_mut();
        let needs_grad = match &op {
            Op::Leaf(_) => true,
            Op::Const => false,
            _ => op_inputs(&op).iter().any(|&i| t.nodes[i].needs_grad),
        };
        t.nodes.push(Node {
            op,
            shape,
            value,
            needs_grad,
        });
        t.nodes.len() - 1
    }

    /// Reverse sweep from `root`, which must be a scalar node.
    pub(crate) fn backward(&self, root: usize) -> Result<()> {
        let mut t = self.0.borrow_mut();
        if t.consumed {
            return Err(TensorError::TapeConsumed);
        }
        t.consumed = true;
        let nodes = &t.nodes;
        let mut grads: Vec<Option<Vec<f32>>> = (0..=root).map(|_| None).collect();
        grads[root] = Some(vec![1.0]);
        for id in (0..=root).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if !node.needs_grad {
                continue;
            }
            let mut send = |to: usize, delta: Vec<f32>| {
                if !nodes[to].needs_grad {
                    return;
                }
                match &mut grads[to] {
                    Some(acc) => {
                        for (a, d) in acc.iter_mut().zip(&delta) {
                            *a += d;
                        }
                    }
                    slot @ None => *slot = Some(delta),
                }
            };
            let val = |i: usize| -> &[f32] { &nodes[i].value };
            match &node.op {
                Op::Leaf(p) => p.accumulate_grad(&g),
                Op::Const => {}
                Op::Add(a, b) => {
                    let (ga, gb) = binary_grads(&g, val(*a), val(*b), |g, _, _| g, |g, _, _| g);
                    send(*a, ga);
                    send(*b, gb);
                }
                Op::Sub(a, b) => {
                    let (ga, gb) = binary_grads(&g, val(*a), val(*b), |g, _, _| g, |g, _, _| -g);
                    send(*a, ga);
                    send(*b, gb);
                }
                Op::Mul(a, b) => {
                    let (ga, gb) =
                        binary_grads(&g, val(*a), val(*b), |g, _, y| g * y, |g, x, _| g * x);
                    send(*a, ga);
                    send(*b, gb);
                }
                Op::Div(a, b) => {
                    let (ga, gb) = binary_grads(
                        &g,
                        val(*a),
                        val(*b),
                        |g, _, y| g / y,
                        |g, x, y| -g * x / (y * y),
                    );
                    send(*a, ga);
                    send(*b, gb);
                }
                Op::Scale(a, c) => send(*a, g.iter().map(|x| x * c).collect()),
                Op::Neg(a) => send(*a, g.iter().map(|x| -x).collect()),
                Op::Relu(a) => {
                    let x = val(*a);
                    send(
                        *a,
                        g.iter()
                            .zip(x)
                            .map(|(g, x)| if *x > 0.0 { *g } else { 0.0 })
                            .collect(),
                    )
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    send(*a, g.iter().zip(y.iter()).map(|(g, y)| g * (1.0 - y * y)).collect())
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    send(*a, g.iter().zip(y.iter()).map(|(g, y)| g * y * (1.0 - y)).collect())
                }
                Op::MatMul(a, b) => {
                    let (m, k) = (nodes[*a].shape[0], nodes[*a].shape[1]);
                    let n = nodes[*b].shape[1];
                    let (av, bv) = (val(*a), val(*b));
                    let mut ga = vec![0.0f32; m * k];
                    for i in 0..m {
                        for p in 0..k {
                            let mut s = 0.0f32;
                            for j in 0..n {
                                s += g[i * n + j] * bv[p * n + j];
                            }
                            ga[i * k + p] = s;
                        }
                    }
                    let mut gb = vec![0.0f32; k * n];
                    for p in 0..k {
                        for j in 0..n {
                            let mut s = 0.0f32;
                            for i in 0..m {
                                s += av[i * k + p] * g[i * n + j];
                            }
                            gb[p * n + j] = s;
                        }
                    }
                    send(*a, ga);
                    send(*b, gb);
                }
                Op::Transpose(a) => {
                    let (r, c) = (nodes[*a].shape[0], nodes[*a].shape[1]);
                    let mut ga = vec![0.0f32; r * c];
                    for i in 0..r {
                        for j in 0..c {
                            ga[i * c + j] = g[j * r + i];
                        }
                    }
                    send(*a, ga);
                }
                Op::Linear { x, w, b } => {
                    let (rows, inp) = (nodes[*x].shape[0], nodes[*x].shape[1]);
                    let out = nodes[*w].shape[0];
                    let (xv, wv) = (val(*x), val(*w));
                    let mut gx = vec![0.0f32; rows * inp];
                    for r in 0..rows {
                        for i in 0..inp {
                            let mut s = 0.0f32;
                            for o in 0..out {
                                s += g[r * out + o] * wv[o * inp + i];
                            }
                            gx[r * inp + i] = s;
                        }
                    }
                    let mut gw = vec![0.0f32; out * inp];
                    for o in 0..out {
                        for i in 0..inp {
                            let mut s = 0.0f32;
                            for r in 0..rows {
                                s += g[r * out + o] * xv[r * inp + i];
                            }
                            gw[o * inp + i] = s;
                        }
                    }
                    if let Some(b) = b {
                        let mut gb = vec![0.0f32; out];
                        for r in 0..rows {
                            for o in 0..out {
                                gb[o] += g[r * out + o];
                            }
                        }
                        send(*b, gb);
                    }
                    send(*x, gx);
                    send(*w, gw);
                }
                Op::Sum(a) => send(*a, vec![g[0]; val(*a).len()]),
                Op::Mean(a) => {
                    let n = val(*a).len();
                    send(*a, vec![g[0] / n as f32; n]);
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let c = *node.shape.last().unwrap_or(&1);
                    let mut ga = vec![0.0f32; y.len()];
                    for (row, (yr, gr)) in y.chunks(c).zip(g.chunks(c)).enumerate() {
                        let dot: f32 = yr.iter().zip(gr).map(|(y, g)| y * g).sum();
                        for j in 0..c {
                            ga[row * c + j] = yr[j] * (gr[j] - dot);
                        }
                    }
                    send(*a, ga);
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    probs,
                } => {
                    let b = targets.len();
                    let c = probs.len() / b.max(1);
                    let scale = g[0] / b as f32;
                    let mut gl = vec![0.0f32; probs.len()];
                    for (r, &t) in targets.iter().enumerate() {
                        for j in 0..c {
                            let onehot = if j == t { 1.0 } else { 0.0 };
                            gl[r * c + j] = (probs[r * c + j] - onehot) * scale;
                        }
                    }
                    send(*logits, gl);
                }
                Op::Mse { pred, target } => {
                    let (p, t) = (val(*pred), val(*target));
                    let n = p.len() as f32;
                    let gp: Vec<f32> =
                        p.iter().zip(t).map(|(p, t)| g[0] * 2.0 * (p - t) / n).collect();
                    let gt = gp.iter().map(|x| -x).collect();
                    send(*pred, gp);
                    send(*target, gt);
                }
                Op::Embedding { table, ids } => {
                    let d = nodes[*table].shape[1];
                    let mut gt = vec![0.0f32; val(*table).len()];
                    for (pos, &id) in ids.iter().enumerate() {
                        for k in 0..d {
                            gt[id * d + k] += g[pos * d + k];
                        }
                    }
                    send(*table, gt);
                }
                Op::MeanPool(a) => {
                    let s = &nodes[*a].shape;
                    let (b, l, d) = (s[0], s[1], s[2]);
                    let mut ga = vec![0.0f32; b * l * d];
                    for i in 0..b {
                        for j in 0..l {
                            for k in 0..d {
                                ga[(i * l + j) * d + k] = g[i * d + k] / l as f32;
                            }
                        }
                    }
                    send(*a, ga);
                }
                Op::Reshape(a) => send(*a, g),
                Op::Concat(parts) => {
                    let rows = node.shape[0];
                    let total = node.shape[1];
                    let mut offset = 0;
                    for &p in parts {
                        let w = nodes[p].shape[1];
                        let mut gp = vec![0.0f32; rows * w];
                        for r in 0..rows {
                            gp[r * w..(r + 1) * w]
                                .copy_from_slice(&g[r * total + offset..r * total + offset + w]);
                        }
                        offset += w;
                        send(p, gp);
                    }
                }
                Op::SliceCols { x, start } => {
                    let (rows, cols) = (nodes[*x].shape[0], nodes[*x].shape[1]);
                    let w = node.shape[1];
                    let mut gx = vec![0.0f32; rows * cols];
                    for r in 0..rows {
                        for j in 0..w {
                            gx[r * cols + start + j] = g[r * w + j];
                        }
                    }
                    send(*x, gx);
                }
            }
        }
        Ok(())
    }
}

fn op_inputs(op: &Op) -> Vec<usize> {
    match op {
        Op::Leaf(_) | Op::Const => vec![],
        Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) | Op::MatMul(a, b) => {
            vec![*a, *b]
        }
        Op::Scale(a, _)
        | Op::Neg(a)
        | Op::Relu(a)
        | Op::Tanh(a)
        | Op::Sigmoid(a)
        | Op::Transpose(a)
        | Op::Sum(a)
        | Op::Mean(a)
        | Op::Softmax(a)
        | Op::MeanPool(a)
        | Op::Reshape(a) => vec![*a],
        Op::Linear { x, w, b } => {
            let mut v = vec![*x, *w];
            v.extend(b);
            v
        }
        Op::CrossEntropy { logits, .. } => vec![*logits],
        Op::Mse { pred, target } => vec![*pred, *target],
        Op::Embedding { table, .. } => vec![*table],
        Op::Concat(parts) => parts.clone(),
        Op::SliceCols { x, .. } => vec![*x],
    }
}

/// Gradients of an elementwise binary op with scalar broadcasting. A
/// length-1 operand against a longer one receives the summed gradient.
fn binary_grads(
    g: &[f32],
    a: &[f32],
    b: &[f32],
    da: impl Fn(f32, f32, f32) -> f32,
    db: impl Fn(f32, f32, f32) -> f32,
) -> (Vec<f32>, Vec<f32>) {
    let mut ga = vec![0.0f32; a.len()];
    let mut gb = vec![0.0f32; b.len()];
    for (i, &gi) in g.iter().enumerate() {
        let ia = if a.len() == 1 { 0 } else { i };
        let ib = if b.len() == 1 { 0 } else { i };
        ga[ia] += da(gi, a[ia], b[ib]);
        gb[ib] += db(gi, a[ia], b[ib]);
    }
    (ga, gb)
}
