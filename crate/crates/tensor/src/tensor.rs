//! Immutable f32 tensors and their differentiable operations.

use std::fmt;
use std::rc::Rc;

use crate::error::{mismatch, Result, TensorError};
use crate::param::Param;
use crate::tape::{Op, Tape};

/// Element interpretation. Integer tensors hold exact small integers in
/// f32 storage (ids, labels).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    Int,
}

#[derive(Clone)]
pub(crate) enum Origin {
    Const,
    Param(Param),
    Node(Tape, usize),
}

#[derive(Clone)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Rc<[f32]>,
    dtype: DType,
    origin: Origin,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor({:?}, {:?})", self.shape, &self.data[..])
    }
}

pub const MAX_RANK: usize = 3;

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.len() > MAX_RANK {
        return Err(TensorError::InvalidShape {
            shape: shape.to_vec(),
            reason: format!("rank is capped at {MAX_RANK}"),
        });
    }
    if shape.contains(&0) {
        return Err(TensorError::InvalidShape {
            shape: shape.to_vec(),
            reason: "dimensions must be positive".into(),
        });
    }
    Ok(())
}

impl Tensor {
    pub(crate) fn from_parts(shape: Vec<usize>, data: Rc<[f32]>, dtype: DType, origin: Origin) -> Self {
        Tensor {
            shape,
            data,
            dtype,
            origin,
        }
    }

    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Tensor> {
        check_shape(&shape)?;
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(TensorError::InvalidShape {
                shape,
                reason: format!("{} elements given", data.len()),
            });
        }
        Ok(Tensor::from_parts(shape, data.into(), DType::F32, Origin::Const))
    }

    pub fn scalar(v: f32) -> Tensor {
        Tensor::from_parts(vec![], Rc::from([v].as_slice()), DType::F32, Origin::Const)
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Tensor> {
        let n = shape.iter().product();
        Tensor::new(shape, vec![0.0; n])
    }

    pub fn from_ints(shape: Vec<usize>, values: &[i64]) -> Result<Tensor> {
        let mut t = Tensor::new(shape, values.iter().map(|&v| v as f32).collect())?;
        t.dtype = DType::Int;
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn is_scalar(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn requires_grad(&self) -> bool {
        match &self.origin {
            Origin::Const => false,
            Origin::Param(_) => true,
            Origin::Node(tape, id) => tape.0.borrow().nodes[*id].needs_grad,
        }
    }

    /// The tape this tensor was recorded on, if any.
    pub fn tape(&self) -> Option<Tape> {
        match &self.origin {
            Origin::Node(t, _) => Some(t.clone()),
            _ => None,
        }
    }

    pub fn param(&self) -> Option<&Param> {
        match &self.origin {
            Origin::Param(p) => Some(p),
            _ => None,
        }
    }

    /// Same values, no gradient tracking.
    pub fn detach(&self) -> Tensor {
        Tensor::from_parts(self.shape.clone(), self.data.clone(), self.dtype, Origin::Const)
    }

    pub fn item(&self) -> Result<f32> {
        if self.data.len() == 1 {
            Ok(self.data[0])
        } else {
            Err(TensorError::NotScalar(self.shape.clone()))
        }
    }

    /// Integer view of the elements; fails on non-integral values.
    pub fn to_indices(&self, what: &'static str, bound: usize) -> Result<Vec<usize>> {
        self.data
            .iter()
            .map(|&v| {
                if v.fract() != 0.0 || v < 0.0 || v as usize >= bound {
                    Err(TensorError::IndexOutOfRange {
                        what,
                        index: v as i64,
                        bound,
                    })
                } else {
                    Ok(v as usize)
                }
            })
            .collect()
    }

    /// Index of the largest element in each row of the last axis; ties go
    /// to the lowest index.
    pub fn argmax_last(&self) -> Vec<usize> {
        let c = *self.shape.last().unwrap_or(&1);
        self.data
            .chunks(c)
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    /// Runs the reverse sweep from this scalar, accumulating into every
    /// parameter leaf reachable on its tape.
    pub fn backward(&self) -> Result<()> {
        if !self.is_scalar() {
            return Err(TensorError::NotScalar(self.shape.clone()));
        }
        match &self.origin {
            Origin::Node(tape, id) => tape.backward(*id),
            _ => Err(TensorError::NotTracked),
        }
    }

    // ---- elementwise ----------------------------------------------------

    fn binary(
        &self,
        other: &Tensor,
        name: &'static str,
        f: impl Fn(f32, f32) -> f32,
        op: fn(usize, usize) -> Op,
    ) -> Result<Tensor> {
        let shape = if self.shape == other.shape || other.is_scalar() {
            self.shape.clone()
        } else if self.is_scalar() {
            other.shape.clone()
        } else {
            return Err(mismatch(name, &self.shape, &other.shape));
        };
        let n: usize = shape.iter().product();
        let (a, b) = (&self.data, &other.data);
        let data = (0..n)
            .map(|i| {
                let x = a[if a.len() == 1 { 0 } else { i }];
                let y = b[if b.len() == 1 { 0 } else { i }];
                f(x, y)
            })
            .collect();
        record(&[self, other], shape, data, |ids| op(ids[0], ids[1]))
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, "add", |x, y| x + y, Op::Add)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, "sub", |x, y| x - y, Op::Sub)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, "mul", |x, y| x * y, Op::Mul)
    }

    pub fn div(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, "div", |x, y| x / y, Op::Div)
    }

    fn unary(&self, f: impl Fn(f32) -> f32, op: impl FnOnce(usize) -> Op) -> Result<Tensor> {
        let data = self.data.iter().map(|&x| f(x)).collect();
        record(&[self], self.shape.clone(), data, |ids| op(ids[0]))
    }

    pub fn scale(&self, c: f32) -> Result<Tensor> {
        self.unary(|x| x * c, |a| Op::Scale(a, c))
    }

    pub fn neg(&self) -> Result<Tensor> {
        self.unary(|x| -x, Op::Neg)
    }

    pub fn relu(&self) -> Result<Tensor> {
        self.unary(|x| if x > 0.0 { x } else { 0.0 }, Op::Relu)
    }

    pub fn tanh(&self) -> Result<Tensor> {
        self.unary(f32::tanh, Op::Tanh)
    }

    pub fn sigmoid(&self) -> Result<Tensor> {
        self.unary(|x| 1.0 / (1.0 + (-x).exp()), Op::Sigmoid)
    }

    // ---- linear algebra -------------------------------------------------

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[1] != other.shape[0] {
            return Err(mismatch("matmul", &self.shape, &other.shape));
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        let (a, b) = (&self.data, &other.data);
        let mut out = vec![0.0f32; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut s = 0.0f32;
                for p in 0..k {
                    s += a[i * k + p] * b[p * n + j];
                }
                out[i * n + j] = s;
            }
        }
        record(&[self, other], vec![m, n], out, |ids| Op::MatMul(ids[0], ids[1]))
    }

    pub fn transpose(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(TensorError::InvalidShape {
                shape: self.shape.clone(),
                reason: "transpose needs rank 2".into(),
            });
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0f32; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        record(&[self], vec![c, r], out, |ids| Op::Transpose(ids[0]))
    }

    /// `self · weightᵀ + bias` with `self` (rows × in), `weight` (out × in)
    /// and `bias` (out).
    pub fn linear(&self, weight: &Tensor, bias: Option<&Tensor>) -> Result<Tensor> {
        if self.rank() != 2 || weight.rank() != 2 || self.shape[1] != weight.shape[1] {
            return Err(mismatch("linear", &self.shape, &weight.shape));
        }
        let (rows, inp, out) = (self.shape[0], self.shape[1], weight.shape[0]);
        if let Some(b) = bias {
            if b.shape != [out] {
                return Err(mismatch("linear bias", &b.shape, &[out]));
            }
        }
        let (x, w) = (&self.data, &weight.data);
        let mut y = vec![0.0f32; rows * out];
        for r in 0..rows {
            for o in 0..out {
                let mut s = 0.0f32;
                for i in 0..inp {
                    s += x[r * inp + i] * w[o * inp + i];
                }
                if let Some(b) = bias {
                    s += b.data[o];
                }
                y[r * out + o] = s;
            }
        }
        match bias {
            Some(b) => record(&[self, weight, b], vec![rows, out], y, |ids| Op::Linear {
                x: ids[0],
                w: ids[1],
                b: Some(ids[2]),
            }),
            None => record(&[self, weight], vec![rows, out], y, |ids| Op::Linear {
                x: ids[0],
                w: ids[1],
                b: None,
            }),
        }
    }

    // ---- reductions -----------------------------------------------------

    pub fn sum(&self) -> Result<Tensor> {
        let s: f32 = self.data.iter().sum();
        record(&[self], vec![], vec![s], |ids| Op::Sum(ids[0]))
    }

    pub fn mean(&self) -> Result<Tensor> {
        let s: f32 = self.data.iter().sum();
        let m = s / self.data.len() as f32;
        record(&[self], vec![], vec![m], |ids| Op::Mean(ids[0]))
    }

    /// Softmax over the last axis.
    pub fn softmax(&self) -> Result<Tensor> {
        let c = *self.shape.last().unwrap_or(&1);
        let mut out = Vec::with_capacity(self.data.len());
        for row in self.data.chunks(c) {
            softmax_row(row, &mut out);
        }
        record(&[self], self.shape.clone(), out, |ids| Op::Softmax(ids[0]))
    }

    /// Mean over the batch of −log softmax(logits)[target].
    pub fn cross_entropy(&self, targets: &[usize]) -> Result<Tensor> {
        if self.rank() != 2 || self.shape[0] != targets.len() {
            return Err(mismatch("cross_entropy", &self.shape, &[targets.len()]));
        }
        let c = self.shape[1];
        let mut probs = Vec::with_capacity(self.data.len());
        let mut total = 0.0f32;
        for (row, &t) in self.data.chunks(c).zip(targets) {
            if t >= c {
                return Err(TensorError::IndexOutOfRange {
                    what: "target class",
                    index: t as i64,
                    bound: c,
                });
            }
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let lse = row.iter().map(|x| (x - max).exp()).sum::<f32>().ln() + max;
            total += lse - row[t];
            softmax_row(row, &mut probs);
        }
        let loss = (total / targets.len() as f32).max(0.0);
        let targets = targets.to_vec();
        record(&[self], vec![], vec![loss], move |ids| Op::CrossEntropy {
            logits: ids[0],
            targets,
            probs,
        })
    }

    /// Mean squared error; both operands must hold the same number of
    /// elements.
    pub fn mse(&self, target: &Tensor) -> Result<Tensor> {
        if self.numel() != target.numel() {
            return Err(mismatch("mse", &self.shape, &target.shape));
        }
        let n = self.numel() as f32;
        let s: f32 = self
            .data
            .iter()
            .zip(target.data.iter())
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        record(&[self, target], vec![], vec![s / n], |ids| Op::Mse {
            pred: ids[0],
            target: ids[1],
        })
    }

    // ---- gathers and layout ---------------------------------------------

    /// Looks up rows of `self` (V × D) for integer `ids` (B × L), giving
    /// (B × L × D).
    pub fn embedding(&self, ids: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || ids.rank() != 2 {
            return Err(mismatch("embedding", &self.shape, &ids.shape));
        }
        let (v, d) = (self.shape[0], self.shape[1]);
        let idx = ids.to_indices("token id", v)?;
        let mut out = Vec::with_capacity(idx.len() * d);
        for &i in &idx {
            out.extend_from_slice(&self.data[i * d..(i + 1) * d]);
        }
        let shape = vec![ids.shape[0], ids.shape[1], d];
        record(&[self], shape, out, move |ids| Op::Embedding {
            table: ids[0],
            ids: idx,
        })
    }

    /// Average over the middle axis of (B × L × D), pads included.
    pub fn mean_pool(&self) -> Result<Tensor> {
        if self.rank() != 3 {
            return Err(TensorError::InvalidShape {
                shape: self.shape.clone(),
                reason: "meanPool needs (batch, length, dim)".into(),
            });
        }
        let (b, l, d) = (self.shape[0], self.shape[1], self.shape[2]);
        let mut out = vec![0.0f32; b * d];
        for i in 0..b {
            for k in 0..d {
                let mut s = 0.0f32;
                for j in 0..l {
                    s += self.data[(i * l + j) * d + k];
                }
                out[i * d + k] = s / l as f32;
            }
        }
        record(&[self], vec![b, d], out, |ids| Op::MeanPool(ids[0]))
    }

    pub fn reshape(&self, shape: Vec<usize>) -> Result<Tensor> {
        check_shape(&shape)?;
        if shape.iter().product::<usize>() != self.numel() {
            return Err(mismatch("reshape", &self.shape, &shape));
        }
        let data = self.data.to_vec();
        record(&[self], shape, data, |ids| Op::Reshape(ids[0]))
    }

    /// (B × ...) to (B × rest).
    pub fn flatten(&self) -> Result<Tensor> {
        match self.shape.as_slice() {
            [] => self.reshape(vec![1, 1]),
            [n] => self.reshape(vec![1, *n]),
            [b, rest @ ..] => self.reshape(vec![*b, rest.iter().product()]),
        }
    }

    /// Concatenation of rank-2 tensors along the last axis.
    pub fn concat(parts: &[Tensor]) -> Result<Tensor> {
        let first = parts.first().ok_or_else(|| {
            TensorError::InvalidArgument("concat needs at least one tensor".into())
        })?;
        let rows = first.shape.first().copied().unwrap_or(0);
        for p in parts {
            if p.rank() != 2 || p.shape[0] != rows {
                return Err(mismatch("concat", &first.shape, &p.shape));
            }
        }
        let total: usize = parts.iter().map(|p| p.shape[1]).sum();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for p in parts {
                let w = p.shape[1];
                out.extend_from_slice(&p.data[r * w..(r + 1) * w]);
            }
        }
        let refs: Vec<&Tensor> = parts.iter().collect();
        record(&refs, vec![rows, total], out, |ids| Op::Concat(ids.to_vec()))
    }

    /// Columns `start..start + len` of a rank-2 tensor.
    pub fn slice_cols(&self, start: usize, len: usize) -> Result<Tensor> {
        if self.rank() != 2 || start + len > self.shape[1] || len == 0 {
            return Err(TensorError::IndexOutOfRange {
                what: "column",
                index: (start + len) as i64,
                bound: self.shape.get(1).copied().unwrap_or(0),
            });
        }
        let (rows, cols) = (self.shape[0], self.shape[1]);
        let mut out = Vec::with_capacity(rows * len);
        for r in 0..rows {
            out.extend_from_slice(&self.data[r * cols + start..r * cols + start + len]);
        }
        record(&[self], vec![rows, len], out, |ids| Op::SliceCols {
            x: ids[0],
            start,
        })
    }
}

fn softmax_row(row: &[f32], out: &mut Vec<f32>) {
    let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let start = out.len();
    let mut sum = 0.0f32;
    for &x in row {
        let e = (x - max).exp();
        sum += e;
        out.push(e);
    }
    for v in &mut out[start..] {
        *v /= sum;
    }
}

/// Builds the result tensor, recording a node when any input is tracked.
fn record(
    inputs: &[&Tensor],
    shape: Vec<usize>,
    data: Vec<f32>,
    make: impl FnOnce(&[usize]) -> Op,
) -> Result<Tensor> {
    let data: Rc<[f32]> = data.into();
    if !inputs.iter().any(|t| t.requires_grad()) {
        return Ok(Tensor::from_parts(shape, data, DType::F32, Origin::Const));
    }
    let mut tape: Option<Tape> = None;
    for t in inputs {
        if let Origin::Node(tp, _) = &t.origin {
            match &tape {
                Some(existing) if !existing.same(tp) => return Err(TensorError::TapeMismatch),
                Some(_) => {}
                None => tape = Some(tp.clone()),
            }
        }
    }
    let tape = tape.unwrap_or_default();
    let ids: Vec<usize> = inputs
        .iter()
        .map(|t| match &t.origin {
            Origin::Node(_, id) => *id,
            Origin::Param(p) => tape.push(Op::Leaf(p.clone()), t.shape.clone(), t.data.clone()),
            Origin::Const => tape.push(Op::Const, t.shape.clone(), t.data.clone()),
        })
        .collect();
    let id = tape.push(make(&ids), shape.clone(), data.clone());
    Ok(Tensor::from_parts(shape, data, DType::F32, Origin::Node(tape, id)))
}

/// Records a parameter leaf on `tape` explicitly, so one forward pass can
/// share a single tape and a single leaf per parameter.
pub fn leaf_on(tape: &Tape, p: &Param) -> Tensor {
    let t = p.tensor();
    let id = tape.push(Op::Leaf(p.clone()), t.shape.clone(), t.data.clone());
    Tensor::from_parts(t.shape, t.data, DType::F32, Origin::Node(tape.clone(), id))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f32]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn elementwise_examples() {
        assert_eq!(t(&[2], &[1., 2.]).add(&t(&[2], &[3., 4.])).unwrap().data(), &[4., 6.]);
        assert_eq!(t(&[3], &[-1., 0., 2.]).relu().unwrap().data(), &[0., 0., 2.]);
        assert_eq!(Tensor::scalar(0.0).tanh().unwrap().data(), &[0.0]);
        assert!(t(&[2], &[1., 2.]).add(&t(&[3], &[1., 2., 3.])).is_err());
        assert_eq!(t(&[2], &[1., 2.]).mul(&Tensor::scalar(3.0)).unwrap().data(), &[3., 6.]);
    }

    #[test]
    fn matmul_examples() {
        let i2 = t(&[2, 2], &[1., 0., 0., 1.]);
        let m = t(&[2, 2], &[1., 2., 3., 4.]);
        assert_eq!(i2.matmul(&m).unwrap().data(), m.data());
        let r = t(&[1, 2], &[1., 2.]).matmul(&t(&[2, 1], &[3., 4.])).unwrap();
        assert_eq!(r.shape(), &[1, 1]);
        assert_eq!(r.data(), &[11.]);
        assert!(matches!(
            m.matmul(&t(&[3, 1], &[1., 1., 1.])),
            Err(TensorError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn softmax_and_cross_entropy() {
        let s = t(&[3], &[1., 1., 1.]).softmax().unwrap();
        for v in s.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-7);
        }
        let ce = t(&[1, 2], &[0., 0.]).cross_entropy(&[0]).unwrap();
        assert!((ce.item().unwrap() - std::f32::consts::LN_2).abs() < 1e-6);
        assert!(matches!(
            t(&[1, 2], &[0., 0.]).cross_entropy(&[2]),
            Err(TensorError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn embedding_and_pool() {
        let table = t(&[2, 1], &[5., 7.]);
        let ids = Tensor::from_ints(vec![1, 2], &[0, 1]).unwrap();
        let e = table.embedding(&ids).unwrap();
        assert_eq!(e.shape(), &[1, 2, 1]);
        assert_eq!(e.data(), &[5., 7.]);
        let p = t(&[1, 2, 1], &[2., 4.]).mean_pool().unwrap();
        assert_eq!(p.shape(), &[1, 1]);
        assert_eq!(p.data(), &[3.]);
        let bad = Tensor::from_ints(vec![1, 1], &[2]).unwrap();
        assert!(matches!(table.embedding(&bad), Err(TensorError::IndexOutOfRange { .. })));
    }

    #[test]
    fn backward_linear_and_quadratic() {
        let x = Param::new(vec![], vec![2.0]);
        x.tensor().scale(3.0).unwrap().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![3.0]);

        let x = Param::new(vec![2], vec![1.0, 2.0]);
        let xt = x.tensor();
        let tape = Tape::new();
        let leaf = leaf_on(&tape, &x);
        leaf.mul(&leaf).unwrap().sum().unwrap().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0, 4.0]);
        drop(xt);
    }

    #[test]
    fn second_backward_is_an_error() {
        let x = Param::new(vec![], vec![1.0]);
        let y = x.tensor().scale(2.0).unwrap();
        y.backward().unwrap();
        assert_eq!(y.backward(), Err(TensorError::TapeConsumed));
    }

    #[test]
    fn backward_needs_scalar_and_tape() {
        let x = Param::new(vec![2], vec![1.0, 1.0]);
        let y = x.tensor().scale(2.0).unwrap();
        assert!(matches!(y.backward(), Err(TensorError::NotScalar(_))));
        assert_eq!(Tensor::scalar(1.0).backward(), Err(TensorError::NotTracked));
    }

    #[test]
    fn mixing_tapes_is_rejected() {
        let a = Param::new(vec![], vec![1.0]);
        let x = a.tensor().scale(2.0).unwrap();
        let y = a.tensor().scale(3.0).unwrap();
        assert_eq!(x.add(&y).unwrap_err(), TensorError::TapeMismatch);
    }

    #[test]
    fn constants_do_not_record() {
        let y = t(&[2], &[1., 2.]).scale(2.0).unwrap();
        assert!(!y.requires_grad());
        assert!(y.tape().is_none());
    }

    #[test]
    fn rank_is_capped() {
        assert!(Tensor::zeros(vec![1, 1, 1, 1]).is_err());
    }
}
