//! SGD and Adam over shared parameters.

use crate::error::{Result, TensorError};
use crate::param::Param;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimKind {
    Sgd,
    Adam { beta1: f32, beta2: f32, eps: f32 },
}

impl OptimKind {
    pub fn adam() -> Self {
        OptimKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimKind::Sgd => "sgd",
            OptimKind::Adam { .. } => "adam",
        }
    }
}

/// Optimizer bound to a fixed list of parameters. Adam moments are kept
/// per parameter in list order.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptimKind,
    pub lr: f32,
    params: Vec<Param>,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimKind, lr: f32, params: Vec<Param>) -> Self {
        let (m, v) = match kind {
            OptimKind::Sgd => (vec![], vec![]),
            OptimKind::Adam { .. } => (
                params.iter().map(|p| vec![0.0; p.numel()]).collect(),
                params.iter().map(|p| vec![0.0; p.numel()]).collect(),
            ),
        };
        Optimizer {
            kind,
            lr,
            params,
            m,
            v,
            t: 0,
        }
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Sets every gradient to zero, creating the buffer where missing.
    pub fn zero_grad(&mut self) {
        for p in &self.params {
            let mut s = p.lock();
            let n = s.data.len();
            match &mut s.grad {
                Some(g) => g.iter_mut().for_each(|x| *x = 0.0),
                None => s.grad = Some(vec![0.0; n]),
            }
        }
    }

    pub fn step(&mut self) -> Result<()> {
        if let Some(i) = self.params.iter().position(|p| p.lock().grad.is_none()) {
            return Err(TensorError::MissingGrad(i));
        }
        self.t += 1;
        let lr = self.lr;
        match self.kind {
            OptimKind::Sgd => {
                for p in &self.params {
                    let mut s = p.lock();
                    let s = &mut *s;
                    let g = s.grad.as_ref().unwrap();
                    for (x, g) in s.data.iter_mut().zip(g) {
                        *x -= lr * g;
                    }
                }
            }
            OptimKind::Adam { beta1, beta2, eps } => {
                let bc1 = (1.0 - (beta1 as f64).powi(self.t as i32)) as f32;
                let bc2 = (1.0 - (beta2 as f64).powi(self.t as i32)) as f32;
                for (i, p) in self.params.iter().enumerate() {
                    let mut s = p.lock();
                    let s = &mut *s;
                    let g = s.grad.as_ref().unwrap();
                    let (m, v) = (&mut self.m[i], &mut self.v[i]);
                    for j in 0..s.data.len() {
                        m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                        v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                        let mhat = m[j] / bc1;
                        let vhat = v[j] / bc2;
                        s.data[j] -= lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_closed_form() {
        let p = Param::new(vec![], vec![1.0]);
        let mut opt = Optimizer::new(OptimKind::Sgd, 0.1, vec![p.clone()]);
        // Using the same parameter twice records two leaves; both feed its grad.
        let t = p.tensor();
        t.mul(&t).unwrap().backward().unwrap();
        assert_eq!(p.grad().unwrap(), vec![2.0]);
        opt.step().unwrap();
        assert!((p.data()[0] - 0.8).abs() < 1e-7);
    }

    #[test]
    fn step_without_grad_fails() {
        let p = Param::new(vec![1], vec![1.0]);
        let mut opt = Optimizer::new(OptimKind::adam(), 0.1, vec![p]);
        assert_eq!(opt.step(), Err(TensorError::MissingGrad(0)));
    }

    #[test]
    fn zero_grad_keeps_values() {
        let p = Param::new(vec![2], vec![1.0, 2.0]);
        p.tensor().sum().unwrap().backward().unwrap();
        let mut opt = Optimizer::new(OptimKind::Sgd, 0.1, vec![p.clone()]);
        opt.zero_grad();
        assert_eq!(p.grad().unwrap(), vec![0.0, 0.0]);
        assert_eq!(p.data(), vec![1.0, 2.0]);
    }
}
