//! Trainable parameter buffers shared between models and optimizers.

use std::fmt;
use std::rc::Rc;
use std::sync::{Arc, Mutex, MutexGuard};

use crate::tensor::{DType, Origin, Tensor};

#[derive(Debug)]
pub struct ParamState {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
    pub grad: Option<Vec<f32>>,
}

/// A shared, mutable parameter. Clones alias the same buffer; use
/// [`Param::deep_clone`] for an independent copy.
#[derive(Clone)]
pub struct Param(Arc<Mutex<ParamState>>);

impl fmt::Debug for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.lock();
        write!(f, "Param({:?})", s.shape)
    }
}

impl Param {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "param data does not match shape"
        );
        Param(Arc::new(Mutex::new(ParamState {
            shape,
            data,
            grad: None,
        })))
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Param::new(shape, vec![0.0; n])
    }

    pub fn lock(&self) -> MutexGuard<'_, ParamState> {
        // A poisoned lock only means another thread panicked mid-update;
        // the buffer itself is still a valid f32 array.
        self.0.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn shape(&self) -> Vec<usize> {
        self.lock().shape.clone()
    }

    pub fn numel(&self) -> usize {
        self.lock().data.len()
    }

    pub fn data(&self) -> Vec<f32> {
        self.lock().data.clone()
    }

    pub fn grad(&self) -> Option<Vec<f32>> {
        self.lock().grad.clone()
    }

    pub fn set_data(&self, data: Vec<f32>) {
        let mut s = self.lock();
        assert_eq!(s.data.len(), data.len(), "set_data size mismatch");
        s.data = data;
    }

    pub fn clear_grad(&self) {
        self.lock().grad = None;
    }

    pub(crate) fn accumulate_grad(&self, g: &[f32]) {
        let mut s = self.lock();
        match &mut s.grad {
            Some(acc) => {
                for (a, x) in acc.iter_mut().zip(g) {
                    *a += x;
                }
            }
            None => s.grad = Some(g.to_vec()),
        }
    }

    pub fn same(&self, other: &Param) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Independent copy of the values; the gradient is not copied.
    pub fn deep_clone(&self) -> Param {
        let s = self.lock();
        Param::new(s.shape.clone(), s.data.clone())
    }

    /// A tensor view of the current values that records a leaf on use.
    pub fn tensor(&self) -> Tensor {
        let s = self.lock();
        Tensor::from_parts(
            s.shape.clone(),
            Rc::from(s.data.as_slice()),
            DType::F32,
            Origin::Param(self.clone()),
        )
    }
}
