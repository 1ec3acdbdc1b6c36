use crate::error::{Error, Result};

/// Dense `(channels, height, width)` array of `f64` with an optional
/// gradient buffer of the same shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: (usize, usize, usize),
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self {
            shape: (c, h, w),
            data: vec![0.0; c * h * w],
            grad: None,
        }
    }

    pub fn from_vec(c: usize, h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != c * h * w {
            return Err(Error::Dimension(format!(
                "tensor data of length {} for shape {c}x{h}x{w}",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self {
            shape: (c, h, w),
            data,
            grad: None,
        })
    }

    /// Same tensor with a zeroed gradient buffer attached.
    pub fn requiring_grad(mut self) -> Self {
        self.grad = Some(vec![0.0; self.data.len()]);
        self
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    pub fn channels(&self) -> usize {
        self.shape.0
    }

    pub fn plane_len(&self) -> usize {
        self.shape.1 * self.shape.2
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let p = self.plane_len();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn grad_mut(&mut self) -> Option<&mut [f64]> {
        self.grad.as_deref_mut()
    }

    /// Data and gradient borrowed together (gradient must be present).
    pub(crate) fn split_grad(&mut self) -> (&mut [f64], &mut [f64]) {
        let g = self
            .grad
            .as_deref_mut()
            .expect("parameter tensor without gradient buffer");
        (&mut self.data, g)
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_deref_mut() {
            g.fill(0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite()) && self.grad.iter().flatten().all(|v| v.is_finite())
    }
}
