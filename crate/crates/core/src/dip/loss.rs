use num_complex::Complex64;

use super::tensor::Tensor;
use crate::classical::MAGNITUDE_EPS;
use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::grid::{ComplexGrid, IntensityGrid};

/// Loss value and gradient with respect to the head's input.
#[derive(Clone, Debug)]
pub struct HeadOutput<G> {
    /// Smoothed objective, the one being differentiated.
    pub loss: f64,
    /// Same objective without smoothing.
    pub exact_loss: f64,
    pub grad: G,
}

/// Reads a 2-channel (re, im) tensor as a complex image.
pub fn tensor_to_complex(t: &Tensor) -> Result<ComplexGrid<f64>> {
    let (c, h, w) = t.shape();
    if c != 2 {
        return Err(Error::Dimension(format!("expected 2 channels (re, im), got {c}")));
    }
    ComplexGrid::from_vec(
        h,
        w,
        t.channel(0)
            .iter()
            .zip(t.channel(1))
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect(),
    )
}

pub fn complex_to_tensor(x: &ComplexGrid<f64>) -> Tensor {
    let (h, w) = x.shape();
    let data = x
        .data()
        .iter()
        .map(|z| z.re)
        .chain(x.data().iter().map(|z| z.im))
        .collect();
    Tensor::from_vec(2, h, w, data).expect("finite complex image")
}

/// Amplitude loss `(1/M) || sqrt(Y) - |A x|_eps ||^2` and its gradient
/// `dL/dRe x + i dL/dIm x`.
pub fn complex_loss_head(
    model: &ForwardModel<f64>,
    y: &IntensityGrid<f64>,
    x: &ComplexGrid<f64>,
) -> Result<HeadOutput<ComplexGrid<f64>>> {
    if y.shape() != model.measurement_shape() {
        return Err(Error::Dimension(format!(
            "observation {:?} does not match model output {:?}",
            y.shape(),
            model.measurement_shape()
        )));
    }
    let w = model.linear(x)?;
    let count = y.len() as f64;
    let (mut loss, mut exact) = (0.0, 0.0);
    let resid = ComplexGrid::from_fn(w.rows(), w.cols(), |i, j| {
        let c = w.get(i, j);
        let a = y.get(i, j).sqrt();
        let d0 = c.norm() - a;
        exact += d0 * d0;
        let mag = (c.norm_sqr() + MAGNITUDE_EPS).sqrt();
        let d = mag - a;
        loss += d * d;
        c * (2.0 * d / (mag * count))
    });
    Ok(HeadOutput {
        loss: loss / count,
        exact_loss: exact / count,
        grad: model.adjoint(&resid)?,
    })
}

/// Far-field loss head on a 2-channel generator output.
pub fn ffpr_loss_head(out: &Tensor, model: &ForwardModel<f64>, y: &IntensityGrid<f64>) -> Result<HeadOutput<Tensor>> {
    let x = tensor_to_complex(out)?;
    let h = complex_loss_head(model, y, &x)?;
    Ok(HeadOutput {
        loss: h.loss,
        exact_loss: h.exact_loss,
        grad: complex_to_tensor(&h.grad),
    })
}
