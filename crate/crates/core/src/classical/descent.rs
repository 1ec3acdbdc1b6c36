//! Plain gradient descent on the amplitude least-squares loss
//! `(1/M) || sqrt(Y) - |A(X)| ||^2` for any [`ForwardModel`].

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::grid::{ComplexGrid, IntensityGrid};
use crate::scalar::Real;
use crate::trace::{SolverTrace, TraceRecorder};

/// Smoothing added under the square root of `|w|`.
pub const MAGNITUDE_EPS: f64 = 1e-12;

fn check(model_shape: (usize, usize), y: &IntensityGrid<impl Real>) -> Result<()> {
    if y.shape() != model_shape {
        return Err(Error::Dimension(format!(
            "observation {:?} does not match model output {:?}",
            y.shape(),
            model_shape
        )));
    }
    Ok(())
}

/// Exact least-squares loss (no smoothing).
pub fn ls_loss<T: Real>(model: &ForwardModel<T>, y: &IntensityGrid<T>, x: &ComplexGrid<T>) -> Result<T> {
    check(model.measurement_shape(), y)?;
    let w = model.linear(x)?;
    Ok(amplitude_residual(&w, y, T::zero()).0)
}

/// Loss and the residual `(|w|_eps - sqrt(y)) w / |w|_eps` (scaled by `2/M`)
/// that the adjoint maps to the real/imaginary gradient.
fn amplitude_residual<T: Real>(w: &ComplexGrid<T>, y: &IntensityGrid<T>, eps: T) -> (T, ComplexGrid<T>) {
    let count = T::from_usize_lossy(y.len());
    let two_over = T::lit(2.0) / count;
    let mut loss = T::zero();
    let resid = ComplexGrid::from_fn(w.rows(), w.cols(), |i, j| {
        let c = w.get(i, j);
        let a = y.get(i, j).sqrt();
        let mag = (c.norm_sqr() + eps).sqrt();
        let d = mag - a;
        loss += d * d;
        if mag > T::zero() {
            c * (two_over * d / mag)
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    (loss / count, resid)
}

/// Smoothed objective and its gradient `dL/dRe X + i dL/dIm X`.
pub fn ls_objective_and_gradient<T: Real>(
    model: &ForwardModel<T>,
    y: &IntensityGrid<T>,
    x: &ComplexGrid<T>,
) -> Result<(T, ComplexGrid<T>)> {
    check(model.measurement_shape(), y)?;
    let w = model.linear(x)?;
    let (loss, resid) = amplitude_residual(&w, y, T::lit(MAGNITUDE_EPS));
    Ok((loss, model.adjoint(&resid)?))
}

/// Step size `M / (2 ||A||^2)`, the reciprocal of the gradient's Lipschitz
/// scale; on the Fourier models one step is a full magnitude projection.
pub fn natural_step<T: Real>(model: &ForwardModel<T>) -> T {
    let (r, c) = model.measurement_shape();
    T::from_usize_lossy(r * c) / (T::lit(2.0) * model.operator_norm_sqr())
}

/// Fixed-step gradient descent; returns the final iterate.
///
/// The trace holds the exact (unsmoothed) loss of every iterate, starting
/// with `x0`.
pub fn ls_gradient_descent<T: Real>(
    y: &IntensityGrid<T>,
    model: &ForwardModel<T>,
    x0: ComplexGrid<T>,
    lr: T,
    iters: usize,
) -> Result<(ComplexGrid<T>, SolverTrace<T>)> {
    if !(lr > T::zero()) {
        return Err(Error::InvalidParameter(format!("learning rate {lr} must be positive")));
    }
    check(model.measurement_shape(), y)?;
    let mut rec = TraceRecorder::start();
    let mut x = x0;
    for it in 0..=iters {
        let (_, grad) = ls_objective_and_gradient(model, y, &x)?;
        let loss = ls_loss(model, y, &x)?.to_f64_lossy();
        rec.record(loss);
        if !loss.is_finite() || !grad.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                losses: rec.into_losses(),
            });
        }
        if it == iters {
            break;
        }
        let step = Complex::new(lr, T::zero());
        x = x.zip_map(&grad, |a, g| a - g * step);
    }
    let final_loss = rec.losses().last().copied().unwrap_or(f64::NAN);
    let trace = rec.finish(iters, x.clone(), final_loss);
    Ok((x, trace))
}
