//! Projections onto the Fourier-magnitude and support constraint sets, and
//! the ER / HIO updates built from them.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fourier::Fft2;
use crate::grid::{ComplexGrid, IntensityGrid, SupportMask};
use crate::scalar::Real;

/// Reusable magnitude projector for a fixed observation.
#[derive(Clone, Debug)]
pub struct MagnitudeProjector<T: Real> {
    fft: Fft2<T>,
    amplitudes: Vec<T>,
}

impl<T: Real> MagnitudeProjector<T> {
    pub fn new(y: &IntensityGrid<T>) -> Self {
        Self {
            fft: Fft2::new(y.rows(), y.cols()),
            amplitudes: y.amplitudes(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.fft.shape()
    }

    pub fn fft(&self) -> &Fft2<T> {
        &self.fft
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    /// Replaces every Fourier modulus with the observed one, keeping phases;
    /// a zero coefficient takes phase 0.
    pub fn project(&self, z: &ComplexGrid<T>) -> Result<ComplexGrid<T>> {
        if z.shape() != self.shape() {
            return Err(Error::Dimension(format!(
                "iterate {:?} does not match observation {:?}",
                z.shape(),
                self.shape()
            )));
        }
        let mut w = z.clone();
        self.fft.forward_in_place(w.data_mut());
        for (c, &a) in w.data_mut().iter_mut().zip(&self.amplitudes) {
            let r = c.norm();
            *c = if r > T::zero() {
                *c * (a / r)
            } else {
                Complex::new(a, T::zero())
            };
        }
        self.fft.inverse_in_place(w.data_mut());
        Ok(w)
    }

    /// `(1/(m'n')) || sqrt(Y) - |F(Z)| ||^2` for a canvas-sized iterate.
    pub fn loss(&self, z: &ComplexGrid<T>) -> T {
        let w = self.fft.forward(z);
        let total: T = w
            .data()
            .iter()
            .zip(&self.amplitudes)
            .map(|(c, &a)| {
                let d = a - c.norm();
                d * d
            })
            .sum();
        total / T::from_usize_lossy(self.amplitudes.len())
    }
}

/// One-shot form of [`MagnitudeProjector::project`].
pub fn magnitude_projection<T: Real>(z: &ComplexGrid<T>, y: &IntensityGrid<T>) -> Result<ComplexGrid<T>> {
    MagnitudeProjector::new(y).project(z)
}

/// Zeroes every pixel outside the mask.
pub fn support_projection<T: Real>(z: &ComplexGrid<T>, mask: &SupportMask) -> Result<ComplexGrid<T>> {
    if z.shape() != mask.shape() {
        return Err(Error::Dimension(format!(
            "iterate {:?} does not match mask {:?}",
            z.shape(),
            mask.shape()
        )));
    }
    let mut out = z.clone();
    for (v, &keep) in out.data_mut().iter_mut().zip(mask.data()) {
        if !keep {
            *v = Complex::new(T::zero(), T::zero());
        }
    }
    Ok(out)
}

/// Error reduction: support projection of the magnitude projection.
pub fn er_step<T: Real>(
    proj: &MagnitudeProjector<T>,
    z: &ComplexGrid<T>,
    mask: &SupportMask,
) -> Result<ComplexGrid<T>> {
    support_projection(&proj.project(z)?, mask)
}

/// Fienup hybrid input-output with support-only image constraint.
pub fn hio_step<T: Real>(
    proj: &MagnitudeProjector<T>,
    z: &ComplexGrid<T>,
    mask: &SupportMask,
    beta: T,
) -> Result<ComplexGrid<T>> {
    if !(beta > T::zero() && beta <= T::one()) {
        return Err(Error::InvalidParameter(format!("HIO beta {beta} outside (0, 1]")));
    }
    if z.shape() != mask.shape() {
        return Err(Error::Dimension("iterate and mask differ".into()));
    }
    let zp = proj.project(z)?;
    let mut out = zp;
    for ((o, &orig), &keep) in out.data_mut().iter_mut().zip(z.data()).zip(mask.data()) {
        if !keep {
            *o = orig - *o * beta;
        }
    }
    Ok(out)
}
