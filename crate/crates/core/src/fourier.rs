//! Unitary 2D DFT and the zero-padded (oversampled) Fourier operator.
//!
//! All transforms carry `1/sqrt(len)` per axis so the full 2D transform is an
//! isometry. The object sits at the top-left corner of the padded canvas.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, IntensityGrid};
use crate::scalar::Real;

/// Planned unitary 2D FFT for a fixed shape.
#[derive(Clone)]
pub struct Fft2<T: Real> {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl<T: Real> Fft2<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
            scale: T::one() / T::from_usize_lossy(rows * cols).sqrt(),
        }
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn run(&self, buf: &mut [Complex<T>], inverse: bool) {
        assert_eq!(buf.len(), self.rows * self.cols, "FFT buffer shape mismatch");
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        row.process(buf);
        let mut column = vec![Complex::new(T::zero(), T::zero()); self.rows];
        for j in 0..self.cols {
            for i in 0..self.rows {
                column[i] = buf[i * self.cols + j];
            }
            col.process(&mut column);
            for i in 0..self.rows {
                buf[i * self.cols + j] = column[i] * self.scale;
            }
        }
    }

    /// In-place unitary forward transform (kernel `exp(-2 pi i k n / N)`).
    pub fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        self.run(buf, false);
    }

    /// In-place unitary inverse transform.
    pub fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        self.run(buf, true);
    }

    pub fn forward(&self, x: &ComplexGrid<T>) -> ComplexGrid<T> {
        let mut out = x.clone();
        self.forward_in_place(out.data_mut());
        out
    }

    pub fn inverse(&self, x: &ComplexGrid<T>) -> ComplexGrid<T> {
        let mut out = x.clone();
        self.inverse_in_place(out.data_mut());
        out
    }
}

/// Checks `canvas >= 2 * object - 1` on both axes.
pub fn check_oversampling(obj: (usize, usize), canvas: (usize, usize)) -> Result<()> {
    let (m, n) = obj;
    let (mp, np) = canvas;
    if m == 0 || n == 0 || mp + 1 < 2 * m || np + 1 < 2 * n {
        return Err(Error::Oversampling {
            rows: m.max(1),
            cols: n.max(1),
            canvas_rows: mp,
            canvas_cols: np,
        });
    }
    Ok(())
}

/// The oversampled Fourier operator `X -> F_{m'} [X 0; 0 0] F_{n'}^T` and its adjoint.
#[derive(Clone, Debug)]
pub struct OversampledFourier<T: Real> {
    object: (usize, usize),
    fft: Fft2<T>,
}

impl<T: Real> OversampledFourier<T> {
    pub fn new(object: (usize, usize), canvas: (usize, usize)) -> Result<Self> {
        check_oversampling(object, canvas)?;
        Ok(Self {
            object,
            fft: Fft2::new(canvas.0, canvas.1),
        })
    }

    #[inline]
    pub fn object_shape(&self) -> (usize, usize) {
        self.object
    }

    #[inline]
    pub fn canvas_shape(&self) -> (usize, usize) {
        self.fft.shape()
    }

    #[inline]
    pub fn fft(&self) -> &Fft2<T> {
        &self.fft
    }

    pub fn apply(&self, x: &ComplexGrid<T>) -> Result<ComplexGrid<T>> {
        if x.shape() != self.object {
            return Err(Error::Dimension(format!(
                "object {:?} does not match operator {:?}",
                x.shape(),
                self.object
            )));
        }
        let (mp, np) = self.canvas_shape();
        let mut z = x.zero_pad(mp, np)?;
        self.fft.forward_in_place(z.data_mut());
        Ok(z)
    }

    pub fn adjoint(&self, z: &ComplexGrid<T>) -> Result<ComplexGrid<T>> {
        if z.shape() != self.canvas_shape() {
            return Err(Error::Dimension(format!(
                "spectrum {:?} does not match canvas {:?}",
                z.shape(),
                self.canvas_shape()
            )));
        }
        let w = self.fft.inverse(z);
        w.crop(self.object.0, self.object.1)
    }
}

/// Oversampled transform of `x` onto an `m' x n'` canvas.
pub fn oversampled_fourier<T: Real>(
    x: &ComplexGrid<T>,
    canvas_rows: usize,
    canvas_cols: usize,
) -> Result<ComplexGrid<T>> {
    OversampledFourier::new(x.shape(), (canvas_rows, canvas_cols))?.apply(x)
}

/// Adjoint of [`oversampled_fourier`]: inverse transform, then crop to `m x n`.
pub fn adjoint_oversampled_fourier<T: Real>(z: &ComplexGrid<T>, rows: usize, cols: usize) -> Result<ComplexGrid<T>> {
    OversampledFourier::new((rows, cols), z.shape())?.adjoint(z)
}

/// Entrywise squared magnitude.
pub fn intensity<T: Real>(field: &ComplexGrid<T>) -> IntensityGrid<T> {
    IntensityGrid::from_vec(
        field.rows(),
        field.cols(),
        field.data().iter().map(|z| z.norm_sqr()).collect(),
    )
    .expect("squared magnitudes of a finite field are finite and nonnegative")
}

/// Moves the zero-frequency sample from index 0 to index `len / 2` on both axes.
pub fn fftshift<T: Real>(x: &ComplexGrid<T>) -> ComplexGrid<T> {
    x.roll(x.rows() / 2, x.cols() / 2)
}

/// Inverse of [`fftshift`].
pub fn ifftshift<T: Real>(x: &ComplexGrid<T>) -> ComplexGrid<T> {
    x.roll(x.rows() - x.rows() / 2, x.cols() - x.cols() / 2)
}

/// Unitary DFT acting on centered arrays (sample `len / 2` is the origin).
pub fn centered_forward<T: Real>(fft: &Fft2<T>, x: &ComplexGrid<T>) -> ComplexGrid<T> {
    fftshift(&fft.forward(&ifftshift(x)))
}

/// Unitary inverse DFT acting on centered arrays.
pub fn centered_inverse<T: Real>(fft: &Fft2<T>, x: &ComplexGrid<T>) -> ComplexGrid<T> {
    fftshift(&fft.inverse(&ifftshift(x)))
}
