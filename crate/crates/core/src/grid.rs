//! Row-major 2D containers: complex fields, nonnegative intensity maps and
//! boolean support masks.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Complex-valued 2D field stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrid<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexGrid<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    /// Builds a grid after checking the length and finiteness invariants.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} samples for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from separate real and imaginary planes.
    pub fn from_parts(rows: usize, cols: usize, re: &[T], im: &[T]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::Dimension("real/imag planes differ in length".into()));
        }
        Self::from_vec(
            rows,
            cols,
            re.iter().zip(im).map(|(&a, &b)| Complex::new(a, b)).collect(),
        )
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// `<self, other> = sum conj(self) * other`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.shape(), other.shape(), "inner product shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .fold(Complex::new(T::zero(), T::zero()), |acc, v| acc + v)
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        assert_eq!(self.shape(), other.shape(), "zip_map shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    /// Embeds into the top-left corner of a larger zero canvas.
    pub fn zero_pad(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows < self.rows || cols < self.cols {
            return Err(Error::Dimension(format!(
                "cannot pad {}x{} into {rows}x{cols}",
                self.rows, self.cols
            )));
        }
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            let src = &self.data[i * self.cols..(i + 1) * self.cols];
            out.data[i * cols..i * cols + self.cols].copy_from_slice(src);
        }
        Ok(out)
    }

    /// Keeps the top-left `rows x cols` block.
    pub fn crop(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows > self.rows || cols > self.cols {
            return Err(Error::Dimension(format!(
                "cannot crop {}x{} to {rows}x{cols}",
                self.rows, self.cols
            )));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.extend_from_slice(&self.data[i * self.cols..i * self.cols + cols]);
        }
        Ok(Self { rows, cols, data })
    }

    /// Circular shift: `out[(i + di) mod rows, (j + dj) mod cols] = self[i, j]`.
    pub fn roll(&self, di: usize, dj: usize) -> Self {
        let (r, c) = self.shape();
        let mut out = Self::zeros(r, c);
        for i in 0..r {
            let ti = (i + di) % r;
            for j in 0..c {
                out.data[ti * c + (j + dj) % c] = self.data[i * c + j];
            }
        }
        out
    }

    /// `out[i, j] = conj(self[-i mod rows, -j mod cols])`.
    pub fn conj_flip(&self) -> Self {
        let (r, c) = self.shape();
        Self::from_fn(r, c, |i, j| self.get((r - i) % r, (c - j) % c).conj())
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    pub fn phases(&self) -> Vec<T> {
        self.data.iter().map(|z| z.arg()).collect()
    }

    pub fn cast<U: Real>(&self) -> ComplexGrid<U> {
        ComplexGrid {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy())))
                .collect(),
        }
    }
}

/// Nonnegative real 2D map (squared magnitudes).
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityGrid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> IntensityGrid<T> {
    /// Checks finiteness and nonnegativity.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Entrywise square root (the observed Fourier amplitudes).
    pub fn amplitudes(&self) -> Vec<T> {
        self.data.iter().map(|v| v.sqrt()).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }
}

/// Boolean pixel mask; `true` marks an admissible pixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SupportMask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl SupportMask {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "mask length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if !data.iter().any(|&b| b) {
            return Err(Error::EmptySupport);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![true; rows * cols],
        }
    }

    /// Axis-aligned box `[r0, r0+h) x [c0, c0+w)` on a `rows x cols` canvas.
    pub fn rect(rows: usize, cols: usize, r0: usize, c0: usize, h: usize, w: usize) -> Result<Self> {
        if r0 + h > rows || c0 + w > cols {
            return Err(Error::Dimension("box exceeds canvas".into()));
        }
        let mut data = vec![false; rows * cols];
        for i in r0..r0 + h {
            for j in c0..c0 + w {
                data[i * cols + j] = true;
            }
        }
        Self::new(rows, cols, data)
    }

    /// Centered box of size `floor(rows/2) x floor(cols/2)`.
    pub fn centered_half_box(rows: usize, cols: usize) -> Result<Self> {
        let (h, w) = (rows / 2, cols / 2);
        Self::rect(rows, cols, (rows - h) / 2, (cols - w) / 2, h, w)
    }

    /// Places a smaller mask at the top-left corner of a larger canvas.
    pub fn embed(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows < self.rows || cols < self.cols {
            return Err(Error::Dimension("canvas smaller than mask".into()));
        }
        let mut data = vec![false; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[i * cols + j] = self.data[i * self.cols + j];
            }
        }
        Self::new(rows, cols, data)
    }

    /// Tightest axis-aligned bounding box of the true pixels.
    pub fn bounding_box(&self) -> Self {
        let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    r0 = r0.min(i);
                    r1 = r1.max(i);
                    c0 = c0.min(j);
                    c1 = c1.max(j);
                }
            }
        }
        Self::rect(self.rows, self.cols, r0, c0, r1 - r0 + 1, c1 - c0 + 1).expect("nonempty mask has a bounding box")
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}
