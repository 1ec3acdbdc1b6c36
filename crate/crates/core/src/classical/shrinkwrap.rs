//! Shrinkwrap support refinement: Gaussian-smooth the iterate's modulus and
//! threshold against a fraction of its maximum.

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, SupportMask};
use crate::scalar::Real;

/// Normalized 1D Gaussian taps for offsets `-radius..=radius`, `radius = ceil(4 sigma)`.
fn gaussian_taps<T: Real>(sigma: T) -> Vec<T> {
    let radius = (sigma * T::lit(4.0)).ceil().to_usize().unwrap_or(1).max(1);
    let two_s2 = T::lit(2.0) * sigma * sigma;
    let taps: Vec<T> = (0..=2 * radius)
        .map(|k| {
            let d = T::from_usize_lossy(k) - T::from_usize_lossy(radius);
            (-(d * d) / two_s2).exp()
        })
        .collect();
    let total: T = taps.iter().copied().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable circular Gaussian blur of a real map; total mass is preserved.
pub fn gaussian_blur<T: Real>(values: &[T], rows: usize, cols: usize, sigma: T) -> Vec<T> {
    let taps = gaussian_taps(sigma);
    let radius = taps.len() / 2;
    let mut tmp = vec![T::zero(); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                let jj = (j + cols * (radius / cols + 1) + k - radius) % cols;
                acc += t * values[i * cols + jj];
            }
            tmp[i * cols + j] = acc;
        }
    }
    let mut out = vec![T::zero(); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                let ii = (i + rows * (radius / rows + 1) + k - radius) % rows;
                acc += t * tmp[ii * cols + j];
            }
            out[i * cols + j] = acc;
        }
    }
    out
}

/// New support: `blur(|Z|, sigma) >= tau * max(blur)`. Never empty.
pub fn shrinkwrap_update<T: Real>(z: &ComplexGrid<T>, sigma: T, tau: T) -> Result<SupportMask> {
    if !(sigma > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "shrinkwrap sigma {sigma} must be positive"
        )));
    }
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::InvalidParameter(format!("shrinkwrap tau {tau} outside (0, 1)")));
    }
    let (r, c) = z.shape();
    let blurred = gaussian_blur(&z.magnitudes(), r, c, sigma);
    let (argmax, max) =
        blurred.iter().copied().enumerate().fold(
            (0, T::neg_infinity()),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
    let thr = tau * max;
    let mut data: Vec<bool> = blurred.iter().map(|&v| v >= thr).collect();
    data[argmax] = true;
    SupportMask::new(r, c, data)
}
