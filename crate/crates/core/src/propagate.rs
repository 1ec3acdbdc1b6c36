//! Scalar diffraction between parallel planes: Rayleigh-Sommerfeld
//! quadrature (reference), angular spectrum (exact transfer function),
//! Fresnel and Fraunhofer approximations.
//!
//! Fields are sampled on centered `N x N` grids: sample `p` sits at
//! `(p - N/2) * pitch`. Frequencies are `{-N/2, ..., N/2 - 1} / (N * pitch)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{centered_forward, Fft2};
use crate::grid::ComplexGrid;

type Field = ComplexGrid<f64>;

/// Default cap on `N^2` for the `O(N^4)` quadrature.
pub const DEFAULT_QUADRATURE_CAP: usize = 64 * 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationSetup {
    pub wavelength: f64,
    pub distance: f64,
    /// Sample spacing in the aperture plane.
    pub pitch: f64,
    pub grid: usize,
}

impl PropagationSetup {
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    /// Sample spacing of the single-FFT Fresnel/Fraunhofer output plane.
    pub fn fourier_plane_pitch(&self) -> f64 {
        self.wavelength * self.distance / (self.grid as f64 * self.pitch)
    }

    /// Distance at which the Fourier-plane pitch equals the aperture pitch.
    pub fn critical_distance(wavelength: f64, pitch: f64, grid: usize) -> f64 {
        grid as f64 * pitch * pitch / wavelength
    }

    fn validate(&self, field: &Field, need_positive_distance: bool) -> Result<()> {
        if !(self.wavelength > 0.0 && self.pitch > 0.0 && self.distance >= 0.0) || !self.distance.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid propagation setup {self:?}")));
        }
        if need_positive_distance && self.distance <= 0.0 {
            return Err(Error::InvalidParameter("propagation distance must be positive".into()));
        }
        if field.shape() != (self.grid, self.grid) {
            return Err(Error::Dimension(format!(
                "field {:?} does not match {}x{} grid",
                field.shape(),
                self.grid,
                self.grid
            )));
        }
        Ok(())
    }

    fn coord(&self, p: usize, pitch: f64) -> f64 {
        (p as f64 - (self.grid / 2) as f64) * pitch
    }
}

/// A propagated field and the sample spacing of its plane.
#[derive(Clone, Debug)]
pub struct PropagatedField {
    pub field: Field,
    pub pitch: f64,
}

/// Direct quadrature of the Rayleigh-Sommerfeld integral onto an output grid
/// of the same size with spacing `out_pitch`.
pub fn rayleigh_sommerfeld_at(u0: &Field, setup: &PropagationSetup, out_pitch: f64, cap: usize) -> Result<Field> {
    setup.validate(u0, true)?;
    let n = setup.grid;
    if n * n > cap {
        return Err(Error::GridTooLarge { size: n * n, cap });
    }
    let k = setup.wavenumber();
    let z = setup.distance;
    let area = setup.pitch * setup.pitch / TAU;
    let sources: Vec<(f64, f64, Complex64)> = (0..n * n)
        .filter(|&s| u0.data()[s] != Complex64::new(0.0, 0.0))
        .map(|s| {
            (
                setup.coord(s / n, setup.pitch),
                setup.coord(s % n, setup.pitch),
                u0.data()[s],
            )
        })
        .collect();
    Ok(Field::from_fn(n, n, |p, q| {
        let (x, y) = (setup.coord(p, out_pitch), setup.coord(q, out_pitch));
        let mut acc = Complex64::new(0.0, 0.0);
        for &(xi, eta, u) in &sources {
            let r2 = z * z + (x - xi).powi(2) + (y - eta).powi(2);
            let r = r2.sqrt();
            let kernel = Complex64::new(1.0 / r, -k) * (z / r2) * Complex64::from_polar(1.0, k * r);
            acc += u * kernel;
        }
        acc * area
    }))
}

/// Rayleigh-Sommerfeld quadrature on the aperture grid itself.
pub fn rayleigh_sommerfeld_reference(u0: &Field, setup: &PropagationSetup) -> Result<Field> {
    rayleigh_sommerfeld_at(u0, setup, setup.pitch, DEFAULT_QUADRATURE_CAP)
}

fn frequency(idx: usize, n: usize, pitch: f64) -> f64 {
    // unshifted DFT ordering
    let k = if idx < n - n / 2 {
        idx as f64
    } else {
        idx as f64 - n as f64
    };
    let k = if n.is_multiple_of(2) && idx == n / 2 {
        -(n as f64) / 2.0
    } else {
        k
    };
    k / (n as f64 * pitch)
}

fn apply_transfer(u0: &Field, setup: &PropagationSetup, pitch: f64, h: impl Fn(f64, f64) -> Complex64) -> Field {
    let n = u0.rows();
    let fft = Fft2::new(n, n);
    let mut spec = fft.forward(&crate::fourier::ifftshift(u0));
    for i in 0..n {
        let fx = frequency(i, n, pitch);
        for j in 0..n {
            let fy = frequency(j, n, pitch);
            let v = spec.get(i, j) * h(fx, fy);
            spec.set(i, j, v);
        }
    }
    let _ = setup;
    crate::fourier::fftshift(&fft.inverse(&spec))
}

fn angular_spectrum_transfer(setup: &PropagationSetup) -> impl Fn(f64, f64) -> Complex64 {
    let (k, z, lam) = (setup.wavenumber(), setup.distance, setup.wavelength);
    move |fx, fy| {
        let arg = 1.0 - (lam * fx).powi(2) - (lam * fy).powi(2);
        if arg < 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(1.0, k * z * arg.sqrt())
        }
    }
}

/// Exact band-limited propagation by the angular-spectrum transfer function
/// (periodic boundary, evanescent components removed).
pub fn angular_spectrum_propagate(u0: &Field, setup: &PropagationSetup) -> Result<Field> {
    setup.validate(u0, false)?;
    Ok(apply_transfer(u0, setup, setup.pitch, angular_spectrum_transfer(setup)))
}

/// Angular spectrum on a `padding`-times larger zero-padded grid, cropped
/// back to the centre; approximates linear (non-periodic) propagation.
pub fn angular_spectrum_propagate_padded(u0: &Field, setup: &PropagationSetup, padding: usize) -> Result<Field> {
    setup.validate(u0, false)?;
    if padding == 0 {
        return Err(Error::InvalidParameter("padding factor must be at least 1".into()));
    }
    let n = setup.grid;
    let big = n * padding;
    let off = big / 2 - n / 2;
    let mut padded = Field::zeros(big, big);
    for i in 0..n {
        for j in 0..n {
            padded.set(i + off, j + off, u0.get(i, j));
        }
    }
    let big_setup = PropagationSetup { grid: big, ..*setup };
    let out = apply_transfer(&padded, &big_setup, setup.pitch, angular_spectrum_transfer(setup));
    Ok(Field::from_fn(n, n, |i, j| out.get(i + off, j + off)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FresnelForm {
    /// Single FFT between quadratic chirps; output pitch `lambda z / (N pitch)`.
    Spatial,
    /// Paraxial transfer function; output on the aperture grid.
    Fourier,
}

fn single_fft_propagate(u0: &Field, setup: &PropagationSetup, input_chirp: bool) -> Field {
    let n = setup.grid;
    let (k, z, lam) = (setup.wavenumber(), setup.distance, setup.wavelength);
    let out_pitch = setup.fourier_plane_pitch();
    let pre = if input_chirp {
        Field::from_fn(n, n, |i, j| {
            let (xi, eta) = (setup.coord(i, setup.pitch), setup.coord(j, setup.pitch));
            u0.get(i, j) * Complex64::from_polar(1.0, k / (2.0 * z) * (xi * xi + eta * eta))
        })
    } else {
        u0.clone()
    };
    let fft = Fft2::new(n, n);
    // unitary transform times N is the plain DFT sum
    let spec = centered_forward(&fft, &pre);
    let lead =
        Complex64::from_polar(1.0, k * z) / Complex64::new(0.0, lam * z) * (n as f64 * setup.pitch * setup.pitch);
    Field::from_fn(n, n, |p, q| {
        let (x, y) = (setup.coord(p, out_pitch), setup.coord(q, out_pitch));
        spec.get(p, q) * lead * Complex64::from_polar(1.0, k / (2.0 * z) * (x * x + y * y))
    })
}

/// Fresnel approximation in either of its two equivalent forms.
pub fn fresnel_propagate(u0: &Field, setup: &PropagationSetup, form: FresnelForm) -> Result<PropagatedField> {
    setup.validate(u0, true)?;
    Ok(match form {
        FresnelForm::Spatial => PropagatedField {
            field: single_fft_propagate(u0, setup, true),
            pitch: setup.fourier_plane_pitch(),
        },
        FresnelForm::Fourier => {
            let (k, z, lam) = (setup.wavenumber(), setup.distance, setup.wavelength);
            let carrier = Complex64::from_polar(1.0, k * z);
            let field = apply_transfer(u0, setup, setup.pitch, move |fx, fy| {
                carrier * Complex64::from_polar(1.0, -PI * z * lam * (fx * fx + fy * fy))
            });
            PropagatedField {
                field,
                pitch: setup.pitch,
            }
        }
    })
}

/// Fraunhofer approximation: the spatial Fresnel form without the aperture chirp.
pub fn fraunhofer_propagate(u0: &Field, setup: &PropagationSetup) -> Result<PropagatedField> {
    setup.validate(u0, true)?;
    Ok(PropagatedField {
        field: single_fft_propagate(u0, setup, false),
        pitch: setup.fourier_plane_pitch(),
    })
}
