//! Phaseless observation models: far-field (FFPR), near-field chirped
//! (NFPR) and generalized Gaussian sensing (GPR).

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fourier::{intensity, OversampledFourier};
use crate::grid::{ComplexGrid, IntensityGrid};
use crate::scalar::Real;

/// Default NFPR chirp constant.
pub const DEFAULT_NFPR_BETA: f64 = 0.05;

/// Default GPR measurement count per object pixel (`k = factor * m * n`).
pub const DEFAULT_GPR_FACTOR: usize = 4;

#[derive(Clone, Debug)]
pub enum ForwardModel<T: Real> {
    /// `Y = |F(X)|^2` with the oversampled transform.
    Far { op: OversampledFourier<T> },
    /// `Y = |F(X . chirp)|^2`, `chirp[i, j] = exp(i pi beta (i^2 + j^2))` on
    /// indices centered at `floor(m/2)`, `floor(n/2)`.
    Near {
        op: OversampledFourier<T>,
        beta: T,
        chirp: ComplexGrid<T>,
    },
    /// `y_i = |<A_i, X>|^2` with `<A, X> = sum conj(A) X`.
    Generalized { sensing: Vec<ComplexGrid<T>> },
}

impl<T: Real> ForwardModel<T> {
    pub fn far(object: (usize, usize), canvas: (usize, usize)) -> Result<Self> {
        Ok(Self::Far {
            op: OversampledFourier::new(object, canvas)?,
        })
    }

    pub fn near(object: (usize, usize), canvas: (usize, usize), beta: T) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidParameter("NFPR beta must be finite".into()));
        }
        let (m, n) = object;
        let (ci, cj) = ((m / 2) as f64, (n / 2) as f64);
        let b = beta.to_f64_lossy();
        let chirp = ComplexGrid::from_fn(m, n, |i, j| {
            let (di, dj) = (i as f64 - ci, j as f64 - cj);
            let ph = std::f64::consts::PI * b * (di * di + dj * dj);
            Complex::new(T::lit(ph.cos()), T::lit(ph.sin()))
        });
        Ok(Self::Near {
            op: OversampledFourier::new(object, canvas)?,
            beta,
            chirp,
        })
    }

    pub fn generalized(sensing: Vec<ComplexGrid<T>>) -> Result<Self> {
        let first = sensing
            .first()
            .ok_or_else(|| Error::InvalidParameter("GPR needs at least one sensing matrix".into()))?;
        let shape = first.shape();
        for (i, a) in sensing.iter().enumerate() {
            if a.shape() != shape {
                return Err(Error::Dimension(format!(
                    "sensing matrix {i} has shape {:?}",
                    a.shape()
                )));
            }
            if !a.is_finite() {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self::Generalized { sensing })
    }

    /// `k` iid standard complex Gaussian matrices (unit variance per entry).
    pub fn gaussian(object: (usize, usize), k: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sensing = (0..k)
            .map(|_| {
                ComplexGrid::from_fn(object.0, object.1, |_, _| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex::new(T::lit(re * s), T::lit(im * s))
                })
            })
            .collect();
        Self::generalized(sensing)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Far { .. } => "ffpr",
            Self::Near { .. } => "nfpr",
            Self::Generalized { .. } => "gpr",
        }
    }

    pub fn object_shape(&self) -> (usize, usize) {
        match self {
            Self::Far { op } | Self::Near { op, .. } => op.object_shape(),
            Self::Generalized { sensing } => sensing[0].shape(),
        }
    }

    /// Shape of the complex observation; GPR observations are `k x 1`.
    pub fn measurement_shape(&self) -> (usize, usize) {
        match self {
            Self::Far { op } | Self::Near { op, .. } => op.canvas_shape(),
            Self::Generalized { sensing } => (sensing.len(), 1),
        }
    }

    fn check_object(&self, x: &ComplexGrid<T>) -> Result<()> {
        if x.shape() != self.object_shape() {
            return Err(Error::Dimension(format!(
                "object {:?} does not match model {:?}",
                x.shape(),
                self.object_shape()
            )));
        }
        Ok(())
    }

    /// The complex-valued observation `A(X)` before the detector.
    pub fn linear(&self, x: &ComplexGrid<T>) -> Result<ComplexGrid<T>> {
        self.check_object(x)?;
        match self {
            Self::Far { op } => op.apply(x),
            Self::Near { op, chirp, .. } => op.apply(&x.zip_map(chirp, |a, c| a * c)),
            Self::Generalized { sensing } => {
                let vals = sensing.iter().map(|a| a.inner(x)).collect();
                ComplexGrid::from_vec(sensing.len(), 1, vals)
            }
        }
    }

    /// Adjoint of [`Self::linear`].
    pub fn adjoint(&self, w: &ComplexGrid<T>) -> Result<ComplexGrid<T>> {
        if w.shape() != self.measurement_shape() {
            return Err(Error::Dimension(format!(
                "measurement {:?} does not match model {:?}",
                w.shape(),
                self.measurement_shape()
            )));
        }
        match self {
            Self::Far { op } => op.adjoint(w),
            Self::Near { op, chirp, .. } => Ok(op.adjoint(w)?.zip_map(chirp, |a, c| a * c.conj())),
            Self::Generalized { sensing } => {
                let (m, n) = self.object_shape();
                let mut out = ComplexGrid::zeros(m, n);
                for (a, &wi) in sensing.iter().zip(w.data()) {
                    for (o, &ai) in out.data_mut().iter_mut().zip(a.data()) {
                        *o += ai * wi;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Phaseless observation `|A(X)|^2`.
    pub fn apply(&self, x: &ComplexGrid<T>) -> Result<IntensityGrid<T>> {
        Ok(intensity(&self.linear(x)?))
    }

    /// Squared operator norm of `A` (1 for the Fourier models, power
    /// iteration for GPR).
    pub fn operator_norm_sqr(&self) -> T {
        match self {
            Self::Far { .. } | Self::Near { .. } => T::one(),
            Self::Generalized { .. } => {
                let (m, n) = self.object_shape();
                let mut v = ComplexGrid::from_fn(m, n, |i, j| {
                    let t = (i * n + j) as f64;
                    Complex::new(T::lit(1.0 + (t * 0.37).sin()), T::lit((t * 0.11).cos()))
                });
                let mut est = T::zero();
                for _ in 0..200 {
                    let nv = v.norm();
                    v = v.scale(Complex::new(T::one() / nv, T::zero()));
                    let av = self.adjoint(&self.linear(&v).expect("shape")).expect("shape");
                    est = v.inner(&av).re;
                    v = av;
                }
                est
            }
        }
    }
}
