//! The far-field symmetry group (global phase x circular translation x 2D
//! conjugate flip) acting on a padded canvas, alignment to a reference, and
//! the symmetry-adjusted error metrics.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fourier::{check_oversampling, Fft2};
use crate::grid::ComplexGrid;
use crate::scalar::Real;

/// One group element. Acting on a canvas `Z`, it first conjugate-flips
/// (when `flip`), then circularly shifts by `shift`, then multiplies by
/// `exp(i phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryElement<T> {
    pub phase: T,
    pub shift: (usize, usize),
    pub flip: bool,
}

impl<T: Real> SymmetryElement<T> {
    pub fn identity() -> Self {
        Self {
            phase: T::zero(),
            shift: (0, 0),
            flip: false,
        }
    }

    /// Phase is wrapped into `[0, 2 pi)` and the shift reduced modulo the canvas.
    pub fn new(phase: T, shift: (usize, usize), flip: bool, canvas: (usize, usize)) -> Self {
        Self {
            phase: wrap_2pi(phase),
            shift: (shift.0 % canvas.0, shift.1 % canvas.1),
            flip,
        }
    }

    /// Acts on a canvas-sized field.
    pub fn act(&self, z: &ComplexGrid<T>) -> ComplexGrid<T> {
        let base = if self.flip { z.conj_flip() } else { z.clone() };
        let (r, c) = z.shape();
        let rot = Complex::from_polar(T::one(), self.phase);
        base.roll(self.shift.0 % r, self.shift.1 % c).scale(rot)
    }

    /// `self ∘ other`: the element equal to applying `other`, then `self`.
    pub fn compose(&self, other: &Self, canvas: (usize, usize)) -> Self {
        let (r, c) = canvas;
        if self.flip {
            // F (e^{ia} S_d Z) = e^{-ia} S_{-d} F Z
            Self::new(
                self.phase - other.phase,
                (
                    (self.shift.0 + r - other.shift.0 % r) % r,
                    (self.shift.1 + c - other.shift.1 % c) % c,
                ),
                !other.flip,
                canvas,
            )
        } else {
            Self::new(
                self.phase + other.phase,
                (self.shift.0 + other.shift.0, self.shift.1 + other.shift.1),
                other.flip,
                canvas,
            )
        }
    }
}

fn wrap_2pi<T: Real>(p: T) -> T {
    let two_pi = T::TAU();
    let w = p % two_pi;
    let w = if w < T::zero() { w + two_pi } else { w };
    if w >= two_pi {
        T::zero()
    } else {
        w
    }
}

/// Embeds `x` in the `canvas` and applies `g`.
pub fn apply_symmetry<T: Real>(
    x: &ComplexGrid<T>,
    g: &SymmetryElement<T>,
    canvas: (usize, usize),
) -> Result<ComplexGrid<T>> {
    check_oversampling(x.shape(), canvas)?;
    Ok(g.act(&x.zero_pad(canvas.0, canvas.1)?))
}

/// `corr[d] = <S_d c, r>` for every circular shift `d`.
fn shift_correlation<T: Real>(fft: &Fft2<T>, c: &ComplexGrid<T>, r: &ComplexGrid<T>) -> ComplexGrid<T> {
    let ch = fft.forward(c);
    let rh = fft.forward(r);
    let prod = ch.zip_map(&rh, |a, b| a.conj() * b);
    let s = T::from_usize_lossy(c.len()).sqrt();
    fft.inverse(&prod).scale(Complex::new(s, T::zero()))
}

/// Outcome of [`align`].
#[derive(Clone, Debug)]
pub struct Alignment<T: Real> {
    pub element: SymmetryElement<T>,
    pub aligned: ComplexGrid<T>,
    /// `||aligned - reference||^2`.
    pub residual_sqr: T,
}

/// Finds the group element bringing `estimate` closest to `reference`.
///
/// Flips and all circular shifts are searched exhaustively through FFT
/// cross-correlation; the phase is closed-form. Near-ties resolve to the
/// lexicographically smallest `(flip, di, dj)`.
pub fn align<T: Real>(estimate: &ComplexGrid<T>, reference: &ComplexGrid<T>) -> Result<Alignment<T>> {
    if estimate.shape() != reference.shape() {
        return Err(Error::Dimension(format!(
            "estimate {:?} and reference {:?} differ",
            estimate.shape(),
            reference.shape()
        )));
    }
    let canvas = reference.shape();
    let fft = Fft2::new(canvas.0, canvas.1);
    let base = estimate.norm_sqr() + reference.norm_sqr();
    let tol = T::lit(1e-12) * (base + T::min_positive_value());

    let mut best: Option<(T, SymmetryElement<T>)> = None;
    for flip in [false, true] {
        let cand = if flip { estimate.conj_flip() } else { estimate.clone() };
        let corr = shift_correlation(&fft, &cand, reference);
        for di in 0..canvas.0 {
            for dj in 0..canvas.1 {
                let v = corr.get(di, dj);
                let value = base - T::lit(2.0) * v.norm();
                if best.as_ref().is_none_or(|(b, _)| value < *b - tol) {
                    let phase = if v.norm() > T::zero() { v.arg() } else { T::zero() };
                    best = Some((value, SymmetryElement::new(phase, (di, dj), flip, canvas)));
                }
            }
        }
    }
    let (_, element) = best.expect("canvas is nonempty");
    let aligned = element.act(estimate);
    let residual_sqr = aligned.sub(reference).norm_sqr();
    Ok(Alignment {
        element,
        aligned,
        residual_sqr,
    })
}

/// `min_g ||g(estimate) - reference||^2 / ||reference||^2`.
pub fn symmetry_adjusted_mse<T: Real>(estimate: &ComplexGrid<T>, reference: &ComplexGrid<T>) -> Result<T> {
    let denom = reference.norm_sqr();
    if denom <= T::zero() {
        return Err(Error::ZeroReference);
    }
    Ok(align(estimate, reference)?.residual_sqr / denom)
}

/// Plain relative squared error with no symmetry adjustment.
pub fn relative_mse<T: Real>(estimate: &ComplexGrid<T>, reference: &ComplexGrid<T>) -> Result<T> {
    let denom = reference.norm_sqr();
    if denom <= T::zero() {
        return Err(Error::ZeroReference);
    }
    Ok(estimate.sub(reference).norm_sqr() / denom)
}

/// Complex, magnitude-only and phase-only errors after symmetry alignment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjustedErrors<T> {
    pub complex: T,
    /// `|| |aligned| - |ref| ||^2 / ||ref||^2`.
    pub magnitude: T,
    /// `|ref|^2`-weighted mean squared wrapped phase difference (radians^2).
    pub phase: T,
}

pub fn adjusted_errors<T: Real>(estimate: &ComplexGrid<T>, reference: &ComplexGrid<T>) -> Result<AdjustedErrors<T>> {
    let denom = reference.norm_sqr();
    if denom <= T::zero() {
        return Err(Error::ZeroReference);
    }
    let al = align(estimate, reference)?;
    let mut mag = T::zero();
    let mut ph = T::zero();
    for (a, r) in al.aligned.data().iter().zip(reference.data()) {
        let d = a.norm() - r.norm();
        mag += d * d;
        let w = r.norm_sqr();
        if w > T::zero() && a.norm() > T::zero() {
            let dphi = (a * r.conj()).arg();
            ph += w * dphi * dphi;
        } else if w > T::zero() {
            // undefined phase on a vanished estimate counts as the worst case
            ph += w * T::PI() * T::PI();
        }
    }
    Ok(AdjustedErrors {
        complex: al.residual_sqr / denom,
        magnitude: mag / denom,
        phase: ph / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{intensity, oversampled_fourier};
    use crate::testutil::random_grid;

    fn brute_force_min(est: &ComplexGrid<f64>, reference: &ComplexGrid<f64>) -> f64 {
        let (r, c) = reference.shape();
        let mut best = f64::INFINITY;
        for flip in [false, true] {
            for di in 0..r {
                for dj in 0..c {
                    let g = SymmetryElement::new(0.0, (di, dj), flip, (r, c));
                    let cand = g.act(est);
                    let ip = cand.inner(reference);
                    let theta = ip.arg();
                    let v = cand.scale(Complex::from_polar(1.0, theta)).sub(reference).norm_sqr();
                    best = best.min(v);
                }
            }
        }
        best
    }

    #[test]
    fn identity_embeds_unchanged() {
        let x = random_grid(3, 3, 1);
        let z = apply_symmetry(&x, &SymmetryElement::identity(), (6, 5)).unwrap();
        assert_eq!(z, x.zero_pad(6, 5).unwrap());
    }

    #[test]
    fn pi_phase_negates() {
        let x = random_grid(3, 3, 2);
        let g = SymmetryElement::new(std::f64::consts::PI, (0, 0), false, (5, 5));
        let z = apply_symmetry(&x, &g, (5, 5)).unwrap();
        let neg = x.zero_pad(5, 5).unwrap().scale(Complex::new(-1.0, 0.0));
        assert!(z.sub(&neg).norm() < 1e-14);
    }

    #[test]
    fn canvas_too_small_is_error() {
        let x = random_grid(4, 4, 2);
        assert!(apply_symmetry(&x, &SymmetryElement::identity(), (6, 7)).is_err());
    }

    #[test]
    fn group_action_preserves_far_field_intensity() {
        let x = random_grid(4, 5, 3);
        let canvas = (8, 9);
        let y0 = intensity(&oversampled_fourier(&x, 8, 9).unwrap());
        let big = crate::fourier::Fft2::new(8, 9);
        for (k, flip) in [(0usize, false), (3, true), (7, false), (11, true)] {
            let g = SymmetryElement::new(0.3 * k as f64, (k, 2 * k + 1), flip, canvas);
            let z = apply_symmetry(&x, &g, canvas).unwrap();
            let y = intensity(&big.forward(&z));
            assert!(y.max_abs_diff(&y0) < 1e-10);
        }
    }

    #[test]
    fn composition_matches_sequential_action() {
        let canvas = (7, 6);
        let z = random_grid(7, 6, 5);
        for (f1, f2) in [(false, false), (true, false), (false, true), (true, true)] {
            let g1 = SymmetryElement::new(0.7, (2, 5), f1, canvas);
            let g2 = SymmetryElement::new(-1.9, (6, 1), f2, canvas);
            let seq = g2.act(&g1.act(&z));
            let comp = g2.compose(&g1, canvas).act(&z);
            assert!(seq.sub(&comp).norm() < 1e-12, "{f1} {f2}");
        }
    }

    #[test]
    fn align_recovers_exact_orbit_member() {
        let x = random_grid(3, 3, 8).zero_pad(6, 6).unwrap();
        let g = SymmetryElement::new(2.1, (4, 1), true, (6, 6));
        let est = g.act(&x);
        let al = align(&est, &x).unwrap();
        assert!(al.aligned.sub(&x).norm() < 1e-10);
    }

    #[test]
    fn align_zero_reference_returns_estimate_norm() {
        let est = random_grid(5, 5, 1);
        let al = align(&est, &ComplexGrid::zeros(5, 5)).unwrap();
        assert!((al.residual_sqr - est.norm_sqr()).abs() < 1e-12);
        assert_eq!(al.element.shift, (0, 0));
        assert!(!al.element.flip);
        assert!(symmetry_adjusted_mse(&est, &ComplexGrid::zeros(5, 5)).is_err());
    }

    #[test]
    fn align_matches_brute_force_on_6x6() {
        for seed in 0..10 {
            let est = random_grid(6, 6, 100 + seed);
            let reference = random_grid(6, 6, 200 + seed);
            let fast = align(&est, &reference).unwrap().residual_sqr;
            let slow = brute_force_min(&est, &reference);
            assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
        }
    }

    #[test]
    fn mse_orbit_members_are_zero() {
        let x = random_grid(3, 4, 9).zero_pad(6, 8).unwrap();
        let rot = x.scale(Complex::from_polar(1.0, std::f64::consts::FRAC_PI_3));
        assert!(symmetry_adjusted_mse(&rot, &x).unwrap() < 1e-20);
        assert!(symmetry_adjusted_mse(&x.conj_flip(), &x).unwrap() < 1e-20);
    }

    #[test]
    fn mse_is_below_plain_error() {
        let x = random_grid(3, 3, 10).zero_pad(6, 6).unwrap();
        let noise = random_grid(6, 6, 11).scale(Complex::new(0.05, 0.0));
        let est = x.add(&noise);
        let adj = symmetry_adjusted_mse(&est, &x).unwrap();
        let plain = relative_mse(&est, &x).unwrap();
        assert!(adj > 0.0 && adj <= plain + 1e-15);
    }

    #[test]
    fn variants_vanish_on_orbit() {
        let x = random_grid(3, 3, 12).zero_pad(6, 6).unwrap();
        let g = SymmetryElement::new(1.0, (2, 3), true, (6, 6));
        let e = adjusted_errors(&g.act(&x), &x).unwrap();
        assert!(e.complex < 1e-20 && e.magnitude < 1e-20 && e.phase < 1e-20);
    }
}
