//! Test-only helpers and brute-force oracles.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::ComplexGrid;

pub fn random_grid(rows: usize, cols: usize, seed: u64) -> ComplexGrid<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexGrid::from_fn(rows, cols, |_, _| {
        Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Explicit `F_{m'} pad(X) F_{n'}^T` with normalized DFT matrices.
pub fn naive_dft_padded(x: &ComplexGrid<f64>, mp: usize, np: usize) -> ComplexGrid<f64> {
    let dft = |n: usize| -> Vec<Complex<f64>> {
        let s = 1.0 / (n as f64).sqrt();
        (0..n * n)
            .map(|idx| {
                let (k, l) = (idx / n, idx % n);
                let ang = -2.0 * std::f64::consts::PI * (k * l) as f64 / n as f64;
                Complex::from_polar(s, ang)
            })
            .collect()
    };
    let fm = dft(mp);
    let fn_ = dft(np);
    let (m, n) = x.shape();
    ComplexGrid::from_fn(mp, np, |k, l| {
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..n {
                acc += fm[k * mp + i] * x.get(i, j) * fn_[l * np + j];
            }
        }
        acc
    })
}
