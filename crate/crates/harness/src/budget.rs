//! Counted-flop cost model used to give methods the same compute budget.
//!
//! One FFT of `n` points costs `5 n log2 n`. A DIP iteration runs each
//! generator forward and backward (about `6 x` the forward multiply-adds in
//! flops) plus one forward and one adjoint FFT of the canvas. An HES
//! iteration costs three canvas FFTs plus a few elementwise passes.

use anyhow::Result;

use ffpr_core::dip_solvers::{dip_object_shape, DipConfig, DipModel};

const ELEMENTWISE_FLOPS: f64 = 20.0;

pub fn fft_cost(canvas: (usize, usize)) -> f64 {
    let n = (canvas.0 * canvas.1) as f64;
    5.0 * n * n.log2()
}

pub fn dip_iteration_cost(dc: &DipConfig, canvas: (usize, usize)) -> Result<f64> {
    let model = DipModel::new(dc, dip_object_shape(canvas))?;
    Ok(6.0 * model.forward_macs() as f64 + 2.0 * fft_cost(canvas))
}

/// Cost of a DIP run; iteration 0 also evaluates and steps.
pub fn dip_run_cost(dc: &DipConfig, canvas: (usize, usize)) -> Result<f64> {
    Ok(dip_iteration_cost(dc, canvas)? * (dc.iterations + 1) as f64)
}

pub fn hes_run_cost(total_iterations: usize, canvas: (usize, usize)) -> f64 {
    let n = (canvas.0 * canvas.1) as f64;
    total_iterations as f64 * (3.0 * fft_cost(canvas) + ELEMENTWISE_FLOPS * n)
}

/// Whole iterations of a DIP config affordable within `cost` (at least one).
pub fn dip_iterations_for(dc: &DipConfig, canvas: (usize, usize), cost: f64) -> Result<usize> {
    let per = dip_iteration_cost(dc, canvas)?;
    Ok(((cost / per * (1.0 + 1e-12)).floor() as usize).saturating_sub(1).max(1))
}

/// HES restarts affordable within `cost` (at least one).
pub fn hes_restarts_for(total_iterations: usize, canvas: (usize, usize), cost: f64) -> usize {
    ((cost / hes_run_cost(total_iterations, canvas)).floor() as usize).max(1)
}
