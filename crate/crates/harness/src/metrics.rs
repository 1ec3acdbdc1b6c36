//! Per-run metrics.
//!
//! `metrics.csv` columns: `instance, method, seed, final_loss, mse_complex,
//! mse_magnitude, mse_phase, iterations`. MSE columns are empty when no
//! ground truth is known. Wall-clock times go to `timing.csv`
//! (`instance, method, seed, wall_ms`) so that the metrics file is
//! bitwise reproducible.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use ffpr_core::classical::MagnitudeProjector;
use ffpr_core::symmetry::adjusted_errors;
use ffpr_core::{ComplexImage, MagnitudeMap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub instance: String,
    pub method: String,
    pub seed: u64,
    pub final_loss: f64,
    pub mse_complex: Option<f64>,
    pub mse_magnitude: Option<f64>,
    pub mse_phase: Option<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub instance: String,
    pub method: String,
    pub seed: u64,
    pub wall_ms: f64,
}

/// Metrics of a canvas-sized estimate; everything is recomputed from the
/// estimate, the observation and (optionally) the canvas-sized ground truth.
pub fn evaluate(
    instance: &str,
    method: &str,
    seed: u64,
    estimate: &ComplexImage,
    y: &MagnitudeMap,
    truth: Option<&ComplexImage>,
    iterations: usize,
) -> Result<MetricsRow> {
    let final_loss = MagnitudeProjector::new(y).loss(estimate);
    let errs = truth.map(|t| adjusted_errors(estimate, t)).transpose()?;
    Ok(MetricsRow {
        instance: instance.to_string(),
        method: method.to_string(),
        seed,
        final_loss,
        mse_complex: errs.map(|e| e.complex),
        mse_magnitude: errs.map(|e| e.magnitude),
        mse_phase: errs.map(|e| e.phase),
        iterations,
    })
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
