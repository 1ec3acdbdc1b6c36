//! Per-run optimization history.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::error::Result;
use crate::grid::ComplexGrid;
use crate::scalar::Real;

/// Loss history and the reported iterate of one solver run.
#[derive(Clone, Debug)]
pub struct SolverTrace<T: Real> {
    /// Least-squares loss after each iteration (entry 0 is the initial point).
    pub losses: Vec<f64>,
    /// Milliseconds since start, aligned with `losses`.
    pub times_ms: Vec<f64>,
    pub iterations: usize,
    pub wall_time_ms: f64,
    /// The iterate the solver reports (best by loss unless documented otherwise).
    pub terminal: ComplexGrid<T>,
    /// Loss of `terminal`.
    pub reported_loss: f64,
}

/// Accumulates a trace while a solver runs.
#[derive(Debug)]
pub(crate) struct TraceRecorder {
    start: Instant,
    losses: Vec<f64>,
    times_ms: Vec<f64>,
}

impl TraceRecorder {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
            losses: Vec::new(),
            times_ms: Vec::new(),
        }
    }

    pub fn record(&mut self, loss: f64) {
        self.losses.push(loss);
        self.times_ms.push(self.start.elapsed().as_secs_f64() * 1e3);
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn into_losses(self) -> Vec<f64> {
        self.losses
    }

    pub fn finish<T: Real>(self, iterations: usize, terminal: ComplexGrid<T>, reported_loss: f64) -> SolverTrace<T> {
        SolverTrace {
            wall_time_ms: self.start.elapsed().as_secs_f64() * 1e3,
            losses: self.losses,
            times_ms: self.times_ms,
            iterations,
            terminal,
            reported_loss,
        }
    }
}

impl<T: Real> SolverTrace<T> {
    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(f64::NAN)
    }

    /// CSV with header `iteration,loss,time_ms`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iteration", "loss", "time_ms"])?;
        for (i, (l, t)) in self.losses.iter().zip(&self.times_ms).enumerate() {
            wr.write_record([i.to_string(), format!("{l:e}"), format!("{t:.3}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}
