//! Iterative projection solvers: fixed-support HIO followed by ER, and the
//! HIO + ER + shrinkwrap pipeline (HES).

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::projections::{er_step, hio_step, support_projection, MagnitudeProjector};
use super::shrinkwrap::shrinkwrap_update;
use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, IntensityGrid, SupportMask};
use crate::scalar::Real;
use crate::trace::{SolverTrace, TraceRecorder};

/// Spectrum-consistent random start: inverse transform of `sqrt(Y)` with iid
/// uniform phases, restricted to `mask`.
pub fn random_start<T: Real>(proj: &MagnitudeProjector<T>, mask: &SupportMask, seed: u64) -> Result<ComplexGrid<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r, c) = proj.shape();
    let data = proj
        .amplitudes()
        .iter()
        .map(|&a| {
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex::from_polar(a, T::lit(th))
        })
        .collect();
    let mut z = ComplexGrid::from_vec(r, c, data)?;
    proj.fft().inverse_in_place(z.data_mut());
    support_projection(&z, mask)
}

/// Fixed-support HIO then ER.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HioSchedule {
    pub hio_iters: usize,
    pub er_iters: usize,
    pub beta: f64,
}

impl Default for HioSchedule {
    fn default() -> Self {
        Self {
            hio_iters: 2000,
            er_iters: 200,
            beta: 0.9,
        }
    }
}

/// Runs HIO then ER under a fixed support from a random start.
///
/// The trace records the loss of the support-projected iterate; the
/// reported estimate is the best one seen.
pub fn hio_solve<T: Real>(
    y: &IntensityGrid<T>,
    mask: &SupportMask,
    schedule: &HioSchedule,
    seed: u64,
) -> Result<(ComplexGrid<T>, SolverTrace<T>)> {
    let proj = MagnitudeProjector::new(y);
    let z0 = random_start(&proj, mask, seed)?;
    hio_solve_from(&proj, mask, schedule, z0)
}

pub fn hio_solve_from<T: Real>(
    proj: &MagnitudeProjector<T>,
    mask: &SupportMask,
    schedule: &HioSchedule,
    z0: ComplexGrid<T>,
) -> Result<(ComplexGrid<T>, SolverTrace<T>)> {
    let beta = T::lit(schedule.beta);
    let mut rec = TraceRecorder::start();
    let mut best = BestIterate::new(proj, z0.clone(), &mut rec);
    let mut z = z0;
    for it in 0..schedule.hio_iters + schedule.er_iters {
        z = if it < schedule.hio_iters {
            hio_step(proj, &z, mask, beta)?
        } else {
            er_step(proj, &z, mask)?
        };
        let est = support_projection(&z, mask)?;
        best.offer(proj, est, &mut rec, it + 1)?;
    }
    Ok(best.finish(rec, schedule.hio_iters + schedule.er_iters))
}

/// HIO + ER + shrinkwrap schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HesSchedule {
    pub n_outer: usize,
    pub hio_iters: usize,
    pub er_iters: usize,
    pub beta: f64,
    /// Initial blur width in pixels.
    pub sigma0: f64,
    /// Geometric decay of the blur per outer round.
    pub sigma_decay: f64,
    pub sigma_floor: f64,
    /// Threshold as a fraction of the blurred maximum.
    pub tau: f64,
}

impl Default for HesSchedule {
    fn default() -> Self {
        Self {
            n_outer: 20,
            hio_iters: 40,
            er_iters: 10,
            beta: 0.9,
            sigma0: 3.0,
            sigma_decay: 0.97,
            sigma_floor: 1.5,
            tau: 0.1,
        }
    }
}

impl HesSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("HES schedule: {what}")));
        if self.n_outer == 0 || self.hio_iters + self.er_iters == 0 {
            return bad("needs at least one round with iterations");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta outside (0, 1]");
        }
        if !(self.sigma0 > 0.0 && self.sigma_floor > 0.0) {
            return bad("sigma must be positive");
        }
        if !(self.sigma_decay > 0.0 && self.sigma_decay <= 1.0) {
            return bad("sigma decay outside (0, 1]");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau outside (0, 1)");
        }
        Ok(())
    }

    pub fn total_iterations(&self) -> usize {
        self.n_outer * (self.hio_iters + self.er_iters)
    }
}

/// HES from a random start inside the loose centered half-canvas box.
pub fn hes_solve<T: Real>(
    y: &IntensityGrid<T>,
    schedule: &HesSchedule,
    seed: u64,
) -> Result<(ComplexGrid<T>, SolverTrace<T>)> {
    schedule.validate()?;
    let proj = MagnitudeProjector::new(y);
    let mask = SupportMask::centered_half_box(y.rows(), y.cols())?;
    let z0 = random_start(&proj, &mask, seed)?;
    hes_solve_from(&proj, schedule, mask, z0)
}

/// HES from an explicit start and initial support.
pub fn hes_solve_from<T: Real>(
    proj: &MagnitudeProjector<T>,
    schedule: &HesSchedule,
    mut mask: SupportMask,
    z0: ComplexGrid<T>,
) -> Result<(ComplexGrid<T>, SolverTrace<T>)> {
    schedule.validate()?;
    let beta = T::lit(schedule.beta);
    let mut rec = TraceRecorder::start();
    let mut best = BestIterate::new(proj, z0.clone(), &mut rec);
    let mut z = z0;
    let mut sigma = schedule.sigma0;
    let mut it = 0;
    for _round in 0..schedule.n_outer {
        for k in 0..schedule.hio_iters + schedule.er_iters {
            z = if k < schedule.hio_iters {
                hio_step(proj, &z, &mask, beta)?
            } else {
                er_step(proj, &z, &mask)?
            };
            it += 1;
            let est = support_projection(&z, &mask)?;
            best.offer(proj, est, &mut rec, it)?;
        }
        mask = shrinkwrap_update(&z, T::lit(sigma), T::lit(schedule.tau))?;
        sigma = (sigma * schedule.sigma_decay).max(schedule.sigma_floor);
    }
    Ok(best.finish(rec, it))
}

/// Tracks the lowest-loss estimate across iterations.
struct BestIterate<T: Real> {
    estimate: ComplexGrid<T>,
    loss: f64,
}

impl<T: Real> BestIterate<T> {
    fn new(proj: &MagnitudeProjector<T>, start: ComplexGrid<T>, rec: &mut TraceRecorder) -> Self {
        let loss = proj.loss(&start).to_f64_lossy();
        rec.record(loss);
        Self { estimate: start, loss }
    }

    fn offer(
        &mut self,
        proj: &MagnitudeProjector<T>,
        est: ComplexGrid<T>,
        rec: &mut TraceRecorder,
        it: usize,
    ) -> Result<()> {
        let loss = proj.loss(&est).to_f64_lossy();
        rec.record(loss);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                losses: rec.losses().to_vec(),
            });
        }
        if loss < self.loss {
            self.loss = loss;
            self.estimate = est;
        }
        Ok(())
    }

    fn finish(self, rec: TraceRecorder, iterations: usize) -> (ComplexGrid<T>, SolverTrace<T>) {
        let trace = rec.finish(iterations, self.estimate.clone(), self.loss);
        (self.estimate, trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{intensity, Fft2};
    use crate::testutil::random_grid;

    fn observation(z: &ComplexGrid<f64>) -> IntensityGrid<f64> {
        intensity(&Fft2::new(z.rows(), z.cols()).forward(z))
    }

    #[test]
    fn exact_start_is_reported_with_zero_loss() {
        let z = random_grid(5, 5, 1).zero_pad(10, 10).unwrap();
        let y = observation(&z);
        let proj = MagnitudeProjector::new(&y);
        let mask = SupportMask::centered_half_box(10, 10).unwrap();
        let sched = HesSchedule {
            n_outer: 2,
            ..HesSchedule::default()
        };
        let (est, trace) = hes_solve_from(&proj, &sched, mask, z.clone()).unwrap();
        assert!(trace.reported_loss < 1e-12);
        assert_eq!(est, z);
    }

    #[test]
    fn reported_loss_is_recomputable() {
        let z = random_grid(4, 4, 2).zero_pad(8, 8).unwrap();
        let y = observation(&z);
        let sched = HesSchedule {
            n_outer: 3,
            ..HesSchedule::default()
        };
        let (est, trace) = hes_solve(&y, &sched, 5).unwrap();
        let recomputed = MagnitudeProjector::new(&y).loss(&est);
        assert_eq!(trace.reported_loss, recomputed);
        assert_eq!(trace.losses.len(), sched.total_iterations() + 1);
        assert!(trace.losses.iter().all(|l| l.is_finite() && *l >= 0.0));
        assert_eq!(
            trace.reported_loss,
            trace.losses.iter().copied().fold(f64::INFINITY, f64::min)
        );
    }

    #[test]
    fn invalid_schedules_rejected() {
        let y = IntensityGrid::<f64>::zeros(8, 8);
        for bad in [
            HesSchedule {
                beta: 0.0,
                ..Default::default()
            },
            HesSchedule {
                tau: 1.0,
                ..Default::default()
            },
            HesSchedule {
                sigma0: -1.0,
                ..Default::default()
            },
            HesSchedule {
                n_outer: 0,
                ..Default::default()
            },
            HesSchedule {
                sigma_decay: 1.5,
                ..Default::default()
            },
        ] {
            assert!(hes_solve(&y, &bad, 0).is_err());
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let z = random_grid(4, 4, 3).zero_pad(8, 8).unwrap();
        let y = observation(&z);
        let mask = SupportMask::rect(8, 8, 0, 0, 4, 4).unwrap();
        let sched = HioSchedule {
            hio_iters: 50,
            er_iters: 10,
            beta: 0.9,
        };
        let (a, ta) = hio_solve(&y, &mask, &sched, 9).unwrap();
        let (b, tb) = hio_solve(&y, &mask, &sched, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta.losses, tb.losses);
    }

    #[test]
    fn random_start_respects_mask() {
        let y = observation(&random_grid(8, 8, 4));
        let proj = MagnitudeProjector::new(&y);
        let mask = SupportMask::rect(8, 8, 2, 2, 3, 3).unwrap();
        let z = random_start(&proj, &mask, 1).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if !mask.get(i, j) {
                    assert_eq!(z.get(i, j).norm(), 0.0);
                }
            }
        }
    }
}
