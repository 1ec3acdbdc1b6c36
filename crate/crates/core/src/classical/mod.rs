//! Classical far-field solvers: alternating projections (ER, HIO,
//! shrinkwrap, HES) and gradient descent on the least-squares loss.

mod descent;
mod iterative;
mod projections;
mod shrinkwrap;

pub use descent::{ls_gradient_descent, ls_loss, ls_objective_and_gradient, natural_step, MAGNITUDE_EPS};
pub use iterative::{hes_solve, hes_solve_from, hio_solve, hio_solve_from, random_start, HesSchedule, HioSchedule};
pub use projections::{er_step, hio_step, magnitude_projection, support_projection, MagnitudeProjector};
pub use shrinkwrap::{gaussian_blur, shrinkwrap_update};
