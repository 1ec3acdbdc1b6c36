//! Solver dispatch by method name.

use std::time::Instant;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use ffpr_core::classical::{hes_solve, hio_solve, ls_gradient_descent, natural_step, HioSchedule};
use ffpr_core::crystal::derive_seed;
use ffpr_core::dip::GeneratorConfig;
use ffpr_core::dip_solvers::{dip_object_shape, dip_solve, DipConfig, DipForm};
use ffpr_core::{Complex64, ComplexImage, MagnitudeMap, Model, SupportMask};

use crate::config::Config;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Er,
    Hio,
    Hes,
    Gd,
    Dip,
    DdipPolar,
    DdipCart,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Er,
        Method::Hio,
        Method::Hes,
        Method::Gd,
        Method::Dip,
        Method::DdipPolar,
        Method::DdipCart,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Er => "er",
            Method::Hio => "hio",
            Method::Hes => "hes",
            Method::Gd => "gd",
            Method::Dip => "dip",
            Method::DdipPolar => "ddip-polar",
            Method::DdipCart => "ddip-cart",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn dip_form(self) -> Option<DipForm> {
        match self {
            Method::Dip => Some(DipForm::Single),
            Method::DdipPolar => Some(DipForm::DoublePolar),
            Method::DdipCart => Some(DipForm::DoubleCartesian),
            _ => None,
        }
    }
}

/// Iteration/restart counts for one run, normally taken from the config.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunBudget {
    pub dip_iterations: usize,
    /// Maximum HES restarts.
    pub hes_restarts: usize,
    /// Stop starting new HES restarts once this much wall time has passed.
    pub hes_wall_ms: Option<f64>,
}

impl RunBudget {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            dip_iterations: cfg.dip.iterations,
            hes_restarts: cfg.hes_restarts,
            hes_wall_ms: None,
        }
    }
}

/// Result of one solver run, with the estimate embedded in the canvas.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub estimate: ComplexImage,
    pub losses: Vec<f64>,
    pub times_ms: Vec<f64>,
    pub reported_loss: f64,
    pub iterations: usize,
    pub wall_ms: f64,
}

pub fn dip_config(cfg: &Config, form: DipForm, iterations: usize, seed: u64) -> DipConfig {
    DipConfig {
        form,
        lr1: if form == DipForm::Single {
            cfg.dip.single_lr
        } else {
            cfg.dip.lr1
        },
        lr2: cfg.dip.lr2,
        iterations,
        seed,
        generator: GeneratorConfig {
            channels: cfg.dip.channels,
            stages: cfg.dip.stages,
            ..GeneratorConfig::default()
        },
    }
}

/// Complex Gaussian start scaled so that `||A x0||^2 = sum(y)`.
pub fn energy_matched_start(model: &Model, y: &MagnitudeMap, seed: u64) -> Result<ComplexImage> {
    let (r, c) = model.object_shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ComplexImage::from_fn(r, c, |_, _| {
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        Complex64::new(a, b)
    });
    let energy = model.linear(&g)?.norm_sqr();
    let scale = if energy > 0.0 { (y.sum() / energy).sqrt() } else { 1.0 };
    Ok(g.scale(Complex64::new(scale, 0.0)))
}

/// Runs `method` on the far-field observation `y` (canvas-sized).
///
/// `support` constrains ER/HIO; it defaults to the loose centered box.
pub fn run_method(
    method: Method,
    y: &MagnitudeMap,
    cfg: &Config,
    seed: u64,
    support: Option<&SupportMask>,
    budget: RunBudget,
) -> Result<RunOutput> {
    let canvas = y.shape();
    let start = Instant::now();
    let loose;
    let mask = match support {
        Some(m) => m,
        None => {
            loose = SupportMask::centered_half_box(canvas.0, canvas.1)?;
            &loose
        }
    };
    let (estimate, trace) = match method {
        Method::Er | Method::Hio => {
            let schedule = if method == Method::Er {
                HioSchedule {
                    hio_iters: 0,
                    er_iters: cfg.hio.hio_iters + cfg.hio.er_iters,
                    beta: cfg.hio.beta,
                }
            } else {
                cfg.hio
            };
            hio_solve(y, mask, &schedule, seed)?
        }
        Method::Hes => {
            let mut losses = Vec::new();
            let mut best: Option<(ComplexImage, ffpr_core::Trace)> = None;
            let mut runs = 0;
            for r in 0..budget.hes_restarts {
                if r > 0
                    && budget
                        .hes_wall_ms
                        .is_some_and(|w| start.elapsed().as_secs_f64() * 1e3 >= w)
                {
                    break;
                }
                runs += 1;
                let s = if r == 0 { seed } else { derive_seed(seed, r as u64) };
                let (x, t) = hes_solve(y, &cfg.hes, s)?;
                losses.extend_from_slice(&t.losses);
                if best.as_ref().is_none_or(|(_, b)| t.reported_loss < b.reported_loss) {
                    best = Some((x, t));
                }
            }
            let (x, mut t) = best.expect("hes_restarts >= 1");
            t.losses = losses;
            t.times_ms.clear();
            t.iterations = runs * cfg.hes.total_iterations();
            (x, t)
        }
        Method::Gd => {
            let object = dip_object_shape(canvas);
            let model = Model::far(object, canvas)?;
            let x0 = energy_matched_start(&model, y, seed)?;
            let lr = natural_step(&model) * cfg.gd.step_scale;
            let (x, t) = ls_gradient_descent(y, &model, x0, lr, cfg.gd.iterations)?;
            (x.zero_pad(canvas.0, canvas.1)?, t)
        }
        Method::Dip | Method::DdipPolar | Method::DdipCart => {
            let form = method.dip_form().expect("dip method");
            let dc = dip_config(cfg, form, budget.dip_iterations, seed);
            let (x, t) = dip_solve(y, &dc)?;
            (x.zero_pad(canvas.0, canvas.1)?, t)
        }
    };
    let times_ms = if trace.times_ms.len() == trace.losses.len() {
        trace.times_ms.clone()
    } else {
        Vec::new()
    };
    Ok(RunOutput {
        estimate,
        reported_loss: trace.reported_loss,
        iterations: trace.iterations,
        losses: trace.losses,
        times_ms,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
