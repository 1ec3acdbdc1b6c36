//! Desk-scale experiment runners.
//!
//! Each runner schedules independent runs on the rayon pool, collects the
//! results in job order and writes `metrics.csv`, `timing.csv`,
//! `failures.csv`, the resolved `config.toml` and PNG summaries to the
//! output directory. A failed run is recorded and the experiment continues.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ffpr_core::classical::{ls_gradient_descent, natural_step};
use ffpr_core::crystal::{derive_seed, simulate_crystal_with, CrystalGeometry, CrystalParams};
use ffpr_core::formats::{save_cimg, save_cimg_sequence, save_rmap};
use ffpr_core::{ComplexImage, MagnitudeMap, Model, SupportMask};

use crate::budget::{dip_iterations_for, dip_run_cost, hes_restarts_for};
use crate::config::{BudgetMode, Config, ExperimentId, SupportKind};
use crate::methods::{dip_config, energy_matched_start, run_method, Method, RunBudget, RunOutput};
use crate::metrics::{evaluate, median, write_rows, MetricsRow, TimingRow};
use crate::render::{save_histograms, save_reconstruction_panels};

/// A simulated crystal with its observation on the `2m x 2n` canvas.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub seed: u64,
    pub defects: usize,
    pub object: ComplexImage,
    /// Object zero-padded to the canvas.
    pub truth: ComplexImage,
    pub y: MagnitudeMap,
    /// True support on the object grid.
    pub support: SupportMask,
}

impl Instance {
    pub fn canvas(&self) -> (usize, usize) {
        self.y.shape()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub instance: String,
    pub method: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentReport {
    pub metrics: Vec<MetricsRow>,
    pub timing: Vec<TimingRow>,
    pub failures: Vec<FailureRow>,
}

impl ExperimentReport {
    /// Values of `f` over the rows of `method`.
    pub fn values(&self, method: &str, f: impl Fn(&MetricsRow) -> Option<f64>) -> Vec<f64> {
        self.metrics
            .iter()
            .filter(|r| r.method == method)
            .filter_map(f)
            .collect()
    }

    pub fn median_mse(&self, method: &str) -> Option<f64> {
        median(&self.values(method, |r| r.mse_complex))
    }

    fn push(&mut self, row: MetricsRow, wall_ms: f64) {
        self.timing.push(TimingRow {
            instance: row.instance.clone(),
            method: row.method.clone(),
            seed: row.seed,
            wall_ms,
        });
        self.metrics.push(row);
    }

    fn fail(&mut self, instance: &str, method: &str, seed: u64, err: &anyhow::Error) {
        self.failures.push(FailureRow {
            instance: instance.to_string(),
            method: method.to_string(),
            seed,
            error: format!("{err:#}"),
        });
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_rows(&dir.join("metrics.csv"), &self.metrics)?;
        write_rows(&dir.join("timing.csv"), &self.timing)?;
        write_rows(&dir.join("failures.csv"), &self.failures)?;
        Ok(())
    }
}

/// Seed of restart `r`.
pub fn restart_seed(cfg: &Config, r: usize) -> u64 {
    derive_seed(cfg.seed, r as u64)
}

pub fn build_instances(cfg: &Config) -> Result<Vec<Instance>> {
    let sel = &cfg.instances;
    (0..sel.count)
        .map(|i| {
            let seed = derive_seed(sel.seed, i as u64);
            let params = CrystalParams {
                geometry: CrystalGeometry {
                    grid: sel.grid,
                    region: sel.region,
                },
                n_points: sel.n_points,
                n_defects: sel.defects[i % sel.defects.len()],
                convex: i % 2 == 0,
                q: sel.q,
            };
            let c = simulate_crystal_with(seed, &params)?;
            let canvas = (2 * sel.grid, 2 * sel.grid);
            Ok(Instance {
                name: format!("inst{i}"),
                seed,
                defects: params.n_defects,
                truth: c.object.zero_pad(canvas.0, canvas.1)?,
                y: c.observation()?,
                object: c.object,
                support: c.support,
            })
        })
        .collect()
}

pub fn run_experiment(cfg: &Config) -> Result<ExperimentReport> {
    fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
    fs::write(cfg.output.join("config.toml"), cfg.to_toml())?;
    let report = match cfg.experiment {
        ExperimentId::Table1 => table1(cfg)?,
        ExperimentId::Fig2Hist | ExperimentId::Fig3Support => support_study(cfg)?,
        ExperimentId::Fig5Compare => fig5_compare(cfg)?,
        ExperimentId::SolveOne => solve_one(cfg)?,
    };
    report.write(&cfg.output)?;
    Ok(report)
}

fn save_instances(dir: &Path, instances: &[Instance]) -> Result<()> {
    let d = dir.join("instances");
    fs::create_dir_all(&d)?;
    for inst in instances {
        save_cimg(d.join(format!("{}.cimg", inst.name)), &inst.truth)?;
        save_rmap(d.join(format!("{}.rmap", inst.name)), &inst.y)?;
    }
    Ok(())
}

fn save_estimate(dir: &Path, instance: &str, label: &str, seed: u64, x: &ComplexImage) -> Result<()> {
    let d = dir.join("recon");
    fs::create_dir_all(&d)?;
    save_cimg(d.join(format!("{instance}_{label}_{seed}.cimg")), x)?;
    Ok(())
}

/// The three forward models of the uniqueness comparison, all on the
/// instance object grid.
pub fn table1_models(cfg: &Config, object: (usize, usize)) -> Result<Vec<Model>> {
    let canvas = (2 * object.0, 2 * object.1);
    Ok(vec![
        Model::far(object, canvas)?,
        Model::near(object, canvas, cfg.models.nfpr_beta)?,
        Model::gaussian(
            object,
            cfg.models.gpr_factor * object.0 * object.1,
            derive_seed(cfg.seed, u64::MAX),
        )?,
    ])
}

/// Gradient descent from `restarts` random starts on each forward model.
/// Rows use method `gd-<model>`; MSE columns compare object-sized arrays.
fn table1(cfg: &Config) -> Result<ExperimentReport> {
    let inst = build_instances(cfg)?.remove(0);
    save_instances(&cfg.output, std::slice::from_ref(&inst))?;
    let models = table1_models(cfg, inst.object.shape())?;
    let jobs: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|m| (0..cfg.restarts).map(move |r| (m, r)))
        .collect();
    let observations = models
        .iter()
        .map(|m| m.apply(&inst.object))
        .collect::<ffpr_core::Result<Vec<_>>>()?;
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(m, r)| {
            let start = Instant::now();
            let (model, y) = (&models[m], &observations[m]);
            let seed = restart_seed(cfg, r);
            let out = energy_matched_start(model, y, seed).and_then(|x0| {
                let lr = natural_step(model) * cfg.gd.step_scale;
                Ok(ls_gradient_descent(y, model, x0, lr, cfg.gd.iterations)?)
            });
            (m, seed, out, start.elapsed().as_secs_f64() * 1e3)
        })
        .collect();
    let mut report = ExperimentReport::default();
    let mut estimates = vec![Vec::new(); models.len()];
    for (m, seed, out, wall) in results {
        let label = format!("gd-{}", models[m].name());
        match out {
            Ok((x, trace)) => {
                let errs = ffpr_core::symmetry::adjusted_errors(&x, &inst.object)?;
                report.push(
                    MetricsRow {
                        instance: inst.name.clone(),
                        method: label,
                        seed,
                        final_loss: trace.reported_loss,
                        mse_complex: Some(errs.complex),
                        mse_magnitude: Some(errs.magnitude),
                        mse_phase: Some(errs.phase),
                        iterations: trace.iterations,
                    },
                    wall,
                );
                estimates[m].push(x);
            }
            Err(e) => report.fail(&inst.name, &label, seed, &e),
        }
    }
    for (m, xs) in estimates.iter().enumerate() {
        if !xs.is_empty() {
            save_cimg_sequence(cfg.output.join(format!("recon_gd-{}.cimg", models[m].name())), xs)?;
        }
    }
    let series: Vec<_> = models
        .iter()
        .map(|m| {
            let label = format!("gd-{}", m.name());
            let v = report.values(&label, |r| Some(r.final_loss));
            (label, v)
        })
        .collect();
    save_histograms(&cfg.output.join("loss_hist.png"), &series, true)?;
    Ok(report)
}

/// The HIO support given to restarts of `inst` on its canvas.
pub fn tight_support(inst: &Instance, kind: SupportKind) -> Result<SupportMask> {
    let (r, c) = inst.canvas();
    let m = match kind {
        SupportKind::Bbox => inst.support.bounding_box(),
        SupportKind::Mask => inst.support.clone(),
    };
    Ok(m.embed(r, c)?)
}

/// HIO restarts under tight and loose support (methods `hio-tight`, `hio-loose`).
fn support_study(cfg: &Config) -> Result<ExperimentReport> {
    let instances = build_instances(cfg)?;
    save_instances(&cfg.output, &instances)?;
    let method = cfg.methods[0];
    let mut jobs = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let tight = tight_support(inst, cfg.tight_support)?;
        let loose = SupportMask::centered_half_box(inst.canvas().0, inst.canvas().1)?;
        for (label, mask) in [("tight", tight), ("loose", loose)] {
            for r in 0..cfg.restarts {
                jobs.push((
                    i,
                    format!("{}-{label}", method.as_str()),
                    mask.clone(),
                    restart_seed(cfg, r),
                ));
            }
        }
    }
    let budget = RunBudget::from_config(cfg);
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(i, _, mask, seed)| run_method(method, &instances[*i].y, cfg, *seed, Some(mask), budget))
        .collect();
    let report = collect(
        cfg,
        &instances,
        jobs.iter().map(|(i, l, _, s)| (*i, l.clone(), *s)),
        results,
    )?;
    let labels = [
        format!("{}-tight", method.as_str()),
        format!("{}-loose", method.as_str()),
    ];
    let series = |f: fn(&MetricsRow) -> Option<f64>| -> Vec<(String, Vec<f64>)> {
        labels.iter().map(|l| (l.clone(), report.values(l, f))).collect()
    };
    save_histograms(&cfg.output.join("loss_hist.png"), &series(|r| Some(r.final_loss)), true)?;
    if cfg.experiment == ExperimentId::Fig3Support {
        save_histograms(&cfg.output.join("mse_hist.png"), &series(|r| r.mse_complex), true)?;
        render_best(cfg, &instances, &report, &labels)?;
    }
    Ok(report)
}

/// Turns run results into report rows, saving every estimate.
fn collect(
    cfg: &Config,
    instances: &[Instance],
    jobs: impl Iterator<Item = (usize, String, u64)>,
    results: Vec<Result<RunOutput>>,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::default();
    for ((i, label, seed), out) in jobs.zip(results) {
        let inst = &instances[i];
        match out {
            Ok(o) => {
                save_estimate(&cfg.output, &inst.name, &label, seed, &o.estimate)?;
                let row = evaluate(
                    &inst.name,
                    &label,
                    seed,
                    &o.estimate,
                    &inst.y,
                    Some(&inst.truth),
                    o.iterations,
                )?;
                report.push(row, o.wall_ms);
            }
            Err(e) => report.fail(&inst.name, &label, seed, &e),
        }
    }
    Ok(report)
}

/// Panels of the lowest-MSE run per (instance, label).
fn render_best(cfg: &Config, instances: &[Instance], report: &ExperimentReport, labels: &[String]) -> Result<()> {
    let d = cfg.output.join("panels");
    fs::create_dir_all(&d)?;
    for inst in instances {
        for label in labels {
            let best = report
                .metrics
                .iter()
                .filter(|r| r.instance == inst.name && &r.method == label)
                .min_by(|a, b| {
                    a.mse_complex
                        .unwrap_or(f64::INFINITY)
                        .total_cmp(&b.mse_complex.unwrap_or(f64::INFINITY))
                });
            if let Some(row) = best {
                let path = cfg
                    .output
                    .join("recon")
                    .join(format!("{}_{label}_{}.cimg", inst.name, row.seed));
                let x = ffpr_core::formats::load_cimg(&path)?;
                save_reconstruction_panels(&d.join(format!("{}_{label}.png", inst.name)), &x, Some(&inst.truth))?;
            }
        }
    }
    Ok(())
}

/// Budget of `method` next to a double-DIP reference run.
#[derive(Clone, Copy, Debug)]
enum Reference {
    Cost(f64),
    WallMs(f64),
}

fn budget_for(cfg: &Config, method: Method, canvas: (usize, usize), reference: Option<Reference>) -> Result<RunBudget> {
    let mut b = RunBudget::from_config(cfg);
    match (reference, method) {
        (Some(Reference::Cost(cost)), Method::Hes) => {
            b.hes_restarts = hes_restarts_for(cfg.hes.total_iterations(), canvas, cost);
        }
        (Some(Reference::WallMs(ms)), Method::Hes) => {
            b.hes_restarts = usize::MAX;
            b.hes_wall_ms = Some(ms);
        }
        (Some(Reference::Cost(cost)), Method::Dip) => {
            let dc = dip_config(cfg, ffpr_core::dip_solvers::DipForm::Single, 1, 0);
            b.dip_iterations = dip_iterations_for(&dc, canvas, cost)?;
        }
        (Some(Reference::WallMs(ms)), Method::Dip) => {
            b.dip_iterations = calibrated_dip_iterations(cfg, canvas, ms)?;
        }
        _ => {}
    }
    Ok(b)
}

/// Single-DIP iterations that fit in `ms`, from a short timed run.
fn calibrated_dip_iterations(cfg: &Config, canvas: (usize, usize), ms: f64) -> Result<usize> {
    const PROBE: usize = 10;
    let dc = dip_config(cfg, ffpr_core::dip_solvers::DipForm::Single, PROBE, 0);
    let y = MagnitudeMap::zeros(canvas.0, canvas.1);
    let start = Instant::now();
    ffpr_core::dip_solvers::dip_solve(&y, &dc)?;
    let per = start.elapsed().as_secs_f64() * 1e3 / (PROBE + 1) as f64;
    Ok(((ms / per).floor() as usize).saturating_sub(1).max(1))
}

/// Methods over instances x seeds. With a `cost` or `wall` budget, the first
/// double-DIP method in the list runs first and sets the budget of HES and
/// single DIP for the same (instance, seed).
fn fig5_compare(cfg: &Config) -> Result<ExperimentReport> {
    let instances = build_instances(cfg)?;
    save_instances(&cfg.output, &instances)?;
    let reference = cfg
        .methods
        .iter()
        .copied()
        .find(|m| matches!(m, Method::DdipPolar | Method::DdipCart))
        .filter(|_| cfg.budget != BudgetMode::Iterations);
    let jobs: Vec<(usize, u64)> = (0..instances.len())
        .flat_map(|i| (0..cfg.restarts).map(move |r| (i, r)))
        .map(|(i, r)| (i, restart_seed(cfg, r)))
        .collect();
    let per_job: Vec<Vec<(Method, Result<RunOutput>)>> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let inst = &instances[i];
            let canvas = inst.canvas();
            let mut outs = Vec::new();
            let mut reference_budget = None;
            if let Some(rm) = reference {
                let out = run_method(rm, &inst.y, cfg, seed, None, RunBudget::from_config(cfg));
                if let Ok(o) = &out {
                    reference_budget = match cfg.budget {
                        BudgetMode::Cost => dip_run_cost(
                            &dip_config(cfg, rm.dip_form().expect("dip"), cfg.dip.iterations, seed),
                            canvas,
                        )
                        .ok()
                        .map(Reference::Cost),
                        BudgetMode::Wall => Some(Reference::WallMs(o.wall_ms)),
                        BudgetMode::Iterations => None,
                    };
                }
                outs.push((rm, out));
            }
            for &m in cfg.methods.iter().filter(|&&m| Some(m) != reference) {
                let out = budget_for(cfg, m, canvas, reference_budget)
                    .and_then(|b| run_method(m, &inst.y, cfg, seed, None, b));
                outs.push((m, out));
            }
            outs.sort_by_key(|(m, _)| cfg.methods.iter().position(|x| x == m));
            outs
        })
        .collect();
    let mut keys = Vec::new();
    let mut results = Vec::new();
    for ((i, seed), outs) in jobs.iter().zip(per_job) {
        for (m, out) in outs {
            keys.push((*i, m.as_str().to_string(), *seed));
            results.push(out);
        }
    }
    let report = collect(cfg, &instances, keys.into_iter(), results)?;
    let labels: Vec<String> = cfg.methods.iter().map(|m| m.as_str().to_string()).collect();
    let series: Vec<_> = labels
        .iter()
        .map(|l| (l.clone(), report.values(l, |r| r.mse_complex)))
        .collect();
    save_histograms(&cfg.output.join("mse_hist.png"), &series, true)?;
    render_best(cfg, &instances, &report, &labels)?;
    Ok(report)
}

/// Every configured method on the first instance, `restarts` seeds each.
fn solve_one(cfg: &Config) -> Result<ExperimentReport> {
    let instances = build_instances(cfg)?;
    let instances = &instances[..1];
    save_instances(&cfg.output, instances)?;
    let jobs: Vec<(Method, u64)> = cfg
        .methods
        .iter()
        .flat_map(|&m| (0..cfg.restarts).map(move |r| (m, r)))
        .map(|(m, r)| (m, restart_seed(cfg, r)))
        .collect();
    let budget = RunBudget::from_config(cfg);
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(m, seed)| run_method(m, &instances[0].y, cfg, seed, None, budget))
        .collect();
    let report = collect(
        cfg,
        instances,
        jobs.iter().map(|(m, s)| (0, m.as_str().to_string(), *s)),
        results,
    )?;
    let labels: Vec<String> = cfg.methods.iter().map(|m| m.as_str().to_string()).collect();
    render_best(cfg, instances, &report, &labels)?;
    Ok(report)
}
