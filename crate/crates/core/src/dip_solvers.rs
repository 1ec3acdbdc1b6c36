//! Deep-image-prior solvers for far-field phase retrieval: one generator
//! producing (re, im), or two generators combined in polar or cartesian form
//! with separate Adam learning rates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crystal::derive_seed;
use crate::dip::{complex_loss_head, AdamParams, AdamState, GeneratorConfig, GeneratorNet, Head, Tensor};
use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::grid::{ComplexGrid, IntensityGrid};
use crate::trace::{SolverTrace, TraceRecorder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DipForm {
    Single,
    DoublePolar,
    DoubleCartesian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipConfig {
    pub form: DipForm,
    /// Learning rate of the single net, or of the magnitude / real net.
    pub lr1: f64,
    /// Learning rate of the phase / imaginary net; unused by `Single`.
    pub lr2: f64,
    pub iterations: usize,
    /// Seed of the first generator's seed tensor and weights; the second
    /// generator uses an independent stream derived from it.
    pub seed: u64,
    pub generator: GeneratorConfig,
}

impl Default for DipConfig {
    fn default() -> Self {
        Self {
            form: DipForm::DoublePolar,
            lr1: 1e-4,
            lr2: 1e-3,
            iterations: 10_000,
            seed: 0,
            generator: GeneratorConfig::default(),
        }
    }
}

impl DipConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |lr: f64| lr >= 0.0 && lr.is_finite();
        if !ok(self.lr1) || (self.form != DipForm::Single && !ok(self.lr2)) {
            return Err(Error::InvalidParameter(format!(
                "learning rates must be finite and nonnegative (lr1 {}, lr2 {})",
                self.lr1, self.lr2
            )));
        }
        Ok(())
    }
}

/// Object size recovered from a canvas: `floor(m'/2) x floor(n'/2)`.
pub fn dip_object_shape(canvas: (usize, usize)) -> (usize, usize) {
    (canvas.0 / 2, canvas.1 / 2)
}

/// The generators of one DIP run and their composition into an image.
#[derive(Clone, Debug)]
pub struct DipModel {
    form: DipForm,
    nets: Vec<GeneratorNet>,
}

impl DipModel {
    pub fn new(cfg: &DipConfig, object: (usize, usize)) -> Result<Self> {
        let (r, c) = object;
        let g = &cfg.generator;
        let nets = match cfg.form {
            DipForm::Single => vec![GeneratorNet::new(g, r, c, 2, Head::Linear, cfg.seed)?],
            DipForm::DoublePolar => vec![
                GeneratorNet::new(g, r, c, 1, Head::Magnitude, cfg.seed)?,
                GeneratorNet::new(g, r, c, 1, Head::Phase, derive_seed(cfg.seed, 1))?,
            ],
            DipForm::DoubleCartesian => vec![
                GeneratorNet::new(g, r, c, 1, Head::Linear, cfg.seed)?,
                GeneratorNet::new(g, r, c, 1, Head::Linear, derive_seed(cfg.seed, 1))?,
            ],
        };
        Ok(Self { form: cfg.form, nets })
    }

    pub fn form(&self) -> DipForm {
        self.form
    }

    pub fn nets(&self) -> &[GeneratorNet] {
        &self.nets
    }

    pub fn nets_mut(&mut self) -> &mut [GeneratorNet] {
        &mut self.nets
    }

    /// Forward multiply-accumulates of all generators.
    pub fn forward_macs(&self) -> u64 {
        self.nets.iter().map(|n| n.forward_macs()).sum()
    }

    /// Composes generator outputs into the complex image.
    pub fn compose(form: DipForm, outs: &[Tensor]) -> Result<ComplexGrid<f64>> {
        let (_, h, w) = outs[0].shape();
        let data: Vec<Complex64> = match form {
            DipForm::Single => outs[0]
                .channel(0)
                .iter()
                .zip(outs[0].channel(1))
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
            DipForm::DoublePolar => outs[0]
                .data()
                .iter()
                .zip(outs[1].data())
                .map(|(&s, &p)| Complex64::from_polar(s, p))
                .collect(),
            DipForm::DoubleCartesian => outs[0]
                .data()
                .iter()
                .zip(outs[1].data())
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
        };
        ComplexGrid::from_vec(h, w, data)
    }

    /// Image for the current parameters (no activation caching).
    pub fn image(&self) -> Result<ComplexGrid<f64>> {
        let outs: Vec<Tensor> = self.nets.iter().map(|n| n.evaluate()).collect();
        Self::compose(self.form, &outs)
    }

    /// Chain rule from `g = dL/dRe X + i dL/dIm X` to each generator output.
    fn output_grads(form: DipForm, outs: &[Tensor], g: &ComplexGrid<f64>) -> Vec<Tensor> {
        let (_, h, w) = outs[0].shape();
        let gd = g.data();
        let plane = |v: Vec<f64>| Tensor::from_vec(1, h, w, v).expect("finite gradient");
        match form {
            DipForm::Single => {
                let data = gd.iter().map(|z| z.re).chain(gd.iter().map(|z| z.im)).collect();
                vec![Tensor::from_vec(2, h, w, data).expect("finite gradient")]
            }
            DipForm::DoubleCartesian => vec![
                plane(gd.iter().map(|z| z.re).collect()),
                plane(gd.iter().map(|z| z.im).collect()),
            ],
            DipForm::DoublePolar => {
                let (s, p) = (outs[0].data(), outs[1].data());
                let mut gs = Vec::with_capacity(gd.len());
                let mut gp = Vec::with_capacity(gd.len());
                for k in 0..gd.len() {
                    let e = Complex64::from_polar(1.0, p[k]);
                    // dX/ds = e^{ip}, dX/dp = i s e^{ip}
                    gs.push(gd[k].re * e.re + gd[k].im * e.im);
                    gp.push(s[k] * (gd[k].im * e.re - gd[k].re * e.im));
                }
                vec![plane(gs), plane(gp)]
            }
        }
    }
}

/// Runs Adam on the DIP objective and returns the best-loss image
/// (object-sized, `floor(m'/2) x floor(n'/2)`) with its trace.
///
/// Trace entry `k` is the exact amplitude loss of the image after `k`
/// updates; frozen generators (learning rate 0) are not updated at all.
pub fn dip_solve(y: &IntensityGrid<f64>, cfg: &DipConfig) -> Result<(ComplexGrid<f64>, SolverTrace<f64>)> {
    cfg.validate()?;
    let canvas = y.shape();
    let object = dip_object_shape(canvas);
    let model = ForwardModel::far(object, canvas)?;
    let mut dip = DipModel::new(cfg, object)?;
    let lrs = match cfg.form {
        DipForm::Single => vec![cfg.lr1],
        _ => vec![cfg.lr1, cfg.lr2],
    };
    let mut optims: Vec<AdamState> = lrs.iter().map(|&lr| AdamState::new(AdamParams::with_lr(lr))).collect();
    let mut rec = TraceRecorder::start();
    let mut best: Option<(f64, ComplexGrid<f64>)> = None;
    for it in 0..=cfg.iterations {
        let outs: Vec<Tensor> = dip.nets.iter_mut().map(|n| n.forward()).collect();
        let x = DipModel::compose(cfg.form, &outs)?;
        let head = complex_loss_head(&model, y, &x)?;
        rec.record(head.exact_loss);
        if !head.exact_loss.is_finite() || !head.loss.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                losses: rec.into_losses(),
            });
        }
        if best.as_ref().is_none_or(|(l, _)| head.exact_loss < *l) {
            best = Some((head.exact_loss, x));
        }
        if it == cfg.iterations {
            break;
        }
        let grads = DipModel::output_grads(cfg.form, &outs, &head.grad);
        for ((net, g), (opt, &lr)) in dip.nets.iter_mut().zip(&grads).zip(optims.iter_mut().zip(&lrs)) {
            if lr == 0.0 {
                continue;
            }
            net.zero_grad();
            net.backward(g)?;
            opt.step(&mut net.params_mut());
        }
    }
    let (loss, x) = best.expect("at least one iterate");
    let trace = rec.finish(cfg.iterations, x.clone(), loss);
    Ok((x, trace))
}

/// [`dip_solve`] restricted to the single-generator form.
pub fn single_dip_solve(y: &IntensityGrid<f64>, cfg: &DipConfig) -> Result<(ComplexGrid<f64>, SolverTrace<f64>)> {
    if cfg.form != DipForm::Single {
        return Err(Error::InvalidParameter("single_dip_solve needs form = single".into()));
    }
    dip_solve(y, cfg)
}

/// [`dip_solve`] restricted to the two-generator forms.
pub fn double_dip_solve(y: &IntensityGrid<f64>, cfg: &DipConfig) -> Result<(ComplexGrid<f64>, SolverTrace<f64>)> {
    if cfg.form == DipForm::Single {
        return Err(Error::InvalidParameter("double_dip_solve needs a double form".into()));
    }
    dip_solve(y, cfg)
}
