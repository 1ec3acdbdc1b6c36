use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{ChannelNorm, Conv3x3, Head, Layer};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Architecture knobs of the deep-decoder generator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub channels: usize,
    /// Number of {upsample, conv, leaky-ReLU, norm} stages.
    pub stages: usize,
    pub leaky_slope: f64,
    /// Upper end of the uniform seed distribution.
    pub seed_scale: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            channels: 64,
            stages: 5,
            leaky_slope: 0.05,
            seed_scale: 0.1,
        }
    }
}

/// Untrained convolutional generator `G_theta(z)` with a fixed random seed tensor.
#[derive(Clone, Debug)]
pub struct GeneratorNet {
    z: Tensor,
    layers: Vec<Layer>,
    acts: Vec<Tensor>,
    seed: u64,
}

/// Spatial sizes from the seed tensor up to `target`, halving (rounding up)
/// once per stage.
fn stage_sizes(target: usize, stages: usize) -> Vec<usize> {
    let mut sizes = vec![target];
    for _ in 0..stages {
        let prev = *sizes.last().unwrap();
        sizes.push(prev.div_ceil(2));
    }
    sizes.reverse();
    sizes
}

impl GeneratorNet {
    /// Builds the net producing `out_channels x rows x cols` through `head`.
    pub fn new(
        cfg: &GeneratorConfig,
        rows: usize,
        cols: usize,
        out_channels: usize,
        head: Head,
        seed: u64,
    ) -> Result<Self> {
        if cfg.channels == 0 || out_channels == 0 || rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("generator sizes must be positive".into()));
        }
        if !(cfg.seed_scale > 0.0) || !cfg.leaky_slope.is_finite() {
            return Err(Error::InvalidParameter(format!("bad generator config {cfg:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (hs, ws) = (stage_sizes(rows, cfg.stages), stage_sizes(cols, cfg.stages));
        let c = cfg.channels;
        let z_data = (0..c * hs[0] * ws[0])
            .map(|_| rng.gen_range(0.0..cfg.seed_scale))
            .collect();
        let z = Tensor::from_vec(c, hs[0], ws[0], z_data)?;
        let mut layers = Vec::new();
        for s in 1..=cfg.stages {
            layers.push(Layer::Upsample {
                height: hs[s],
                width: ws[s],
            });
            layers.push(Layer::Conv(Conv3x3::kaiming(c, c, &mut rng)));
            layers.push(Layer::LeakyRelu { slope: cfg.leaky_slope });
            layers.push(Layer::Norm(ChannelNorm::new(c)));
        }
        layers.push(Layer::Conv(Conv3x3::kaiming(c, out_channels, &mut rng)));
        layers.push(Layer::Activation(head));
        let net = Self {
            z,
            layers,
            acts: Vec::new(),
            seed,
        };
        let outputs = out_channels * rows * cols;
        if net.parameter_count() <= outputs {
            return Err(Error::InvalidParameter(format!(
                "generator has {} parameters for {outputs} outputs; it must be overparameterized",
                net.parameter_count()
            )));
        }
        Ok(net)
    }

    /// Builds from explicit parts; no overparameterization check.
    pub fn from_parts(z: Tensor, layers: Vec<Layer>) -> Result<Self> {
        let mut s = z.shape();
        for l in &layers {
            if let Layer::Conv(c) = l {
                if c.c_in() != s.0 {
                    return Err(Error::Dimension(format!(
                        "conv expects {} channels, got {}",
                        c.c_in(),
                        s.0
                    )));
                }
            }
            s = l.output_shape(s);
        }
        Ok(Self {
            z,
            layers,
            acts: Vec::new(),
            seed: 0,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn seed_tensor(&self) -> &Tensor {
        &self.z
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn output_shape(&self) -> (usize, usize, usize) {
        self.layers.iter().fold(self.z.shape(), |s, l| l.output_shape(s))
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Forward multiply-accumulates (convolutions).
    pub fn forward_macs(&self) -> u64 {
        let mut s = self.z.shape();
        let mut total = 0;
        for l in &self.layers {
            total += l.macs(s);
            s = l.output_shape(s);
        }
        total
    }

    /// Runs the layer chain, caching every activation for [`backward`](Self::backward).
    pub fn forward(&mut self) -> Tensor {
        self.acts.clear();
        let mut x = self.z.clone();
        for l in &self.layers {
            let y = l.forward(&x);
            self.acts.push(x);
            x = y;
        }
        self.acts.push(x.clone());
        x
    }

    /// Output without caching activations.
    pub fn evaluate(&self) -> Tensor {
        self.layers.iter().fold(self.z.clone(), |x, l| l.forward(&x))
    }

    /// Accumulates `d loss / d theta` given `d loss / d output`.
    pub fn backward(&mut self, grad_out: &Tensor) -> Result<()> {
        if self.acts.len() != self.layers.len() + 1 {
            return Err(Error::MissingForward);
        }
        if grad_out.shape() != self.acts[self.layers.len()].shape() {
            return Err(Error::Dimension(format!(
                "output gradient {:?} does not match output {:?}",
                grad_out.shape(),
                self.acts[self.layers.len()].shape()
            )));
        }
        let mut g = grad_out.clone();
        for k in (0..self.layers.len()).rev() {
            g = self.layers[k].backward(&self.acts[k], &self.acts[k + 1], &g);
        }
        self.acts.clear();
        Ok(())
    }
}
