//! Layers with hand-written forward and backward passes.
//!
//! `backward` receives the layer's cached input and output plus the
//! gradient at the output, accumulates parameter gradients and returns the
//! gradient at the input.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;

/// Pointwise output nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Head {
    Linear,
    /// `sigmoid`, range (0, 1).
    Magnitude,
    /// `pi * tanh`, range (-pi, pi).
    Phase,
}

impl Head {
    fn eval(self, v: f64) -> f64 {
        match self {
            Head::Linear => v,
            Head::Magnitude => 1.0 / (1.0 + (-v).exp()),
            Head::Phase => PI * v.tanh(),
        }
    }

    /// Derivative expressed through the output value.
    fn slope_from_output(self, y: f64) -> f64 {
        match self {
            Head::Linear => 1.0,
            Head::Magnitude => y * (1.0 - y),
            Head::Phase => PI * (1.0 - (y / PI) * (y / PI)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Conv3x3 {
    /// `(c_out, c_in * 9, 1)`, taps row-major within each input channel.
    pub weight: Tensor,
    /// `(c_out, 1, 1)`.
    pub bias: Tensor,
}

impl Conv3x3 {
    /// Kaiming-uniform weights (negative slope `sqrt(5)`), bound `1/sqrt(fan_in)`
    /// for both weights and bias.
    pub fn kaiming(c_in: usize, c_out: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / ((c_in * 9) as f64).sqrt();
        let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(-bound..bound)).collect::<Vec<_>>();
        let weight = Tensor::from_vec(c_out, c_in * 9, 1, draw(c_out * c_in * 9)).expect("finite draw");
        let bias = Tensor::from_vec(c_out, 1, 1, draw(c_out)).expect("finite draw");
        Self {
            weight: weight.requiring_grad(),
            bias: bias.requiring_grad(),
        }
    }

    pub fn c_in(&self) -> usize {
        self.weight.shape().1 / 9
    }

    pub fn c_out(&self) -> usize {
        self.weight.channels()
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let (cin, h, w) = x.shape();
        let cout = self.c_out();
        let mut out = Tensor::zeros(cout, h, w);
        let p = h * w;
        let wt = self.weight.data();
        let od = out.data_mut();
        for co in 0..cout {
            let plane = &mut od[co * p..(co + 1) * p];
            plane.fill(self.bias.data()[co]);
            for ci in 0..cin {
                let src = x.channel(ci);
                let taps = &wt[(co * cin + ci) * 9..(co * cin + ci + 1) * 9];
                for_each_tap(h, w, |t, y, ys, x0, x1, xs| {
                    let wv = taps[t];
                    let orow = &mut plane[y * w + x0..y * w + x1];
                    let irow = &src[ys * w + xs..ys * w + xs + (x1 - x0)];
                    for (o, i) in orow.iter_mut().zip(irow) {
                        *o += wv * i;
                    }
                });
            }
        }
        out
    }

    fn backward(&mut self, x: &Tensor, gout: &Tensor) -> Tensor {
        let (cin, h, w) = x.shape();
        let cout = self.c_out();
        let p = h * w;
        let mut gin = Tensor::zeros(cin, h, w);
        {
            let (_, gb) = self.bias.split_grad();
            for (co, g) in gb.iter_mut().enumerate().take(cout) {
                *g += gout.channel(co).iter().sum::<f64>();
            }
        }
        let (wt, gw) = self.weight.split_grad();
        let gd = gin.data_mut();
        for co in 0..cout {
            let g = gout.channel(co);
            for ci in 0..cin {
                let src = x.channel(ci);
                let dst = &mut gd[ci * p..(ci + 1) * p];
                let base = (co * cin + ci) * 9;
                for_each_tap(h, w, |t, y, ys, x0, x1, xs| {
                    let grow = &g[y * w + x0..y * w + x1];
                    let irow = &src[ys * w + xs..ys * w + xs + (x1 - x0)];
                    let mut acc = 0.0;
                    for (a, b) in grow.iter().zip(irow) {
                        acc += a * b;
                    }
                    gw[base + t] += acc;
                    let wv = wt[base + t];
                    let drow = &mut dst[ys * w + xs..ys * w + xs + (x1 - x0)];
                    for (d, a) in drow.iter_mut().zip(grow) {
                        *d += wv * a;
                    }
                });
            }
        }
        gin
    }

    fn macs(&self, h: usize, w: usize) -> u64 {
        (self.c_out() * self.c_in() * 9 * h * w) as u64
    }
}

/// Visits every (tap, output row) pair of a zero-padded 3x3 stencil with the
/// valid column range: `f(tap, y, source_row, x0, x1, source_x0)`.
#[inline]
fn for_each_tap(h: usize, w: usize, mut f: impl FnMut(usize, usize, usize, usize, usize, usize)) {
    for ky in 0..3 {
        for kx in 0..3 {
            let (x0, x1) = (
                if kx == 0 { 1 } else { 0 },
                if kx == 2 { w.saturating_sub(1) } else { w },
            );
            if x0 >= x1 {
                continue;
            }
            let xs = x0 + kx - 1;
            for y in 0..h {
                let ys = y + ky;
                if ys < 1 || ys > h {
                    continue;
                }
                f(ky * 3 + kx, y, ys - 1, x0, x1, xs);
            }
        }
    }
}

/// Per-channel normalization over the spatial extent with learned scale and shift.
#[derive(Clone, Debug)]
pub struct ChannelNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub eps: f64,
}

impl ChannelNorm {
    pub fn new(c: usize) -> Self {
        Self {
            gamma: Tensor::from_vec(c, 1, 1, vec![1.0; c])
                .expect("finite")
                .requiring_grad(),
            beta: Tensor::zeros(c, 1, 1).requiring_grad(),
            eps: 1e-5,
        }
    }

    fn stats(&self, plane: &[f64]) -> (f64, f64) {
        let n = plane.len() as f64;
        let mean = plane.iter().sum::<f64>() / n;
        let var = plane.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, (var + self.eps).sqrt())
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let (c, h, w) = x.shape();
        let mut out = Tensor::zeros(c, h, w);
        let p = h * w;
        for ch in 0..c {
            let (mean, sd) = self.stats(x.channel(ch));
            let (g, b) = (self.gamma.data()[ch], self.beta.data()[ch]);
            for (o, v) in out.data_mut()[ch * p..(ch + 1) * p].iter_mut().zip(x.channel(ch)) {
                *o = g * (v - mean) / sd + b;
            }
        }
        out
    }

    fn backward(&mut self, x: &Tensor, gout: &Tensor) -> Tensor {
        let (c, h, w) = x.shape();
        let p = h * w;
        let n = p as f64;
        let mut gin = Tensor::zeros(c, h, w);
        for ch in 0..c {
            let (mean, sd) = self.stats(x.channel(ch));
            let g = gout.channel(ch);
            let xhat: Vec<f64> = x.channel(ch).iter().map(|v| (v - mean) / sd).collect();
            let sum_g: f64 = g.iter().sum();
            let sum_gx: f64 = g.iter().zip(&xhat).map(|(a, b)| a * b).sum();
            self.beta.split_grad().1[ch] += sum_g;
            self.gamma.split_grad().1[ch] += sum_gx;
            let gamma = self.gamma.data()[ch];
            let (mg, mgx) = (gamma * sum_g / n, gamma * sum_gx / n);
            for ((d, a), xh) in gin.data_mut()[ch * p..(ch + 1) * p].iter_mut().zip(g).zip(&xhat) {
                *d = (gamma * a - mg - xh * mgx) / sd;
            }
        }
        gin
    }
}

#[derive(Clone, Debug)]
pub enum Layer {
    /// Nearest-neighbour resize to the given spatial size.
    Upsample {
        height: usize,
        width: usize,
    },
    Conv(Conv3x3),
    LeakyRelu {
        slope: f64,
    },
    Norm(ChannelNorm),
    Activation(Head),
}

impl Layer {
    pub fn forward(&self, x: &Tensor) -> Tensor {
        match self {
            Layer::Upsample { height, width } => upsample(x, *height, *width),
            Layer::Conv(conv) => conv.forward(x),
            Layer::LeakyRelu { slope } => map(x, |v| if v > 0.0 { v } else { slope * v }),
            Layer::Norm(norm) => norm.forward(x),
            Layer::Activation(head) => map(x, |v| head.eval(v)),
        }
    }

    pub fn backward(&mut self, x: &Tensor, y: &Tensor, gout: &Tensor) -> Tensor {
        match self {
            Layer::Upsample { .. } => upsample_backward(x, gout),
            Layer::Conv(conv) => conv.backward(x, gout),
            Layer::LeakyRelu { slope } => {
                let s = *slope;
                zip_map(x, gout, |v, g| if v > 0.0 { g } else { s * g })
            }
            Layer::Norm(norm) => norm.backward(x, gout),
            Layer::Activation(head) => {
                let h = *head;
                zip_map(y, gout, |v, g| h.slope_from_output(v) * g)
            }
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Conv(c) => vec![&c.weight, &c.bias],
            Layer::Norm(n) => vec![&n.gamma, &n.beta],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Conv(c) => vec![&mut c.weight, &mut c.bias],
            Layer::Norm(n) => vec![&mut n.gamma, &mut n.beta],
            _ => Vec::new(),
        }
    }

    /// Output shape for an input of shape `s`.
    pub fn output_shape(&self, s: (usize, usize, usize)) -> (usize, usize, usize) {
        match self {
            Layer::Upsample { height, width } => (s.0, *height, *width),
            Layer::Conv(c) => (c.c_out(), s.1, s.2),
            _ => s,
        }
    }

    /// Multiply-accumulates of one forward pass (convolutions only).
    pub fn macs(&self, s: (usize, usize, usize)) -> u64 {
        match self {
            Layer::Conv(c) => c.macs(s.1, s.2),
            _ => 0,
        }
    }
}

fn map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    let (c, h, w) = x.shape();
    let mut out = Tensor::zeros(c, h, w);
    for (o, v) in out.data_mut().iter_mut().zip(x.data()) {
        *o = f(*v);
    }
    out
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let (c, h, w) = a.shape();
    let mut out = Tensor::zeros(c, h, w);
    for ((o, u), v) in out.data_mut().iter_mut().zip(a.data()).zip(b.data()) {
        *o = f(*u, *v);
    }
    out
}

fn upsample(x: &Tensor, height: usize, width: usize) -> Tensor {
    let (c, h, w) = x.shape();
    let mut out = Tensor::zeros(c, height, width);
    let p = height * width;
    for ch in 0..c {
        let src = x.channel(ch);
        let dst = &mut out.data_mut()[ch * p..(ch + 1) * p];
        for i in 0..height {
            let si = i * h / height;
            for j in 0..width {
                dst[i * width + j] = src[si * w + j * w / width];
            }
        }
    }
    out
}

fn upsample_backward(x: &Tensor, gout: &Tensor) -> Tensor {
    let (c, h, w) = x.shape();
    let (_, height, width) = gout.shape();
    let mut gin = Tensor::zeros(c, h, w);
    let p = h * w;
    for ch in 0..c {
        let g = gout.channel(ch);
        let dst = &mut gin.data_mut()[ch * p..(ch + 1) * p];
        for i in 0..height {
            let si = i * h / height;
            for j in 0..width {
                dst[si * w + j * w / width] += g[i * width + j];
            }
        }
    }
    gin
}
