//! PNG rasters: magnitude/phase heatmap panels and loss/MSE histograms.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::Result;
use image::{Rgb, RgbImage};

use ffpr_core::symmetry::align;
use ffpr_core::ComplexImage;

const GAP: u32 = 4;
const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);

/// One panel of a heatmap strip.
pub enum Panel<'a> {
    Magnitude(&'a ComplexImage),
    Phase(&'a ComplexImage),
}

fn gray(v: f64) -> Rgb<u8> {
    let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    Rgb([g, g, g])
}

/// Cyclic hue wheel over (-pi, pi]; both ends map to the same colour.
pub fn phase_color(phase: f64) -> Rgb<u8> {
    let h = ((phase + PI) / (2.0 * PI)).rem_euclid(1.0) * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let c = |v: f64| (v * 255.0).round() as u8;
    Rgb([c(r), c(g), c(b)])
}

fn panel_pixel(panel: &Panel, i: usize, j: usize, max_mag: f64) -> Rgb<u8> {
    match panel {
        Panel::Magnitude(x) => gray(if max_mag > 0.0 {
            x.get(i, j).norm() / max_mag
        } else {
            0.0
        }),
        Panel::Phase(x) => {
            let z = x.get(i, j);
            // phase is meaningless where the field has vanished
            if z.norm() <= 0.05 * max_mag {
                Rgb([0, 0, 0])
            } else {
                phase_color(z.arg())
            }
        }
    }
}

/// Renders panels side by side, each pixel scaled up by `scale`.
pub fn heatmap_strip(panels: &[Panel], scale: u32) -> RgbImage {
    let (rows, cols) = match panels.first() {
        Some(Panel::Magnitude(x)) | Some(Panel::Phase(x)) => x.shape(),
        None => return RgbImage::new(1, 1),
    };
    let pw = cols as u32 * scale;
    let ph = rows as u32 * scale;
    let n = panels.len() as u32;
    let mut img = RgbImage::from_pixel(n * pw + (n - 1) * GAP, ph, BACKGROUND);
    for (k, panel) in panels.iter().enumerate() {
        let x = match panel {
            Panel::Magnitude(x) | Panel::Phase(x) => x,
        };
        let max_mag = x.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let x0 = k as u32 * (pw + GAP);
        for i in 0..rows.min(x.rows()) {
            for j in 0..cols.min(x.cols()) {
                let c = panel_pixel(panel, i, j, max_mag);
                for di in 0..scale {
                    for dj in 0..scale {
                        img.put_pixel(x0 + j as u32 * scale + dj, i as u32 * scale + di, c);
                    }
                }
            }
        }
    }
    img
}

/// Truth magnitude/phase (when given), then reconstruction magnitude/phase.
/// With ground truth the reconstruction is first aligned to it.
pub fn save_reconstruction_panels(path: &Path, estimate: &ComplexImage, truth: Option<&ComplexImage>) -> Result<()> {
    let aligned = match truth {
        Some(t) => align(estimate, t)?.aligned,
        None => estimate.clone(),
    };
    let mut panels = Vec::new();
    if let Some(t) = truth {
        panels.push(Panel::Magnitude(t));
        panels.push(Panel::Phase(t));
    }
    panels.push(Panel::Magnitude(&aligned));
    panels.push(Panel::Phase(&aligned));
    let scale = (256 / estimate.rows().max(1)).clamp(1, 8) as u32;
    heatmap_strip(&panels, scale).save(path)?;
    Ok(())
}

/// Bin edges shared by all series: `bins` equal-width bins of `log10(v)`
/// (or of `v` when `log` is false) spanning every finite value.
pub fn histogram_counts(series: &[(String, Vec<f64>)], bins: usize, log: bool) -> (Vec<f64>, Vec<Vec<usize>>) {
    let tf = |v: f64| if log { v.max(1e-300).log10() } else { v };
    let all: Vec<f64> = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .filter(|v| v.is_finite())
        .map(tf)
        .collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi > lo {
        (lo, hi)
    } else if lo.is_finite() {
        (lo - 0.5, lo + 0.5)
    } else {
        (0.0, 1.0)
    };
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let counts = series
        .iter()
        .map(|(_, v)| {
            let mut c = vec![0; bins];
            for x in v.iter().copied().filter(|v| v.is_finite()).map(tf) {
                let k = (((x - lo) / width) as usize).min(bins - 1);
                c[k] += 1;
            }
            c
        })
        .collect();
    (edges, counts)
}

/// One bar chart per series, stacked vertically, on shared bins.
pub fn save_histograms(path: &Path, series: &[(String, Vec<f64>)], log: bool) -> Result<()> {
    const BINS: usize = 20;
    const BAR: u32 = 12;
    const HEIGHT: u32 = 80;
    let (_, counts) = histogram_counts(series, BINS, log);
    let peak = counts.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
    let n = series.len().max(1) as u32;
    let mut img = RgbImage::from_pixel(BINS as u32 * BAR, n * (HEIGHT + GAP), BACKGROUND);
    for (s, c) in counts.iter().enumerate() {
        let base = s as u32 * (HEIGHT + GAP) + HEIGHT;
        let colour = phase_color(-PI + 2.0 * PI * s as f64 / n as f64);
        for (k, &count) in c.iter().enumerate() {
            let h = ((count as f64 / peak) * HEIGHT as f64).round() as u32;
            for y in 0..h {
                for x in 1..BAR - 1 {
                    img.put_pixel(k as u32 * BAR + x, base - 1 - y, colour);
                }
            }
        }
        for x in 0..BINS as u32 * BAR {
            img.put_pixel(x, base - 1, Rgb([0, 0, 0]));
        }
    }
    img.save(path)?;
    Ok(())
}
