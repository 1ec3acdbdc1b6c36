//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line with the measured quantities, then asserts.
//!
//! Run with `cargo test -p ffpr-harness --test acceptance -- --nocapture`.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ffpr_core::classical::magnitude_projection;
use ffpr_core::dip::{ffpr_loss_head, GeneratorConfig, GeneratorNet, Head};
use ffpr_core::fourier::{intensity, oversampled_fourier, Fft2};
use ffpr_core::propagate::{
    angular_spectrum_propagate_padded, fraunhofer_propagate, fresnel_propagate, rayleigh_sommerfeld_reference,
    FresnelForm, PropagationSetup,
};
use ffpr_core::symmetry::{align, apply_symmetry, SymmetryElement};
use ffpr_core::{Complex64, ComplexImage, MagnitudeMap, Model};

use ffpr_harness::config::{BudgetMode, Config, ExperimentId};
use ffpr_harness::experiments::{build_instances, run_experiment};
use ffpr_harness::methods::{run_method, Method, RunBudget};
use ffpr_harness::metrics::evaluate;

fn report(id: u32, pass: bool, detail: String) {
    println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexImage {
    ComplexImage::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn rel(a: &ComplexImage, b: &ComplexImage) -> f64 {
    a.sub(b).norm() / b.norm()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[test]
fn criterion_1_symmetry_invariance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (obj, canvas) = ((16, 16), (32, 32));
    let model = Model::far(obj, canvas).unwrap();
    let fft = Fft2::new(canvas.0, canvas.1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = random_grid(&mut rng, obj.0, obj.1);
        let g = SymmetryElement::new(
            rng.gen_range(0.0..TAU),
            (rng.gen_range(0..canvas.0), rng.gen_range(0..canvas.1)),
            rng.gen_bool(0.5),
            canvas,
        );
        let y = model.apply(&x).unwrap();
        let yg = intensity(&fft.forward(&apply_symmetry(&x, &g, canvas).unwrap()));
        worst = worst.max(y.max_abs_diff(&yg));
    }
    let t = secs(start.elapsed());
    report(
        1,
        worst <= 1e-10 && t < 10.0,
        format!("max |Y(X) - Y(gX)| = {worst:.2e} over 100 pairs (tol 1e-10), {t:.2} s (limit 10 s)"),
    );
}

fn fraction(v: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    v.iter().filter(|&&x| pred(x)).count() as f64 / v.len() as f64
}

#[test]
fn criterion_2_table1_dichotomy() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = Config::defaults(ExperimentId::Table1);
    cfg.output = dir.path().to_path_buf();
    let r = run_experiment(&cfg).unwrap();
    let losses = |m: &str| r.values(m, |row| Some(row.final_loss));
    let (ffpr, nfpr, gpr) = (losses("gd-ffpr"), losses("gd-nfpr"), losses("gd-gpr"));
    let complete = [&ffpr, &nfpr, &gpr].iter().all(|v| v.len() == cfg.restarts) && r.failures.is_empty();
    let gpr_ok = fraction(&gpr, |l| l < 1e-8);
    let nfpr_ok = fraction(&nfpr, |l| l < 1e-8);
    let ffpr_stuck = fraction(&ffpr, |l| l > 1e-3);
    let t = secs(start.elapsed());
    let pass = complete && gpr_ok >= 0.8 && nfpr_ok >= 0.8 && ffpr_stuck >= 0.9 && t < 300.0;
    report(
        2,
        pass,
        format!(
            "{} starts at {}x{}: GPR loss<1e-8 {:.0}% (need >=80%), NFPR loss<1e-8 {:.0}% (need >=80%), FFPR loss>1e-3 {:.0}% (need >=90%), {t:.1} s (limit 300 s)",
            cfg.restarts,
            cfg.instances.grid,
            cfg.instances.grid,
            100.0 * gpr_ok,
            100.0 * nfpr_ok,
            100.0 * ffpr_stuck
        ),
    );
}

#[test]
fn criterion_3_support_dichotomy() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = Config::defaults(ExperimentId::Fig3Support);
    cfg.output = dir.path().to_path_buf();
    assert_eq!((cfg.instances.grid, cfg.restarts), (32, 20));
    let r = run_experiment(&cfg).unwrap();
    let tight = r.values("hio-tight", |row| row.mse_complex);
    let loose = r.values("hio-loose", |row| row.mse_complex);
    let best_tight = tight.iter().copied().fold(f64::INFINITY, f64::min);
    let best_loose = loose.iter().copied().fold(f64::INFINITY, f64::min);
    let t = secs(start.elapsed());
    let pass = tight.len() == 20 && loose.len() == 20 && best_tight < 1e-3 && best_loose >= 1e-1 && t < 300.0;
    report(
        3,
        pass,
        format!("best tight-support MSE {best_tight:.2e} (need <1e-3), best loose-support MSE {best_loose:.2e} (need >=1e-1), {t:.1} s (limit 300 s)"),
    );
}

/// Equal wall-time comparison. The generator is narrowed to 32 channels and
/// 2500 iterations so that 5 instances x 3 seeds x 3 methods fit the 2 h limit
/// on one core; HES and single DIP get the measured wall time of each
/// double-DIP run.
#[test]
fn criterion_4_double_dip_ordering() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = Config::defaults(ExperimentId::Fig5Compare);
    cfg.output = dir.path().to_path_buf();
    cfg.instances.count = 5;
    cfg.restarts = 3;
    cfg.budget = BudgetMode::Wall;
    cfg.dip.channels = 32;
    cfg.dip.iterations = 2500;
    assert_eq!(cfg.instances.grid, 32);
    assert_eq!(cfg.instances.defects, vec![1, 2, 4]);
    let r = run_experiment(&cfg).unwrap();
    let med = |m: &str| r.median_mse(m).unwrap_or(f64::NAN);
    let (ddip, dip, hes) = (med("ddip-polar"), med("dip"), med("hes"));
    let runs = r.values("ddip-polar", |row| row.mse_complex).len();
    let t = secs(start.elapsed());
    let pass = r.failures.is_empty() && runs == 15 && ddip < dip && ddip < hes && t < 7200.0;
    report(
        4,
        pass,
        format!("median MSE over {runs} runs: double-DIP {ddip:.3e}, single DIP {dip:.3e}, HES {hes:.3e} (need double < both), {t:.0} s (limit 7200 s)"),
    );
}

#[test]
fn criterion_5_pipeline_gradient() {
    let start = Instant::now();
    let cfg = GeneratorConfig {
        channels: 4,
        stages: 2,
        ..GeneratorConfig::default()
    };
    let (rows, cols) = (6, 6);
    let mut net = GeneratorNet::new(&cfg, rows, cols, 2, Head::Linear, 5).unwrap();
    let model = Model::far((rows, cols), (2 * rows, 2 * cols)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let truth = random_grid(&mut rng, rows, cols);
    let y = model.apply(&truth).unwrap();
    let loss = |net: &GeneratorNet| ffpr_loss_head(&net.evaluate(), &model, &y).unwrap().loss;

    let out = net.forward();
    let head = ffpr_loss_head(&out, &model, &y).unwrap();
    net.zero_grad();
    net.backward(&head.grad).unwrap();

    let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
    let h = 1e-6;
    let (mut diff, mut norm, mut worst) = (0.0, 0.0, 0.0f64);
    for _ in 0..50 {
        let pi = rng.gen_range(0..sizes.len());
        let k = rng.gen_range(0..sizes[pi]);
        let analytic = net.params()[pi].grad().unwrap()[k];
        let orig = net.params()[pi].data()[k];
        net.params_mut()[pi].data_mut()[k] = orig + h;
        let up = loss(&net);
        net.params_mut()[pi].data_mut()[k] = orig - h;
        let down = loss(&net);
        net.params_mut()[pi].data_mut()[k] = orig;
        let fd = (up - down) / (2.0 * h);
        diff += (fd - analytic).powi(2);
        norm += fd * fd;
        worst = worst.max((fd - analytic).abs());
    }
    let err = (diff / norm).sqrt();
    let t = secs(start.elapsed());
    report(
        5,
        err < 1e-5 && t < 30.0,
        format!("relative error ||g - g_fd|| / ||g_fd|| = {err:.2e} on 50 parameters (tol 1e-5, max abs diff {worst:.1e}), {t:.2} s (limit 30 s)"),
    );
}

fn centered_field(n: usize, f: impl Fn(f64) -> f64) -> ComplexImage {
    let c = (n / 2) as f64;
    ComplexImage::from_fn(n, n, |i, j| {
        Complex64::new(f((i as f64 - c).powi(2) + (j as f64 - c).powi(2)), 0.0)
    })
}

#[test]
fn criterion_6_propagator_consistency() {
    let start = Instant::now();
    // (a) both Fresnel forms share their grid at the critical distance
    let n = 32;
    let (lam, pitch) = (1.0, 0.5);
    let s = PropagationSetup {
        wavelength: lam,
        distance: PropagationSetup::critical_distance(lam, pitch, n),
        pitch,
        grid: n,
    };
    let beam = centered_field(n, |d2| (-d2 / 16.0).exp());
    let a = fresnel_propagate(&beam, &s, FresnelForm::Spatial).unwrap().field;
    let b = fresnel_propagate(&beam, &s, FresnelForm::Fourier).unwrap().field;
    let crop = |f: &ComplexImage| ComplexImage::from_fn(n / 2, n / 2, |i, j| f.get(i + n / 4, j + n / 4));
    let err_a = rel(&crop(&a), &crop(&b));

    // (b) paraxial: pitch 0.2 lambda, z0 = 2 lambda, 6-pixel-radius disk
    let s = PropagationSetup {
        wavelength: 1.0,
        distance: 2.0,
        pitch: 0.2,
        grid: 16,
    };
    let disk = centered_field(16, |d2| if d2 <= 36.0 { 1.0 } else { 0.0 });
    let rs = rayleigh_sommerfeld_reference(&disk, &s).unwrap();
    let asp = angular_spectrum_propagate_padded(&disk, &s, 8).unwrap();
    let err_b = rel(&asp, &rs);

    // (c) relative intensity gap at 1, 10, 100 Fraunhofer distances
    let aperture = centered_field(16, |d2| if d2 <= 9.0 { 1.0 } else { 0.0 });
    let radius = 3.0 * 0.2;
    let fraunhofer_distance = radius * radius / 1.0;
    let gaps: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|m| {
            let s = PropagationSetup {
                wavelength: 1.0,
                distance: m * fraunhofer_distance,
                pitch: 0.2,
                grid: 16,
            };
            let fres = intensity(&fresnel_propagate(&aperture, &s, FresnelForm::Spatial).unwrap().field);
            let frau = intensity(&fraunhofer_propagate(&aperture, &s).unwrap().field);
            let d: f64 = fres.data().iter().zip(frau.data()).map(|(x, y)| (x - y).powi(2)).sum();
            d.sqrt() / frau.data().iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let t = secs(start.elapsed());
    report(
        6,
        err_a < 1e-6 && err_b < 1e-2 && monotone && t < 120.0,
        format!(
            "(a) Fresnel forms {err_a:.2e} (tol 1e-6); (b) angular spectrum vs RS {err_b:.2e} (tol 1e-2); (c) Fresnel-Fraunhofer gaps {:.2e} > {:.2e} > {:.2e}; {t:.2} s (limit 120 s)",
            gaps[0], gaps[1], gaps[2]
        ),
    );
}

/// `F_{m'} pad(X) F_{n'}^T` with explicit unitary DFT matrices.
fn dft_matrix_product(x: &ComplexImage, canvas: (usize, usize)) -> ComplexImage {
    let f =
        |n: usize, k: usize, i: usize| Complex64::from_polar(1.0 / (n as f64).sqrt(), -TAU * (k * i) as f64 / n as f64);
    let (m, n) = x.shape();
    let left = ComplexImage::from_fn(canvas.0, n, |k, j| {
        (0..m).map(|i| f(canvas.0, k, i) * x.get(i, j)).sum()
    });
    ComplexImage::from_fn(canvas.0, canvas.1, |k, l| {
        (0..n).map(|j| left.get(k, j) * f(canvas.1, l, j)).sum()
    })
}

/// Minimum over flips and shifts of `||g Z - R||^2`, with the optimal phase
/// in closed form for each.
fn brute_force_alignment(est: &ComplexImage, reference: &ComplexImage) -> f64 {
    let (r, c) = reference.shape();
    let mut best = f64::INFINITY;
    for flip in [false, true] {
        for di in 0..r {
            for dj in 0..c {
                let cand = SymmetryElement::new(0.0, (di, dj), flip, (r, c)).act(est);
                let v = cand.norm_sqr() + reference.norm_sqr() - 2.0 * cand.inner(reference).norm();
                best = best.min(v);
            }
        }
    }
    best
}

/// Per-bin magnitude replacement with explicit DFT sums.
fn per_bin_projection(z: &ComplexImage, y: &MagnitudeMap) -> ComplexImage {
    let (r, c) = z.shape();
    let norm = 1.0 / ((r * c) as f64).sqrt();
    let kernel = |k: usize, l: usize, i: usize, j: usize, sign: f64| {
        Complex64::from_polar(
            norm,
            sign * TAU * ((k * i) as f64 / r as f64 + (l * j) as f64 / c as f64),
        )
    };
    let spec = ComplexImage::from_fn(r, c, |k, l| {
        let w: Complex64 = (0..r)
            .flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|(i, j)| z.get(i, j) * kernel(k, l, i, j, -1.0))
            .sum();
        let a = y.get(k, l).sqrt();
        if w.norm() > 0.0 {
            w * (a / w.norm())
        } else {
            Complex64::new(a, 0.0)
        }
    });
    ComplexImage::from_fn(r, c, |i, j| {
        (0..r)
            .flat_map(|k| (0..c).map(move |l| (k, l)))
            .map(|(k, l)| spec.get(k, l) * kernel(k, l, i, j, 1.0))
            .sum()
    })
}

#[test]
fn criterion_7_oracle_equivalences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_dft = 0.0f64;
    for &(obj, canvas) in &[((1, 1), (2, 2)), ((3, 4), (6, 8)), ((5, 3), (9, 7)), ((8, 8), (16, 16))] {
        let x = random_grid(&mut rng, obj.0, obj.1);
        let fast = oversampled_fourier(&x, canvas.0, canvas.1).unwrap();
        worst_dft = worst_dft.max(rel(&fast, &dft_matrix_product(&x, canvas)));
    }

    let mut worst_align = 0.0f64;
    for trial in 0..20 {
        let (obj, canvas) = if trial % 2 == 0 {
            ((3, 3), (6, 6))
        } else {
            ((2, 3), (4, 6))
        };
        let reference = random_grid(&mut rng, obj.0, obj.1)
            .zero_pad(canvas.0, canvas.1)
            .unwrap();
        let est = if trial < 10 {
            let g = SymmetryElement::new(
                rng.gen_range(0.0..TAU),
                (rng.gen_range(0..canvas.0), rng.gen_range(0..canvas.1)),
                rng.gen_bool(0.5),
                canvas,
            );
            g.act(&reference)
                .add(&random_grid(&mut rng, canvas.0, canvas.1).scale(Complex64::new(0.1, 0.0)))
        } else {
            random_grid(&mut rng, canvas.0, canvas.1)
        };
        let fast = align(&est, &reference).unwrap().residual_sqr;
        worst_align = worst_align.max((fast - brute_force_alignment(&est, &reference)).abs());
    }

    let mut worst_proj = 0.0f64;
    for &(r, c) in &[(4, 4), (6, 5), (8, 8)] {
        let z = random_grid(&mut rng, r, c);
        let target = random_grid(&mut rng, r, c);
        let y = intensity(&Fft2::new(r, c).forward(&target));
        let fast = magnitude_projection(&z, &y).unwrap();
        worst_proj = worst_proj.max(rel(&fast, &per_bin_projection(&z, &y)));
    }

    report(
        7,
        worst_dft < 1e-12 && worst_align <= 1e-10 && worst_proj < 1e-12,
        format!(
            "oversampled FFT vs DFT matrices {worst_dft:.2e} (tol 1e-12); alignment vs brute-force search {worst_align:.2e} (tol 1e-10); magnitude projection vs per-bin scan {worst_proj:.2e} (tol 1e-12)"
        ),
    );
}

#[test]
fn criterion_8_determinism() {
    let mut cfg = Config::defaults(ExperimentId::SolveOne);
    cfg.instances.grid = 16;
    cfg.instances.region = 14;
    cfg.hio.hio_iters = 100;
    cfg.hio.er_iters = 20;
    cfg.hes.n_outer = 3;
    cfg.hes_restarts = 2;
    cfg.gd.iterations = 200;
    cfg.dip.iterations = 30;
    cfg.dip.channels = 8;
    cfg.dip.stages = 3;
    let inst = build_instances(&cfg).unwrap().remove(0);
    let budget = RunBudget::from_config(&cfg);
    let mut differing = Vec::new();
    for m in Method::ALL {
        let run = || {
            let out = run_method(m, &inst.y, &cfg, 17, None, budget).unwrap();
            let row = evaluate(
                &inst.name,
                m.as_str(),
                17,
                &out.estimate,
                &inst.y,
                Some(&inst.truth),
                out.iterations,
            )
            .unwrap();
            let bits: Vec<u64> = [Some(row.final_loss), row.mse_complex, row.mse_magnitude, row.mse_phase]
                .into_iter()
                .flatten()
                .map(f64::to_bits)
                .chain(
                    out.estimate
                        .data()
                        .iter()
                        .flat_map(|z| [z.re.to_bits(), z.im.to_bits()]),
                )
                .collect();
            (
                bits,
                row.iterations,
                out.losses.iter().map(|l| l.to_bits()).collect::<Vec<_>>(),
            )
        };
        if run() != run() {
            differing.push(m.as_str());
        }
    }
    let names: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
    report(
        8,
        differing.is_empty(),
        format!(
            "reruns of {} with identical config and seed: metrics, estimate and trace bitwise equal except {:?}",
            names.join(", "),
            differing
        ),
    );
}
