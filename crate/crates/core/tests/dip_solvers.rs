use ffpr_core::crystal::{simulate_crystal_with, CrystalGeometry, CrystalParams};
use ffpr_core::dip::GeneratorConfig;
use ffpr_core::dip_solvers::{dip_solve, DipConfig, DipForm};
use ffpr_core::symmetry::symmetry_adjusted_mse;
use ffpr_core::{Complex64, ComplexImage, MagnitudeMap, Model};

fn disk(n: usize, radius: f64) -> ComplexImage {
    let c = (n as f64 - 1.0) / 2.0;
    ComplexImage::from_fn(n, n, |i, j| {
        let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
        Complex64::new(if d2 <= radius * radius { 1.0 } else { 0.0 }, 0.0)
    })
}

fn observe(x: &ComplexImage) -> MagnitudeMap {
    let (r, c) = x.shape();
    Model::far((r, c), (2 * r, 2 * c)).unwrap().apply(x).unwrap()
}

fn adjusted(est: &ComplexImage, truth: &ComplexImage) -> f64 {
    let (r, c) = truth.shape();
    symmetry_adjusted_mse(
        &est.zero_pad(2 * r, 2 * c).unwrap(),
        &truth.zero_pad(2 * r, 2 * c).unwrap(),
    )
    .unwrap()
}

fn config(form: DipForm, lr1: f64, lr2: f64, iterations: usize, seed: u64) -> DipConfig {
    DipConfig {
        form,
        lr1,
        lr2,
        iterations,
        seed,
        generator: GeneratorConfig {
            channels: 32,
            ..GeneratorConfig::default()
        },
    }
}

#[test]
fn single_dip_recovers_a_zero_phase_disk() {
    let truth = disk(16, 5.0);
    let (x, trace) = dip_solve(&observe(&truth), &config(DipForm::Single, 1e-3, 0.0, 5000, 1)).unwrap();
    let mse = adjusted(&x, &truth);
    assert!(mse < 0.05, "adjusted MSE {mse}, loss {}", trace.reported_loss);
}

#[test]
fn polar_dip_with_frozen_phase_fits_a_zero_phase_disk() {
    let truth = disk(16, 5.0);
    let (x, _) = dip_solve(&observe(&truth), &config(DipForm::DoublePolar, 1e-3, 0.0, 5000, 1)).unwrap();
    let mse = adjusted(&x, &truth);
    assert!(mse < 0.05, "adjusted MSE {mse}");
}

/// Paired comparison on one 32x32 crystal with 2 defects, 5 seeds, the
/// same iteration count for both forms.
#[test]
fn double_dip_beats_single_dip_on_a_crystal() {
    let crystal = simulate_crystal_with(
        4,
        &CrystalParams {
            geometry: CrystalGeometry::scaled(32),
            n_points: 10,
            n_defects: 2,
            convex: true,
            q: [1.0, 0.0],
        },
    )
    .unwrap();
    let y = crystal.observation().unwrap();
    let median = |form: DipForm, lr1: f64, lr2: f64| {
        let mut v: Vec<f64> = (0..5)
            .map(|s| {
                let (x, _) = dip_solve(&y, &config(form, lr1, lr2, 2000, s)).unwrap();
                adjusted(&x, &crystal.object)
            })
            .collect();
        v.sort_by(f64::total_cmp);
        v[2]
    };
    let double = median(DipForm::DoublePolar, 1e-4, 1e-3);
    let single = median(DipForm::Single, 1e-3, 0.0);
    assert!(double < single, "double {double} vs single {single}");
}
