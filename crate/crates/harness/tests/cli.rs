use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ffpr_harness::metrics::read_metrics;

fn ffpr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffpr"))
        .args(args)
        .env("FFPR_WORKERS", "1")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = ffpr(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn simulate_writes_the_default_test_split_reproducibly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&["simulate", "--n", "50", "--seed", "7", "--out", p(a.path())]);
    ok(&["simulate", "--n", "50", "--seed", "7", "--out", p(b.path())]);
    let names = files_in(&a.path().join("test"));
    assert_eq!(names.iter().filter(|n| n.ends_with(".cimg")).count(), 50);
    assert_eq!(names.iter().filter(|n| n.ends_with(".rmap")).count(), 50);
    assert!(names.contains(&"manifest.csv".to_string()));
    assert_eq!(names, files_in(&b.path().join("test")));
    for n in &names {
        assert_eq!(
            fs::read(a.path().join("test").join(n)).unwrap(),
            fs::read(b.path().join("test").join(n)).unwrap(),
            "{n}"
        );
    }
}

#[test]
fn usage_errors_and_run_failures_have_distinct_exit_codes() {
    assert_eq!(ffpr(&["simulate", "--n", "0"]).status.code(), Some(1));
    assert_eq!(
        ffpr(&["solve", "--method", "nope", "--input", "y.rmap"]).status.code(),
        Some(1)
    );
    assert_eq!(
        ffpr(&["experiment", "fig5-compare", "--set", "methods=[]"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ffpr(&["solve", "--method", "hio", "--input", "/nonexistent.rmap"])
            .status
            .code(),
        Some(2)
    );
    let bad = Command::new(env!("CARGO_BIN_EXE_ffpr"))
        .args(["config", "table1"])
        .env("FFPR_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(ok(&["config", "table1"]).stdout.starts_with(b"experiment = \"table1\""));
}

fn fixture(dir: &Path) -> (String, String) {
    ok(&["simulate", "--n", "1", "--seed", "3", "--grid", "16", "--out", p(dir)]);
    let names = files_in(&dir.join("test"));
    let cimg = names.iter().find(|n| n.ends_with(".cimg")).unwrap();
    let rmap = names.iter().find(|n| n.ends_with(".rmap")).unwrap();
    (
        p(&dir.join("test").join(cimg)).to_string(),
        p(&dir.join("test").join(rmap)).to_string(),
    )
}

const QUICK_HES: [&str; 4] = ["--set", "hes.n_outer=4", "--set", "hes_restarts=2"];

#[test]
fn solve_with_and_without_ground_truth() {
    let d = tempfile::tempdir().unwrap();
    let (cimg, rmap) = fixture(d.path());
    let with = d.path().join("with");
    let without = d.path().join("without");
    let mut args = vec![
        "solve",
        "--method",
        "hes",
        "--input",
        &rmap,
        "--truth",
        &cimg,
        "--seed",
        "5",
        "--out",
        p(&with),
    ];
    args.extend(QUICK_HES);
    ok(&args);
    let mut args = vec![
        "solve",
        "--method",
        "hes",
        "--input",
        &rmap,
        "--seed",
        "5",
        "--out",
        p(&without),
    ];
    args.extend(QUICK_HES);
    ok(&args);
    for f in [
        "recon.cimg",
        "trace.csv",
        "metrics.csv",
        "timing.csv",
        "panels.png",
        "config.toml",
    ] {
        assert!(with.join(f).exists(), "{f}");
    }
    let a = &read_metrics(&with.join("metrics.csv")).unwrap()[0];
    let b = &read_metrics(&without.join("metrics.csv")).unwrap()[0];
    assert!(a.mse_complex.is_some() && a.mse_magnitude.is_some() && a.mse_phase.is_some());
    assert!(b.mse_complex.is_none() && b.mse_magnitude.is_none() && b.mse_phase.is_none());
    assert_eq!(a.final_loss.to_bits(), b.final_loss.to_bits());
    let panels = image::open(with.join("panels.png")).unwrap();
    let bare = image::open(without.join("panels.png")).unwrap();
    assert!(panels.width() > 2 * bare.width() - 20);

    // metrics are recomputable from the emitted reconstruction
    let out = ok(&[
        "evaluate",
        "--recon",
        p(&with.join("recon.cimg")),
        "--input",
        &rmap,
        "--truth",
        &cimg,
    ]);
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    let row: ffpr_harness::metrics::MetricsRow = rd.deserialize().next().unwrap().unwrap();
    assert_eq!(row.final_loss, a.final_loss);
    assert_eq!(row.mse_complex, a.mse_complex);
}

// Recorded from the first run of this exact command; guards against silent
// changes in the HES pipeline.
const GOLDEN_HES_LOSS: f64 = 2.0478408945874596e-5;
const GOLDEN_HES_MSE: f64 = 3.105608540131988e-1;

#[test]
fn hes_on_fixture_instance_matches_golden_metrics() {
    let d = tempfile::tempdir().unwrap();
    let (cimg, _) = fixture(d.path());
    let out = d.path().join("golden");
    let mut args = vec![
        "solve",
        "--method",
        "hes",
        "--instance",
        &cimg,
        "--seed",
        "11",
        "--out",
        p(&out),
    ];
    args.extend(QUICK_HES);
    ok(&args);
    let row = &read_metrics(&out.join("metrics.csv")).unwrap()[0];
    let mse = row.mse_complex.unwrap();
    assert!(
        (row.final_loss - GOLDEN_HES_LOSS).abs() <= 1e-9,
        "loss {:e}",
        row.final_loss
    );
    assert!((mse - GOLDEN_HES_MSE).abs() <= 1e-9, "mse {mse:e}");
}

#[test]
fn experiment_reruns_are_bitwise_identical() {
    let d = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = d.path().join(name);
        let o = format!("output={}", p(&out));
        ok(&[
            "experiment",
            "table1",
            "--set",
            &o,
            "--set",
            "restarts=3",
            "--set",
            "gd.iterations=50",
        ]);
        out
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(
        fs::read(a.join("metrics.csv")).unwrap(),
        fs::read(b.join("metrics.csv")).unwrap()
    );
    assert!(a.join("loss_hist.png").exists());
    assert_eq!(read_metrics(&a.join("metrics.csv")).unwrap().len(), 9);
}
