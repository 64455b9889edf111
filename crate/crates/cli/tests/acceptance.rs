//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them on success).
//!
//! Dataset resolution: `ACTKIT_MNIST_DIR`, then `data/` in the workspace
//! root, then a deterministic synthetic IDX fixture with the same shape
//! (60000/10000 x 784, 10 classes) generated under the system temp dir.
//! The PASS lines state which source was used.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use actkit::activations::{
    ActivationInstance, ActivationKind, ParamSet, ALL_KINDS, BENCHMARK_KINDS,
};
use actkit::data::{load_idx, load_idx_dir, LoadOptions, Split};
use actkit::gradcheck::{audit_activation, audit_network};
use actkit::network::Network;
use actkit::numerics::{erf, erf_oracle};
use actkit::tensor::Tensor;
use actkit::train::{
    run_compare, run_train, ActivationConfig, DataConfig, OptimizerConfig, RunConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn criterion(n: usize, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {n} ({name}): {verdict} — {detail}");
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

// --- dataset fixture ---------------------------------------------------------

struct Mnist {
    dir: PathBuf,
    source: &'static str,
}

fn mnist() -> &'static Mnist {
    static MNIST: OnceLock<Mnist> = OnceLock::new();
    MNIST.get_or_init(|| {
        if let Ok(dir) = std::env::var("ACTKIT_MNIST_DIR") {
            return Mnist {
                dir: dir.into(),
                source: "ACTKIT_MNIST_DIR",
            };
        }
        let workspace_data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
        if has_all_files(&workspace_data) {
            return Mnist {
                dir: workspace_data,
                source: "workspace data/ (idx files)",
            };
        }
        let dir = std::env::temp_dir().join("actkit-idx-fixture-v1");
        if !has_all_files(&dir) {
            std::fs::create_dir_all(&dir).expect("fixture dir");
            write_surrogate(&dir);
        }
        Mnist {
            dir,
            source: "generated surrogate fixture",
        }
    })
}

fn has_all_files(dir: &Path) -> bool {
    [
        actkit::data::TRAIN_IMAGES,
        actkit::data::TRAIN_LABELS,
        actkit::data::TEST_IMAGES,
        actkit::data::TEST_LABELS,
    ]
    .iter()
    .all(|stem| dir.join(stem).exists() || dir.join(format!("{stem}.gz")).exists())
}

// Deterministic stand-in with the exact MNIST shape: 10 random prototype
// images plus clamped pixel noise, balanced labels.
fn write_surrogate(dir: &Path) {
    const D: usize = 784;
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC71);
    let protos: Vec<Vec<i16>> = (0..10)
        .map(|_| (0..D).map(|_| rng.gen_range(0..=255) as i16).collect())
        .collect();
    for (images_name, labels_name, n) in [
        (
            actkit::data::TRAIN_IMAGES,
            actkit::data::TRAIN_LABELS,
            60000usize,
        ),
        (
            actkit::data::TEST_IMAGES,
            actkit::data::TEST_LABELS,
            10000usize,
        ),
    ] {
        let mut img =
            std::io::BufWriter::new(std::fs::File::create(dir.join(images_name)).unwrap());
        img.write_all(&0x0000_0803u32.to_be_bytes()).unwrap();
        img.write_all(&(n as u32).to_be_bytes()).unwrap();
        img.write_all(&28u32.to_be_bytes()).unwrap();
        img.write_all(&28u32.to_be_bytes()).unwrap();
        let mut lbl =
            std::io::BufWriter::new(std::fs::File::create(dir.join(labels_name)).unwrap());
        lbl.write_all(&0x0000_0801u32.to_be_bytes()).unwrap();
        lbl.write_all(&(n as u32).to_be_bytes()).unwrap();
        let mut row = vec![0u8; D];
        for i in 0..n {
            let class = i % 10;
            for (out, &p) in row.iter_mut().zip(&protos[class]) {
                let noise: i16 = rng.gen_range(-60..=60);
                *out = (p + noise).clamp(0, 255) as u8;
            }
            img.write_all(&row).unwrap();
            lbl.write_all(&[class as u8]).unwrap();
        }
    }
}

fn mnist_run_config(activation: ActivationConfig, epochs: usize, seed: u64) -> RunConfig {
    RunConfig {
        layers: Some(vec![784, 128, 10]),
        activation: Some(activation),
        activations: None,
        optimizer: OptimizerConfig::Adam {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        },
        epochs,
        batch_size: 128,
        seed,
        data: DataConfig::Idx {
            dir: mnist().dir.clone(),
            pad_to_32: false,
        },
        out_dir: None,
        max_steps: None,
        shuffle: true,
    }
}

// --- criteria ----------------------------------------------------------------

#[test]
fn criterion_1_erf_fidelity() {
    let started = Instant::now();
    let n = 10_000;
    let mut max_err = 0.0f64;
    let mut worst_x = 0.0;
    for i in 0..=n {
        let x = -6.0 + 12.0 * i as f64 / n as f64;
        let err = (erf(x) - erf_oracle(x)).abs();
        if err > max_err {
            max_err = err;
            worst_x = x;
        }
    }
    let elapsed = started.elapsed();
    criterion(
        1,
        "erf fidelity",
        max_err <= 1e-12 && elapsed.as_secs_f64() < 5.0,
        format!(
            "max |erf - oracle| = {max_err:.3e} at x = {worst_x:.4}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_derivative_audit_all_families() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let points: Vec<f64> = (0..1000).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let mut total_reports = 0usize;
    let mut failed = 0usize;
    let mut detail = String::new();
    for &kind in &ALL_KINDS {
        let inst = ActivationInstance::with_defaults(kind);
        let audit = audit_activation(&inst, &points, 1e-5).expect("audit runs");
        total_reports += audit.reports.len();
        let fails = audit.reports.iter().filter(|r| !r.pass).count();
        if fails > 0 {
            detail.push_str(&format!("{kind}: {fails} failed; "));
        }
        failed += fails;
    }
    let elapsed = started.elapsed();
    criterion(
        2,
        "derivative audit",
        failed == 0 && elapsed.as_secs_f64() < 30.0,
        format!(
            "{} families, {total_reports} reports, {failed} failed {detail}({:.2}s)",
            ALL_KINDS.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_3_erfrelu_property_suite() {
    let alpha = 0.882267;
    let f = ActivationInstance::with_defaults(ActivationKind::ErfRelu);
    let mut ok = true;
    let mut notes = Vec::new();

    for &x in &[0.0, 1e-9, 0.4, 2.0, 77.0, 1e6] {
        if f.forward(x).unwrap() != x {
            ok = false;
            notes.push(format!("identity broken at {x}"));
        }
    }
    let continuity = (f.forward(-1e-12).unwrap() - f.forward(0.0).unwrap()).abs();
    if continuity > 1e-11 {
        ok = false;
        notes.push(format!("continuity gap {continuity:.2e}"));
    }
    for i in 0..=2000 {
        let x = -8.0 + 16.0 * i as f64 / 2000.0;
        if x.abs() <= 1e-3 {
            continue;
        }
        let d = f.derivative(x).unwrap();
        if d.is_nan() || d <= 0.0 {
            ok = false;
            notes.push(format!("non-positive slope at {x}"));
            break;
        }
    }
    let infimum_gap = (f.forward(-8.0).unwrap() - (-alpha)).abs();
    if infimum_gap > 1e-12 {
        ok = false;
        notes.push(format!("infimum gap {infimum_gap:.2e}"));
    }
    if f.forward(1e6).unwrap() != 1e6 {
        ok = false;
        notes.push("not unbounded above".into());
    }
    let right = f.derivative(0.0).unwrap();
    let left = f.derivative(-1e-300).unwrap();
    let left_expected = alpha * std::f64::consts::FRAC_2_SQRT_PI;
    if right != 1.0 || (left - left_expected).abs() > 1e-12 {
        ok = false;
        notes.push(format!(
            "kink limits: right {right}, left {left} vs {left_expected}"
        ));
    }
    criterion(
        3,
        "erfrelu properties",
        ok,
        if notes.is_empty() {
            format!("identity/continuity/monotone/infimum/limits all hold (left slope {left:.12})")
        } else {
            notes.join("; ")
        },
    );
}

#[test]
fn criterion_4_equivalence_collapses() {
    let silu = ActivationInstance::with_defaults(ActivationKind::Silu);
    let swish1 = ActivationInstance::new(
        ActivationKind::Swish,
        ParamSet::with_values(ActivationKind::Swish, &[1.0]).unwrap(),
    )
    .unwrap();
    let eswish1 = ActivationInstance::new(
        ActivationKind::ESwish,
        ParamSet::with_values(ActivationKind::ESwish, &[1.0]).unwrap(),
    )
    .unwrap();
    let serf = ActivationInstance::with_defaults(ActivationKind::Serf);
    let pserf11 = ActivationInstance::new(
        ActivationKind::Pserf,
        ParamSet::with_values(ActivationKind::Pserf, &[1.0, 1.0]).unwrap(),
    )
    .unwrap();

    let mut max_gap = 0.0f64;
    for i in 0..1000 {
        let x = -5.0 + 10.0 * i as f64 / 999.0;
        let s = silu.forward(x).unwrap();
        max_gap = max_gap.max((swish1.forward(x).unwrap() - s).abs());
        max_gap = max_gap.max((eswish1.forward(x).unwrap() - s).abs());
        max_gap = max_gap.max((pserf11.forward(x).unwrap() - serf.forward(x).unwrap()).abs());
    }
    criterion(
        4,
        "equivalence collapses",
        max_gap <= 1e-12,
        format!("max pointwise gap {max_gap:.3e} over 1000-point grids"),
    );
}

#[test]
fn criterion_5_whole_network_gradcheck() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xBA7C);
    let data: Vec<f64> = (0..8 * 784).map(|_| rng.gen_range(0.0..1.0)).collect();
    let batch = Tensor::from_vec(vec![8, 784], data).unwrap();
    let labels: Vec<u8> = (0..8).map(|_| rng.gen_range(0..10) as u8).collect();

    let mut failed_total = 0usize;
    let mut coords_total = 0usize;
    let mut detail = String::new();
    for &kind in &BENCHMARK_KINDS {
        let net = Network::init_uniform_kind(&[784, 32, 10], kind, 0xC0FE).unwrap();
        let reports = audit_network(&net, &batch, &labels, 1e-4).expect("audit runs");
        coords_total += reports.len();
        let fails = reports.iter().filter(|r| !r.pass).count();
        if fails > 0 {
            let first = reports.iter().find(|r| !r.pass).unwrap();
            detail.push_str(&format!(
                "{kind}: {fails} failed (first {}); ",
                first.target
            ));
        }
        failed_total += fails;
    }
    let elapsed = started.elapsed();
    criterion(
        5,
        "whole-network gradcheck",
        failed_total == 0 && elapsed.as_secs_f64() < 120.0,
        format!(
            "10 families x 784-32-10, {coords_total} coordinates, {failed_total} failed {detail}({:.1}s)",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_6_adaptivity_demonstration() {
    let started = Instant::now();
    let cfg = mnist_run_config(ActivationConfig::new("erfrelu"), 5, 42);
    let outcome = run_train(&cfg).expect("training runs");
    let elapsed = started.elapsed();

    let metrics = &outcome.metrics;
    let acc = metrics.final_test_accuracy;
    let alphas: Vec<f64> = metrics
        .final_params
        .iter()
        .map(|l| l.params[0].value)
        .collect();
    let drift = alphas
        .iter()
        .map(|a| (a - 0.882267).abs())
        .fold(0.0, f64::max);

    // held-out sanity: at least 8 of the first 10 test digits classified
    let first10 = {
        let d = outcome.test.feature_dim();
        let mut data = Vec::with_capacity(10 * d);
        for r in 0..10 {
            data.extend_from_slice(outcome.test.images.row(r));
        }
        Tensor::from_vec(vec![10, d], data).unwrap()
    };
    let preds = outcome.network.predict(&first10).unwrap();
    let correct10 = preds
        .iter()
        .zip(&outcome.test.labels[..10])
        .filter(|(p, l)| p == l)
        .count();

    criterion(
        6,
        "adaptivity demonstration",
        acc >= 0.95 && drift > 1e-6 && correct10 >= 8 && elapsed.as_secs_f64() < 600.0,
        format!(
            "[{}] test acc {acc:.4}, alpha {:?} (max drift {drift:.4e}), {correct10}/10 held-out, {:.0}s",
            mnist().source,
            alphas,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_7_comparison_harness() {
    let started = Instant::now();
    let specs: Vec<ActivationConfig> = BENCHMARK_KINDS
        .iter()
        .map(|k| ActivationConfig::new(k.name()))
        .collect();

    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    let mut cfg = mnist_run_config(ActivationConfig::new("erfrelu"), 5, 42);

    cfg.out_dir = Some(out_a.path().to_path_buf());
    let report = run_compare(&cfg, &specs).expect("compare runs");
    cfg.out_dir = Some(out_b.path().to_path_buf());
    let _ = run_compare(&cfg, &specs).expect("compare reruns");

    let min_acc = report
        .runs
        .iter()
        .map(|r| r.final_test_accuracy)
        .fold(f64::INFINITY, f64::min);
    let csv_a = std::fs::read(out_a.path().join("compare.csv")).unwrap();
    let csv_b = std::fs::read(out_b.path().join("compare.csv")).unwrap();
    let json_a = std::fs::read(out_a.path().join("compare.json")).unwrap();
    let json_b = std::fs::read(out_b.path().join("compare.json")).unwrap();
    let identical = csv_a == csv_b && json_a == json_b;
    let elapsed = started.elapsed();

    let ranking: Vec<String> = report.rows.iter().map(|r| r.activation.clone()).collect();
    criterion(
        7,
        "comparison harness",
        min_acc >= 0.90 && identical && report.rows.len() == 10 && elapsed.as_secs_f64() < 5400.0,
        format!(
            "[{}] min acc {min_acc:.4}, rerun byte-identical: {identical}, ranking {ranking:?}, {:.0}s",
            mnist().source,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_8_determinism() {
    // two distinct (config, seed) pairs, each run twice
    let dir1a = tempfile::tempdir().unwrap();
    let dir1b = tempfile::tempdir().unwrap();
    let mut cfg = mnist_run_config(ActivationConfig::new("serf"), 1, 7);
    cfg.layers = Some(vec![784, 32, 10]);
    cfg.out_dir = Some(dir1a.path().to_path_buf());
    run_train(&cfg).unwrap();
    cfg.out_dir = Some(dir1b.path().to_path_buf());
    run_train(&cfg).unwrap();
    let m1a = std::fs::read(dir1a.path().join("metrics.json")).unwrap();
    let m1b = std::fs::read(dir1b.path().join("metrics.json")).unwrap();
    let c1a = std::fs::read(dir1a.path().join("checkpoint.json")).unwrap();
    let c1b = std::fs::read(dir1b.path().join("checkpoint.json")).unwrap();

    let dir2a = tempfile::tempdir().unwrap();
    let dir2b = tempfile::tempdir().unwrap();
    let mut cfg2 = RunConfig {
        layers: Some(vec![2, 8, 3]),
        activation: Some(ActivationConfig::new("smish")),
        activations: None,
        optimizer: OptimizerConfig::Sgd { lr: 0.1 },
        epochs: 4,
        batch_size: 16,
        seed: 99,
        data: DataConfig::Synth {
            train_n: 300,
            test_n: 90,
            classes: 3,
            separation: 5.0,
        },
        out_dir: Some(dir2a.path().to_path_buf()),
        max_steps: None,
        shuffle: true,
    };
    run_train(&cfg2).unwrap();
    cfg2.out_dir = Some(dir2b.path().to_path_buf());
    run_train(&cfg2).unwrap();
    let m2a = std::fs::read(dir2a.path().join("metrics.json")).unwrap();
    let m2b = std::fs::read(dir2b.path().join("metrics.json")).unwrap();

    criterion(
        8,
        "determinism",
        m1a == m1b && c1a == c1b && m2a == m2b,
        format!(
            "metrics.json byte-identical across reruns for two configs ({} and {} bytes)",
            m1a.len(),
            m2a.len()
        ),
    );
}

#[test]
fn criterion_9_data_ingestion() {
    let (train, test) = load_idx_dir(&mnist().dir, LoadOptions::default()).expect("dataset loads");
    let shape_ok = train.len() == 60000
        && test.len() == 10000
        && train.feature_dim() == 784
        && test.feature_dim() == 784
        && train.class_count == 10;

    // corrupted-file fixtures raise the three named errors
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img");
    let lbl = dir.path().join("lbl");
    let mut img_bytes = Vec::new();
    img_bytes.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    img_bytes.extend_from_slice(&2u32.to_be_bytes());
    img_bytes.extend_from_slice(&1u32.to_be_bytes());
    img_bytes.extend_from_slice(&3u32.to_be_bytes());
    img_bytes.extend_from_slice(&[10, 20, 30, 40, 50, 60]);
    std::fs::write(&img, &img_bytes).unwrap();
    let mut lbl_bytes = Vec::new();
    lbl_bytes.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    lbl_bytes.extend_from_slice(&2u32.to_be_bytes());
    lbl_bytes.extend_from_slice(&[0, 1]);
    std::fs::write(&lbl, &lbl_bytes).unwrap();

    let bad_magic = dir.path().join("bad_magic");
    let mut bytes = img_bytes.clone();
    bytes[0] = 0xFF;
    std::fs::write(&bad_magic, &bytes).unwrap();
    let magic_err = matches!(
        load_idx(&bad_magic, &lbl, Split::Train),
        Err(actkit::data::DataError::MagicMismatch { .. })
    );

    let truncated = dir.path().join("truncated");
    std::fs::write(&truncated, &img_bytes[..img_bytes.len() - 2]).unwrap();
    let trunc_err = matches!(
        load_idx(&truncated, &lbl, Split::Train),
        Err(actkit::data::DataError::TruncatedFile { .. })
    );

    let miscount = dir.path().join("miscount");
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    bytes.extend_from_slice(&5u32.to_be_bytes());
    bytes.extend_from_slice(&[0, 1, 0, 1, 0]);
    std::fs::write(&miscount, &bytes).unwrap();
    let count_err = matches!(
        load_idx(&img, &miscount, Split::Train),
        Err(actkit::data::DataError::CountMismatch { .. })
    );

    criterion(
        9,
        "data ingestion",
        shape_ok && magic_err && trunc_err && count_err,
        format!(
            "[{}] train {}x{}, test {}x{}, classes {}; MagicMismatch/TruncatedFile/CountMismatch all raised",
            mnist().source,
            train.len(),
            train.feature_dim(),
            test.len(),
            test.feature_dim(),
            train.class_count
        ),
    );
}
