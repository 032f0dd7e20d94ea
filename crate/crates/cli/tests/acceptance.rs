//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p fingerwave-cli --test acceptance`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fingerwave_core::dwt::{dwt2_single, idwt2_single, Extension, Wavelet};
use fingerwave_core::edgefeat::{canny, CannyConfig};
use fingerwave_core::eval::{sweep, GenuineTrial, ImpostorTrial, ProtocolMetadata, TrialScores};
use fingerwave_core::ingest::{scan_dataset, NamingPattern};
use fingerwave_core::matcher::{euclidean, verify, Aggregation};
use fingerwave_core::orientation::{coherence, dominant_orientation, GradientField, COHERENCE_WINDOW, ORIENTATION_BLOCK};
use fingerwave_core::pipeline::{load_template, save_template, ExtractionConfig, Template, TemplateStore, FEATURE_LEN};
use fingerwave_core::protocol::{run_protocol, RunConfig, ThresholdChoice};
use fingerwave_core::centerarea::{find_center, row_col_stats};
use fingerwave_core::synth::{write_corpus, SynthParams};
use fingerwave_core::texture::{features, glcm, Quantized};
use fingerwave_core::{Error, Plane};
use fingerwave_oracles::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize, lo: f64, hi: f64) -> Plane {
    Plane::from_fn(w, h, |_, _| rng.random_range(lo..hi))
}

fn to_matrix(p: &Plane) -> Matrix {
    (0..p.height()).map(|r| p.row(r).to_vec()).collect()
}

fn max_diff(p: &Plane, m: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for (r, row) in m.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            worst = worst.max((p.get(r, c) - v).abs());
        }
    }
    worst
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fingerwave"))
}

fn run_ok(cmd: &mut Command) -> Result<String, String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{cmd:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn synth_dataset(root: &Path, fingers: u32, samples: u32, impostor_fingers: u32) -> Result<(), String> {
    let params = SynthParams::default();
    let naming = NamingPattern::default();
    write_corpus(&root.join("db"), &params, 1..=fingers, samples, &naming).map_err(|e| e.to_string())?;
    if impostor_fingers > 0 {
        let ids = fingers + 1..=fingers + impostor_fingers;
        write_corpus(&root.join("impostors"), &params, ids, samples, &naming).map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// Report layout on a user-style dataset: a 12-row threshold table and an
/// EER line. No rates are checked.
fn report_layout() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synth_dataset(dir.path(), 4, 8, 1)?;
    let stdout = run_ok(
        bin()
            .arg("evaluate")
            .arg(dir.path().join("db"))
            .arg("--impostors")
            .arg(dir.path().join("impostors"))
            .arg("--out")
            .arg(dir.path().join("report")),
    )?;
    let lines: Vec<&str> = stdout.lines().collect();
    ensure!(lines.first() == Some(&"Threshold\t%FAR\t%FRR\t%TSR"), "unexpected header {:?}", lines.first());
    let rows: Vec<&str> = lines[1..].iter().take_while(|l| !l.starts_with("EER")).copied().collect();
    ensure!(rows.len() == 12, "{} table rows", rows.len());
    let thresholds: Vec<&str> = rows.iter().map(|r| r.split('\t').next().unwrap_or("")).collect();
    ensure!(
        thresholds == ["25", "30", "35", "40", "45", "50", "55", "57", "59", "60", "61", "62"],
        "thresholds {thresholds:?}"
    );
    let eer = lines.get(13).copied().unwrap_or("");
    ensure!(eer == "EER=undefined" || (eer.starts_with("EER=") && eer.contains("% @ t=")), "EER line {eer:?}");
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).map_err(|e| e.to_string())?;
    ensure!(csv.lines().count() == 13, "csv has {} lines", csv.lines().count());
    Ok(format!("12 rows, {eer}"))
}

fn dwt_reconstruction() -> Outcome {
    let mut rng = rng(2);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..100 {
        let w = 2 * rng.random_range(8..=64);
        let h = 2 * rng.random_range(8..=48);
        let (w, h) = match k {
            0 => (16, 16),
            1 => (128, 96),
            _ => (w, h),
        };
        let x = random_plane(&mut rng, w, h, 0.0, 255.0);
        let bands = dwt2_single(&x, Wavelet::default(), Extension::default()).map_err(|e| e.to_string())?;
        let back = idwt2_single(&bands, Wavelet::default(), Extension::default(), (w, h)).map_err(|e| e.to_string())?;
        worst = worst.max(back.max_abs_diff(&x));
    }
    let elapsed = start.elapsed();
    ensure!(worst < 1e-9, "max round-trip error {worst:e}");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("max error {worst:.2e} in {elapsed:.2?}"))
}

fn glcm_oracle() -> Outcome {
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let rows: Vec<Vec<usize>> = (0..6).map(|_| (0..6).map(|_| rng.random_range(0..8)).collect()).collect();
        let refs: Vec<&[usize]> = rows.iter().map(|r| r.as_slice()).collect();
        let got = features(&glcm(&Quantized::from_rows(&refs), 8, (0, 1), true).map_err(|e| e.to_string())?);
        let want = fingerwave_oracles::haralick(&fingerwave_oracles::glcm_counts(&rows, 8, (0, 1), true));
        let corr = if got.correlation.is_nan() && want.correlation.is_nan() {
            0.0
        } else {
            (got.correlation - want.correlation).abs()
        };
        for d in [
            corr,
            (got.contrast - want.contrast).abs(),
            (got.energy - want.energy).abs(),
            (got.homogeneity - want.homogeneity).abs(),
        ] {
            worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
        }
    }
    ensure!(worst < 1e-12, "max deviation {worst:e}");
    let constant = vec![vec![5usize; 6]; 6];
    let refs: Vec<&[usize]> = constant.iter().map(|r| r.as_slice()).collect();
    let f = features(&glcm(&Quantized::from_rows(&refs), 8, (0, 1), true).map_err(|e| e.to_string())?);
    ensure!(
        f.contrast == 0.0 && f.energy == 1.0 && f.homogeneity == 1.0 && f.correlation.is_nan(),
        "constant image gave {f:?}"
    );
    Ok(format!("max deviation {worst:.2e}; constant image exact"))
}

fn orientation_oracle() -> Outcome {
    let mut rng = rng(4);
    let (mut worst_coh, mut worst_theta) = (0.0f64, 0.0f64);
    for k in 0..50 {
        let (w, h) = (8 + k % 25, 8 + (k * 3) % 21);
        let gx = random_plane(&mut rng, w, h, -40.0, 40.0);
        let gy = random_plane(&mut rng, w, h, -40.0, 40.0);
        let (mx, my) = (to_matrix(&gx), to_matrix(&gy));
        let field = GradientField::from_components(gx, gy).map_err(|e| e.to_string())?;
        let coh = coherence(&field, COHERENCE_WINDOW);
        let coh_ref = fingerwave_oracles::coherence(&mx, &my, COHERENCE_WINDOW);
        worst_coh = worst_coh.max(max_diff(&coh, &coh_ref));
        ensure!(coh.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)), "coherence out of [-1, 1]");
        let theta = dominant_orientation(&field, &coh, ORIENTATION_BLOCK).map_err(|e| e.to_string())?;
        let theta_ref = fingerwave_oracles::block_orientation(&mx, &my, &coh_ref, ORIENTATION_BLOCK);
        worst_theta = worst_theta.max(max_diff(&theta, &theta_ref));
        ensure!(theta.as_slice().iter().all(|v| (0.0..=PI).contains(v)), "orientation out of [0, pi]");
    }
    ensure!(worst_coh < 1e-12, "coherence deviation {worst_coh:e}");
    ensure!(worst_theta < 1e-12, "orientation deviation {worst_theta:e}");
    Ok(format!("coherence {worst_coh:.2e}, orientation {worst_theta:.2e}"))
}

fn center_oracle() -> Outcome {
    let mut rng = rng(5);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let (w, h) = (4 + k % 40, 4 + (k * 7) % 33);
        let p = random_plane(&mut rng, w, h, -100.0, 100.0);
        let m = to_matrix(&p);
        let stats = row_col_stats(&p);
        let rows = fingerwave_oracles::rows_mean_var(&m);
        let cols = fingerwave_oracles::cols_mean_var(&m);
        for (r, (mean, var)) in rows.iter().enumerate() {
            worst = worst.max((stats.row_means[r] - mean).abs()).max((stats.row_vars[r] - var).abs() / var.max(1.0));
        }
        for (c, (mean, var)) in cols.iter().enumerate() {
            worst = worst.max((stats.col_means[c] - mean).abs()).max((stats.col_vars[c] - var).abs() / var.max(1.0));
        }
        let center = find_center(&p);
        let row_vars: Vec<f64> = rows.iter().map(|s| s.1).collect();
        let col_vars: Vec<f64> = cols.iter().map(|s| s.1).collect();
        ensure!(center.row == fingerwave_oracles::argmax_scan(&row_vars), "plane {k}: row argmax differs");
        ensure!(center.col == fingerwave_oracles::argmax_scan(&col_vars), "plane {k}: column argmax differs");
    }
    ensure!(worst < 1e-12, "statistics deviation {worst:e}");
    Ok(format!("50 argmax matches, statistics deviation {worst:.2e}"))
}

fn canny_oracle() -> Outcome {
    let cfg = CannyConfig::default();
    let mut rng = rng(6);
    let mut images: Vec<Plane> = (0..10).map(|_| random_plane(&mut rng, 32, 32, 0.0, 255.0)).collect();
    images.push(Plane::from_fn(32, 32, |_, c| if c < 16 { 0.0 } else { 255.0 }));
    let mut edges = 0;
    for (k, p) in images.iter().enumerate() {
        let got = canny(p, &cfg).map_err(|e| e.to_string())?;
        let want = fingerwave_oracles::canny(&to_matrix(p), cfg.sigma, cfg.t_low, cfg.t_high);
        for (r, row) in want.mask.iter().enumerate() {
            for (c, &e) in row.iter().enumerate() {
                ensure!(got.is_edge(r, c) == e, "image {k}: masks differ at ({r}, {c})");
            }
        }
        edges += got.edge_count();
    }
    Ok(format!("11 masks identical ({edges} edge pixels)"))
}

fn metric_and_monotonicity() -> Outcome {
    let mut rng = rng(7);
    let vector = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..FEATURE_LEN).map(|_| rng.random_range(-100.0..100.0)).collect() };
    for k in 0..200 {
        let (a, b, c) = (vector(&mut rng), vector(&mut rng), vector(&mut rng));
        let d = |x: &[f64], y: &[f64]| euclidean(x, y).unwrap();
        ensure!(d(&a, &a) == 0.0, "triple {k}: d(a, a) != 0");
        ensure!(d(&a, &b) > 0.0, "triple {k}: distinct vectors at distance 0");
        ensure!(d(&a, &b) == d(&b, &a), "triple {k}: asymmetric");
        ensure!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9, "triple {k}: triangle inequality");
    }

    let genuine: Vec<GenuineTrial> = (0..60)
        .map(|i| GenuineTrial {
            finger_id: i,
            sample_id: 8,
            distance: rng.random_range(0.0..80.0),
        })
        .collect();
    let impostor: Vec<ImpostorTrial> = (0..90)
        .map(|i| ImpostorTrial {
            finger_id: 1000 + i,
            sample_id: 1,
            claimed_finger: i % 60,
            distance: rng.random_range(20.0..150.0),
        })
        .collect();
    let scores = TrialScores { genuine, impostor };
    let thresholds: Vec<f64> = (0..=160).map(|t| t as f64).collect();
    let report = sweep(&scores, &thresholds, ProtocolMetadata::default()).map_err(|e| e.to_string())?;
    for w in report.rows.windows(2) {
        ensure!(w[1].far_pct >= w[0].far_pct, "FAR decreased at t={}", w[1].threshold);
        ensure!(w[1].frr_pct <= w[0].frr_pct, "FRR increased at t={}", w[1].threshold);
    }
    for r in &report.rows {
        ensure!(r.mc + r.mmc == 60, "MC + MMC = {} at t={}", r.mc + r.mmc, r.threshold);
        ensure!((r.tsr_pct + r.frr_pct - 100.0).abs() < 1e-9, "TSR + FRR != 100 at t={}", r.threshold);
    }
    Ok("200 triples, 161-row sweep".into())
}

fn synthetic_separability() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synth_dataset(dir.path(), 10, 8, 2)?;
    let cfg = RunConfig::default();
    let split = scan_dataset(
        &dir.path().join("db"),
        Some(&dir.path().join("impostors")),
        &cfg.protocol.naming().map_err(|e| e.to_string())?,
        cfg.protocol.enroll_samples,
    )
    .map_err(|e| e.to_string())?;
    ensure!(split.enroll.len() == 70 && split.genuine_test.len() == 10 && split.impostor_test.len() == 16, "bad split");
    let run = run_protocol(&split, &cfg, &ThresholdChoice::Auto(1001), None).map_err(|e| e.to_string())?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let genuine = mean(&run.scores.genuine.iter().map(|t| t.distance).collect::<Vec<_>>());
    let impostor = mean(&run.scores.impostor.iter().map(|t| t.distance).collect::<Vec<_>>());
    let eer = run.report.eer_pct.ok_or("EER undefined")?;
    let elapsed = start.elapsed();
    ensure!(genuine < impostor, "mean genuine {genuine:.2} >= mean impostor {impostor:.2}");
    ensure!(eer < 20.0, "EER {eer:.2}%");
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "mean genuine {genuine:.1} < impostor {impostor:.1}, EER {eer:.2}%, {elapsed:.1?}"
    ))
}

fn deterministic_reports() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synth_dataset(dir.path(), 4, 8, 1)?;
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        run_ok(
            bin()
                .arg("evaluate")
                .arg(dir.path().join("db"))
                .arg("--impostors")
                .arg(dir.path().join("impostors"))
                .args(["--seed", "17", "--thresholds", "auto:64", "--out"])
                .arg(dir.path().join(name)),
        )?;
        csvs.push(std::fs::read(dir.path().join(format!("{name}.csv"))).map_err(|e| e.to_string())?);
    }
    ensure!(csvs[0] == csvs[1], "CSV reports differ");
    Ok(format!("{} identical bytes", csvs[0].len()))
}

fn template_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = rng(10);
    let cfg = ExtractionConfig::default();
    for k in 0..100 {
        let t = Template {
            finger_id: k,
            sample_id: 1 + k % 8,
            features: (0..FEATURE_LEN)
                .map(|_| rng.random_range(-1e6..1e6) * 10f64.powi(rng.random_range(-12..4)))
                .collect(),
            config_hash: cfg.config_hash(),
            source_path: None,
        };
        let path = dir.path().join(format!("{k}.json"));
        save_template(&t, &path).map_err(|e| e.to_string())?;
        let back = load_template(&path).map_err(|e| e.to_string())?;
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        ensure!(bits(&back.features) == bits(&t.features), "template {k} changed on reload");
        ensure!(back == t, "template {k} metadata changed on reload");
    }

    let mut store = TemplateStore::new(cfg.clone());
    store
        .insert(Template {
            finger_id: 1,
            sample_id: 1,
            features: vec![0.0; FEATURE_LEN],
            config_hash: cfg.config_hash(),
            source_path: None,
        })
        .map_err(|e| e.to_string())?;
    store.finalize();
    let other = ExtractionConfig {
        wavelet: Wavelet::Db4,
        ..cfg
    };
    let probe = Template {
        finger_id: 1,
        sample_id: 2,
        features: vec![0.0; FEATURE_LEN],
        config_hash: other.config_hash(),
        source_path: None,
    };
    match verify(&probe, 1, &store, 1.0, Aggregation::Min) {
        Err(Error::ConfigMismatch { .. }) => Ok("100 bit-exact, ConfigMismatch raised".into()),
        other => Err(format!("expected ConfigMismatch, got {other:?}")),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("evaluate emits a 12-row threshold table and an EER line", report_layout),
        ("DWT perfect reconstruction on 100 matrices", dwt_reconstruction),
        ("GLCM statistics equal the pair-enumeration oracle", glcm_oracle),
        ("coherence and block orientation equal direct sums", orientation_oracle),
        ("center detection and row/column statistics equal naive scans", center_oracle),
        ("Canny mask equals the naive reference", canny_oracle),
        ("metric axioms and sweep monotonicity", metric_and_monotonicity),
        ("synthetic corpus separates (EER < 20%)", synthetic_separability),
        ("two evaluate runs give byte-identical CSV", deterministic_reports),
        ("template round trip and config mismatch", template_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
