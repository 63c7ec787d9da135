//! End-to-end checks of the batch driver: file formats, report schemas,
//! determinism, and process exit codes.

use pmlab::io::{load_sample_set, save_sample_set};
use pmlab::sample_set::{SampleMeta, SampleSet};
use pmlab_cli::config::ExperimentConfig;
use pmlab_cli::pipeline;
use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pmlab")
}

fn small_config(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = 11;
    cfg.output_dir = dir.to_path_buf();
    cfg.toy.ambient_dim = 16;
    cfg.toy.n_per_class = 300;
    cfg.toy.n_test_per_class = 60;
    cfg.toy.hidden_dims = vec![12];
    cfg.toy.epochs = 15;
    cfg.toy.weight_decay = 0.0;
    cfg.toy.train_eps = vec![0.0, 0.03];
    cfg.pga.threshold = 0.8;
    cfg.toy.n_pm_per_class = 120;
    cfg.toy.n_distance_inits = 40;
    cfg.ellipsoid.ambient_dim = 128;
    cfg.ellipsoid.d_grid = vec![1, 8, 32, 128];
    cfg.ellipsoid.n_points = 60;
    cfg
}

#[test]
fn toy_pipeline_emits_complete_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = pipeline::toy_pipeline(&cfg).unwrap();
    assert_eq!(out.summaries.len(), 2);

    let combined = std::fs::read_to_string(tmp.path().join("reports/combined.csv")).unwrap();
    let lines: Vec<&str> = combined.lines().collect();
    assert!(lines[0].starts_with("# config_hash="));
    assert!(lines[1].starts_with("model,eps_train,clean_acc,robust_acc"));
    // One row per model, all columns populated.
    let n_cols = lines[1].split(',').count();
    for row in &lines[2..] {
        assert_eq!(row.split(',').count(), n_cols, "row {row}");
        assert!(!row.contains("NaN"));
    }
    assert_eq!(lines.len(), 2 + 2);

    // Artifacts for every model and class.
    for tag in ["0.000", "0.030"] {
        assert!(tmp.path().join(format!("models/model_eps{tag}.ckpt")).exists());
        assert!(tmp.path().join(format!("reports/attack_eps{tag}.csv")).exists());
        assert!(tmp.path().join(format!("reports/dim_eps{tag}.csv")).exists());
        for class in 0..3 {
            assert!(tmp
                .path()
                .join(format!("pm/model_eps{tag}_class{class}.pmss"))
                .exists());
            assert!(tmp
                .path()
                .join(format!("logs/pm_runs_eps{tag}_class{class}.csv"))
                .exists());
        }
    }
    assert!(tmp.path().join("run_meta.txt").exists());
}

#[test]
fn toy_pipeline_is_byte_deterministic() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    let mut cfg_a = small_config(tmp_a.path());
    let mut cfg_b = small_config(tmp_b.path());
    // Shrink further: this runs the whole pipeline twice.
    for cfg in [&mut cfg_a, &mut cfg_b] {
        cfg.toy.n_per_class = 150;
        cfg.toy.n_pm_per_class = 60;
        cfg.toy.n_distance_inits = 20;
        cfg.toy.train_eps = vec![0.0];
    }
    pipeline::toy_pipeline(&cfg_a).unwrap();
    pipeline::toy_pipeline(&cfg_b).unwrap();
    for file in [
        "reports/combined.csv",
        "reports/scaling.csv",
        "reports/dim_eps0.000.csv",
        "reports/attack_eps0.000.csv",
        "logs/pm_runs_eps0.000_class0.csv",
    ] {
        let a = std::fs::read(tmp_a.path().join(file)).unwrap();
        let b = std::fs::read(tmp_b.path().join(file)).unwrap();
        assert_eq!(a, b, "file {file} differs between identical runs");
    }
    // Binary outputs too.
    let a = std::fs::read(tmp_a.path().join("pm/model_eps0.000_class0.pmss")).unwrap();
    let b = std::fs::read(tmp_b.path().join("pm/model_eps0.000_class0.pmss")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ellipsoid_report_has_expected_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.ellipsoid.svg = true;
    let rows = pipeline::ellipsoid_fig(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    let text = std::fs::read_to_string(tmp.path().join("reports/ellipsoid.csv")).unwrap();
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("d,analytic,mc_boundary_mean,mc_boundary_sigma,mc_filled_mean,n_points,seed"));
    assert!(tmp.path().join("plots/ellipsoid.svg").exists());
    // Low d: boundary tracks the perpendicular term.
    let low = &rows[0];
    assert!((low.mc_filled_mean - low.analytic).abs() / low.analytic < 0.2);
}

#[test]
fn spectral_suite_reports_controls() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path());

    // Build tiny data/pm stand-ins on disk: 16-dim sets reshape to 4x4.
    let mut rng = pmlab::numerics::SeededRng::new(3);
    let data_rows: Vec<Vec<f64>> = (0..300)
        .map(|_| {
            let mut v = vec![0.5; 16];
            for x in v.iter_mut().take(3) {
                *x += 0.2 * rng.normal();
            }
            v.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
            v
        })
        .collect();
    let pm_rows: Vec<Vec<f64>> = (0..300).map(|_| rng.uniform_cube_point(16)).collect();
    let data_path = tmp.path().join("data.pmss");
    let pm_path = tmp.path().join("pm.pmss");
    save_sample_set(
        &SampleSet::from_rows(data_rows, SampleMeta::new(4, "data")).unwrap(),
        &data_path,
    )
    .unwrap();
    save_sample_set(
        &SampleSet::from_rows(pm_rows, SampleMeta::new(5, "pm")).unwrap(),
        &pm_path,
    )
    .unwrap();

    cfg.spectral.data_sets = vec![data_path];
    cfg.spectral.pm_sets = vec![pm_path];
    cfg.spectral.baseline_trials = 40;
    cfg.spectral.control_images = 8;
    cfg.spectral.control_side = 32;
    pipeline::spectral_suite(&cfg).unwrap();

    let slopes = std::fs::read_to_string(tmp.path().join("spectral/psd_slopes.csv")).unwrap();
    assert!(slopes.contains("control_white"));
    assert!(slopes.contains("control_pink"));
    let white_alpha: f64 = slopes
        .lines()
        .find(|l| l.starts_with("control_white"))
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!(white_alpha.abs() < 0.3, "white control alpha {white_alpha}");
    assert!(tmp.path().join("spectral/alignment.csv").exists());
    assert!(tmp.path().join("spectral/density_data.csv").exists());
}

#[test]
fn spectral_suite_names_missing_path() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.spectral.data_sets = vec![tmp.path().join("absent.pmss")];
    cfg.spectral.pm_sets = vec![tmp.path().join("also_absent.pmss")];
    let err = pipeline::spectral_suite(&cfg).unwrap_err();
    assert!(format!("{err:#}").contains("absent.pmss"));
}

#[test]
fn convert_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = pmlab::numerics::SeededRng::new(6);
    let rows: Vec<Vec<f64>> = (0..100).map(|_| rng.uniform_cube_point(64)).collect();
    let set = SampleSet::from_rows(rows, SampleMeta::new(6, "orig").with_label(1)).unwrap();
    let bin_path = tmp.path().join("set.pmss");
    save_sample_set(&set, &bin_path).unwrap();

    let csv_path = tmp.path().join("set.csv");
    pipeline::convert_to_csv(&bin_path, &csv_path).unwrap();
    let back_path = tmp.path().join("set_back.pmss");
    pipeline::convert_from_csv(&csv_path, &back_path, 6, "orig", Some(1)).unwrap();
    let back = load_sample_set(&back_path).unwrap();
    assert_eq!(set.as_flat(), back.as_flat());
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();

    // Invalid input: missing model checkpoint -> exit 2.
    let status = Command::new(bin())
        .args([
            "sample-pm",
            "--model",
            tmp.path().join("missing.ckpt").to_str().unwrap(),
            "--class",
            "0",
            "--output",
            tmp.path().join("out.pmss").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2), "{status:?}");

    // Integrity error: corrupted sample set -> exit 4.
    let mut rng = pmlab::numerics::SeededRng::new(7);
    let rows: Vec<Vec<f64>> = (0..10).map(|_| rng.uniform_cube_point(4)).collect();
    let set = SampleSet::from_rows(rows, SampleMeta::new(7, "x").with_label(0)).unwrap();
    let path = tmp.path().join("corrupt.pmss");
    save_sample_set(&set, &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(&path, bytes).unwrap();
    let status = Command::new(bin())
        .args([
            "dim",
            "--input",
            path.to_str().unwrap(),
            "--output",
            tmp.path().join("dim.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(4), "{status:?}");

    // Success path: convert a tiny csv.
    let csv = tmp.path().join("tiny.csv");
    std::fs::write(&csv, "0.1,0.2\n0.3,0.4\n").unwrap();
    let out = tmp.path().join("tiny.pmss");
    let status = Command::new(bin())
        .args([
            "convert",
            "--input",
            csv.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--label",
            "0",
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{status:?}");
    assert!(out.exists());
}

#[test]
fn output_dir_env_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(&tmp.path().join("ignored"));
    let override_dir = tmp.path().join("from_env");
    std::env::set_var("PMLAB_OUTPUT_DIR", &override_dir);
    let resolved = cfg.resolved_output_dir();
    std::env::remove_var("PMLAB_OUTPUT_DIR");
    assert_eq!(resolved, override_dir);
}
