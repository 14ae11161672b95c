use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(experiment: &str, config: &str, extra: &[&str]) -> (Output, TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_blockade"))
        .arg(experiment)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(extra)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (out, dir)
}

fn out_file(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join("out").join(name)
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn sidecar(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_status(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

const SPECTRUM: &str = r#"{
  "experiment": "spectrum",
  "model": { "n_fock": 30, "n_dressed": 8 },
  "grids": { "g": { "start": 0.0, "stop": 0.5, "points": 26 },
             "theta": { "values": [1.5707963267948966, 0.93] } },
  "output": { "prefix": "lv" }
}"#;

#[test]
fn spectrum_writes_one_table_per_angle() {
    let (out, dir) = run("spectrum", SPECTRUM, &[]);
    assert_status(&out, 0);
    for i in 0..2 {
        let (header, rows) = read_csv(&out_file(&dir, &format!("lv_spectrum_theta{i}.csv")));
        assert_eq!(header, "g,E0,E1,E2,E3,E4,E5");
        assert_eq!(rows.len(), 26);
        let bare = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0];
        for (v, b) in rows[0].iter().zip(bare) {
            assert!((v - b).abs() < 1e-12, "{:?}", rows[0]);
        }
        for row in &rows {
            assert!(row[1..].windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
    }
    let meta = sidecar(&out_file(&dir, "lv_spectrum.json"));
    assert_eq!(meta["experiment"], "spectrum");
    assert_eq!(meta["library"]["version"], blockade_core::VERSION);
    assert_eq!(meta["config"]["model"]["n_fock"], 30);
    assert_eq!(meta["files"].as_array().unwrap().len(), 2);
    for s in meta["metrics"]["sweeps"].as_array().unwrap() {
        assert!(s["max_orthonormality_error"].as_f64().unwrap() < 1e-10);
    }
}

#[test]
fn csv_bodies_are_identical_across_runs_and_thread_counts() {
    let (a, da) = run("spectrum", SPECTRUM, &["--threads", "1"]);
    let (b, db) = run("spectrum", SPECTRUM, &["--threads", "3"]);
    assert_status(&a, 0);
    assert_status(&b, 0);
    for name in ["lv_spectrum_theta0.csv", "lv_spectrum_theta1.csv"] {
        let x = std::fs::read(out_file(&da, name)).unwrap();
        let y = std::fs::read(out_file(&db, name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

const SWEEP: &str = r#"{
  "experiment": "g2zero-sweep",
  "model": { "n_fock": 6, "n_dressed": 6 },
  "grids": { "omega_d": { "values": [0.82, 0.9, 1.15] } },
  "output": { "prefix": "sw" }
}"#;

#[test]
fn parallel_drive_sweep_is_deterministic() {
    let (a, da) = run("g2zero-sweep", SWEEP, &["--threads", "1"]);
    let (b, db) = run("g2zero-sweep", SWEEP, &["--threads", "3"]);
    assert_status(&a, 0);
    assert_status(&b, 0);
    let x = std::fs::read(out_file(&da, "sw_g2zero-sweep.csv")).unwrap();
    let y = std::fs::read(out_file(&db, "sw_g2zero-sweep.csv")).unwrap();
    assert_eq!(x, y);

    let (header, rows) = read_csv(&out_file(&da, "sw_g2zero-sweep.csv"));
    assert_eq!(header, "omega_d,g2_zero");
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![0.82, 0.9, 1.15]);
    assert!(rows.iter().all(|r| r[1] > 0.0 && r[1].is_finite()));
    let meta = sidecar(&out_file(&da, "sw_g2zero-sweep.json"));
    let best = meta["metrics"]["max_g2"]["g2_zero"].as_f64().unwrap();
    assert_eq!(best, rows.iter().map(|r| r[1]).fold(f64::MIN, f64::max));
    assert!(meta["metrics"]["convergence"]["qss_metric"].as_f64().unwrap() < 1e-10);
    assert_eq!(meta["timing"]["threads"], 1);
}

#[test]
fn g2tau_starts_at_g2_zero() {
    let cfg = r#"{
      "experiment": "g2tau",
      "model": { "n_fock": 6, "n_dressed": 6 },
      "drive_transition": [0, 2],
      "grids": { "tau": { "start": 0.0, "stop": 20.0, "points": 201 } },
      "output": { "prefix": "up" }
    }"#;
    let (out, dir) = run("g2tau", cfg, &[]);
    assert_status(&out, 0);
    let (header, rows) = read_csv(&out_file(&dir, "up_g2tau.csv"));
    assert_eq!(header, "tau,g2");
    assert_eq!(rows.len(), 201);
    let meta = sidecar(&out_file(&dir, "up_g2tau.json"));
    assert_eq!(meta["metrics"]["g2_zero"].as_f64().unwrap(), rows[0][1]);
    let d20 = meta["metrics"]["transitions"]["delta20"].as_f64().unwrap();
    assert_eq!(meta["config"]["model"]["omega_d"].as_f64().unwrap(), d20);
    assert!(rows[0][1] > 1.0);
}

#[test]
fn circuit_check_reports_the_mixing_bound() {
    let (out, dir) = run("circuit-check", r#"{"experiment": "circuit-check", "output": {"prefix": "dev"}}"#, &[]);
    assert_status(&out, 0);
    let (header, rows) = read_csv(&out_file(&dir, "dev_circuit-check.csv"));
    assert_eq!(header, "dphi_freq_GHz,cos_theta,J_GHz,deltaE_GHz,margin_ratio");
    assert_eq!(rows.len(), 41);
    let (header, _) = read_csv(&out_file(&dir, "dev_circuit-check_levels.csv"));
    assert!(header.starts_with("dphi_freq_GHz,E_"));
    let meta = sidecar(&out_file(&dir, "dev_circuit-check.json"));
    let c = meta["metrics"]["cos_theta_max"].as_f64().unwrap();
    assert!((c - 0.486).abs() < 0.005, "{c}");
    assert!((rows.last().unwrap()[1] - c).abs() < 1e-12);
}

#[test]
fn unreachable_resonance_is_a_config_error() {
    let cfg = r#"{"experiment": "circuit-check",
                  "circuit": {"device": {"mode_freqs": [2.782, 4.0, 7.777]}}}"#;
    let (out, _dir) = run("circuit-check", cfg, &[]);
    assert_status(&out, 1);
}

#[test]
fn flux_demo_separates_flux_from_photon_number() {
    let cfg = r#"{
      "experiment": "flux-demo",
      "model": { "theta": 0.93, "drive_amplitude": 0.0, "n_fock": 40, "n_dressed": 8 },
      "grids": { "g": { "values": [0.0, 0.2] } },
      "output": { "prefix": "gs" }
    }"#;
    let (out, dir) = run("flux-demo", cfg, &[]);
    assert_status(&out, 0);
    let (header, rows) = read_csv(&out_file(&dir, "gs_flux-demo.csv"));
    assert_eq!(header, "g,output_flux,naive_photon_number");
    assert_eq!(rows[0][1..], [0.0, 0.0]);
    assert_eq!(rows[1][1], 0.0);
    assert!((rows[1][2] - 0.021709494199648478).abs() < 1e-9, "{}", rows[1][2]);
}

#[test]
fn convergence_ladder_at_zero_coupling_is_flat() {
    let cfg = r#"{
      "experiment": "convergence",
      "model": { "g": 0.0 },
      "convergence": { "g2": false,
        "rungs": [ {"n_fock": 15, "n_dressed": 12}, {"n_fock": 20, "n_dressed": 12}, {"n_fock": 30, "n_dressed": 12} ] },
      "output": { "prefix": "flat" }
    }"#;
    let (out, dir) = run("convergence", cfg, &[]);
    assert_status(&out, 0);
    let (header, rows) = read_csv(&out_file(&dir, "flat_convergence.csv"));
    assert!(header.starts_with("rung,n_fock,n_dressed,dt,g2_zero,delta10,delta20"));
    // identical up to eigensolver round-off
    for r in &rows[1..] {
        assert!((r[5] - rows[0][5]).abs() < 1e-12 && (r[6] - rows[0][6]).abs() < 1e-12);
        assert!(r[8..].iter().all(|d| d.abs() < 1e-12), "{r:?}");
    }
    assert_eq!(sidecar(&out_file(&dir, "flat_convergence.json"))["metrics"]["converged"], true);
}

#[test]
fn convergence_ladder_resolves_the_low_spectrum() {
    let cfg = r#"{
      "experiment": "convergence",
      "convergence": { "g2": false,
        "rungs": [ {"n_fock": 15, "n_dressed": 12}, {"n_fock": 20, "n_dressed": 12}, {"n_fock": 30, "n_dressed": 12} ] },
      "output": { "prefix": "default" }
    }"#;
    let (out, dir) = run("convergence", cfg, &[]);
    assert_status(&out, 0);
    let meta = sidecar(&out_file(&dir, "default_convergence.json"));
    assert!(meta["metrics"]["last_max_level_shift"].as_f64().unwrap() < 1e-6);
    assert_eq!(meta["metrics"]["converged"], true);
}

#[test]
fn config_problems_exit_with_status_one() {
    let cases = [
        ("spectrum", "{ not json"),
        ("spectrum", r#"{"experiment": "spectrum"}"#),
        ("spectrum", r#"{"experiment": "spectrum", "grids": {"g": {"values": []}}}"#),
        ("spectrum", r#"{"experiment": "spectrum", "grids": {"g": {"values": [0.1]}}, "model": {"n_fock": 1}}"#),
        ("g2tau", r#"{"experiment": "spectrum", "grids": {"g": {"values": [0.1]}}}"#),
        ("plot", r#"{"experiment": "spectrum", "grids": {"g": {"values": [0.1]}}}"#),
        ("g2tau", r#"{"experiment": "g2tau", "drive_transition": [2, 0]}"#),
        ("g2tau", r#"{"experiment": "g2tau", "numerics": {"dephasing_power": 3}}"#),
    ];
    for (experiment, cfg) in cases {
        let (out, dir) = run(experiment, cfg, &[]);
        assert_status(&out, 1);
        assert!(!out_file(&dir, "run_spectrum.csv").exists());
    }
}

#[test]
fn numerical_failure_exits_with_status_two_and_diagnostics() {
    let cfg = r#"{
      "experiment": "g2tau",
      "model": { "n_fock": 4, "n_dressed": 4 },
      "drive_transition": [0, 2],
      "numerics": { "qss_cap_factor": 0.5, "t_relax_factor": 0.1, "min_relax_periods": 1 },
      "grids": { "tau": { "values": [0.0, 1.0] } },
      "output": { "prefix": "bad" }
    }"#;
    let (out, dir) = run("g2tau", cfg, &[]);
    assert_status(&out, 2);
    let diag = sidecar(&out_file(&dir, "bad_g2tau_diagnostics.json"));
    assert!(diag["error"].as_str().unwrap().contains("quasi-steady state"));
    assert!(!out_file(&dir, "bad_g2tau.csv").exists());
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let cfg = blockade_cli::config::RunConfig::from_path(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert_eq!(n, 7);
}
