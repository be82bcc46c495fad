use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const JUMP: &str = "kappa_plus = 2.0\nkappa_minus = 1.0\nrho_plus = 0.0\nrho_minus = 1.0\nh2 = 3.0";
const HOMOGENEOUS: &str = "kappa_plus = 1.0\nkappa_minus = 1.0\nrho_plus = 0.0\nrho_minus = 1.0\nh2 = 1.0";

struct Case {
    dir: TempDir,
}

impl Case {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn config(&self, name: &str, params: &str, n: usize, solver: &str, profile: &str, extra: &str) -> PathBuf {
        let text = format!(
            "[params]\n{params}\n\n[grid]\nn = {n}\n\n[solver]\n{solver}\n\n[initial_profile]\n{profile}\n\n[output]\ndir = \"{name}_out\"\n{extra}\n"
        );
        self.write(&format!("{name}.toml"), &text)
    }
}

fn muskat(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(args)
        .arg(config)
        .env("MUSKAT_THREADS", "2")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn fourier(mean: f64, modes: &str) -> String {
    format!("kind = \"fourier\"\nmean = {mean:?}\nmodes = {modes}")
}

#[test]
fn flat_run_has_constant_columns() {
    let c = Case::new();
    let cfg = c.config("flat", JUMP, 32, "t_end = 0.5\ndt = 0.05", &fourier(1.0, "[]"), "");
    let out = muskat(&["run"], &cfg);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&c.path("flat_out/diagnostics.csv"));
    assert_eq!(header, ["t", "mean", "fmax", "fmin", "osc", "lip", "dmax", "dmin", "l2", "dl2"]);
    assert_eq!(rows.len(), 11);
    for col in 1..10 {
        assert!(rows.iter().all(|r| r[col] == rows[0][col]), "column {}", header[col]);
    }
    let snaps: Vec<_> = fs::read_dir(c.path("flat_out/snapshots")).unwrap().collect();
    assert_eq!(snaps.len(), 11);
    let (snap_header, snap) = read_csv(&c.path("flat_out/snapshots/step_000010.csv"));
    assert_eq!(snap_header, ["x", "f"]);
    assert_eq!(snap.len(), 32);
    assert!(c.path("flat_out/manifest.toml").exists());
}

#[test]
fn csv_values_carry_17_digits() {
    let c = Case::new();
    let cfg = c.config("digits", JUMP, 32, "t_end = 0.1\ndt = 0.05", &fourier(1.0, "[[1, 0.0, 0.1]]"), "snapshots = false");
    assert_eq!(code(&muskat(&["run"], &cfg)), 0);
    let text = fs::read_to_string(c.path("digits_out/diagnostics.csv")).unwrap();
    let field = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{field}");
    assert!(!c.path("digits_out/snapshots").exists());
}

#[test]
fn nonpositive_profile_is_config_error() {
    let c = Case::new();
    let cfg = c.config("neg", JUMP, 32, "t_end = 1.0", &fourier(0.05, "[[1, 0.1, 0.0]]"), "");
    let out = muskat(&["run"], &cfg);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("min f > 0"));
}

#[test]
fn malformed_configs_are_rejected() {
    let c = Case::new();
    assert_eq!(code(&muskat(&["run"], &c.path("missing.toml"))), 1);
    let cfg = c.config("typo", JUMP, 32, "t_end = 1.0\ncfl = 0.5", &fourier(1.0, "[]"), "");
    assert_eq!(code(&muskat(&["run"], &cfg)), 1);
    let cfg = c.config("odd", JUMP, 33, "t_end = 1.0", &fourier(1.0, "[]"), "");
    assert_eq!(code(&muskat(&["check"], &cfg)), 1);
    let cfg = c.config("mode", JUMP, 32, "t_end = 1.0", &fourier(1.0, "[[1.5, 0.1, 0.0]]"), "");
    assert_eq!(code(&muskat(&["run"], &cfg)), 1);
}

#[test]
fn bad_thread_override_is_config_error() {
    let c = Case::new();
    let cfg = c.config("threads", JUMP, 32, "t_end = 0.1", &fourier(1.0, "[]"), "threads = 2");
    let out = Command::new(env!("CARGO_BIN_EXE_muskat"))
        .arg("run")
        .arg(&cfg)
        .env("MUSKAT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("MUSKAT_THREADS"));
}

#[test]
fn touching_and_blowup_exit_codes() {
    let c = Case::new();
    let unstable = "kappa_plus = 2.0\nkappa_minus = 1.0\nrho_plus = 2.0\nrho_minus = 1.0\nh2 = 1.0";
    let cfg = c.config("touch", unstable, 32, "t_end = 1.0", &fourier(0.05, "[[1, 0.0, 0.04]]"), "");
    let out = muskat(&["run"], &cfg);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("touching_risk"));
    let manifest = fs::read_to_string(c.path("touch_out/manifest.toml")).unwrap();
    assert!(manifest.contains("termination = \"touching_risk\""));

    let cfg = c.config("blow", JUMP, 32, "t_end = 1.0", &fourier(800.0, "[[1, 0.0, 0.1]]"), "");
    assert_eq!(code(&muskat(&["run"], &cfg)), 3);
}

#[test]
fn manifest_round_trip_is_bit_identical() {
    let c = Case::new();
    let cfg = c.config("orig", JUMP, 64, "t_end = 0.5", &fourier(1.0, "[[1, 0.0, 0.1], [3, 0.02, 0.0]]"), "");
    assert_eq!(code(&muskat(&["run"], &cfg)), 0);
    let text = fs::read_to_string(c.path("orig_out/manifest.toml")).unwrap();
    let mut table: toml::Table = text.parse().unwrap();
    let run = table["run"].as_table().unwrap();
    assert_eq!(run["termination"].as_str(), Some("completed"));
    for p in run["outputs"].as_array().unwrap() {
        assert!(Path::new(p.as_str().unwrap()).exists());
    }
    let out_dir = table["output"]["dir"].as_str().unwrap();
    assert!(Path::new(out_dir).is_absolute());
    table["output"].as_table_mut().unwrap().insert("dir".into(), "again_out".into());
    let again = c.write("again.toml", &toml::to_string(&table).unwrap());
    assert_eq!(code(&muskat(&["run"], &again)), 0);
    let a = fs::read(c.path("orig_out/diagnostics.csv")).unwrap();
    let b = fs::read(c.path("again_out/diagnostics.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn samples_profile_matches_fourier_profile() {
    let c = Case::new();
    let fourier_cfg = c.config("four", JUMP, 64, "t_end = 0.2", &fourier(1.0, "[[2, 0.0, 0.1]]"), "");
    assert_eq!(code(&muskat(&["run"], &fourier_cfg)), 0);
    let mut lines = String::from("x,f\n");
    for j in 0..32 {
        let x = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / 32.0;
        lines.push_str(&format!("{x:e},{:e}\n", 1.0 + 0.1 * (2.0 * x).sin()));
    }
    c.write("profile.csv", &lines);
    let samples_cfg = c.config("samp", JUMP, 64, "t_end = 0.2", "kind = \"samples\"\nfile = \"profile.csv\"", "");
    assert_eq!(code(&muskat(&["run"], &samples_cfg)), 0);
    let (_, a) = read_csv(&c.path("four_out/diagnostics.csv"));
    let (_, b) = read_csv(&c.path("samp_out/diagnostics.csv"));
    let last = (a.last().unwrap(), b.last().unwrap());
    assert!((last.0[4] - last.1[4]).abs() < 1e-12);
}

#[test]
fn check_exit_codes() {
    let c = Case::new();
    let small = c.config("small", HOMOGENEOUS, 64, "t_end = 1.0", &fourier(1.0, "[[1, 0.0, 0.05]]"), "");
    let out = muskat(&["check"], &small);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "both");
    assert!(report["oscillation_condition"]["mu"].as_f64().unwrap() > 0.0);

    let flat = c.config("flatc", HOMOGENEOUS, 64, "t_end = 1.0", &fourier(1.0, "[]"), "");
    let out = muskat(&["check"], &flat);
    assert_eq!(code(&out), 4);
    assert_eq!(stdout_json(&out)["lipschitz_condition"]["margin"], 0.0);

    let shallow = "kappa_plus = 100.0\nkappa_minus = 1.0\nrho_plus = 0.0\nrho_minus = 1.0\nh2 = 0.01";
    let cfg = c.config("shallow", shallow, 64, "t_end = 1.0", &fourier(0.05, "[[1, 0.0, 0.01]]"), "");
    assert_eq!(code(&muskat(&["check"], &cfg)), 5);
}

#[test]
fn run_and_check_pipeline_certifies_decay() {
    let c = Case::new();
    let cfg = c.config("pipe", JUMP, 64, "t_end = 3.0", &fourier(1.0, "[[1, 0.0, 0.1]]"), "snapshots = false");
    let check = muskat(&["check"], &cfg);
    assert_eq!(code(&check), 0);
    let mu = stdout_json(&check)["oscillation_condition"]["mu"].as_f64().unwrap();
    assert_eq!(code(&muskat(&["run"], &cfg)), 0);
    let (_, rows) = read_csv(&c.path("pipe_out/diagnostics.csv"));
    let osc0 = rows[0][4];
    for r in &rows {
        assert!(r[4] <= osc0 * (-mu * r[0]).exp() * (1.0 + 1e-3));
        assert!(r[3] > 0.0);
    }
}

fn convergence(c: &Case, name: &str, params: &str, solver: &str, profile: &str, conv: &str) -> Value {
    let cfg = c.config(name, params, 32, solver, profile, &format!("\n[convergence]\n{conv}"));
    let out = muskat(&["convergence"], &cfg);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(c.path(&format!("{name}_out/convergence.csv")).exists());
    stdout_json(&out)
}

#[test]
fn convergence_pure_heat_is_fourth_order() {
    let c = Case::new();
    let heat = "kappa_plus = 1.0\nkappa_minus = 1.0\nrho_plus = 1.0\nrho_minus = 1.0\nh2 = 1.0";
    let summary = convergence(
        &c,
        "heat",
        heat,
        "t_end = 1.0\nepsilon = 0.1\nstepper = \"rk4\"",
        &fourier(1.0, "[[3, 0.1, 0.0], [5, 0.0, 0.05]]"),
        "grids = [32, 64]\ntime_steps = 8\nhalvings = 3",
    );
    let orders = summary["temporal_orders"].as_array().unwrap();
    let last = orders.last().unwrap().as_f64().unwrap();
    assert!((last - 4.0).abs() < 0.3, "orders {orders:?}");
}

#[test]
fn convergence_smooth_sine_is_spectral() {
    let c = Case::new();
    let summary = convergence(
        &c,
        "sine",
        JUMP,
        "t_end = 0.2",
        &fourier(1.0, "[[1, 0.0, 0.1], [2, 0.05, 0.0]]"),
        "grids = [16, 32, 64, 128]\ntime_steps = 4\nhalvings = 1",
    );
    let errs: Vec<f64> = summary["spatial_errors"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-10), "{errs:?}");
    assert!(*errs.last().unwrap() < 1e-10, "{errs:?}");
    // successive ratios grow: faster than any fixed power
    assert!(errs[0] / errs[1] > 8.0);
}

#[test]
fn convergence_flat_is_exact() {
    let c = Case::new();
    let summary = convergence(&c, "flatconv", JUMP, "t_end = 0.5", &fourier(1.0, "[]"), "grids = [16, 32]\nhalvings = 2");
    for key in ["temporal_errors", "spatial_errors"] {
        assert!(summary[key].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() <= 1e-13));
    }
}

fn decay(c: &Case, name: &str, params: &str, n: usize, solver: &str, profile: &str) -> Value {
    let cfg = c.config(name, params, n, solver, profile, "snapshots = false");
    let out = muskat(&["decay-study"], &cfg);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let file: Value =
        serde_json::from_str(&fs::read_to_string(c.path(&format!("{name}_out/decay_summary.json"))).unwrap()).unwrap();
    assert_eq!(file, stdout_json(&out));
    file
}

#[test]
fn decay_study_beats_guaranteed_rate() {
    let c = Case::new();
    let s = decay(&c, "cert", JUMP, 64, "t_end = 3.0", &fourier(1.0, "[[1, 0.0, 0.1]]"));
    let mu = s["guaranteed_mu"].as_f64().unwrap();
    let hat = s["oscillation_fit"]["mu_hat"].as_f64().unwrap();
    assert!(hat >= mu, "{hat} < {mu}");
    assert_eq!(s["mu_hat_at_least_guaranteed"], true);
    assert_eq!(s["certificate"]["passed"], true);
    assert!(s["lipschitz_fit"]["mu_hat"].as_f64().unwrap() > 0.0);
}

#[test]
fn decay_study_linear_rate() {
    let c = Case::new();
    let s = decay(&c, "lin", HOMOGENEOUS, 64, "t_end = 4.0", &fourier(1.0, "[[1, 0.0, 0.001]]"));
    let hat = s["oscillation_fit"]["mu_hat"].as_f64().unwrap();
    assert!((hat - 0.5).abs() < 0.05, "{hat}");
}

#[test]
fn decay_study_flat_is_degenerate() {
    let c = Case::new();
    let s = decay(&c, "flatdecay", JUMP, 32, "t_end = 0.5\ndt = 0.1", &fourier(1.0, "[]"));
    assert_eq!(s["oscillation_fit"]["status"], "degenerate");
    assert_eq!(s["lipschitz_fit"]["status"], "degenerate");
}
