use std::path::Path;
use std::process::Command;

use acc_cli::config::{ConverterConfig, SweepOptions};
use acc_cli::output::config_from_report;
use acc_cli::sweep::run_sweep;
use acc_cli::{commands, RunConfig};
use acc_core::presets;

const BIN: &str = env!("CARGO_BIN_EXE_accsd");

fn config(k: f64) -> RunConfig {
    let mut cfg = RunConfig::new(ConverterConfig::from_params(&presets::buck_14v_50khz(k)));
    cfg.sweep.points = 12;
    cfg.simulate.cycles = 40;
    cfg.tf.points = 20;
    cfg
}

fn write_config(dir: &Path, cfg: &RunConfig) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

#[test]
fn every_subcommand_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &config(0.3));
    let expected = [
        ("simulate", "trajectory.csv"),
        ("orbit", "orbit.csv"),
        ("stability", "report.json"),
        ("sweep-pole", "sweep.csv"),
        ("hb", "report.json"),
        ("tf", "tf.csv"),
    ];
    for (cmd, file) in expected {
        let out = dir.path().join(cmd);
        let o = run(&[
            cmd,
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(out.join(file).exists(), "{cmd} missing {file}");
        let report = std::fs::read_to_string(out.join("report.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(v["command"], cmd);
        assert_eq!(v["tool"], "accsd");
    }
}

#[test]
fn failure_prints_category_and_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(0.3);
    cfg.converter.omega_p_over_omega_s = Some(0.3);
    let path = write_config(dir.path(), &cfg);
    let o = run(&[
        "orbit",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "config");

    let o = run(&["hb", "--config", "/nonexistent.json"]);
    assert!(!o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "io");
}

#[test]
fn saturated_operating_point_reports_core_category() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(0.3);
    cfg.converter.v_r_v = 50.0;
    let path = write_config(dir.path(), &cfg);
    let o = run(&[
        "stability",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(v["error"].is_string());
    assert_ne!(v["error"], "config");
}

#[test]
fn identical_config_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(0.3);
    for cmd in ["sweep-pole", "orbit", "simulate"] {
        let (a, b) = (
            dir.path().join(format!("{cmd}-a")),
            dir.path().join(format!("{cmd}-b")),
        );
        let run_one = |out: &Path| match cmd {
            "sweep-pole" => drop(commands::sweep_pole(&cfg, out).unwrap()),
            "orbit" => drop(commands::orbit(&cfg, out).unwrap()),
            _ => drop(commands::simulate(&cfg, out).unwrap()),
        };
        run_one(&a);
        run_one(&b);
        for entry in std::fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            let x = std::fs::read(a.join(&name)).unwrap();
            let y = std::fs::read(b.join(&name)).unwrap();
            assert_eq!(x, y, "{cmd}/{name:?} differs");
        }
    }
}

#[test]
fn serial_and_parallel_sweeps_agree() {
    let p = presets::buck_14v_50khz(0.3);
    let mut opts = SweepOptions {
        points: 16,
        ..SweepOptions::default()
    };
    let par = run_sweep(&p, &opts, 1e-6).unwrap();
    opts.parallel = false;
    let ser = run_sweep(&p, &opts, 1e-6).unwrap();
    assert_eq!(par, ser);
    assert_eq!(par.boundaries.len(), 2);
    for b in &par.boundaries {
        assert!(b.refined && b.width <= 0.002);
        assert!(b.k_lo <= b.k && b.k <= b.k_hi);
        assert_ne!(b.from, b.to);
    }
    assert!(par.points.windows(2).all(|w| w[0].k < w[1].k));
}

#[test]
fn report_config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(0.21);
    cfg.converter.omega_p_rad_s = None;
    cfg.converter.omega_p_over_omega_s = Some(0.21);
    commands::hb(&cfg, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(commands::REPORT_FILE)).unwrap();
    assert_eq!(config_from_report(&text).unwrap(), cfg);
}

fn y_ripple_from_csv(path: &Path) -> f64 {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let headers = rd.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["t_s", "i_L_A", "v_C_V", "v_e1", "v_e2", "y_V", "h_V"]
    );
    let ys: Vec<f64> = rd
        .records()
        .map(|r| r.unwrap()[5].parse().unwrap())
        .collect();
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

#[test]
fn larger_ripple_at_the_stable_pole() {
    let dir = tempfile::tempdir().unwrap();
    let mut ripple = Vec::new();
    for (k, want) in [(0.21, "period_doubling"), (0.81, "stable")] {
        let out = dir.path().join(format!("k{k}"));
        let cfg = config(k);
        commands::orbit(&cfg, &out).unwrap();
        ripple.push(y_ripple_from_csv(&out.join("orbit.csv")));
        let st = commands::stability(&cfg, &out).unwrap();
        assert_eq!(st.verdict.class.as_str(), want);
    }
    assert!(ripple[1] > ripple[0]);
}

#[test]
fn sweep_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(0.3);
    cfg.sweep.points = 3;
    commands::sweep_pole(&cfg, dir.path()).unwrap();
    let mut rd = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let h = rd.headers().unwrap().clone();
    assert_eq!(&h[0], "omega_p_rad_s");
    assert_eq!(&h[2], "eig0_re");
    assert_eq!(&h[h.len() - 1], "avg_max_re");
    assert_eq!(rd.records().count(), 3);
}

#[test]
fn perturbed_simulation_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(0.49);
    cfg.simulate.perturbation = Some(acc_cli::config::Perturbation {
        fraction: 0.01,
        seed: 9,
    });
    let a = commands::simulate(&cfg, &dir.path().join("a")).unwrap();
    let b = commands::simulate(&cfg, &dir.path().join("b")).unwrap();
    assert_eq!(a.initial_state, b.initial_state);
    cfg.simulate.perturbation = Some(acc_cli::config::Perturbation {
        fraction: 0.01,
        seed: 10,
    });
    let c = commands::simulate(&cfg, &dir.path().join("c")).unwrap();
    assert_ne!(a.initial_state, c.initial_state);
}

#[test]
fn tf_dc_gain_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(0.81);
    let r = commands::tf(&cfg, dir.path()).unwrap();
    // load is 1 Ω and R_s = 0.1 Ω: v_o tracks v_r / R_s
    assert!((r.dc_control_to_output.unwrap() - 10.0).abs() < 0.1);
    let rows = csv::Reader::from_path(dir.path().join("tf.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(rows, 2 * cfg.tf.points);
}
