use std::path::Path;
use std::process::{Command, Output};

use diffsplines::io::{read_path_field, write_path_field};
use diffsplines_core::numerics::{PathField, SpatialGrid, TimeGrid};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diffsplines"))
}

fn run_ok(cmd: &mut Command) -> Value {
    let out: Output = cmd.output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn f(v: &Value) -> f64 {
    v.to_string().parse().unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn kernel_prints_value_and_derivatives() {
    let v = run_ok(bin().args(["kernel", "--s", "0.5", "--t", "0.5"]));
    assert!((f(&v["value"]) - 1.0 / 192.0).abs() < 1e-15);
    assert!(v["d_ds"].is_number() && v["d2_ds2"].is_number());
    let text = v["value"].to_string();
    let mantissa = text.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{text}");
    let out = bin().args(["kernel", "--s", "2", "--t", "0.5"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn landmark_geodesic_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let v = run_ok(bin().args(["geodesic-landmark", "--t-final", "1", "--dt", "1e-2", "--nx", "33", "--out"]).arg(dir.path()));
    assert!(f(&v["max_relative_drift"]) < 1e-8);
    assert_eq!(header(&dir.path().join("trajectory.csv")), "t,q_0,q_1,p_0,p_1,H");
    assert_eq!(header(&dir.path().join("flow.csv")), "t,x,phi");
    assert_eq!(header(&dir.path().join("jacobian.csv")), "t,phix_at_half");
    let flow = read_path_field(&dir.path().join("flow.csv")).unwrap();
    assert_eq!(flow.grid().len(), 33);
    let jac = std::fs::read_to_string(dir.path().join("jacobian.csv")).unwrap();
    assert_eq!(jac.lines().count(), 102);
}

#[test]
fn pq_geodesic_feeds_acceleration_and_riccati() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj");
    let v = run_ok(
        bin()
            .args(["geodesic-pq", "--init-from-landmarks", "0.25,0.75:15,-15", "--t-final", "1", "--dt", "5e-3"])
            .args(["--nx", "65", "--reproject", "true", "--out"])
            .arg(&traj),
    );
    assert!(f(&v["max_constraint_residual"]) < 1e-5);
    assert_eq!(header(&traj.join("constraints.csv")), "t,r1,r2,p_moment_1,p_moment_phi");

    let report = dir.path().join("report.json");
    let v = run_ok(bin().args(["acceleration", "--traj"]).arg(&traj).arg("--out").arg(&report));
    assert!(f(&v["J0"]) < 1e-3, "{v}");
    assert_eq!(f(&v["FR"]), 0.0);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(saved, v);

    let v = run_ok(bin().args(["acceleration", "--traj"]).arg(&traj).args(["--defect", "atomic:x0=0.5,profile=sin"]));
    assert!(f(&v["FR"]) > 4.0 && f(&v["FR"]) <= std::f64::consts::PI.powi(2) / 2.0 + 1e-9);

    let v = run_ok(bin().args(["riccati", "--from-traj"]).arg(&traj));
    assert_eq!(v["verdict"], "certified_minimum");
    assert_eq!(v["sufficient"]["status"], "solved");
    assert!(v["necessary"]["margins"][0].is_number());
    let v = run_ok(bin().args(["riccati", "--mode", "necessary", "--from-traj"]).arg(&traj));
    assert!(v.get("sufficient").is_none());
}

fn write_field(path: &Path, f: impl Fn(f64, f64) -> f64) {
    let field = PathField::from_fn(TimeGrid::new(1.0, 20).unwrap(), SpatialGrid::new(129).unwrap(), f).unwrap();
    write_path_field(path, &field, "value", 1).unwrap();
}

#[test]
fn fisher_rao_and_oscillate_on_csv_measures() {
    let dir = tempfile::tempdir().unwrap();
    let (mu, dmu, nu) = (dir.path().join("mu.csv"), dir.path().join("dmu.csv"), dir.path().join("nu.csv"));
    write_field(&mu, |t, _| t * t);
    write_field(&dmu, |t, _| 2.0 * t);
    write_field(&nu, |_, _| 1.0);
    let v = run_ok(bin().arg("fisher-rao").arg("--mu").arg(&mu).arg("--nu").arg(&dmu));
    assert!(v["finite"].as_bool().unwrap());
    assert!((f(&v["value"]) - 1.0).abs() < 0.05);
    let v = run_ok(bin().arg("fisher-rao").arg("--mu").arg(&mu).arg("--nu").arg(&nu).args(["--weight", "const:2"]));
    assert_eq!(v["margins"]["satisfied"], true);

    let pn = dir.path().join("pn.csv");
    run_ok(bin().arg("oscillate").arg("--mu").arg(&mu).arg("--nu").arg(&nu).args(["--n", "4", "--out"]).arg(&pn));
    let p = read_path_field(&pn).unwrap();
    let last = p.row(p.times().steps());
    assert!((last.iter().fold(0.0_f64, |m, v| m.max(v.abs())) - std::f64::consts::SQRT_2).abs() < 1e-2);

    let half = dir.path().join("half.csv");
    write_field(&half, |_, _| 0.5);
    let out = bin().arg("oscillate").arg("--mu").arg(&mu).arg("--nu").arg(&half).arg("--out").arg(&pn).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn experiment_writes_report_and_figures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# coarse run\nnx = 129\ndt = 2e-3\nfigure_horizon = 4\n").unwrap();
    let out = dir.path().join("out");
    let v = run_ok(
        bin()
            .env("DIFFSPLINES_THREADS", "1")
            .args(["experiment", "section7", "--config"])
            .arg(&cfg)
            .args(["--kernel", "both", "--out"])
            .arg(&out),
    );
    assert_eq!(v["config_echo"]["nx"], 129);
    assert_eq!(v["kernel_variant"], "clamped");
    for key in ["fr", "pairing", "verdict", "config_echo"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1]["error"].is_string());
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, v);
    assert_eq!(header(&out.join("fig1_diffeomorphism.csv")), "t,x,value");
    assert_eq!(header(&out.join("fig2_jacobian_decay.csv")), "t,value");
    assert_eq!(header(&out.join("fig3_reparametrization.csv")), "t,value,alpha_dot,alpha_ddot");
    assert_eq!(header(&out.join("fig4_riccati_rhs.csv")), "t,x,value");

    // same configuration again: identical bytes
    let again = dir.path().join("again");
    run_ok(bin().args(["experiment", "section7", "--config"]).arg(&cfg).arg("--out").arg(&again));
    for file in ["report.json", "fig2_jacobian_decay.csv", "fig4_riccati_rhs.csv"] {
        assert_eq!(std::fs::read(out.join(file)).unwrap(), std::fs::read(again.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn experiment_rejects_bad_options() {
    let dir = tempfile::tempdir().unwrap();
    for args in [["--reparam", "quartic"], ["--kernel", "gaussian"]] {
        let out = bin().args(["experiment", "section7"]).args(args).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(1));
    }
}
