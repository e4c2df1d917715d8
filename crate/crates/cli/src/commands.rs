//! Subcommand implementations. Each returns the JSON summary it prints.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use diffsplines_core::experiment::{figure_data, run_variant, ExperimentConfig, VariantReport};
use diffsplines_core::fisher_rao::{
    check_inequality_condition, default_test_family, fr_grid, synthesize_oscillations, AtomicMeasurePath,
    GridMeasurePair,
};
use diffsplines_core::functional::relaxed_f;
use diffsplines_core::geodesic_pq::{
    initial_p_from_landmarks, integrate_geodesic_with, GeodesicOptions, PQTrajectory,
};
use diffsplines_core::kernel::{kernel_eval, KernelModel};
use diffsplines_core::landmark::{integrate_landmarks, jacobian_along, reconstruct_flow, LandmarkState};
use diffsplines_core::numerics::{PathField, ScalarField, SpatialGrid, TimeGrid};
use diffsplines_core::riccati::{certify_sufficient, necessary_condition_test, OptimalityReport, RiccatiStatus, Verdict};
use serde_json::{json, Map, Value};

use crate::config::{DefectSpec, OwnedDefect};
use crate::io::{num, num_array, read_path_field, read_trajectory, write_json, write_path_field, write_rows, write_trajectory};

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::CertifiedMinimum => "certified_minimum",
        Verdict::NotMinimum => "not_minimum",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// Number of worker threads from `DIFFSPLINES_THREADS`, else the machine's parallelism.
pub fn thread_budget() -> usize {
    std::env::var("DIFFSPLINES_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

pub fn kernel(s: f64, t: f64, model: KernelModel) -> Result<Value> {
    let v: Vec<f64> = (0..3).map(|o| kernel_eval(model, s, t, o)).collect::<Result<_, _>>()?;
    Ok(json!({
        "variant": model.name(),
        "s": num(s),
        "t": num(t),
        "value": num(v[0]),
        "d_ds": num(v[1]),
        "d2_ds2": num(v[2]),
    }))
}

fn time_grid(t_final: f64, dt: f64) -> Result<TimeGrid> {
    if !(t_final > 0.0 && dt > 0.0) {
        bail!("t-final and dt must be positive");
    }
    Ok(TimeGrid::new(t_final, (t_final / dt).round().max(1.0) as usize)?)
}

/// Smallest divisor of `steps` giving at most about `target` snapshots.
fn snapshot_stride(steps: usize, target: usize) -> usize {
    let lo = (steps / target.max(1)).max(1);
    (lo..=steps).find(|&d| steps.is_multiple_of(d)).unwrap_or(steps)
}

pub struct LandmarkArgs<'a> {
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
    pub nx: usize,
    pub model: KernelModel,
    pub out: &'a Path,
}

pub fn geodesic_landmark(a: &LandmarkArgs<'_>) -> Result<Value> {
    let state = LandmarkState::new(a.positions.clone(), a.momenta.clone())?;
    let times = time_grid(a.t_final, a.dt)?;
    let traj = integrate_landmarks(a.model, &state, times)?;
    fs::create_dir_all(a.out)?;
    let n = traj.landmarks();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..n).map(|i| format!("q_{i}")));
    header.extend((0..n).map(|i| format!("p_{i}")));
    header.push("H".into());
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..times.len()).map(|k| {
        let mut r = vec![times.time(k)];
        r.extend_from_slice(traj.q(k));
        r.extend_from_slice(traj.p(k));
        r.push(traj.energy()[k]);
        r
    });
    write_rows(&a.out.join("trajectory.csv"), &header_ref, rows)?;
    let flow = reconstruct_flow(&traj, SpatialGrid::new(a.nx)?, snapshot_stride(times.steps(), 100))?;
    write_path_field(&a.out.join("flow.csv"), &flow.phi, "phi", 1)?;
    let eta = jacobian_along(&traj, 0.5)?;
    write_rows(
        &a.out.join("jacobian.csv"),
        &["t", "phix_at_half"],
        eta.iter().enumerate().map(|(k, &e)| vec![times.time(k), e]),
    )?;
    Ok(json!({
        "variant": a.model.name(),
        "steps": times.steps(),
        "hamiltonian_initial": num(traj.energy()[0]),
        "max_relative_drift": num(traj.max_relative_drift()),
        "phix_at_half_final": num(*eta.last().unwrap_or(&f64::NAN)),
        "out": a.out.display().to_string(),
    }))
}

/// `positions:momenta`, e.g. `0.25,0.75:15,-15`.
pub fn parse_landmark_init(s: &str) -> Result<LandmarkState> {
    let (q, p) = s.split_once(':').ok_or_else(|| anyhow!("expected positions:momenta, got {s:?}"))?;
    Ok(LandmarkState::new(crate::config::parse_list(q)?, crate::config::parse_list(p)?)?)
}

pub struct PqArgs<'a> {
    pub init: LandmarkState,
    pub t_final: f64,
    pub dt: f64,
    pub nx: usize,
    pub model: KernelModel,
    pub reproject: Option<bool>,
    pub out: &'a Path,
}

pub fn geodesic_pq(a: &PqArgs<'_>) -> Result<Value> {
    let grid = SpatialGrid::new(a.nx)?;
    let p0 = initial_p_from_landmarks(a.model, &a.init, grid)?;
    let q0 = ScalarField::zeros(grid);
    let opts = GeodesicOptions { reproject: a.reproject, ..GeodesicOptions::default() };
    let traj = integrate_geodesic_with(&p0, &q0, time_grid(a.t_final, a.dt)?, opts)?;
    write_trajectory(a.out, &traj)?;
    let speed = traj.speed()?;
    let speed_drift = speed.iter().fold(0.0_f64, |m, v| m.max((v - speed[0]).abs())) / speed[0].abs().max(1e-300);
    let max_residual = traj.residuals.iter().fold(0.0_f64, |m, r| m.max(r.max_abs()));
    Ok(json!({
        "steps": traj.times.steps(),
        "nx": a.nx,
        "max_constraint_residual": num(max_residual),
        "relative_speed_drift": num(speed_drift),
        "out": a.out.display().to_string(),
    }))
}

pub fn acceleration(traj_dir: &Path, defect: &DefectSpec, penalty: f64, out: Option<&Path>) -> Result<Value> {
    let traj = read_trajectory(traj_dir)?;
    let owned = defect.realize(traj.times)?;
    let r = relaxed_f(&traj, owned.as_defect(), penalty)?;
    let v = json!({
        "J0": num(r.j0),
        "FR": num(r.fr),
        "cross_term": num(r.cross_term),
        "F": num(r.f),
        "penalty": num(r.penalty),
    });
    if let Some(out) = out {
        write_json(out, &v)?;
    }
    Ok(v)
}

fn read_weight(spec: &str, like: &PathField) -> Result<PathField> {
    if let Some(c) = spec.strip_prefix("const:") {
        let c: f64 = c.trim().parse().with_context(|| format!("bad constant weight {c:?}"))?;
        return Ok(like.map(|_| c));
    }
    read_path_field(Path::new(spec))
}

pub fn fisher_rao(mu: &Path, nu: &Path, weight: &str) -> Result<Value> {
    let rho_mu = read_path_field(mu)?;
    let rho_nu = read_path_field(nu)?;
    let w = read_weight(weight, &rho_mu)?;
    let value = fr_grid(&rho_mu, &rho_nu, &w)?;
    let margins = match GridMeasurePair::new(rho_mu.clone(), rho_nu) {
        Ok(pair) => {
            let tests = default_test_family(rho_mu.times(), rho_mu.grid())?;
            let m = check_inequality_condition(&pair, &tests)?;
            json!({ "min_margin": num(m), "test_functions": tests.len(), "satisfied": m >= -1e-9 })
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    Ok(json!({ "value": num(value), "finite": value.is_finite(), "margins": margins }))
}

pub fn oscillate(mu: &Path, nu: &Path, n: u32, out: &Path) -> Result<Value> {
    let rho_mu = read_path_field(mu)?;
    let rho_nu = read_path_field(nu)?;
    let p = synthesize_oscillations(&rho_mu, &rho_nu, n)?;
    write_path_field(out, &p, "p", 1)?;
    Ok(json!({ "n": n, "out": out.display().to_string() }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiccatiMode {
    Necessary,
    Sufficient,
    Both,
}

fn necessary_json(r: &OptimalityReport) -> Value {
    let terms: Vec<Value> = r
        .candidate_terms
        .iter()
        .map(|(fr, pair)| json!({ "fr": num(*fr), "pairing": num(*pair) }))
        .collect();
    json!({
        "verdict": verdict_name(r.verdict),
        "margins": num_array(&r.necessary_margins),
        "candidate_terms": terms,
        "condition2_gap": num(r.condition2_gap),
    })
}

fn sufficient_json(r: &OptimalityReport) -> Value {
    let mut m = Map::new();
    m.insert("verdict".into(), verdict_name(r.verdict).into());
    m.insert("condition2_gap".into(), num(r.condition2_gap));
    if let Some(o) = &r.sufficient_status {
        let status = match o.status {
            RiccatiStatus::Solved => "solved",
            RiccatiStatus::Blowup => "blowup",
        };
        m.insert("status".into(), status.into());
        m.insert("boundary_residual".into(), num(o.boundary_residual));
        m.insert("max_x_jump".into(), num(o.max_x_jump));
        m.insert("first_blowup".into(), o.first_blowup().map(num).unwrap_or(Value::Null));
    }
    Value::Object(m)
}

pub fn riccati(traj: &PQTrajectory, defect: &DefectSpec, mode: RiccatiMode, candidates: &[DefectSpec]) -> Result<Value> {
    let owned = defect.realize(traj.times)?;
    let mut atoms: Vec<AtomicMeasurePath> = Vec::new();
    for c in candidates {
        match c.realize(traj.times)? {
            OwnedDefect::Atomic(a) => atoms.push(a),
            _ => bail!("candidates must be atomic measures"),
        }
    }
    let mut out = Map::new();
    let mut verdict = Verdict::Inconclusive;
    if mode != RiccatiMode::Sufficient {
        let r = necessary_condition_test(traj, owned.as_defect(), &atoms)?;
        verdict = r.verdict;
        out.insert("necessary".into(), necessary_json(&r));
    }
    if mode != RiccatiMode::Necessary {
        let r = certify_sufficient(traj, owned.as_defect())?;
        verdict = verdict.combine(r.verdict)?;
        out.insert("sufficient".into(), sufficient_json(&r));
    }
    out.insert("verdict".into(), verdict_name(verdict).into());
    Ok(Value::Object(out))
}

fn variant_json(model: KernelModel, row: &diffsplines_core::Result<VariantReport>) -> Value {
    match row {
        Ok(r) => json!({
            "kernel_variant": model.name(),
            "fr": num(r.fr_value),
            "pairing": num(r.pairing_value),
            "inequality_holds": r.inequality_holds,
            "pairing_via_w": num(r.pairing_via_w),
            "necessary_margin": num(r.necessary_margin),
            "sufficient_solved": r.sufficient_solved,
            "eta_probe_final": num(r.eta_end),
            "verdict": verdict_name(r.verdict),
        }),
        Err(e) => json!({ "kernel_variant": model.name(), "error": e.to_string() }),
    }
}

pub fn config_echo(cfg: &ExperimentConfig) -> Value {
    use diffsplines_core::experiment::{KernelChoice, Profile, Reparametrization};
    let reparam = match cfg.reparam {
        Reparametrization::Identity => "identity".to_string(),
        Reparametrization::Cubic => "cubic".to_string(),
        Reparametrization::Exp { a } => format!("exp:A={a}"),
    };
    let kernel = match cfg.kernel {
        KernelChoice::Clamped => "clamped",
        KernelChoice::Unclamped => "paper",
        KernelChoice::Both => "both",
    };
    let profile = match cfg.profile {
        Profile::Sin2Pi => "sin2",
        Profile::SinPi => "sin",
        Profile::Zero => "zero",
    };
    json!({
        "lambda": num(cfg.lambda),
        "positions": num_array(&cfg.positions),
        "reparam": reparam,
        "kernel": kernel,
        "probe": num(cfg.probe),
        "profile": profile,
        "nx": cfg.nx,
        "dt_geodesic": num(cfg.dt_geodesic),
        "dt_functional": num(cfg.dt_functional),
        "figure_horizon": num(cfg.figure_horizon),
    })
}

/// Runs every kernel row, at most `threads` at a time.
pub fn run_rows(cfg: &ExperimentConfig, threads: usize) -> Vec<(KernelModel, diffsplines_core::Result<VariantReport>)> {
    let models = cfg.kernel.models();
    let mut rows = Vec::with_capacity(models.len());
    for chunk in models.chunks(threads.max(1)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|&m| (m, s.spawn(move || run_variant(cfg, m)))).collect();
            for (m, h) in handles {
                let r = h.join().unwrap_or(Err(diffsplines_core::Error::Precondition("worker panicked")));
                rows.push((m, r));
            }
        });
    }
    rows
}

pub fn experiment_section7(cfg: &ExperimentConfig, out: &Path, figures: bool) -> Result<Value> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let rows = run_rows(cfg, thread_budget());
    let primary = rows.iter().find(|(_, r)| r.is_ok());
    let mut report = Map::new();
    match primary {
        Some((m, Ok(r))) => {
            report.insert("fr".into(), num(r.fr_value));
            report.insert("pairing".into(), num(r.pairing_value));
            report.insert("inequality_holds".into(), r.inequality_holds.into());
            report.insert("verdict".into(), verdict_name(r.verdict).into());
            report.insert("kernel_variant".into(), m.name().into());
        }
        _ => {
            report.insert("verdict".into(), Value::Null);
            report.insert("error".into(), "no kernel variant completed".into());
        }
    }
    report.insert("config_echo".into(), config_echo(cfg));
    report.insert("rows".into(), rows.iter().map(|(m, r)| variant_json(*m, r)).collect());
    if figures {
        let fig = figure_data(cfg)?;
        let grid = &fig.snapshot_grid;
        write_rows(
            &out.join("fig1_diffeomorphism.csv"),
            &["t", "x", "value"],
            fig.flow_snapshots
                .iter()
                .flat_map(|(t, row)| grid.iter().zip(row).map(move |(x, v)| vec![*t, *x, *v])),
        )?;
        write_rows(&out.join("fig2_jacobian_decay.csv"), &["t", "value"], fig.jacobian_decay.iter().map(|&(t, v)| vec![t, v]))?;
        write_rows(
            &out.join("fig3_reparametrization.csv"),
            &["t", "value", "alpha_dot", "alpha_ddot"],
            fig.reparametrization.iter().map(|&(t, a, d, dd)| vec![t, a, d, dd]),
        )?;
        write_rows(
            &out.join("fig4_riccati_rhs.csv"),
            &["t", "x", "value"],
            fig.riccati_rhs.iter().map(|&(t, x, w)| vec![t, x, w]),
        )?;
    }
    let report = Value::Object(report);
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
