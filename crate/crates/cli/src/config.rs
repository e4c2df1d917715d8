//! Parsing of option values and `key=value` configuration files.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use diffsplines_core::experiment::{ExperimentConfig, KernelChoice, Profile, Reparametrization};
use diffsplines_core::fisher_rao::AtomicMeasurePath;
use diffsplines_core::functional::Defect;
use diffsplines_core::kernel::KernelModel;
use diffsplines_core::numerics::{PathField, TimeGrid};

use crate::io::read_path_field;

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| anyhow!("bad number {v:?}: {e}")))
        .collect()
}

pub fn parse_kernel_model(s: &str) -> Result<KernelModel> {
    match s.trim() {
        "clamped" => Ok(KernelModel::Clamped),
        "paper" => Ok(KernelModel::Unclamped),
        other => bail!("unknown kernel variant {other:?} (expected clamped or paper)"),
    }
}

pub fn parse_kernel_choice(s: &str) -> Result<KernelChoice> {
    match s.trim() {
        "clamped" => Ok(KernelChoice::Clamped),
        "paper" => Ok(KernelChoice::Unclamped),
        "both" => Ok(KernelChoice::Both),
        other => bail!("unknown kernel choice {other:?} (expected clamped, paper or both)"),
    }
}

/// `identity`, `cubic` or `exp:A=<value>`.
pub fn parse_reparam(s: &str) -> Result<Reparametrization> {
    let s = s.trim();
    match s {
        "identity" => return Ok(Reparametrization::Identity),
        "cubic" => return Ok(Reparametrization::Cubic),
        _ => {}
    }
    let rest = s.strip_prefix("exp:").ok_or_else(|| anyhow!("unknown reparametrization {s:?}"))?;
    let a = rest
        .trim()
        .strip_prefix("A=")
        .or_else(|| rest.trim().strip_prefix("a="))
        .ok_or_else(|| anyhow!("expected exp:A=<value>, got {s:?}"))?;
    Ok(Reparametrization::Exp { a: a.parse().with_context(|| format!("bad exponent in {s:?}"))? })
}

pub fn parse_profile(s: &str) -> Result<Profile> {
    match s.trim() {
        "sin2" | "sin2pi" => Ok(Profile::Sin2Pi),
        "sin" | "sin1" | "sinpi" => Ok(Profile::SinPi),
        "zero" => Ok(Profile::Zero),
        other => bail!("unknown profile {other:?} (expected sin2, sin or zero)"),
    }
}

/// Applies one `key=value` setting.
pub fn apply_setting(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    let float = |v: &str| v.trim().parse::<f64>().with_context(|| format!("bad value for {key}: {v:?}"));
    match key.trim() {
        "lambda" => cfg.lambda = float(value)?,
        "positions" => {
            let p = parse_list(value)?;
            cfg.positions = p.try_into().map_err(|_| anyhow!("positions needs exactly two values"))?;
        }
        "reparam" => cfg.reparam = parse_reparam(value)?,
        "kernel" => cfg.kernel = parse_kernel_choice(value)?,
        "probe" | "x0" => cfg.probe = float(value)?,
        "profile" => cfg.profile = parse_profile(value)?,
        "nx" => cfg.nx = value.trim().parse().with_context(|| format!("bad nx {value:?}"))?,
        "dt" => {
            let dt = float(value)?;
            cfg.dt_geodesic = dt;
            cfg.dt_functional = dt;
        }
        "dt_geodesic" => cfg.dt_geodesic = float(value)?,
        "dt_functional" => cfg.dt_functional = float(value)?,
        "figure_horizon" => cfg.figure_horizon = float(value)?,
        other => bail!("unknown configuration key {other:?}"),
    }
    Ok(())
}

/// Reads a `key=value` file; blank lines and `#` comments are skipped.
pub fn load_config_file(path: &Path, cfg: &mut ExperimentConfig) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), n + 1))?;
        apply_setting(cfg, k, v).with_context(|| format!("{}:{}", path.display(), n + 1))?;
    }
    Ok(())
}

/// A defect read from the command line, owning its data.
#[derive(Debug, Clone)]
pub enum DefectSpec {
    Zero,
    Atomic { x0: f64, profile: Profile },
    Density(PathField),
}

pub enum OwnedDefect {
    Zero,
    Atomic(AtomicMeasurePath),
    Density(PathField),
}

impl OwnedDefect {
    pub fn as_defect(&self) -> Defect<'_> {
        match self {
            OwnedDefect::Zero => Defect::Zero,
            OwnedDefect::Atomic(a) => Defect::Atomic(a),
            OwnedDefect::Density(d) => Defect::Density(d),
        }
    }
}

impl DefectSpec {
    /// `none`, `atomic:x0=<v>,profile=<name>` or `density:<csv>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" || s == "zero" {
            return Ok(DefectSpec::Zero);
        }
        if let Some(path) = s.strip_prefix("density:") {
            return Ok(DefectSpec::Density(read_path_field(Path::new(path))?));
        }
        let rest = s.strip_prefix("atomic:").ok_or_else(|| anyhow!("unknown defect {s:?}"))?;
        let (mut x0, mut profile) = (0.5, Profile::Sin2Pi);
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| anyhow!("expected key=value in {part:?}"))?;
            match k.trim() {
                "x0" => x0 = v.trim().parse().with_context(|| format!("bad x0 {v:?}"))?,
                "profile" => profile = parse_profile(v)?,
                other => bail!("unknown defect key {other:?}"),
            }
        }
        Ok(DefectSpec::Atomic { x0, profile })
    }

    pub fn realize(&self, times: TimeGrid) -> Result<OwnedDefect> {
        Ok(match self {
            DefectSpec::Zero => OwnedDefect::Zero,
            DefectSpec::Atomic { x0, profile } => {
                OwnedDefect::Atomic(AtomicMeasurePath::from_fn(*x0, times, |t| profile.eval(t))?)
            }
            DefectSpec::Density(d) => OwnedDefect::Density(d.clone()),
        })
    }
}
