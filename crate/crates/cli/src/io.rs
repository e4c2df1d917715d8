//! CSV and JSON file formats.
//!
//! Path fields are stored in long form with a `t,x,<name>` header, one row per
//! sample. Every float is written with 17 significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use diffsplines_core::geodesic_pq::PQTrajectory;
use diffsplines_core::numerics::{PathField, SpatialGrid, TimeGrid};
use serde_json::Value;

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A JSON number carrying 17 significant digits, or `null` when not finite.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::from_str(&fmt_f64(x)).unwrap_or(Value::Null)
    } else {
        Value::Null
    }
}

pub fn num_array(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            bail!("row of width {} under a header of width {}", row.len(), header.len());
        }
        w.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every `stride`-th time row of `field` as `t,x,<name>`.
pub fn write_path_field(path: &Path, field: &PathField, name: &str, stride: usize) -> Result<()> {
    let times = field.times();
    let grid = field.grid();
    let stride = stride.max(1);
    let mut ks: Vec<usize> = (0..times.len()).step_by(stride).collect();
    if ks.last() != Some(&times.steps()) {
        ks.push(times.steps());
    }
    let rows = ks
        .into_iter()
        .flat_map(|k| (0..grid.len()).map(move |i| vec![times.time(k), grid.node(i), field.get(k, i)]));
    write_rows(path, &["t", "x", name], rows)
}

fn uniform_steps(values: &[f64], what: &str) -> Result<(f64, usize)> {
    let n = values.len();
    if n < 2 {
        bail!("{what}: need at least two distinct values");
    }
    let (first, last) = (values[0], values[n - 1]);
    let step = (last - first) / (n - 1) as f64;
    for (k, v) in values.iter().enumerate() {
        if (v - (first + k as f64 * step)).abs() > 1e-9 * (1.0 + last.abs()) {
            bail!("{what}: values are not uniformly spaced");
        }
    }
    if first.abs() > 1e-12 {
        bail!("{what}: must start at 0");
    }
    Ok((last, n - 1))
}

/// Reads a `t,x,value` file written by [`write_path_field`] (at unit stride).
pub fn read_path_field(path: &Path) -> Result<PathField> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut cells: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 3 {
            bail!("{}: expected three columns", path.display());
        }
        let parse = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|e| anyhow!("{}: bad float {:?}: {e}", path.display(), &rec[i]))
        };
        let (t, x, v) = (parse(0)?, parse(1)?, parse(2)?);
        ts.push(t);
        xs.push(x);
        cells.insert((t.to_bits(), x.to_bits()), v);
    }
    let sort_unique = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let ts = sort_unique(ts);
    let xs = sort_unique(xs);
    let (t_final, steps) = uniform_steps(&ts, "time column")?;
    let (x_last, _) = uniform_steps(&xs, "space column")?;
    if (x_last - 1.0).abs() > 1e-12 {
        bail!("{}: spatial nodes must span [0, 1]", path.display());
    }
    let times = TimeGrid::new(t_final, steps)?;
    let grid = SpatialGrid::new(xs.len())?;
    let mut values = Vec::with_capacity(ts.len() * xs.len());
    for t in &ts {
        for x in &xs {
            let v = cells
                .get(&(t.to_bits(), x.to_bits()))
                .ok_or_else(|| anyhow!("{}: missing sample at t={t}, x={x}", path.display()))?;
            values.push(*v);
        }
    }
    Ok(PathField::new(times, grid, values)?)
}

pub fn write_trajectory(dir: &Path, traj: &PQTrajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_path_field(&dir.join("q_path.csv"), &traj.q_path, "q", 1)?;
    write_path_field(&dir.join("p_path.csv"), &traj.p_path, "p", 1)?;
    let rows = traj
        .residuals
        .iter()
        .enumerate()
        .map(|(k, r)| vec![traj.times.time(k), r.r1, r.r2, r.p1, r.p_phi]);
    write_rows(&dir.join("constraints.csv"), &["t", "r1", "r2", "p_moment_1", "p_moment_phi"], rows)
}

pub fn read_trajectory(dir: &Path) -> Result<PQTrajectory> {
    let q = read_path_field(&dir.join("q_path.csv"))?;
    let p = read_path_field(&dir.join("p_path.csv"))?;
    Ok(PQTrajectory::new(q, p)?)
}
