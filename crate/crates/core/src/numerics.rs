//! Uniform grids, fields on them, quadrature and fixed-step integrators.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Uniform grid `x_i = i/(n-1)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    n: usize,
    h: f64,
}

impl SpatialGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid("spatial grid needs at least 3 nodes"));
        }
        Ok(Self { n, h: 1.0 / (n - 1) as f64 })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Linear interpolation of nodal `values` at `x`, clamped to `[0, 1]`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        interp_uniform(values, 0.0, self.h, x)
    }
}

/// Uniform time grid `t_k = k T / m`, `k = 0..=m`, on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    steps: usize,
    t_final: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("time grid needs at least one step"));
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::InvalidGrid("time horizon must be positive and finite"));
        }
        Ok(Self { steps, t_final })
    }

    /// Grid on `[0, T]` whose step is the largest `T/m` not exceeding `dt`.
    pub fn with_step(t_final: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidGrid("time step must be positive and finite"));
        }
        let m = libm::ceil(t_final / dt - 1e-9).max(1.0) as usize;
        Self::new(t_final, m)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of time samples, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.t_final
        } else {
            k as f64 * self.t_final / self.steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

/// Nodal values of a function on a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub(crate) fn from_vec_unchecked(grid: SpatialGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.values, x)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Space-time samples `values[k * nx + i] = u(t_k, x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathField {
    times: TimeGrid,
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl PathField {
    pub fn new(times: TimeGrid, grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != times.len() * grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("path field"));
        }
        Ok(Self { times, grid, values })
    }

    pub fn from_fn(times: TimeGrid, grid: SpatialGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = grid.nodes();
        let mut values = Vec::with_capacity(times.len() * grid.len());
        for k in 0..times.len() {
            let t = times.time(k);
            values.extend(xs.iter().map(|&x| f(t, x)));
        }
        Self::new(times, grid, values)
    }

    pub fn zeros(times: TimeGrid, grid: SpatialGrid) -> Self {
        Self { times, grid, values: vec![0.0; times.len() * grid.len()] }
    }

    pub fn from_rows(times: TimeGrid, rows: &[ScalarField]) -> Result<Self> {
        let grid = rows.first().ok_or(Error::TooFewSamples { needed: 1, got: 0 })?.grid();
        if rows.len() != times.len() || rows.iter().any(|r| r.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        let mut values = Vec::with_capacity(rows.len() * grid.len());
        for r in rows {
            values.extend_from_slice(r.values());
        }
        Ok(Self { times, grid, values })
    }

    pub(crate) fn from_vec_unchecked(times: TimeGrid, grid: SpatialGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), times.len() * grid.len());
        Self { times, grid, values }
    }

    pub fn times(&self) -> TimeGrid {
        self.times
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.values[k * n..(k + 1) * n]
    }

    pub fn row_field(&self, k: usize) -> ScalarField {
        ScalarField { grid: self.grid, values: self.row(k).to_vec() }
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.grid.len() + i]
    }

    /// Time series `t ↦ u(t, x)` with linear interpolation in `x`.
    pub fn probe(&self, x: f64) -> Vec<f64> {
        (0..self.times.len()).map(|k| self.grid.interpolate(self.row(k), x)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { times: self.times, grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.times != other.times || self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { times: self.times, grid: self.grid, values })
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.times == other.times && self.grid == other.grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    Simpson,
}

/// Composite trapezoid rule for samples with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Composite Simpson rule; `values.len()` must be odd.
pub fn simpson(values: &[f64], h: f64) -> Result<f64> {
    let n = values.len();
    if n.is_multiple_of(2) {
        return Err(Error::EvenNodeCount(n));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(s * h / 3.0)
}

pub fn quadrature(field: &ScalarField, rule: QuadratureRule) -> Result<f64> {
    let h = field.grid().spacing();
    match rule {
        QuadratureRule::Trapezoid => Ok(trapezoid(field.values(), h)),
        QuadratureRule::Simpson => simpson(field.values(), h),
    }
}

/// Running trapezoid integral `∫₀^{x_i}`, starting at exactly zero.
pub fn cumtrapz(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(values.len());
    out
}

/// Running trapezoid integral `∫_{x_i}^1`, ending at exactly zero.
pub fn tailtrapz(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n.saturating_sub(1)).rev() {
        acc += 0.5 * h * (values[i] + values[i + 1]);
        out[i] = acc;
    }
    out
}

pub fn cumulative_integral(field: &ScalarField) -> ScalarField {
    let values = cumtrapz(field.values(), field.grid().spacing());
    ScalarField::from_vec_unchecked(field.grid(), values)
}

pub fn tail_integral(field: &ScalarField) -> ScalarField {
    let values = tailtrapz(field.values(), field.grid().spacing());
    ScalarField::from_vec_unchecked(field.grid(), values)
}

/// Central differences inside, second-order one-sided differences at both ends.
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            let s = (values[1] - values[0]) / h;
            d[0] = s;
            d[1] = s;
        }
        return d;
    }
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d
}

/// Second derivative: three-point stencil inside, four-point one-sided at the ends.
pub fn second_derivative(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: n });
    }
    let h2 = h * h;
    let mut d = vec![0.0; n];
    d[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2;
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2;
    }
    d[n - 1] =
        (2.0 * values[n - 1] - 5.0 * values[n - 2] + 4.0 * values[n - 3] - values[n - 4]) / h2;
    Ok(d)
}

/// Time derivative of every spatial node with [`derivative`]'s stencil.
pub fn finite_diff_time(path: &PathField) -> Result<PathField> {
    let nt = path.times().len();
    if nt < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: nt });
    }
    let n = path.grid().len();
    let dt = path.times().dt();
    let mut out = vec![0.0; nt * n];
    let v = path.values();
    for i in 0..n {
        out[i] = (-3.0 * v[i] + 4.0 * v[n + i] - v[2 * n + i]) / (2.0 * dt);
        let last = (nt - 1) * n + i;
        out[last] = (3.0 * v[last] - 4.0 * v[last - n] + v[last - 2 * n]) / (2.0 * dt);
    }
    for k in 1..nt - 1 {
        for i in 0..n {
            out[k * n + i] = (v[(k + 1) * n + i] - v[(k - 1) * n + i]) / (2.0 * dt);
        }
    }
    Ok(PathField::from_vec_unchecked(path.times(), path.grid(), out))
}

/// `∬ u dx dt` with the trapezoid rule in both variables.
pub fn integrate_path(path: &PathField) -> f64 {
    let h = path.grid().spacing();
    let rows: Vec<f64> = (0..path.times().len()).map(|k| trapezoid(path.row(k), h)).collect();
    trapezoid(&rows, path.times().dt())
}

/// Linear interpolation of samples at `x0, x0 + h, ...`, clamped to the sample range.
pub fn interp_uniform(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let s = (x - x0) / h;
    if s <= 0.0 {
        return values[0];
    }
    let last = (n - 1) as f64;
    if s >= last {
        return values[n - 1];
    }
    let i = (libm::floor(s) as usize).min(n - 2);
    let w = s - i as f64;
    values[i] * (1.0 - w) + values[i + 1] * w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OdeMethod {
    #[default]
    Rk4,
    Midpoint,
}

/// Scratch buffers for [`ode_step`].
#[derive(Debug, Clone)]
pub struct OdeWorkspace {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl OdeWorkspace {
    pub fn new(dim: usize) -> Self {
        Self { k: core::array::from_fn(|_| vec![0.0; dim]), tmp: vec![0.0; dim] }
    }
}

/// One explicit step of size `dt` from `(t, y)`, updating `y` in place.
///
/// Fails with [`Error::NonFiniteState`] if the new state is not finite.
pub fn ode_step<F>(
    method: OdeMethod,
    t: f64,
    dt: f64,
    y: &mut [f64],
    rhs: &mut F,
    ws: &mut OdeWorkspace,
) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let [k1, k2, k3, k4] = &mut ws.k;
    let tmp = &mut ws.tmp;
    match method {
        OdeMethod::Rk4 => {
            rhs(t, y, k1)?;
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * dt * k1[i];
            }
            rhs(t + 0.5 * dt, tmp, k2)?;
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * dt * k2[i];
            }
            rhs(t + 0.5 * dt, tmp, k3)?;
            for i in 0..n {
                tmp[i] = y[i] + dt * k3[i];
            }
            rhs(t + dt, tmp, k4)?;
            for i in 0..n {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        OdeMethod::Midpoint => {
            rhs(t, y, k1)?;
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * dt * k1[i];
            }
            rhs(t + 0.5 * dt, tmp, k2)?;
            for i in 0..n {
                y[i] += dt * k2[i];
            }
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { t: t + dt });
    }
    Ok(())
}

/// States of an ODE solution on a [`TimeGrid`], stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub times: TimeGrid,
    pub dim: usize,
    pub states: Vec<f64>,
}

impl OdeTrajectory {
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.times.steps())
    }
}

/// Integrates `y' = rhs(t, y)` over `times` with a fixed step.
pub fn ode_solve<F>(y0: &[f64], mut rhs: F, times: TimeGrid, method: OdeMethod) -> Result<OdeTrajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }
    let dim = y0.len();
    let mut states = Vec::with_capacity(dim * times.len());
    states.extend_from_slice(y0);
    let mut y = y0.to_vec();
    let mut ws = OdeWorkspace::new(dim);
    let dt = times.dt();
    for k in 0..times.steps() {
        ode_step(method, times.time(k), dt, &mut y, &mut rhs, &mut ws)?;
        states.extend_from_slice(&y);
    }
    Ok(OdeTrajectory { times, dim, states })
}

/// Solves a 2×2 system `[[a, b], [c, d]] x = r`.
pub fn solve2(m: [[f64; 2]; 2], r: [f64; 2]) -> Result<[f64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
    if !(det.abs() > 1e-300 && det.abs() > 1e-14 * scale * scale) {
        return Err(Error::SingularSystem);
    }
    Ok([(m[1][1] * r[0] - m[0][1] * r[1]) / det, (m[0][0] * r[1] - m[1][0] * r[0]) / det])
}

/// Dense Gaussian elimination with partial pivoting on a row-major `n×n` matrix.
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::GridMismatch);
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap_or(col);
        if a[piv * n + col].abs() < 1e-300 {
            return Err(Error::SingularSystem);
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        for i in col + 1..n {
            let f = a[i * n + col] / a[col * n + col];
            if f != 0.0 {
                for j in col..n {
                    a[i * n + j] -= f * a[col * n + j];
                }
                b[i] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i * n + j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i * n + i];
    }
    Ok(x)
}
