//! The Fisher-Rao functional `∫ r(dμ/dλ, dν/dλ) f dλ` with `r(x, y) = y²/(4x)`,
//! the inequality condition between a measure path and its rate, subgradient
//! certification, and an oscillating sequence whose squares converge weakly
//! to a prescribed measure.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{finite_diff_time, trapezoid, PathField, SpatialGrid, TimeGrid};

/// Densities at or below this floor count as zero.
pub const DENSITY_FLOOR: f64 = 1e-14;

/// `y²/(4x)` for `x > 0`, `0` at `y = 0`, `+∞` otherwise.
pub fn r_integrand(x: f64, y: f64) -> f64 {
    if x > DENSITY_FLOOR {
        y * y / (4.0 * x)
    } else if y == 0.0 && x >= 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `μ(t) = f(t)² δ_{x0}`. The profile may change sign; only `f²` and `ḟ²` enter.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasurePath {
    x0: f64,
    times: TimeGrid,
    f: Vec<f64>,
}

impl AtomicMeasurePath {
    pub fn new(x0: f64, times: TimeGrid, f: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&x0) {
            return Err(Error::OutOfDomain { value: x0 });
        }
        if f.len() != times.len() {
            return Err(Error::GridMismatch);
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("atomic profile"));
        }
        Ok(Self { x0, times, f })
    }

    pub fn from_fn(x0: f64, times: TimeGrid, profile: impl Fn(f64) -> f64) -> Result<Self> {
        let f = (0..times.len()).map(|k| profile(times.time(k))).collect();
        Self::new(x0, times, f)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn times(&self) -> TimeGrid {
        self.times
    }

    pub fn profile(&self) -> &[f64] {
        &self.f
    }

    /// Mass `f(t_k)²`.
    pub fn mass(&self, k: usize) -> f64 {
        self.f[k] * self.f[k]
    }

    /// The same atom with profile `√s·f`, i.e. mass scaled by `s ≥ 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::NegativeDensity);
        }
        let r = libm::sqrt(s);
        Self::new(self.x0, self.times, self.f.iter().map(|v| v * r).collect())
    }

    pub fn vanishes_initially(&self) -> bool {
        self.f[0] == 0.0
    }
}

/// Densities of `(μ, ν)` against Lebesgue measure on `[0, T] × [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasurePair {
    pub rho_mu: PathField,
    pub rho_nu: PathField,
}

impl GridMeasurePair {
    pub fn new(rho_mu: PathField, rho_nu: PathField) -> Result<Self> {
        if !rho_mu.same_shape(&rho_nu) {
            return Err(Error::GridMismatch);
        }
        if rho_mu.values().iter().chain(rho_nu.values()).any(|&v| v < 0.0) {
            return Err(Error::NegativeDensity);
        }
        Ok(Self { rho_mu, rho_nu })
    }
}

/// `∬ g dx dt` with the trapezoid rule, propagating `+∞`.
fn integrate2(times: TimeGrid, grid: SpatialGrid, g: impl Fn(usize, usize) -> f64) -> f64 {
    let h = grid.spacing();
    let n = grid.len();
    let mut rows = Vec::with_capacity(times.len());
    let mut row = vec![0.0; n];
    for k in 0..times.len() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = g(k, i);
        }
        rows.push(trapezoid(&row, h));
    }
    trapezoid(&rows, times.dt())
}

/// `⟨μ, g⟩ = ∬ ρ_μ g`.
pub fn pairing(rho: &PathField, g: &PathField) -> Result<f64> {
    if !rho.same_shape(g) {
        return Err(Error::GridMismatch);
    }
    Ok(integrate2(rho.times(), rho.grid(), |k, i| rho.get(k, i) * g.get(k, i)))
}

fn check_weight(weight: &PathField) -> Result<()> {
    if weight.values().iter().any(|&w| !(w > 0.0)) {
        return Err(Error::NonPositiveWeight);
    }
    Ok(())
}

/// `FR_f(μ, ν) = ∬ r(ρ_μ, ρ_ν) f dx dt`; `ρ_ν` may be signed.
pub fn fr_grid(rho_mu: &PathField, rho_nu: &PathField, weight: &PathField) -> Result<f64> {
    if !rho_mu.same_shape(rho_nu) || !rho_mu.same_shape(weight) {
        return Err(Error::GridMismatch);
    }
    check_weight(weight)?;
    if rho_mu.values().iter().any(|&v| v < 0.0) {
        return Err(Error::NegativeDensity);
    }
    let cells = rho_mu.values().iter().zip(rho_nu.values());
    if cells.clone().any(|(&m, &n)| r_integrand(m, n).is_infinite()) {
        return Ok(f64::INFINITY);
    }
    Ok(integrate2(rho_mu.times(), rho_mu.grid(), |k, i| {
        r_integrand(rho_mu.get(k, i), rho_nu.get(k, i)) * weight.get(k, i)
    }))
}

/// `FR_η(μ, ∂ₜμ)` for a smooth density path, with `∂ₜμ` by finite differences.
pub fn fr_grid_path(rho_mu: &PathField, weight: &PathField) -> Result<f64> {
    fr_grid(rho_mu, &finite_diff_time(rho_mu)?, weight)
}

/// `∫ ḟ² η(t, x0) dt` for `μ = f² δ_{x0}` and `ν = ∂ₜμ`.
///
/// `f` is taken piecewise linear between samples and `η(·, x0)` is averaged
/// over each step.
pub fn fr_atomic(delta: &AtomicMeasurePath, eta_path: &PathField) -> Result<f64> {
    if eta_path.times() != delta.times {
        return Err(Error::GridMismatch);
    }
    fr_atomic_series(delta, &eta_path.probe(delta.x0))
}

/// [`fr_atomic`] with `η(t_k, x0)` given directly.
pub fn fr_atomic_series(delta: &AtomicMeasurePath, eta_probe: &[f64]) -> Result<f64> {
    if eta_probe.len() != delta.f.len() {
        return Err(Error::GridMismatch);
    }
    if eta_probe.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::NonPositiveWeight);
    }
    let dt = delta.times.dt();
    Ok(delta
        .f
        .windows(2)
        .zip(eta_probe.windows(2))
        .map(|(f, e)| {
            let slope = (f[1] - f[0]) / dt;
            slope * slope * dt * 0.5 * (e[0] + e[1])
        })
        .sum())
}

/// `{1} ∪ {1.5 + cos(kπt/T) cos(lπx) : 0 ≤ k, l ≤ 4}`.
pub fn default_test_family(times: TimeGrid, grid: SpatialGrid) -> Result<Vec<PathField>> {
    use core::f64::consts::PI;
    let big_t = times.t_final();
    let mut out = vec![PathField::from_fn(times, grid, |_, _| 1.0)?];
    for k in 0..=4 {
        for l in 0..=4 {
            let (kk, ll) = (k as f64 * PI / big_t, l as f64 * PI);
            out.push(PathField::from_fn(times, grid, |t, x| 1.5 + libm::cos(kk * t) * libm::cos(ll * x))?);
        }
    }
    Ok(out)
}

/// Worst margin `4⟨ν,f⟩⟨μ,f⟩ - ⟨μ,∂ₜf⟩²` over the test family, where
/// `⟨μ,∂ₜf⟩` stands for `-⟨∂ₜμ, f⟩`.
pub fn check_inequality_condition(pair: &GridMeasurePair, tests: &[PathField]) -> Result<f64> {
    if tests.is_empty() {
        return Err(Error::Precondition("empty test family"));
    }
    let dmu = finite_diff_time(&pair.rho_mu)?;
    let mut worst = f64::INFINITY;
    for tf in tests {
        let lhs = pairing(&dmu, tf)?;
        let m = 4.0 * pairing(&pair.rho_nu, tf)? * pairing(&pair.rho_mu, tf)? - lhs * lhs;
        worst = worst.min(m);
    }
    Ok(worst)
}

/// Result of [`check_subgradient`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradientCheck {
    pub feasible: bool,
    pub gap: f64,
}

/// Tests `(u, v)` as a subgradient of `FR_f` at `(μ, ν)`: pointwise
/// `u/f + (v/f)² ≤ 0` and the gap `FR_f(μ, ν) - ⟨u, μ⟩ - ⟨v, ν⟩`.
pub fn check_subgradient(
    u: &PathField,
    v: &PathField,
    rho_mu: &PathField,
    rho_nu: &PathField,
    weight: &PathField,
) -> Result<SubgradientCheck> {
    if !u.same_shape(v) || !u.same_shape(rho_mu) {
        return Err(Error::GridMismatch);
    }
    let fr = fr_grid(rho_mu, rho_nu, weight)?;
    let feasible = u.values().iter().zip(v.values()).zip(weight.values()).all(|((&u, &v), &f)| {
        let (a, b) = (u / f, v / f);
        a + b * b <= 1e-12 * (1.0 + a.abs())
    });
    let gap = fr - pairing(u, rho_mu)? - pairing(v, rho_nu)?;
    Ok(SubgradientCheck { feasible, gap })
}

/// `p_n = (a + b cos 2πnx) sin 2πnx` with `a = √2 r cos θ`, `b = 2 r sin θ`,
/// `r = √μ` and `θ̇ = √((ν - (∂ₜ√μ)²)/μ)`, so that `p_n → 0` and `p_n² → μ`
/// weakly while the rate carried by the oscillation matches `ν`.
pub fn synthesize_oscillations(rho_mu: &PathField, rho_nu: &PathField, n: u32) -> Result<PathField> {
    use core::f64::consts::PI;
    if !rho_mu.same_shape(rho_nu) {
        return Err(Error::GridMismatch);
    }
    if rho_mu.values().iter().chain(rho_nu.values()).any(|&v| v < 0.0) {
        return Err(Error::NegativeDensity);
    }
    let times = rho_mu.times();
    let grid = rho_mu.grid();
    let nx = grid.len();
    let sqrt_mu = rho_mu.map(libm::sqrt);
    let dr = finite_diff_time(&sqrt_mu)?;
    for i in 0..nx {
        if rho_mu.get(0, i) > DENSITY_FLOOR {
            return Err(Error::InfeasibleTarget { t: 0.0, x: grid.node(i) });
        }
    }
    let mut rate = vec![0.0; rho_mu.values().len()];
    for k in 0..times.len() {
        for i in 0..nx {
            let (mu, nu, d) = (rho_mu.get(k, i), rho_nu.get(k, i), dr.get(k, i));
            let excess = nu - d * d;
            if excess < -(1e-6 * nu + 1e-9) {
                return Err(Error::InfeasibleTarget { t: times.time(k), x: grid.node(i) });
            }
            if mu > DENSITY_FLOOR && excess > 1e-12 * (1.0 + nu) {
                rate[k * nx + i] = libm::sqrt(excess / mu);
            }
        }
    }
    let dt = times.dt();
    let mut theta = vec![0.0; nx];
    let mut out = Vec::with_capacity(rate.len());
    let freq = 2.0 * PI * n as f64;
    for k in 0..times.len() {
        if k > 0 {
            for (i, th) in theta.iter_mut().enumerate() {
                *th += 0.5 * dt * (rate[(k - 1) * nx + i] + rate[k * nx + i]);
            }
        }
        for (i, th) in theta.iter().enumerate() {
            let r = sqrt_mu.get(k, i);
            let a = core::f64::consts::SQRT_2 * r * libm::cos(*th);
            let b = 2.0 * r * libm::sin(*th);
            let s = freq * grid.node(i);
            out.push((a + b * libm::cos(s)) * libm::sin(s));
        }
    }
    PathField::new(times, grid, out)
}
