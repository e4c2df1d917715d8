//! Acceleration functionals on `(p, q)` paths and the relaxed functional with a
//! defect measure.
//!
//! The cotangent acceleration of a path is `A = ṗ + 𝒰(p²) - π₁ - π₂`, which
//! vanishes on geodesics. `J₀ = ∬ ηA²`.

use alloc::vec;
use alloc::vec::Vec;

use crate::coords::{adjoint_tail, Frame};
use crate::error::{Error, Result};
use crate::fisher_rao::{fr_atomic, fr_grid_path, AtomicMeasurePath};
use crate::geodesic_pq::{abc_from_frame, PQTrajectory};
use crate::numerics::{finite_diff_time, tailtrapz, trapezoid, PathField, ScalarField};

/// `𝒰(f, q)(x) = ½ ∫ₓ¹ η f`.
pub fn nonlocal_u(f: &ScalarField, q: &ScalarField) -> Result<ScalarField> {
    if f.grid() != q.grid() {
        return Err(Error::GridMismatch);
    }
    let fr = Frame::of(q)?;
    let g: Vec<f64> = f.values().iter().zip(&fr.eta).map(|(f, e)| f * e).collect();
    ScalarField::new(q.grid(), tailtrapz(&g, fr.h).into_iter().map(|v| 0.5 * v).collect())
}

/// `π₁ = [1, φ] G⁻¹ [0, b]`.
pub fn pi1(p: &ScalarField, q: &ScalarField) -> Result<ScalarField> {
    if p.grid() != q.grid() {
        return Err(Error::GridMismatch);
    }
    let f = Frame::of(q)?;
    let b = abc_from_frame(&f, p.values()).b;
    let c = f.gram_solve([0.0, b])?;
    ScalarField::new(q.grid(), f.mphi.iter().map(|m| c[0] + c[1] * m).collect())
}

/// `π₂ = (id - π*_q) 𝒰(f, q)`.
pub fn pi2(q: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
    let u = nonlocal_u(f, q)?;
    let fr = Frame::of(q)?;
    let proj = fr.project_cotangent(u.values())?;
    ScalarField::new(q.grid(), u.values().iter().zip(proj).map(|(u, p)| u - p).collect())
}

/// `A` at every sample of the path, with `ṗ` by finite differences in time.
///
/// `𝒰(p²)` uses the tail operator that is adjoint to `cumtrapz`, the same
/// one the geodesic integrator uses, so geodesics give `A ≈ 0` up to the
/// time-differencing error.
pub fn covariant_accel_flat(traj: &PQTrajectory) -> Result<PathField> {
    let pdot = finite_diff_time(&traj.p_path)?;
    let h = traj.grid().spacing();
    let n = traj.grid().len();
    let mut out = Vec::with_capacity(n * traj.times.len());
    for k in 0..traj.times.len() {
        let f = Frame::new(traj.q_path.row(k), h)?;
        out.extend(accel_row(&f, traj.p_path.row(k), pdot.row(k))?);
    }
    PathField::new(traj.times, traj.grid(), out)
}

fn accel_row(f: &Frame, p: &[f64], pdot: &[f64]) -> Result<Vec<f64>> {
    let n = p.len();
    let g: Vec<f64> = (0..n).map(|i| f.eta[i] * p[i] * p[i]).collect();
    let u: Vec<f64> = adjoint_tail(&g, f.h).into_iter().map(|v| 0.5 * v).collect();
    let m = f.cotangent_moments(&u);
    let b = abc_from_frame(f, p).b;
    let c = f.gram_solve([m[0], m[1] + b])?;
    Ok((0..n).map(|i| pdot[i] + u[i] - c[0] - c[1] * f.mphi[i]).collect())
}

/// `∫ η A²` at each time.
fn weighted_square_rows(traj: &PQTrajectory, a: &PathField) -> Result<Vec<f64>> {
    let h = traj.grid().spacing();
    (0..traj.times.len())
        .map(|k| {
            let f = Frame::new(traj.q_path.row(k), h)?;
            let row = a.row(k);
            Ok(f.integrate(|i| f.eta[i] * row[i] * row[i]))
        })
        .collect()
}

/// `J₀ = ∬ η A² dx dt`.
pub fn acceleration_j0(traj: &PQTrajectory) -> Result<f64> {
    let a = covariant_accel_flat(traj)?;
    Ok(trapezoid(&weighted_square_rows(traj, &a)?, traj.times.dt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelerationReport {
    pub j0: f64,
    pub penalty: f64,
    pub j: f64,
    /// `∫ η A² dx` at every sample.
    pub per_time_integrand: Vec<f64>,
}

/// `J = J₀ + ‖p(1) - p₁‖²/σ₁² + ‖q(1) - q₁‖²/σ₂²` with plain `L²` norms.
pub fn relaxed_j(
    traj: &PQTrajectory,
    p1_target: &ScalarField,
    q1_target: &ScalarField,
    sigma1: f64,
    sigma2: f64,
) -> Result<AccelerationReport> {
    if !(sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(Error::Precondition("penalty scales must be positive"));
    }
    if p1_target.grid() != traj.grid() || q1_target.grid() != traj.grid() {
        return Err(Error::GridMismatch);
    }
    let last = traj.times.steps();
    let h = traj.grid().spacing();
    let sq = |a: &[f64], b: &[f64]| {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
        trapezoid(&d, h)
    };
    let penalty = sq(traj.p_path.row(last), p1_target.values()) / (sigma1 * sigma1)
        + sq(traj.q_path.row(last), q1_target.values()) / (sigma2 * sigma2);
    let a = covariant_accel_flat(traj)?;
    let rows = weighted_square_rows(traj, &a)?;
    let j0 = trapezoid(&rows, traj.times.dt());
    Ok(AccelerationReport { j0, penalty, j: j0 + penalty, per_time_integrand: rows })
}

/// A defect measure path on the trajectory's time grid.
#[derive(Debug, Clone, Copy)]
pub enum Defect<'a> {
    Zero,
    Atomic(&'a AtomicMeasurePath),
    /// Density against `dx` at every sample.
    Density(&'a PathField),
}

impl Defect<'_> {
    fn validate(&self, traj: &PQTrajectory) -> Result<()> {
        match self {
            Defect::Zero => Ok(()),
            Defect::Atomic(a) => {
                if a.times() != traj.times {
                    return Err(Error::GridMismatch);
                }
                if !a.vanishes_initially() {
                    return Err(Error::NonzeroInitialDefect);
                }
                Ok(())
            }
            Defect::Density(d) => {
                if !d.same_shape(&traj.q_path) {
                    return Err(Error::GridMismatch);
                }
                if d.values().iter().any(|&v| v < 0.0) {
                    return Err(Error::NegativeDensity);
                }
                if d.row(0).iter().any(|&v| v != 0.0) {
                    return Err(Error::NonzeroInitialDefect);
                }
                Ok(())
            }
        }
    }

    /// `𝒰(Δ(t_k), q(t_k))`. For an atom at `x0` this is `½ f² η(x0)` left of
    /// the atom, half that on a node sitting at `x0`, and zero to its right.
    fn potential_row(&self, f: &Frame, k: usize, out: &mut [f64]) {
        match self {
            Defect::Zero => out.fill(0.0),
            Defect::Atomic(a) => {
                let n = out.len();
                let x0 = a.x0();
                let eta_x0 = crate::numerics::interp_uniform(&f.eta, 0.0, f.h, x0);
                let level = 0.5 * a.mass(k) * eta_x0;
                for (i, o) in out.iter_mut().enumerate() {
                    let x = i as f64 / (n - 1) as f64;
                    *o = if (x - x0).abs() <= 1e-12 {
                        0.5 * level
                    } else if x < x0 {
                        level
                    } else {
                        0.0
                    };
                }
            }
            Defect::Density(d) => {
                let g: Vec<f64> = d.row(k).iter().zip(&f.eta).map(|(r, e)| r * e).collect();
                for (o, t) in out.iter_mut().zip(tailtrapz(&g, f.h)) {
                    *o = 0.5 * t;
                }
            }
        }
    }

    /// `FR_η(Δ, ∂ₜΔ)`.
    pub fn fisher_rao(&self, eta_path: &PathField) -> Result<f64> {
        match self {
            Defect::Zero => Ok(0.0),
            Defect::Atomic(a) => fr_atomic(a, eta_path),
            Defect::Density(d) => fr_grid_path(d, eta_path),
        }
    }

    /// `⟨Δ, w⟩ = ∬ w dΔ dt`.
    pub fn pair_with(&self, w: &PathField) -> Result<f64> {
        match self {
            Defect::Zero => Ok(0.0),
            Defect::Atomic(a) => {
                if a.times() != w.times() {
                    return Err(Error::GridMismatch);
                }
                let probe = w.probe(a.x0());
                let vals: Vec<f64> = probe.iter().enumerate().map(|(k, v)| a.mass(k) * v).collect();
                Ok(trapezoid(&vals, w.times().dt()))
            }
            Defect::Density(d) => crate::fisher_rao::pairing(d, w),
        }
    }
}

/// `π*_q 𝒰(Δ, q)` along the trajectory.
pub fn projected_defect_potential(traj: &PQTrajectory, defect: Defect<'_>) -> Result<PathField> {
    defect.validate(traj)?;
    let h = traj.grid().spacing();
    let n = traj.grid().len();
    let mut out = Vec::with_capacity(n * traj.times.len());
    let mut row = vec![0.0; n];
    for k in 0..traj.times.len() {
        let f = Frame::new(traj.q_path.row(k), h)?;
        defect.potential_row(&f, k, &mut row);
        out.extend(f.project_cotangent(&row)?);
    }
    PathField::new(traj.times, traj.grid(), out)
}

/// Terms of the relaxed functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedReport {
    /// `J₀` of the path without defect.
    pub j0: f64,
    /// `FR_η(Δ, ∂ₜΔ)`.
    pub fr: f64,
    /// `∬ η (A + π*𝒰(Δ))² - J₀`.
    pub cross_term: f64,
    pub penalty: f64,
    /// `FR + ∬ η (A + π*𝒰(Δ))² + penalty`.
    pub f: f64,
}

/// `F(Δ, p, q) = FR_η(Δ, ∂ₜΔ) + ∬ η (A + π*𝒰(Δ))² + penalty`.
pub fn relaxed_f(traj: &PQTrajectory, defect: Defect<'_>, penalty: f64) -> Result<RelaxedReport> {
    if !(penalty >= 0.0) {
        return Err(Error::Precondition("penalty must be nonnegative"));
    }
    let a = covariant_accel_flat(traj)?;
    let j0 = trapezoid(&weighted_square_rows(traj, &a)?, traj.times.dt());
    let (fr, total) = match defect {
        Defect::Zero => (0.0, j0),
        _ => {
            let pot = projected_defect_potential(traj, defect)?;
            let shifted = a.zip_with(&pot, |x, y| x + y)?;
            let total = trapezoid(&weighted_square_rows(traj, &shifted)?, traj.times.dt());
            (defect.fisher_rao(&traj.eta_path()?)?, total)
        }
    };
    Ok(RelaxedReport { j0, fr, cross_term: total - j0, penalty, f: fr + total + penalty })
}

/// `w = η ∫₀ˣ η π*_q(A + 𝒰(Δ))`, the gradient of the acceleration part of `F`
/// with respect to the defect.
pub fn defect_gradient(traj: &PQTrajectory, defect: Defect<'_>) -> Result<PathField> {
    let a = covariant_accel_flat(traj)?;
    let pot = projected_defect_potential(traj, defect)?;
    let h = traj.grid().spacing();
    let n = traj.grid().len();
    let mut out = Vec::with_capacity(n * traj.times.len());
    for k in 0..traj.times.len() {
        let f = Frame::new(traj.q_path.row(k), h)?;
        let pa = f.project_cotangent(a.row(k))?;
        let g: Vec<f64> = (0..n).map(|i| f.eta[i] * (pa[i] + pot.row(k)[i])).collect();
        out.extend(crate::numerics::cumtrapz(&g, h).into_iter().zip(&f.eta).map(|(c, e)| c * e));
    }
    PathField::new(traj.times, traj.grid(), out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsReport {
    /// `∫ ‖q̇‖² dt` with `‖q̇‖² = ∫ηp²`.
    pub lhs: f64,
    /// `4T² J₀`.
    pub rhs: f64,
    pub ok: bool,
}

/// Bound on the kinetic energy of a path that starts at rest by its acceleration.
///
/// The path counts as starting at rest when `‖q̇(0)‖` is below `10⁻³` of the
/// largest speed along it, which absorbs the time-differencing error.
pub fn check_cs_inequality(traj: &PQTrajectory) -> Result<CsReport> {
    let speed = traj.speed()?;
    let norm = libm::sqrt(speed[0]);
    let top = speed.iter().fold(0.0_f64, |m, v| m.max(libm::sqrt(*v)));
    if norm > 1e-3 * top + 1e-12 {
        return Err(Error::NonzeroInitialVelocity { norm });
    }
    let lhs = trapezoid(&speed, traj.times.dt());
    let t = traj.times.t_final();
    let rhs = 4.0 * t * t * acceleration_j0(traj)?;
    Ok(CsReport { lhs, rhs, ok: lhs <= rhs + 1e-6 })
}
