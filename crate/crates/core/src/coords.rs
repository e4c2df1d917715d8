//! The chart `q = ∂ₓ log ∂ₓφ` on orientation-preserving diffeomorphisms of `[0, 1]`.
//!
//! `η = ∂ₓφ = exp(∫₀ˣ q)` and `φ = ∫₀ˣ η`. A field `q` is admissible when
//! `∫q = 0` and `∫η = 1`. Tangent vectors `X` satisfy `∫X = ∫φX = 0`, cotangent
//! vectors `p` satisfy `∫pη = ∫pφη = 0`, and the two are paired by `X = ηp`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{cumtrapz, derivative, second_derivative, solve2, tailtrapz, trapezoid, PathField, ScalarField};

/// Default tolerance on the constraint residuals.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Largest admissible value of `∫₀ˣ q` before `exp` overflows.
const MAX_EXPONENT: f64 = 700.0;

/// The moment matrix `[[1, 1/2], [1/2, 1/3]]` of `{1, x}` on `[0, 1]`.
pub struct HilbertMatrix2;

impl HilbertMatrix2 {
    pub const MATRIX: [[f64; 2]; 2] = [[1.0, 0.5], [0.5, 1.0 / 3.0]];
    pub const INVERSE: [[f64; 2]; 2] = [[4.0, -6.0], [-6.0, 12.0]];

    pub fn apply_inverse(r: [f64; 2]) -> [f64; 2] {
        let m = Self::INVERSE;
        [m[0][0] * r[0] + m[0][1] * r[1], m[1][0] * r[0] + m[1][1] * r[1]]
    }
}

/// A field `q` known to satisfy the constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    q: ScalarField,
}

impl QState {
    pub fn new(q: ScalarField) -> Result<Self> {
        Self::with_tolerance(q, CONSTRAINT_TOL)
    }

    pub fn with_tolerance(q: ScalarField, tol: f64) -> Result<Self> {
        let (r1, r2) = check_constraints(&q)?;
        let res = r1.abs().max(r2.abs());
        if res > tol {
            return Err(Error::ConstraintDrift { t: 0.0, residual: res });
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> &ScalarField {
        &self.q
    }
}

/// A point `q` together with a momentum `p` in the cotangent space at `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentState {
    pub q: ScalarField,
    pub p: ScalarField,
}

/// `η`, `φ` and the Gram matrix of `{1, φ}` in the `η`-weighted product, for one `q`.
///
/// On the constraint set the Gram matrix equals [`HilbertMatrix2::MATRIX`] up to
/// quadrature error; using the discrete one makes the projections exact
/// projections of the discrete inner products.
///
/// Moments against `φ` use `mphi`, which equals `φ` except at the two end
/// nodes, where it is shifted inward by `hη/2`. With that weight
/// `∫X·(φ(1) - mphi) = ∫η·cumtrapz(X)` holds exactly, so the discrete tangent
/// space is the exact linearization of the discrete constraints.
#[derive(Debug, Clone)]
pub struct Frame {
    pub h: f64,
    pub eta: Vec<f64>,
    pub phi: Vec<f64>,
    pub mphi: Vec<f64>,
    pub gram: [[f64; 2]; 2],
}

impl Frame {
    pub fn new(q: &[f64], h: f64) -> Result<Self> {
        let l = cumtrapz(q, h);
        let max = l.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v.abs()));
        if !(max <= MAX_EXPONENT) {
            return Err(Error::Overflow { max_exponent: max });
        }
        let eta: Vec<f64> = l.iter().map(|&v| libm::exp(v)).collect();
        let phi = cumtrapz(&eta, h);
        let total = phi[phi.len() - 1];
        let mphi = adjoint_tail(&eta, h).iter().map(|t| total - t).collect();
        let mut f = Self { h, eta, phi, mphi, gram: [[0.0; 2]; 2] };
        let g00 = trapezoid(&f.eta, h);
        let g01 = f.integrate(|i| f.mphi[i] * f.eta[i]);
        let g11 = f.integrate(|i| f.mphi[i] * f.mphi[i] * f.eta[i]);
        f.gram = [[g00, g01], [g01, g11]];
        Ok(f)
    }

    pub fn of(q: &ScalarField) -> Result<Self> {
        Self::new(q.values(), q.grid().spacing())
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// Trapezoid rule applied to `i ↦ f(i)`.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let n = self.eta.len();
        let inner: f64 = (1..n - 1).map(&f).sum();
        self.h * (inner + 0.5 * (f(0) + f(n - 1)))
    }

    /// `(∫q, ∫η - 1)`.
    pub fn residuals(&self, q: &[f64]) -> (f64, f64) {
        (trapezoid(q, self.h), self.gram[0][0] - 1.0)
    }

    /// `G⁻¹ [m0, m1]`.
    pub fn gram_solve(&self, m: [f64; 2]) -> Result<[f64; 2]> {
        solve2(self.gram, m)
    }

    /// `(⟨p, 1⟩_η, ⟨p, φ⟩_η)`.
    pub fn cotangent_moments(&self, p: &[f64]) -> [f64; 2] {
        [self.integrate(|i| p[i] * self.eta[i]), self.integrate(|i| p[i] * self.mphi[i] * self.eta[i])]
    }

    /// `f - η [1, φ] G⁻¹ [∫f, ∫φf]`.
    pub fn project_tangent(&self, f: &[f64]) -> Result<Vec<f64>> {
        let m = [trapezoid(f, self.h), self.integrate(|i| self.mphi[i] * f[i])];
        let c = self.gram_solve(m)?;
        Ok(f.iter().enumerate().map(|(i, v)| v - self.eta[i] * (c[0] + c[1] * self.mphi[i])).collect())
    }

    /// `p - [1, φ] G⁻¹ [∫pη, ∫pφη]`.
    pub fn project_cotangent(&self, p: &[f64]) -> Result<Vec<f64>> {
        let c = self.gram_solve(self.cotangent_moments(p))?;
        Ok(p.iter().enumerate().map(|(i, v)| v - (c[0] + c[1] * self.mphi[i])).collect())
    }
}

/// Adjoint of `cumtrapz` under trapezoid weights: `∫a·cumtrapz(b) = ∫b·adjoint_tail(a)`
/// holds exactly. Equals `tailtrapz` except at the two end nodes.
pub(crate) fn adjoint_tail(a: &[f64], h: f64) -> Vec<f64> {
    let mut t = tailtrapz(a, h);
    let n = t.len();
    t[0] -= 0.5 * h * a[0];
    t[n - 1] += 0.5 * h * a[n - 1];
    t
}

pub fn eta_of_q(q: &ScalarField) -> Result<ScalarField> {
    ScalarField::new(q.grid(), Frame::of(q)?.eta)
}

pub fn phi_of_q(q: &ScalarField) -> Result<ScalarField> {
    ScalarField::new(q.grid(), Frame::of(q)?.phi)
}

/// `q = ∂ₓ²φ / ∂ₓφ` by finite differences. `φ` must be strictly increasing.
pub fn q_of_phi(phi: &ScalarField) -> Result<ScalarField> {
    if phi.values().windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotone);
    }
    let h = phi.grid().spacing();
    let eta = derivative(phi.values(), h);
    if eta.iter().any(|&e| e <= 0.0) {
        return Err(Error::NonMonotone);
    }
    let curv = second_derivative(phi.values(), h)?;
    ScalarField::new(phi.grid(), curv.iter().zip(&eta).map(|(c, e)| c / e).collect())
}

/// Residuals `(∫q, ∫η - 1)`.
pub fn check_constraints(q: &ScalarField) -> Result<(f64, f64)> {
    Ok(Frame::of(q)?.residuals(q.values()))
}

/// Tangent metric `⟨X, Y⟩ = ∫ X Y / η`.
pub fn metric_inner(q: &ScalarField, x: &ScalarField, y: &ScalarField) -> Result<f64> {
    if x.grid() != q.grid() || y.grid() != q.grid() {
        return Err(Error::GridMismatch);
    }
    let f = Frame::of(q)?;
    let (x, y) = (x.values(), y.values());
    Ok(f.integrate(|i| x[i] * y[i] / f.eta[i]))
}

/// Cotangent pairing `⟨p₁, p₂⟩_η = ∫ p₁ p₂ η`.
pub fn cometric_inner(q: &ScalarField, p1: &ScalarField, p2: &ScalarField) -> Result<f64> {
    if p1.grid() != q.grid() || p2.grid() != q.grid() {
        return Err(Error::GridMismatch);
    }
    let f = Frame::of(q)?;
    let (a, b) = (p1.values(), p2.values());
    Ok(f.integrate(|i| a[i] * b[i] * f.eta[i]))
}

/// Orthogonal projection onto the tangent space at `q`.
pub fn project_tangent(q: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
    if f.grid() != q.grid() {
        return Err(Error::GridMismatch);
    }
    ScalarField::new(q.grid(), Frame::of(q)?.project_tangent(f.values())?)
}

/// Orthogonal projection onto the cotangent space at `q`.
pub fn project_cotangent(q: &ScalarField, p: &ScalarField) -> Result<ScalarField> {
    if p.grid() != q.grid() {
        return Err(Error::GridMismatch);
    }
    ScalarField::new(q.grid(), Frame::of(q)?.project_cotangent(p.values())?)
}

/// Newton correction of `q` along `span{η, φη}` that drives both residuals to zero.
pub fn repair_constraints(q: &ScalarField) -> Result<ScalarField> {
    let mut v = q.values().to_vec();
    repair_in_place(&mut v, q.grid().spacing(), 8)?;
    ScalarField::new(q.grid(), v)
}

pub(crate) fn repair_in_place(q: &mut [f64], h: f64, iterations: usize) -> Result<Frame> {
    let mut f = Frame::new(q, h)?;
    for _ in 0..iterations {
        let (r1, r2) = f.residuals(q);
        if r1.abs().max(r2.abs()) < 1e-15 {
            break;
        }
        let total = f.gram[0][0];
        let j = [
            [f.gram[0][0], f.gram[0][1]],
            [
                f.integrate(|i| f.eta[i] * (total - f.mphi[i])),
                f.integrate(|i| f.mphi[i] * f.eta[i] * (total - f.mphi[i])),
            ],
        ];
        let c = solve2(j, [-r1, -r2])?;
        for (i, v) in q.iter_mut().enumerate() {
            *v += f.eta[i] * (c[0] + c[1] * f.mphi[i]);
        }
        f = Frame::new(q, h)?;
    }
    Ok(f)
}

/// `∂ₜη = η ∫₀ˣ ∂ₜq` along a path.
pub fn eta_time_derivative(q_path: &PathField, qdot_path: &PathField) -> Result<PathField> {
    if !q_path.same_shape(qdot_path) {
        return Err(Error::GridMismatch);
    }
    let h = q_path.grid().spacing();
    let mut out = PathField::zeros(q_path.times(), q_path.grid());
    for k in 0..q_path.times().len() {
        let f = Frame::new(q_path.row(k), h)?;
        let integral = cumtrapz(qdot_path.row(k), h);
        for (i, o) in out.row_mut(k).iter_mut().enumerate() {
            *o = f.eta[i] * integral[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SpatialGrid;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn grid(n: usize) -> SpatialGrid {
        SpatialGrid::new(n).unwrap()
    }

    /// Exact `q` of `φ(x) = x + a (1 - cos 2πx) / 2π`, which has `φ'(0) = φ'(1) = 1`.
    fn sample_q(n: usize, a: f64) -> ScalarField {
        ScalarField::from_fn(grid(n), |x| {
            let s = libm::sin(2.0 * PI * x);
            let c = libm::cos(2.0 * PI * x);
            2.0 * PI * a * c / (1.0 + a * s)
        })
        .unwrap()
    }

    #[test]
    fn identity_chart() {
        let g = grid(65);
        let q = ScalarField::zeros(g);
        let eta = eta_of_q(&q).unwrap();
        let phi = phi_of_q(&q).unwrap();
        assert!(eta.values().iter().all(|&e| e == 1.0));
        for (i, x) in g.nodes().into_iter().enumerate() {
            assert!((phi.values()[i] - x).abs() < 1e-15);
        }
        let (r1, r2) = check_constraints(&q).unwrap();
        assert!(r1.abs() < 1e-15 && r2.abs() < 1e-15);
    }

    #[test]
    fn hilbert_inverse() {
        let m = HilbertMatrix2::MATRIX;
        let inv = HilbertMatrix2::INVERSE;
        for i in 0..2 {
            for j in 0..2 {
                let v: f64 = (0..2).map(|k| m[i][k] * inv[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tangent_projection_kills_eta() {
        let q = sample_q(257, 0.6);
        let eta = eta_of_q(&q).unwrap();
        let proj = project_tangent(&q, &eta).unwrap();
        assert!(proj.max_abs() < 1e-13);
    }

    #[test]
    fn round_trip_is_second_order() {
        let err = |n| {
            let g = grid(n);
            let q = ScalarField::from_fn(g, |x| 0.8 * libm::cos(2.0 * PI * x)).unwrap();
            let back = q_of_phi(&phi_of_q(&q).unwrap()).unwrap();
            back.zip_with(&q, |a, b| (a - b).abs()).unwrap().max_abs()
        };
        let (e1, e2) = (err(129), err(257));
        assert!(e2 < 1e-3);
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn overflow_is_detected() {
        let q = ScalarField::from_fn(grid(33), |_| 1000.0).unwrap();
        assert!(matches!(eta_of_q(&q), Err(Error::Overflow { .. })));
    }

    #[test]
    fn q_of_phi_rejects_folds() {
        let phi = ScalarField::new(grid(5), vec![0.0, 0.5, 0.4, 0.8, 1.0]).unwrap();
        assert_eq!(q_of_phi(&phi), Err(Error::NonMonotone));
    }

    #[test]
    fn repair_restores_constraints() {
        let q = sample_q(257, 0.5).map(|v| 1.02 * v + 0.01);
        let fixed = repair_constraints(&q).unwrap();
        let (r1, r2) = check_constraints(&fixed).unwrap();
        assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12, "{r1} {r2}");
        assert!(QState::new(fixed).is_ok());
    }

    #[test]
    fn eta_rate_matches_finite_difference() {
        use crate::numerics::TimeGrid;
        let g = grid(129);
        let times = TimeGrid::new(1.0, 100).unwrap();
        let qf = |t: f64, x: f64| t * libm::cos(2.0 * PI * x);
        let q_path = PathField::from_fn(times, g, qf).unwrap();
        let qdot = PathField::from_fn(times, g, |_, x| libm::cos(2.0 * PI * x)).unwrap();
        let rate = eta_time_derivative(&q_path, &qdot).unwrap();
        let eta_path = PathField::from_rows(
            times,
            &(0..times.len()).map(|k| eta_of_q(&q_path.row_field(k)).unwrap()).collect::<Vec<_>>(),
        )
        .unwrap();
        let fd = crate::numerics::finite_diff_time(&eta_path).unwrap();
        for k in 1..times.len() - 1 {
            for i in 0..g.len() {
                assert!((fd.get(k, i) - rate.get(k, i)).abs() < 1e-4);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn projections_are_idempotent_and_adjoint(
            a in -0.9f64..0.9,
            c in prop::collection::vec(-2.0f64..2.0, 4),
            d in prop::collection::vec(-2.0f64..2.0, 4),
        ) {
            let q = sample_q(129, a);
            let g = q.grid();
            let mk = |c: &[f64]| ScalarField::from_fn(g, |x| {
                c[0] + c[1] * x + c[2] * libm::sin(3.0 * x) + c[3] * libm::cos(7.0 * x)
            }).unwrap();
            let (x, y) = (mk(&c), mk(&d));
            let px = project_tangent(&q, &x).unwrap();
            let ppx = project_tangent(&q, &px).unwrap();
            let scale = 1.0 + x.max_abs();
            prop_assert!(px.zip_with(&ppx, |u, v| (u - v).abs()).unwrap().max_abs() < 1e-12 * scale);
            let py = project_tangent(&q, &y).unwrap();
            let lhs = metric_inner(&q, &px, &y).unwrap();
            let rhs = metric_inner(&q, &x, &py).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12 * scale * (1.0 + y.max_abs()));

            let pp = project_cotangent(&q, &x).unwrap();
            let ppp = project_cotangent(&q, &pp).unwrap();
            prop_assert!(pp.zip_with(&ppp, |u, v| (u - v).abs()).unwrap().max_abs() < 1e-12 * scale);
            let f = Frame::of(&q).unwrap();
            let m = f.cotangent_moments(pp.values());
            prop_assert!(m[0].abs() < 1e-12 * scale && m[1].abs() < 1e-12 * scale);
        }

        #[test]
        fn chart_round_trip(a in -0.9f64..0.9) {
            let q = sample_q(513, a);
            let phi = phi_of_q(&q).unwrap();
            let back = q_of_phi(&phi).unwrap();
            let err = back.zip_with(&q, |u, v| (u - v).abs()).unwrap().max_abs();
            let h = q.grid().spacing();
            // C h² with C scaled by the size of q'''
            let c = 20.0 * (1.0 + q.max_abs()).powi(4);
            prop_assert!(err < c * h * h, "err {} bound {}", err, c * h * h);
        }
    }
}
