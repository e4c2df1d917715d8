//! Reproducing kernel of `H₀²([0,1])`, the Green's function of `∂ₓ⁴` with
//! clamped ends `u(0) = u'(0) = u(1) = u'(1) = 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::landmark::LandmarkState;

/// Arguments this far outside `[0, 1]` are clamped instead of rejected.
const DOMAIN_SLACK: f64 = 1e-12;

/// Which closed form to evaluate.
///
/// `Unclamped` adds the affine term `1 + s t` to the clamped kernel. It is not
/// clamped, so flows generated by it need not preserve `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelModel {
    #[default]
    Clamped,
    Unclamped,
}

impl KernelModel {
    pub fn name(self) -> &'static str {
        match self {
            KernelModel::Clamped => "clamped",
            KernelModel::Unclamped => "paper",
        }
    }

    /// Evaluates `∂₁ᵒʳᵈᵉʳ k(s, t)` without domain checks.
    #[inline]
    pub(crate) fn eval_raw(self, s: f64, t: f64, order: u8) -> f64 {
        let g = -1.0 + 0.5 * (s + t) - s * t / 3.0;
        let gp = 0.5 - t / 3.0;
        let t2 = t * t;
        let clamped = match order {
            0 => {
                let k0 = if s < t { t * s * s / 2.0 - s * s * s / 6.0 } else { s * t2 / 2.0 - t2 * t / 6.0 };
                k0 + g * s * s * t2
            }
            1 => {
                let k0 = if s < t { t * s - s * s / 2.0 } else { t2 / 2.0 };
                k0 + t2 * (gp * s * s + 2.0 * s * g)
            }
            _ => {
                let k0 = if s < t { t - s } else { 0.0 };
                k0 + t2 * (4.0 * gp * s + 2.0 * g)
            }
        };
        match self {
            KernelModel::Clamped => clamped,
            KernelModel::Unclamped => match order {
                0 => clamped + 1.0 + s * t,
                1 => clamped + t,
                _ => clamped,
            },
        }
    }
}

fn check_arg(x: f64) -> Result<f64> {
    if !x.is_finite() || !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x) {
        return Err(Error::OutOfDomain { value: x });
    }
    Ok(x.clamp(0.0, 1.0))
}

/// `∂ₛᵒʳᵈᵉʳ k(s, t)` for `order ∈ {0, 1, 2}` and `s, t ∈ [0, 1]`.
pub fn kernel_eval(model: KernelModel, s: f64, t: f64, order: u8) -> Result<f64> {
    if order > 2 {
        return Err(Error::DerivativeOrder(order));
    }
    let s = check_arg(s)?;
    let t = check_arg(t)?;
    Ok(model.eval_raw(s, t, order))
}

/// Symmetric Gram matrix `K_ij = k(x_i, x_j)` for points in `(0, 1)`, row-major.
pub fn kernel_matrix(model: KernelModel, points: &[f64]) -> Result<Vec<f64>> {
    let n = points.len();
    if let Some(&bad) = points.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::OutOfDomain { value: bad });
    }
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = model.eval_raw(points[i], points[j], 0);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    Ok(m)
}

/// `(v, v', v'')` at `x` for `v = Σ_j k(·, q_j) p_j`.
pub fn velocity_derivatives(model: KernelModel, q: &[f64], p: &[f64], x: f64) -> Result<[f64; 3]> {
    let x = check_arg(x)?;
    let mut out = [0.0; 3];
    for (&qj, &pj) in q.iter().zip(p) {
        let qj = check_arg(qj)?;
        for (order, o) in out.iter_mut().enumerate() {
            *o += model.eval_raw(x, qj, order as u8) * pj;
        }
    }
    Ok(out)
}

/// Eulerian velocity `v(x) = Σ_j k(x, q_j) p_j`.
pub fn velocity_field(model: KernelModel, state: &LandmarkState, x: f64) -> Result<f64> {
    let x = check_arg(x)?;
    let mut v = 0.0;
    for (&qj, &pj) in state.q.iter().zip(&state.p) {
        v += model.eval_raw(x, check_arg(qj)?, 0) * pj;
    }
    Ok(v)
}

/// Centred cubic B-spline with knots at `-2..=2`.
fn bspline3(u: f64) -> f64 {
    let a = u.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        let r = 2.0 - a;
        r * r * r / 6.0
    } else {
        0.0
    }
}

/// Solves a banded system with two sub- and super-diagonals, no pivoting.
/// `bands[i] = [a_{i,i-2}, a_{i,i-1}, a_{i,i}, a_{i,i+1}, a_{i,i+2}]`.
fn solve_pentadiagonal(mut bands: Vec<[f64; 5]>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rhs.len();
    for k in 0..n {
        let piv = bands[k][2];
        if piv.abs() < 1e-300 {
            return Err(Error::SingularSystem);
        }
        for d in 1..=2 {
            let i = k + d;
            if i >= n {
                break;
            }
            let f = bands[i][2 - d] / piv;
            if f == 0.0 {
                continue;
            }
            // row i gets row k * f subtracted; column k+j sits at offset 2 - d + j in row i
            for j in 0..=2 {
                if k + j < n {
                    bands[i][2 - d + j] -= f * bands[k][2 + j];
                }
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in 1..=2 {
            if i + j < n {
                s -= bands[i][2 + j] * x[i + j];
            }
        }
        x[i] = s / bands[i][2];
    }
    Ok(x)
}

/// Independent approximation of `k(s, t)` from a finite-difference solve of
/// `u'''' = δ_s` with clamped ends on `n` nodes.
///
/// The point load is spread with cubic B-spline weights, which makes the scheme
/// exact at the nodes for loads away from the boundary. Requires `n ≥ 201`.
pub fn kernel_oracle_biharmonic(s: f64, t: f64, n: usize) -> Result<f64> {
    if n < 201 {
        return Err(Error::Precondition("biharmonic oracle needs at least 201 nodes"));
    }
    let s = check_arg(s)?;
    let t = check_arg(t)?;
    let h = 1.0 / (n - 1) as f64;
    let m = n - 2;
    let mut bands = vec![[1.0, -4.0, 6.0, -4.0, 1.0]; m];
    // ghost values from u(0) = u'(0) = 0 exact for cubics: u_{-1} = 3u_1 - u_2/2
    bands[0] = [0.0, 0.0, 9.0, -4.5, 1.0];
    bands[m - 1] = [1.0, -4.5, 9.0, 0.0, 0.0];
    bands[1][0] = 0.0;
    bands[m - 2][4] = 0.0;
    let h3 = h * h * h;
    let rhs: Vec<f64> = (1..=m).map(|i| h3 * bspline3((i as f64 * h - s) / h)).collect();
    let mut u = solve_pentadiagonal(bands.clone(), rhs.clone())?;
    // one round of iterative refinement against the rounding of the elimination
    let mut res = vec![0.0; m];
    for i in 0..m {
        let mut ax = 0.0;
        for (j, a) in bands[i].iter().enumerate() {
            let col = i as isize + j as isize - 2;
            if col >= 0 && (col as usize) < m {
                ax += a * u[col as usize];
            }
        }
        res[i] = rhs[i] - ax;
    }
    let du = solve_pentadiagonal(bands, res)?;
    for (a, b) in u.iter_mut().zip(du) {
        *a += b;
    }
    let mut full = vec![0.0; n];
    full[1..=m].copy_from_slice(&u);
    Ok(crate::numerics::interp_uniform(&full, 0.0, h, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Green's function by shooting: `u = a x² + b x³ + (x - s)₊³/6`, with `a, b`
    /// fixed by `u(1) = u'(1) = 0`.
    fn shooting(s: f64, t: f64) -> f64 {
        let r = 1.0 - s;
        // a + b = -r³/6, 2a + 3b = -r²/2
        let b = -r * r / 2.0 + r * r * r / 3.0;
        let a = -r * r * r / 6.0 - b;
        let tail = if t > s { (t - s) * (t - s) * (t - s) / 6.0 } else { 0.0 };
        a * t * t + b * t * t * t + tail
    }

    #[test]
    fn midpoint_value() {
        let k = kernel_eval(KernelModel::Clamped, 0.5, 0.5, 0).unwrap();
        assert!((k - 1.0 / 192.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_values_vanish() {
        for t in [0.0, 0.2, 0.7, 1.0] {
            for order in 0..=1 {
                assert!(kernel_eval(KernelModel::Clamped, 0.0, t, order).unwrap().abs() < 1e-15);
                assert!(kernel_eval(KernelModel::Clamped, 1.0, t, order).unwrap().abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unclamped_variant_adds_affine_term() {
        let k = kernel_eval(KernelModel::Unclamped, 0.5, 0.5, 0).unwrap();
        assert!((k - (1.0 / 192.0 + 1.25)).abs() < 1e-15);
        assert!(kernel_eval(KernelModel::Unclamped, 0.0, 0.3, 0).unwrap() > 0.9);
    }

    #[test]
    fn velocity_examples() {
        let s = LandmarkState::new(vec![0.5], vec![1.0]).unwrap();
        assert!((velocity_field(KernelModel::Clamped, &s, 0.5).unwrap() - 1.0 / 192.0).abs() < 1e-15);
        let s = LandmarkState::new(vec![0.25, 0.75], vec![15.0, -15.0]).unwrap();
        assert!(velocity_field(KernelModel::Clamped, &s, 0.5).unwrap().abs() < 1e-15);
        for x in [0.0, 1.0] {
            assert!(velocity_field(KernelModel::Clamped, &s, x).unwrap().abs() < 1e-15);
            let d = velocity_derivatives(KernelModel::Clamped, &s.q, &s.p, x).unwrap();
            assert!(d[1].abs() < 1e-14);
        }
        let m = kernel_matrix(KernelModel::Clamped, &[0.5]).unwrap();
        assert!((m[0] - 1.0 / 192.0).abs() < 1e-15);
        assert!(kernel_matrix(KernelModel::Clamped, &[0.0, 0.5]).is_err());
    }

    #[test]
    fn oracle_boundary_and_symmetry() {
        assert!(kernel_oracle_biharmonic(0.37, 0.0, 401).unwrap().abs() < 1e-10);
        let a = kernel_oracle_biharmonic(0.3, 0.65, 801).unwrap();
        let b = kernel_oracle_biharmonic(0.65, 0.3, 801).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn domain_and_order_errors() {
        assert!(matches!(kernel_eval(KernelModel::Clamped, 1.2, 0.5, 0), Err(Error::OutOfDomain { .. })));
        assert_eq!(kernel_eval(KernelModel::Clamped, 0.5, 0.5, 3), Err(Error::DerivativeOrder(3)));
        assert!(kernel_oracle_biharmonic(0.5, 0.5, 100).is_err());
    }

    #[test]
    fn matches_shooting_solution() {
        for &s in &[0.1, 0.25, 0.5, 0.8] {
            for &t in &[0.0, 0.05, 0.3, 0.5, 0.77, 1.0] {
                let k = kernel_eval(KernelModel::Clamped, t, s, 0).unwrap();
                assert!((k - shooting(s, t)).abs() < 1e-15, "s={s} t={t}");
            }
        }
    }

    #[test]
    fn biharmonic_oracle_agrees() {
        for &(s, t) in &[(0.5, 0.5), (0.25, 0.75), (0.3, 0.1), (0.9, 0.6)] {
            let k = kernel_eval(KernelModel::Clamped, s, t, 0).unwrap();
            let o = kernel_oracle_biharmonic(s, t, 2001).unwrap();
            assert!((k - o).abs() < 1e-6, "s={s} t={t}: {k} vs {o}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for &(s, t) in &[(0.3, 0.6), (0.7, 0.2), (0.45, 0.55)] {
            for order in 0..2u8 {
                let fd = (kernel_eval(KernelModel::Unclamped, s + h, t, order).unwrap()
                    - kernel_eval(KernelModel::Unclamped, s - h, t, order).unwrap())
                    / (2.0 * h);
                let d = kernel_eval(KernelModel::Unclamped, s, t, order + 1).unwrap();
                assert!((fd - d).abs() < 1e-8, "order {order} at ({s},{t})");
            }
        }
    }

    #[test]
    fn third_derivative_jumps_by_one() {
        let h = 1e-6;
        let t = 0.4;
        let d2 = |s| kernel_eval(KernelModel::Clamped, s, t, 2).unwrap();
        let left = (d2(t - h) - d2(t - 2.0 * h)) / h;
        let right = (d2(t + 2.0 * h) - d2(t + h)) / h;
        assert!((right - left - 1.0).abs() < 1e-4, "jump {}", right - left);
    }

    proptest! {
        #[test]
        fn symmetric(s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
            for model in [KernelModel::Clamped, KernelModel::Unclamped] {
                let a = kernel_eval(model, s, t, 0).unwrap();
                let b = kernel_eval(model, t, s, 0).unwrap();
                prop_assert!((a - b).abs() < 1e-15);
            }
        }

        #[test]
        fn reflection_symmetric(s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
            let a = kernel_eval(KernelModel::Clamped, 1.0 - s, 1.0 - t, 0).unwrap();
            let b = kernel_eval(KernelModel::Clamped, s, t, 0).unwrap();
            prop_assert!((a - b).abs() < 1e-15);
        }

        #[test]
        fn gram_matrix_is_positive_semidefinite(
            pts in prop::collection::vec(0.01f64..0.99, 1..8),
            c in prop::collection::vec(-3.0f64..3.0, 8),
        ) {
            let n = pts.len();
            let m = kernel_matrix(KernelModel::Clamped, &pts).unwrap();
            let mut quad = 0.0;
            for i in 0..n {
                for j in 0..n {
                    quad += c[i] * m[i * n + j] * c[j];
                }
            }
            prop_assert!(quad >= -1e-14);
        }
    }
}
