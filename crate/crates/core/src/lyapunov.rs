//! Discrete Lyapunov equation `S = A S A' + Q`.

use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, Matrix};
use crate::scalar::Scalar;

const STABILITY_MARGIN: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-10;

/// Stationary covariance of `x_t = A x_{t-1} + e_t` with `Var(e_t) = Q`.
///
/// Doubling recursion on the series `sum_m A^m Q (A')^m`: after `n` steps the
/// partial sum covers `2^n` terms.
pub fn lyapunov_solve<S: Scalar>(a: &Matrix<S>, q: &Matrix<S>) -> Result<Matrix<S>> {
    if !a.is_square() || !q.is_square() || a.nrows() != q.nrows() {
        return Err(Error::ShapeMismatch("A and Q must be square and conformable".into()));
    }
    let radius = spectral_radius(a);
    if !(radius < S::one() - S::lit(STABILITY_MARGIN)) {
        return Err(Error::NonStationary {
            radius: radius.to_f64_lossy(),
        });
    }
    let mut s = q.symmetrized();
    let mut ak = a.clone();
    // f32 cannot reach 1e-10; stop at its own resolution instead.
    let tol = S::lit(RESIDUAL_TOL).max(S::epsilon() * S::lit(64.0));
    for _ in 0..64 {
        let term = ak.sandwich(&s);
        s = s.add(&term).symmetrized();
        let scale = s.max_abs().max(S::min_positive_value());
        ak = ak.matmul(&ak);
        if term.max_abs() <= S::epsilon() * scale || ak.max_abs() == S::zero() {
            break;
        }
    }
    let residual = s.sub(&a.sandwich(&s)).sub(q).frobenius_norm();
    let rel = residual / s.frobenius_norm().max(S::min_positive_value());
    if !(rel <= tol) {
        return Err(Error::NoConvergence {
            residual: rel.to_f64_lossy(),
        });
    }
    Ok(s)
}
