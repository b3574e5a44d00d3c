//! Rank-based controllability, observability and detectability tests.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{eigenvalues, Matrix};
use crate::error::LinalgError;

/// Thresholds for numerical rank decisions.
///
/// A singular value counts as zero when it is below
/// `relative · (σ_max + 1)`. An eigenvalue counts as marginal or unstable
/// for detectability when its real part is at least
/// `-marginal · (1 + ‖S‖_F)`; the slack keeps computed imaginary-axis
/// eigenvalues (real part of order 1e-17) on the checked side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTolerance {
    pub relative: f64,
    pub marginal: f64,
}

impl Default for RankTolerance {
    fn default() -> Self {
        Self {
            relative: 1e-8,
            marginal: 1e-10,
        }
    }
}

/// Numerical rank of a real matrix.
pub fn matrix_rank(m: &Matrix, tol: RankTolerance) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol.relative * (smax + 1.0)).count()
}

fn complex_rank(m: &DMatrix<Complex64>, tol: RankTolerance) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol.relative * (smax + 1.0)).count()
}

fn pbh_rank_at(s: &Matrix, c: &Matrix, lambda: Complex64, tol: RankTolerance) -> usize {
    let nu = s.nrows();
    let m = c.nrows();
    let mut stacked = DMatrix::<Complex64>::zeros(nu + m, nu);
    for i in 0..nu {
        for j in 0..nu {
            stacked[(i, j)] = Complex64::new(s[(i, j)], 0.0);
        }
        stacked[(i, i)] -= lambda;
    }
    for i in 0..m {
        for j in 0..nu {
            stacked[(nu + i, j)] = Complex64::new(c[(i, j)], 0.0);
        }
    }
    complex_rank(&stacked, tol)
}

fn check_pbh_dims(s: &Matrix, c: &Matrix) -> Result<usize, LinalgError> {
    let nu = super::ensure_square(s)?;
    if c.ncols() != nu {
        return Err(LinalgError::DimensionMismatch(format!(
            "S is {nu}x{nu} but output map has {} columns",
            c.ncols()
        )));
    }
    Ok(nu)
}

/// PBH detectability of `(S, C)`: `rank([S − λI; C]) = ν` for every
/// eigenvalue with non-negative real part.
pub fn pbh_detectable(s: &Matrix, cstack: &Matrix) -> Result<bool, LinalgError> {
    pbh_detectable_with(s, cstack, RankTolerance::default())
}

pub fn pbh_detectable_with(s: &Matrix, cstack: &Matrix, tol: RankTolerance) -> Result<bool, LinalgError> {
    let nu = check_pbh_dims(s, cstack)?;
    let floor = -tol.marginal * (1.0 + s.norm());
    let spectrum = eigenvalues(s)?;
    Ok(spectrum
        .eigenvalues
        .iter()
        .filter(|l| l.re >= floor)
        .all(|&l| pbh_rank_at(s, cstack, l, tol) == nu))
}

/// PBH observability of `(S, C)`: the rank condition at every eigenvalue.
pub fn pbh_observable(s: &Matrix, c: &Matrix) -> Result<bool, LinalgError> {
    let nu = check_pbh_dims(s, c)?;
    let tol = RankTolerance::default();
    let spectrum = eigenvalues(s)?;
    Ok(spectrum.eigenvalues.iter().all(|&l| pbh_rank_at(s, c, l, tol) == nu))
}

/// Controllability of a single-input pair `(A, b)`.
///
/// Builds an orthonormal Krylov basis with twice-repeated Gram–Schmidt
/// (the controllability Hessenberg form); the pair is controllable iff no
/// sub-diagonal entry falls below `relative · (‖A‖_F + 1)`. This is the
/// same property as the PBH rank test at all eigenvalues, in O(n³) instead
/// of one SVD per eigenvalue.
pub fn controllable(a: &Matrix, b: &Matrix) -> Result<bool, LinalgError> {
    let n = super::ensure_square(a)?;
    if b.nrows() != n || b.ncols() != 1 {
        return Err(LinalgError::DimensionMismatch(format!(
            "A {n}x{n} needs an {n}x1 input map, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    let tol = RankTolerance::default().relative * (a.norm() + 1.0);
    let b0 = b.column(0).into_owned();
    let nb = b0.norm();
    if !(nb > tol) {
        return Ok(false);
    }
    let mut basis = Matrix::zeros(n, n);
    basis.set_column(0, &(b0 / nb));
    for k in 0..n.saturating_sub(1) {
        let mut w = a * basis.column(k);
        for _ in 0..2 {
            let q = basis.columns(0, k + 1);
            let coeffs = q.transpose() * &w;
            w -= q * coeffs;
        }
        let h = w.norm();
        if !(h > tol) {
            return Ok(false);
        }
        basis.set_column(k + 1, &(w / h));
    }
    Ok(true)
}

/// Observability of a single-output pair `(A, c)`, by duality.
pub fn observable(a: &Matrix, c: &Matrix) -> Result<bool, LinalgError> {
    controllable(&a.transpose(), &c.transpose())
}
