//! Dense real linear-algebra kernels: eigenvalues through a real Schur
//! reduction, Sylvester and Lyapunov solvers, the matrix exponential and
//! PBH rank tests.
//!
//! Everything here is a pure function of its inputs. Matrices are
//! `nalgebra::DMatrix<f64>`; only the spectral routines are written in-repo,
//! factorizations (LU, SVD, symmetric eigen) come from nalgebra.

mod eigen;
mod expm;
mod pbh;
mod schur;
mod sylvester;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::LinalgError;

pub use eigen::{eigenvalues, is_hurwitz, spectral_abscissa, spectral_radius};
pub use expm::matrix_exponential;
pub use pbh::{
    controllable, matrix_rank, observable, pbh_detectable, pbh_detectable_with, pbh_observable, RankTolerance,
};
pub use schur::{real_schur, RealSchur};
pub use sylvester::{
    solve_lyapunov, solve_sylvester, solve_sylvester_kronecker, sylvester_residual_bound, SylvesterSolution,
};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Eigenvalues of a real square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest real part; `-inf` for an empty spectrum.
    pub fn abscissa(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest real part; `+inf` for an empty spectrum.
    pub fn min_real(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    pub fn radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Minimum pairwise distance between this spectrum and `other`.
    pub fn separation(&self, other: &Spectrum) -> f64 {
        let mut best = f64::INFINITY;
        for a in &self.eigenvalues {
            for b in &other.eigenvalues {
                best = best.min((a - b).norm());
            }
        }
        best
    }

    /// Eigenvalues sorted by (real, imaginary) part.
    pub fn sorted(&self) -> Vec<Complex64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }
}

pub(crate) fn ensure_square(m: &Matrix) -> Result<usize, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_finite(m: &Matrix) -> Result<(), LinalgError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

/// Spectral (2-induced) norm.
pub fn norm2(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn norm_fro(m: &Matrix) -> f64 {
    m.norm()
}

/// Block-diagonal concatenation of square or rectangular blocks.
pub fn block_diag(blocks: &[Matrix]) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Kronecker product.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Symmetric eigen-extremes `(λmin, λmax)` of a symmetric matrix.
pub fn sym_eig_extremes(m: &Matrix) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// True when `m` is symmetric (relative tolerance) and Cholesky succeeds.
pub fn is_spd(m: &Matrix) -> bool {
    if m.nrows() != m.ncols() || m.is_empty() {
        return false;
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return false;
    }
    m.clone().cholesky().is_some()
}
