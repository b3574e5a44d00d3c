//! Sylvester `AΠ + BL = ΠS` and Lyapunov `AᵀP + PA = −Q` solvers.
//!
//! The Sylvester solver reduces only the (small) generator matrix `S` to real
//! Schur form and then sweeps its diagonal blocks, so each step is an n×n
//! (or 2n×2n for a complex pair) dense solve. The Lyapunov solver is
//! Bartels–Stewart on the real Schur form of `A`. A Kronecker-vectorized
//! Sylvester solve is kept for small problems and cross-checks.

use nalgebra::DVector;

use super::{ensure_finite, ensure_square, matrix_rank, norm_fro, real_schur, Matrix, RankTolerance};
use crate::error::LinalgError;

/// Pivots of the shifted plant matrix below this fraction of the largest
/// pivot are treated as a collision between σ(A) and σ(S).
const COLLISION_PIVOT: f64 = 1e-14;

/// Relative residual tolerance shared by the Sylvester and Lyapunov
/// post-conditions.
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SylvesterSolution {
    pub pi: Matrix,
    /// `‖AΠ + BL − ΠS‖_F`
    pub residual: f64,
    /// The bound the residual was checked against.
    pub bound: f64,
    pub rank: usize,
}

/// `1e-9·(1 + ‖A‖‖Π‖ + ‖Π‖‖S‖)` in Frobenius norms.
pub fn sylvester_residual_bound(a: &Matrix, pi: &Matrix, s: &Matrix) -> f64 {
    RESIDUAL_TOL * (1.0 + norm_fro(a) * norm_fro(pi) + norm_fro(pi) * norm_fro(s))
}

fn check_sylvester_dims(a: &Matrix, b: &Matrix, l: &Matrix, s: &Matrix) -> Result<(usize, usize), LinalgError> {
    let n = ensure_square(a)?;
    let nu = ensure_square(s)?;
    if b.nrows() != n || b.ncols() != l.nrows() || l.ncols() != nu {
        return Err(LinalgError::DimensionMismatch(format!(
            "A {n}x{n}, B {}x{}, L {}x{}, S {nu}x{nu}",
            b.nrows(),
            b.ncols(),
            l.nrows(),
            l.ncols()
        )));
    }
    for m in [a, b, l, s] {
        ensure_finite(m)?;
    }
    Ok((n, nu))
}

/// Solve `AΠ + BL = ΠS` for `Π` (n×ν).
///
/// Errors with [`LinalgError::SpectraCollide`] when a shifted plant matrix is
/// numerically singular, i.e. an interpolation point sits on a plant pole.
pub fn solve_sylvester(a: &Matrix, b: &Matrix, l: &Matrix, s: &Matrix) -> Result<SylvesterSolution, LinalgError> {
    let (n, nu) = check_sylvester_dims(a, b, l, s)?;
    let rhs = -(b * l);
    let pi = solve_shifted(a, s, &rhs, n, nu)?;

    let residual = norm_fro(&(a * &pi + b * l - &pi * s));
    let bound = sylvester_residual_bound(a, &pi, s);
    if !(residual <= bound) {
        return Err(LinalgError::Residual { residual, bound });
    }
    let rank = matrix_rank(&pi, RankTolerance::default());
    Ok(SylvesterSolution {
        pi,
        residual,
        bound,
        rank,
    })
}

/// Solve `A X − X S = R` using the real Schur form of `S`.
fn solve_shifted(a: &Matrix, s: &Matrix, r: &Matrix, n: usize, nu: usize) -> Result<Matrix, LinalgError> {
    let schur = real_schur(s)?;
    let (t, u) = (&schur.t, &schur.z);
    let r_u = r * u;
    let mut y = Matrix::zeros(n, nu);

    for &(start, size) in &schur.blocks {
        // rhs = R̃_j + Σ_{i<j} Y_i T_ij
        let mut rhs = r_u.columns(start, size).clone_owned();
        if start > 0 {
            rhs += y.columns(0, start) * t.view((0, start), (start, size));
        }
        if size == 1 {
            let shifted = a - Matrix::identity(n, n) * t[(start, start)];
            let col = lu_solve_checked(shifted, DVector::from_column_slice(rhs.as_slice()))?;
            y.set_column(start, &col);
        } else {
            let tb = t.view((start, start), (2, 2));
            let mut big = Matrix::zeros(2 * n, 2 * n);
            // (I₂ ⊗ A − T_jjᵀ ⊗ I_n) vec(Y_j) = vec(rhs)
            for bc in 0..2 {
                big.view_mut((bc * n, bc * n), (n, n)).copy_from(a);
                for br in 0..2 {
                    let coef = tb[(bc, br)]; // (T_jjᵀ)[br, bc]
                    for i in 0..n {
                        big[(br * n + i, bc * n + i)] -= coef;
                    }
                }
            }
            let v = lu_solve_checked(big, DVector::from_column_slice(rhs.as_slice()))?;
            y.column_mut(start).copy_from(&v.rows(0, n));
            y.column_mut(start + 1).copy_from(&v.rows(n, n));
        }
    }
    Ok(y * u.transpose())
}

fn lu_solve_checked(m: Matrix, rhs: DVector<f64>) -> Result<DVector<f64>, LinalgError> {
    let lu = m.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let d = u[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let pivot = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(pivot > COLLISION_PIVOT) {
        return Err(LinalgError::SpectraCollide { pivot });
    }
    lu.solve(&rhs).ok_or(LinalgError::SpectraCollide { pivot })
}

/// Reference solver: `(I⊗A − Sᵀ⊗I) vec(Π) = −vec(BL)` as one dense system.
pub fn solve_sylvester_kronecker(a: &Matrix, b: &Matrix, l: &Matrix, s: &Matrix) -> Result<Matrix, LinalgError> {
    let (n, nu) = check_sylvester_dims(a, b, l, s)?;
    let big = Matrix::identity(nu, nu).kronecker(a) - s.transpose().kronecker(&Matrix::identity(n, n));
    let rhs = -(b * l);
    let v = lu_solve_checked(big, DVector::from_column_slice(rhs.as_slice()))?;
    Ok(Matrix::from_column_slice(n, nu, v.as_slice()))
}

/// Solve `AᵀP + PA = −Q` for symmetric positive definite `P`.
///
/// `A` must be Hurwitz and `Q` symmetric positive definite.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix, LinalgError> {
    let n = ensure_square(a)?;
    ensure_finite(a)?;
    ensure_finite(q)?;
    if q.nrows() != n || q.ncols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "A {n}x{n}, Q {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if !super::is_spd(q) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    let schur = real_schur(a)?;
    let abscissa = schur.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if !(abscissa < 0.0) {
        return Err(LinalgError::NotHurwitz(abscissa));
    }

    let (t, z) = (&schur.t, &schur.z);
    let c = -(z.transpose() * q * z);
    let x = solve_quasi_triangular_lyapunov(t, &c, &schur.blocks)?;
    let p = z * x * z.transpose();
    let p = (&p + p.transpose()) * 0.5;

    let residual = norm_fro(&(a.transpose() * &p + &p * a + q));
    let bound = RESIDUAL_TOL * (1.0 + norm_fro(a) * norm_fro(&p));
    if !(residual <= bound) {
        return Err(LinalgError::Residual { residual, bound });
    }
    let lmin = p
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(lmin > 0.0) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    Ok(p)
}

/// Solve `Tᵀ X + X T = C` for upper quasi-triangular `T` with the given
/// diagonal blocks, sweeping block rows then block columns in order.
fn solve_quasi_triangular_lyapunov(t: &Matrix, c: &Matrix, blocks: &[(usize, usize)]) -> Result<Matrix, LinalgError> {
    let n = t.nrows();
    let mut x = Matrix::zeros(n, n);
    for &(ri, p) in blocks {
        for &(cj, q) in blocks {
            let mut rhs = c.view((ri, cj), (p, q)).clone_owned();
            for a in 0..p {
                for b in 0..q {
                    let mut acc = 0.0;
                    // Σ_{k<i} T_kiᵀ X_kj
                    for r in 0..ri {
                        acc += t[(r, ri + a)] * x[(r, cj + b)];
                    }
                    // Σ_{k<j} X_ik T_kj
                    for col in 0..cj {
                        acc += x[(ri + a, col)] * t[(col, cj + b)];
                    }
                    rhs[(a, b)] -= acc;
                }
            }
            let ta = t.view((ri, ri), (p, p)).transpose();
            let tb = t.view((cj, cj), (q, q)).clone_owned();
            let blk = small_sylvester(&ta, &tb, &rhs)?;
            x.view_mut((ri, cj), (p, q)).copy_from(&blk);
        }
    }
    Ok(x)
}

/// `Ta X + X Tb = R` for blocks of size at most 2.
fn small_sylvester(ta: &Matrix, tb: &Matrix, r: &Matrix) -> Result<Matrix, LinalgError> {
    let (p, q) = (ta.nrows(), tb.nrows());
    let k = Matrix::identity(q, q).kronecker(ta) + tb.transpose().kronecker(&Matrix::identity(p, p));
    let v = k
        .lu()
        .solve(&DVector::from_column_slice(r.clone_owned().as_slice()))
        .ok_or(LinalgError::Singular)?;
    Ok(Matrix::from_column_slice(p, q, v.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{block_diag, is_hurwitz};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(r: usize, c: usize, v: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, v)
    }

    fn gamma(w: f64) -> Matrix {
        m(2, 2, &[0.0, w, -w, 0.0])
    }

    fn random_hurwitz(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let raw = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let shift = crate::linalg::spectral_abscissa(&raw).unwrap() + rng.gen_range(0.1..1.0);
        raw - Matrix::identity(n, n) * shift
    }

    #[test]
    fn scalar_sylvester() {
        let sol = solve_sylvester(&m(1, 1, &[-1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[0.0])).unwrap();
        assert!((sol.pi[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(sol.rank, 1);
    }

    #[test]
    fn decoupled_sylvester() {
        let a = m(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let sol = solve_sylvester(&a, &m(2, 1, &[1.0, 1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[0.0])).unwrap();
        assert!((sol.pi[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((sol.pi[(1, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rotation_generator_sylvester() {
        // −π1 + 1 = −π2, −π2 = π1  →  π = [0.5, −0.5]; C(jI − A)⁻¹B = (1 − j)/2.
        let sol = solve_sylvester(&m(1, 1, &[-1.0]), &m(1, 1, &[1.0]), &m(1, 2, &[1.0, 0.0]), &gamma(1.0)).unwrap();
        assert!((sol.pi[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((sol.pi[(0, 1)] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn collision_is_reported() {
        let err =
            solve_sylvester(&m(1, 1, &[-1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[-1.0])).unwrap_err();
        assert!(matches!(err, LinalgError::SpectraCollide { .. }));
    }

    #[test]
    fn matches_kronecker_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(1..25);
            let a = random_hurwitz(n, &mut rng);
            let b = Matrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
            let s = block_diag(&[
                m(1, 1, &[0.0]),
                gamma(rng.gen_range(0.1..2.0)),
                gamma(rng.gen_range(2.1..4.0)),
            ]);
            let l = Matrix::from_element(1, 5, 1.0);
            let fast = solve_sylvester(&a, &b, &l, &s).unwrap();
            let reference = solve_sylvester_kronecker(&a, &b, &l, &s).unwrap();
            assert!((&fast.pi - &reference).norm() <= 1e-9 * (1.0 + reference.norm()));
        }
    }

    #[test]
    fn lyapunov_examples() {
        let p = solve_lyapunov(&m(1, 1, &[-1.0]), &m(1, 1, &[1.0])).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        let p = solve_lyapunov(&m(2, 2, &[-1.0, 0.0, 0.0, -2.0]), &Matrix::identity(2, 2)).unwrap();
        assert!((&p - m(2, 2, &[0.5, 0.0, 0.0, 0.25])).norm() < 1e-15);
    }

    /// Kronecker oracle: (I⊗Aᵀ + Aᵀ⊗I) vec(P) = −vec(Q).
    fn lyapunov_kronecker(a: &Matrix, q: &Matrix) -> Matrix {
        let n = a.nrows();
        let at = a.transpose();
        let big = Matrix::identity(n, n).kronecker(&at) + at.kronecker(&Matrix::identity(n, n));
        let v = big.lu().solve(&DVector::from_column_slice((-q).as_slice())).unwrap();
        Matrix::from_column_slice(n, n, v.as_slice())
    }

    #[test]
    fn lyapunov_random_against_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let a = random_hurwitz(6, &mut rng);
            let q = Matrix::identity(6, 6);
            let p = solve_lyapunov(&a, &q).unwrap();
            let oracle = lyapunov_kronecker(&a, &q);
            assert!((&p - &oracle).norm() < 1e-9 * (1.0 + oracle.norm()));
            assert!((&p - p.transpose()).amax() == 0.0);
            assert!(p.clone().cholesky().is_some());
        }
    }

    #[test]
    fn lyapunov_rejects_bad_inputs() {
        let unstable = m(1, 1, &[1.0]);
        assert!(matches!(
            solve_lyapunov(&unstable, &m(1, 1, &[1.0])),
            Err(LinalgError::NotHurwitz(_))
        ));
        let indefinite = m(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(
            solve_lyapunov(&m(2, 2, &[-1.0, 0.0, 0.0, -2.0]), &indefinite),
            Err(LinalgError::NotPositiveDefinite)
        );
        assert!(is_hurwitz(&m(1, 1, &[-1.0]), 0.0).unwrap());
    }
}
