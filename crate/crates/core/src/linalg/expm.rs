//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant (Higham, 2005).

use super::{ensure_finite, ensure_square, Matrix};
use crate::error::LinalgError;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// `exp(M·t)`. Reports [`LinalgError::Overflow`] instead of returning
/// infinities.
pub fn matrix_exponential(m: &Matrix, t: f64) -> Result<Matrix, LinalgError> {
    let n = ensure_square(m)?;
    ensure_finite(m)?;
    if !t.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let a = m * t;
    let norm1 = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if norm1 == 0.0 {
        return Ok(Matrix::identity(n, n));
    }

    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    if squarings > 1000 {
        return Err(LinalgError::Overflow(norm1));
    }
    let a = a * 2f64.powi(-squarings);

    let id = Matrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];

    let mut r = (&v - &u).lu().solve(&(&v + &u)).ok_or(LinalgError::Singular)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().all(|x| x.is_finite()) {
        Ok(r)
    } else {
        Err(LinalgError::Overflow(norm1))
    }
}
