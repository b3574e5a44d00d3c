use super::{real_schur, Matrix, Spectrum};
use crate::error::LinalgError;

/// All eigenvalues of a real square matrix via real Schur reduction.
///
/// Fails on non-square or non-finite input, or when the QR iteration exceeds
/// `100·n` sweeps.
pub fn eigenvalues(m: &Matrix) -> Result<Spectrum, LinalgError> {
    let schur = real_schur(m)?;
    Ok(Spectrum {
        eigenvalues: schur.eigenvalues,
    })
}

/// Maximum real part of the spectrum.
pub fn spectral_abscissa(m: &Matrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues(m)?.abscissa())
}

pub fn spectral_radius(m: &Matrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues(m)?.radius())
}

/// True iff every eigenvalue has real part strictly below `-margin`.
pub fn is_hurwitz(m: &Matrix, margin: f64) -> Result<bool, LinalgError> {
    Ok(spectral_abscissa(m)? < -margin)
}
