//! Moments and the moment-matching family `F = S − GL`, `H = CΠ`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, eigenvalues, is_hurwitz, solve_lyapunov, solve_sylvester, Matrix, SylvesterSolution};
use crate::systems::{ReducedOrderModel, SignalGenerator, StateSpaceSystem, SPECTRAL_TOL};

/// Sylvester solution `Π` of `AΠ + BL = ΠS` for the plant/generator pair.
pub fn sylvester_for(sys: &StateSpaceSystem, gen: &SignalGenerator) -> Result<SylvesterSolution> {
    Ok(solve_sylvester(sys.a(), sys.b(), gen.l(), gen.s())?)
}

/// The moment `CΠ` of the plant at σ(S).
pub fn compute_moment(sys: &StateSpaceSystem, gen: &SignalGenerator) -> Result<Matrix> {
    let sol = sylvester_for(sys, gen)?;
    Ok(sys.c() * sol.pi)
}

/// Builds the reduced model with `F = S − GL`, `H = CΠ`.
///
/// Fails when σ(S) and σ(S − GL) are closer than [`SPECTRAL_TOL`].
pub fn build_rom(sys: &StateSpaceSystem, gen: &SignalGenerator, g: &Matrix) -> Result<ReducedOrderModel> {
    if g.shape() != (gen.nu(), 1) {
        return Err(Error::InvalidInput(format!(
            "G must be {}x1, got {:?}",
            gen.nu(),
            g.shape()
        )));
    }
    let sol = sylvester_for(sys, gen)?;
    let f = gen.s() - g * gen.l();
    let separation = eigenvalues(gen.s())?.separation(&eigenvalues(&f)?);
    if !(separation > SPECTRAL_TOL) {
        return Err(Error::RomCollision(separation));
    }
    let h = sys.c() * &sol.pi;
    Ok(ReducedOrderModel {
        generator: gen.clone(),
        g: g.clone(),
        h,
        pi: sol.pi,
    })
}

/// `G = (ΠᵀPΠ)⁻¹ΠᵀPB` with `AᵀP + PA = −Q`, which renders `S − GL` Hurwitz.
pub fn design_g_stabilizing(sys: &StateSpaceSystem, gen: &SignalGenerator, q: &Matrix) -> Result<Matrix> {
    let p = solve_lyapunov(sys.a(), q)?;
    let pi = sylvester_for(sys, gen)?.pi;
    let pt_p = pi.transpose() * &p;
    let gram = &pt_p * &pi;
    let rhs = &pt_p * sys.b();
    let g = gram
        .cholesky()
        .ok_or_else(|| Error::Internal("ΠᵀPΠ is not positive definite; Π lost full column rank".into()))?
        .solve(&rhs);
    let f = gen.s() - &g * gen.l();
    if !is_hurwitz(&f, 0.0)? {
        return Err(Error::Internal(format!(
            "S − GL not Hurwitz after the Lyapunov-based design (abscissa {:.3e})",
            linalg::spectral_abscissa(&f)?
        )));
    }
    Ok(g)
}

/// Strategy for choosing `G` within the moment-matching family.
///
/// [`LyapunovProjection`] and [`ExplicitGain`] cover the built-in modes; other selections
/// (for example an H∞-optimal `G`) plug in by implementing this trait.
pub trait GainSelection {
    fn select(&self, sys: &StateSpaceSystem, gen: &SignalGenerator) -> Result<Matrix>;
}

/// Lyapunov-weighted projection with weight `Q`.
#[derive(Debug, Clone)]
pub struct LyapunovProjection {
    pub q: Matrix,
}

impl GainSelection for LyapunovProjection {
    fn select(&self, sys: &StateSpaceSystem, gen: &SignalGenerator) -> Result<Matrix> {
        design_g_stabilizing(sys, gen, &self.q)
    }
}

/// A user-supplied `G`.
#[derive(Debug, Clone)]
pub struct ExplicitGain(pub Matrix);

impl GainSelection for ExplicitGain {
    fn select(&self, _sys: &StateSpaceSystem, gen: &SignalGenerator) -> Result<Matrix> {
        if self.0.shape() != (gen.nu(), 1) {
            return Err(Error::InvalidInput(format!(
                "G must be {}x1, got {:?}",
                gen.nu(),
                self.0.shape()
            )));
        }
        Ok(self.0.clone())
    }
}

/// One interpolation point of the transfer-function check.
#[derive(Debug, Clone, Serialize)]
pub struct InterpolationCheck {
    pub point_re: f64,
    pub point_im: f64,
    pub full_re: f64,
    pub full_im: f64,
    pub rom_re: f64,
    pub rom_im: f64,
    pub error: f64,
    pub passes: bool,
}

/// Output of [`verify_moment_matching`].
#[derive(Debug, Clone, Serialize)]
pub struct MomentMatchingReport {
    /// `‖P' − I‖_F` where `FP' + GL = P'S`.
    pub p_identity_error: f64,
    /// `‖HP' − CΠ‖_F`.
    pub moment_error: f64,
    pub moment_check: bool,
    pub transfer: Vec<InterpolationCheck>,
    pub tolerance: f64,
}

impl MomentMatchingReport {
    pub fn passes(&self) -> bool {
        self.moment_check && self.transfer.iter().all(|c| c.passes)
    }

    pub fn max_transfer_error(&self) -> f64 {
        self.transfer.iter().map(|c| c.error).fold(0.0, f64::max)
    }
}

/// `C(sI − A)⁻¹B` by a complex linear solve.
pub fn transfer_value(a: &Matrix, b: &Matrix, c: &Matrix, s: Complex64) -> Result<Complex64> {
    let n = a.nrows();
    let mut m = DMatrix::<Complex64>::from_fn(n, n, |i, j| Complex64::new(-a[(i, j)], 0.0));
    for i in 0..n {
        m[(i, i)] += s;
    }
    let rhs = DMatrix::<Complex64>::from_fn(n, 1, |i, _| Complex64::new(b[(i, 0)], 0.0));
    let x = m.lu().solve(&rhs).ok_or(crate::error::LinalgError::Singular)?;
    Ok((0..n).map(|i| x[(i, 0)] * c[(0, i)]).sum())
}

/// Two independent moment-matching checks.
///
/// (a) solves `FP' + GL = P'S` and tests `‖HP' − CΠ‖ ≤ tol`;
/// (b) compares `C(s_kI − A)⁻¹B` with `H(s_kI − F)⁻¹G` at each
/// `s_k ∈ σ(S)`, relative to `|C(s_kI − A)⁻¹B| + 1`. Check (b) assumes a
/// simple σ(S).
pub fn verify_moment_matching(
    sys: &StateSpaceSystem,
    rom: &ReducedOrderModel,
    tol: f64,
) -> Result<MomentMatchingReport> {
    let gen = rom.generator();
    let f = rom.f();
    let p_prime = solve_sylvester(&f, rom.g(), gen.l(), gen.s())?.pi;
    let nu = gen.nu();
    let p_identity_error = (&p_prime - Matrix::identity(nu, nu)).norm();
    let plant_moment = sys.c() * rom.pi();
    let moment_error = (rom.h() * &p_prime - plant_moment).norm();

    let points = eigenvalues(gen.s())?;
    let mut transfer = Vec::with_capacity(points.len());
    for &s in &points.eigenvalues {
        let full = transfer_value(sys.a(), sys.b(), sys.c(), s)?;
        let reduced = transfer_value(&f, rom.g(), rom.h(), s)?;
        let error = (full - reduced).norm();
        transfer.push(InterpolationCheck {
            point_re: s.re,
            point_im: s.im,
            full_re: full.re,
            full_im: full.im,
            rom_re: reduced.re,
            rom_im: reduced.im,
            error,
            passes: error <= tol * (1.0 + full.norm()),
        });
    }
    Ok(MomentMatchingReport {
        p_identity_error,
        moment_error,
        moment_check: moment_error <= tol,
        transfer,
        tolerance: tol,
    })
}
