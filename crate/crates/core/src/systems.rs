//! Plant, signal generator, reduced model and observer records, with the
//! standing-assumption validators and generator builders.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, block_diag, controllable, eigenvalues, observable, pbh_observable, Matrix, Spectrum};

/// Minimum complex distance between σ(S) and σ(A) (or σ(S) and σ(F))
/// before the spectra are considered to collide.
pub const SPECTRAL_TOL: f64 = 1e-8;

fn check_finite(name: &str, m: &Matrix) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} has non-finite entries")))
    }
}

/// Single-input single-output plant `ẋ = Ax + Bu`, `y = Cx`.
#[derive(Debug, Clone)]
pub struct StateSpaceSystem {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    spectrum: OnceLock<Spectrum>,
}

impl StateSpaceSystem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || n == 0 {
            return Err(Error::InvalidInput(format!(
                "A must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.shape() != (n, 1) {
            return Err(Error::InvalidInput(format!("B must be {n}x1, got {:?}", b.shape())));
        }
        if c.shape() != (1, n) {
            return Err(Error::InvalidInput(format!("C must be 1x{n}, got {:?}", c.shape())));
        }
        check_finite("A", &a)?;
        check_finite("B", &b)?;
        check_finite("C", &c)?;
        Ok(Self {
            a,
            b,
            c,
            spectrum: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    /// σ(A), computed once and cached.
    pub fn spectrum(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = eigenvalues(&self.a)?;
        Ok(self.spectrum.get_or_init(|| s))
    }
}

/// Autonomous generator `ω̇ = Sω`, `u = Lω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalGenerator {
    s: Matrix,
    l: Matrix,
}

impl SignalGenerator {
    pub fn new(s: Matrix, l: Matrix) -> Result<Self> {
        let nu = s.nrows();
        if s.ncols() != nu || nu == 0 {
            return Err(Error::InvalidInput(format!(
                "S must be square and non-empty, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if l.shape() != (1, nu) {
            return Err(Error::InvalidInput(format!("L must be 1x{nu}, got {:?}", l.shape())));
        }
        check_finite("S", &s)?;
        check_finite("L", &l)?;
        Ok(Self { s, l })
    }

    pub fn nu(&self) -> usize {
        self.s.nrows()
    }

    pub fn s(&self) -> &Matrix {
        &self.s
    }

    pub fn l(&self) -> &Matrix {
        &self.l
    }

    /// Generator output `L exp(S t) ω0`.
    pub fn output(&self, omega0: &linalg::Vector, t: f64) -> Result<f64> {
        let e = linalg::matrix_exponential(&self.s, t)?;
        Ok((&self.l * e * omega0)[(0, 0)])
    }
}

/// `Γ(ω) = [[0, ω], [−ω, 0]]`, whose spectrum is `{±jω}`.
pub fn gamma_block(omega: f64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[0.0, omega, -omega, 0.0])
}

/// `S = blockdiag(0?, Γ(f1), …, Γ(fk))` with `L = [1 … 1]`.
pub fn build_generator(dc: bool, frequencies: &[f64]) -> Result<SignalGenerator> {
    for (i, &f) in frequencies.iter().enumerate() {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::InvalidInput(format!(
                "frequency {f} must be positive and finite"
            )));
        }
        if frequencies[..i].iter().any(|&g| (g - f).abs() <= SPECTRAL_TOL) {
            return Err(Error::InvalidInput(format!(
                "duplicate frequency {f}: the generator spectrum would not be simple"
            )));
        }
    }
    let mut blocks = Vec::with_capacity(frequencies.len() + 1);
    if dc {
        blocks.push(Matrix::zeros(1, 1));
    }
    blocks.extend(frequencies.iter().map(|&f| gamma_block(f)));
    if blocks.is_empty() {
        return Err(Error::InvalidInput(
            "generator needs a DC term or at least one frequency".into(),
        ));
    }
    let s = block_diag(&blocks);
    let nu = s.nrows();
    SignalGenerator::new(s, Matrix::from_element(1, nu, 1.0))
}

/// Result of [`validate_sa1`].
#[derive(Debug, Clone, Serialize)]
pub struct Sa1Report {
    pub hurwitz: bool,
    pub spectral_abscissa: f64,
    pub controllable: bool,
    pub observable: bool,
}

impl Sa1Report {
    pub fn passes(&self) -> bool {
        self.hurwitz && self.controllable && self.observable
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.hurwitz {
            out.push(format!(
                "A is not Hurwitz (spectral abscissa {:.6e})",
                self.spectral_abscissa
            ));
        }
        if !self.controllable {
            out.push("(A, B) is not controllable".into());
        }
        if !self.observable {
            out.push("(A, C) is not observable".into());
        }
        out
    }
}

/// Checks that the plant is minimal with Hurwitz `A`.
pub fn validate_sa1(sys: &StateSpaceSystem) -> Result<Sa1Report> {
    let abscissa = sys.spectrum()?.abscissa();
    Ok(Sa1Report {
        hurwitz: abscissa < 0.0,
        spectral_abscissa: abscissa,
        controllable: controllable(sys.a(), sys.b())?,
        observable: observable(sys.a(), sys.c())?,
    })
}

/// Result of [`validate_sa2`].
#[derive(Debug, Clone, Serialize)]
pub struct Sa2Report {
    pub generator_observable: bool,
    /// Minimum distance between σ(S) and σ(A).
    pub min_separation: f64,
    pub disjoint: bool,
    pub imaginary_simple: bool,
    pub warnings: Vec<String>,
}

impl Sa2Report {
    pub fn passes(&self) -> bool {
        self.generator_observable && self.disjoint
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.generator_observable {
            out.push("(S, L) is not observable".into());
        }
        if !self.disjoint {
            out.push(format!(
                "interpolation point collides with plant pole: min |σ(S) − σ(A)| = {:.3e}",
                self.min_separation
            ));
        }
        out
    }
}

/// True when every eigenvalue sits on the imaginary axis and no two coincide.
pub fn imaginary_simple(spectrum: &Spectrum, scale: f64) -> bool {
    let tol = 1e-10 * (1.0 + scale);
    let ev = &spectrum.eigenvalues;
    ev.iter().all(|z| z.re.abs() <= tol)
        && ev
            .iter()
            .enumerate()
            .all(|(i, a)| ev[..i].iter().all(|b| (a - b).norm() > SPECTRAL_TOL))
}

/// Checks generator observability and spectral disjointness from the plant.
///
/// A generator spectrum off the imaginary axis, or with repeated points, is
/// only a warning: the convergence results need observability and
/// disjointness alone, but a marginal simple spectrum is what keeps generator
/// trajectories bounded and the mismatch term meaningful.
pub fn validate_sa2(sys: &StateSpaceSystem, gen: &SignalGenerator) -> Result<Sa2Report> {
    let s_spec = eigenvalues(gen.s())?;
    let min_separation = s_spec.separation(sys.spectrum()?);
    let simple = imaginary_simple(&s_spec, gen.s().norm());
    let mut warnings = Vec::new();
    if !simple {
        warnings.push(
            "σ(S) is not purely imaginary and simple: generator trajectories may be unbounded, \
             so the mismatch term of the error bound may not stay finite"
                .to_string(),
        );
    }
    Ok(Sa2Report {
        generator_observable: pbh_observable(gen.s(), gen.l())?,
        min_separation,
        disjoint: min_separation > SPECTRAL_TOL,
        imaginary_simple: simple,
        warnings,
    })
}

/// Moment-matching model `ξ̇ = Fξ + Gu`, `ψ = Hξ` with `F = S − GL`,
/// `H = CΠ`.
#[derive(Debug, Clone)]
pub struct ReducedOrderModel {
    pub(crate) generator: SignalGenerator,
    pub(crate) g: Matrix,
    pub(crate) h: Matrix,
    pub(crate) pi: Matrix,
}

impl ReducedOrderModel {
    pub fn generator(&self) -> &SignalGenerator {
        &self.generator
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    /// `F = S − GL`, always rebuilt from the generator and `G`.
    pub fn f(&self) -> Matrix {
        self.generator.s() - &self.g * self.generator.l()
    }

    /// `H = CΠ`, the plant moment.
    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn pi(&self) -> &Matrix {
        &self.pi
    }

    pub fn nu(&self) -> usize {
        self.generator.nu()
    }

    /// Re-checks the stored invariants against the plant.
    pub fn verify(&self, sys: &StateSpaceSystem) -> Result<RomInvariants> {
        let (a, b, c) = (sys.a(), sys.b(), sys.c());
        let (s, l) = (self.generator.s(), self.generator.l());
        let residual = (a * &self.pi + b * l - &self.pi * s).norm();
        let bound = linalg::sylvester_residual_bound(a, &self.pi, s);
        let moment_error = (c * &self.pi - &self.h).amax();
        let rank = linalg::matrix_rank(&self.pi, linalg::RankTolerance::default());
        let separation = eigenvalues(s)?.separation(&eigenvalues(&self.f())?);
        Ok(RomInvariants {
            sylvester_residual: residual,
            sylvester_bound: bound,
            moment_error,
            rank,
            nu: self.nu(),
            separation,
        })
    }
}

/// Output of [`ReducedOrderModel::verify`].
#[derive(Debug, Clone, Serialize)]
pub struct RomInvariants {
    pub sylvester_residual: f64,
    pub sylvester_bound: f64,
    pub moment_error: f64,
    pub rank: usize,
    pub nu: usize,
    pub separation: f64,
}

impl RomInvariants {
    pub fn holds(&self) -> bool {
        self.sylvester_residual <= self.sylvester_bound
            && self.moment_error == 0.0
            && self.rank == self.nu
            && self.separation > SPECTRAL_TOL
    }
}

/// Observer `ξ̂̇ = (S − GL)ξ̂ + Gu + K(y − CΠξ̂)` with lift `x̂ = Πξ̂`.
#[derive(Debug, Clone)]
pub struct LowDimObserver {
    pub(crate) generator: SignalGenerator,
    pub(crate) g: Matrix,
    pub(crate) k: Matrix,
    pub(crate) c_pi: Matrix,
    pub(crate) pi: Matrix,
    pub(crate) certification: Certification,
}

/// Hurwitz status of the observer state matrix.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Certification {
    pub spectral_abscissa: f64,
    pub margin: f64,
    pub hurwitz: bool,
}

impl LowDimObserver {
    pub fn generator(&self) -> &SignalGenerator {
        &self.generator
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn c_pi(&self) -> &Matrix {
        &self.c_pi
    }

    pub fn pi(&self) -> &Matrix {
        &self.pi
    }

    pub fn nu(&self) -> usize {
        self.generator.nu()
    }

    /// `S − GL − K·CΠ`.
    pub fn state_matrix(&self) -> Matrix {
        self.generator.s() - &self.g * self.generator.l() - &self.k * &self.c_pi
    }

    pub fn certification(&self) -> Certification {
        self.certification
    }

    pub fn is_certified(&self) -> bool {
        self.certification.hurwitz
    }

    /// Full-state estimate `Πξ̂`.
    pub fn lift(&self, xi: &linalg::Vector) -> linalg::Vector {
        &self.pi * xi
    }
}
