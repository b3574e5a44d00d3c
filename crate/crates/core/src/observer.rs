//! Low-dimensional observer construction, gain checks and ISS constants.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, eigenvalues, observable, pbh_detectable, solve_lyapunov, spectral_abscissa, sym_eig_extremes, Matrix, Vector,
};
use crate::systems::{Certification, LowDimObserver, ReducedOrderModel, SignalGenerator, StateSpaceSystem};

/// Observer with the default certification margin of zero.
pub fn build_observer(rom: &ReducedOrderModel, k: &Matrix) -> Result<LowDimObserver> {
    build_observer_with_margin(rom, k, 0.0)
}

/// Observer certified when the abscissa of `S − GL − K·CΠ` is below `−margin`.
pub fn build_observer_with_margin(rom: &ReducedOrderModel, k: &Matrix, margin: f64) -> Result<LowDimObserver> {
    let nu = rom.nu();
    if k.shape() != (nu, 1) {
        return Err(Error::InvalidInput(format!("K must be {nu}x1, got {:?}", k.shape())));
    }
    if !k.iter().all(|v| v.is_finite()) || !margin.is_finite() || margin < 0.0 {
        return Err(Error::InvalidInput(
            "K and the margin must be finite, margin >= 0".into(),
        ));
    }
    let mut obs = LowDimObserver {
        generator: rom.generator().clone(),
        g: rom.g().clone(),
        k: k.clone(),
        c_pi: rom.h().clone(),
        pi: rom.pi().clone(),
        certification: Certification {
            spectral_abscissa: f64::NAN,
            margin,
            hurwitz: false,
        },
    };
    let abscissa = spectral_abscissa(&obs.state_matrix())?;
    obs.certification.spectral_abscissa = abscissa;
    obs.certification.hurwitz = abscissa < -margin;
    Ok(obs)
}

/// The constant-vector gain `K = value·1`.
pub fn constant_gain(nu: usize, value: f64) -> Matrix {
    Matrix::from_element(nu, 1, value)
}

/// Whether some `(G, K)` renders the error system Hurwitz:
/// detectability of `(S, [L; CΠ])`.
pub fn check_gain_existence(gen: &SignalGenerator, moment: &Matrix) -> Result<bool> {
    let stacked = stack_rows(gen.l(), moment)?;
    Ok(pbh_detectable(gen.s(), &stacked)?)
}

/// Whether a `K` exists for the given `G`: detectability of `(S − GL, CΠ)`.
pub fn check_gain_given_g(gen: &SignalGenerator, g: &Matrix, moment: &Matrix) -> Result<bool> {
    check_shape(g, gen.nu(), 1, "G")?;
    let f = gen.s() - g * gen.l();
    Ok(pbh_detectable(&f, moment)?)
}

/// Whether a `G` exists for the given `K`: detectability of `(S − K·CΠ, L)`.
pub fn check_gain_given_k(gen: &SignalGenerator, k: &Matrix, moment: &Matrix) -> Result<bool> {
    check_shape(k, gen.nu(), 1, "K")?;
    check_shape(moment, 1, gen.nu(), "CΠ")?;
    let f = gen.s() - k * moment;
    Ok(pbh_detectable(&f, gen.l())?)
}

fn check_shape(m: &Matrix, r: usize, c: usize, name: &str) -> Result<()> {
    if m.shape() != (r, c) {
        return Err(Error::InvalidInput(format!(
            "{name} must be {r}x{c}, got {:?}",
            m.shape()
        )));
    }
    Ok(())
}

fn stack_rows(top: &Matrix, bottom: &Matrix) -> Result<Matrix> {
    if top.ncols() != bottom.ncols() {
        return Err(Error::InvalidInput(format!(
            "cannot stack {}-column and {}-column maps",
            top.ncols(),
            bottom.ncols()
        )));
    }
    let mut out = Matrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    Ok(out)
}

/// Real coefficients `[a_0, …, a_{m-1}]` of the monic polynomial with the
/// given roots. Roots must lie in the open left half-plane and be closed
/// under conjugation.
fn char_poly(poles: &[Complex64]) -> Result<Vec<f64>> {
    let scale = 1.0 + poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if let Some(p) = poles.iter().find(|p| !(p.re < 0.0) || !p.im.is_finite()) {
        return Err(Error::Placement(format!("pole {p} is not in the open left half-plane")));
    }
    let mut used = vec![false; poles.len()];
    for i in 0..poles.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        if poles[i].im.abs() <= 1e-12 * scale {
            continue;
        }
        let partner = (0..poles.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                let da = (poles[a] - poles[i].conj()).norm();
                let db = (poles[b] - poles[i].conj()).norm();
                da.total_cmp(&db)
            })
            .filter(|&j| (poles[j] - poles[i].conj()).norm() <= 1e-10 * scale)
            .ok_or_else(|| Error::Placement(format!("pole {} has no conjugate partner", poles[i])))?;
        used[partner] = true;
    }
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &p in poles {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * p;
        }
        coeffs = next;
    }
    Ok(coeffs[..poles.len()].iter().map(|c| c.re).collect())
}

/// SISO observer gain `M` with `σ(F − M·h) = poles` (Ackermann's formula).
///
/// The placed spectrum is verified to within `1e-6` relative to the pole
/// magnitudes.
pub fn place_observer_poles(f: &Matrix, h: &Matrix, poles: &[Complex64]) -> Result<Matrix> {
    let n = f.nrows();
    if f.ncols() != n || h.shape() != (1, n) {
        return Err(Error::InvalidInput(format!(
            "need square F and a 1x{n} output map, got {:?} and {:?}",
            f.shape(),
            h.shape()
        )));
    }
    if poles.len() != n {
        return Err(Error::Placement(format!("need {n} poles, got {}", poles.len())));
    }
    if !observable(f, h)? {
        return Err(Error::Placement("pair is not observable".into()));
    }
    let coeffs = char_poly(poles)?;

    // Observability matrix rows h, hF, …, hF^{n-1}.
    let mut obs = Matrix::zeros(n, n);
    let mut row = h.clone();
    for i in 0..n {
        obs.set_row(i, &row.row(0));
        row = &row * f;
    }
    // p(F) = F^n + Σ a_k F^k by Horner.
    let mut pf = Matrix::identity(n, n);
    for k in (0..n).rev() {
        pf = &pf * f + Matrix::identity(n, n) * coeffs[k];
    }
    let mut e_last = Matrix::zeros(n, 1);
    e_last[(n - 1, 0)] = 1.0;
    let q = obs
        .lu()
        .solve(&e_last)
        .ok_or_else(|| Error::Placement("observability matrix is singular".into()))?;
    let m = pf * q;

    let placed = eigenvalues(&(f - &m * h))?.sorted();
    let mut target = poles.to_vec();
    target.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let scale = 1.0 + poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let mismatch = spectrum_mismatch(&placed, &target);
    if !(mismatch <= 1e-6 * scale) {
        return Err(Error::Placement(format!(
            "placed spectrum misses the targets by {mismatch:.3e}; pair is numerically near-unobservable"
        )));
    }
    Ok(m)
}

/// Greedy matching distance between two spectra of equal size.
fn spectrum_mismatch(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut free: Vec<Complex64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for &x in a {
        let (idx, d) = free
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, (x - y).norm()))
            .min_by(|l, r| l.1.total_cmp(&r.1))
            .unwrap_or((0, f64::INFINITY));
        worst = worst.max(d);
        if !free.is_empty() {
            free.swap_remove(idx);
        }
    }
    worst
}

/// `K` with `σ(S − GL − K·CΠ) = poles`.
pub fn design_k_pole_placement(
    gen: &SignalGenerator,
    g: &Matrix,
    moment: &Matrix,
    poles: &[Complex64],
) -> Result<Matrix> {
    check_shape(g, gen.nu(), 1, "G")?;
    let f = gen.s() - g * gen.l();
    place_observer_poles(&f, moment, poles)
}

/// Full-order Luenberger gain `M` with `σ(A − MC) = poles`; a benchmark
/// baseline.
pub fn design_full_observer(sys: &StateSpaceSystem, poles: &[Complex64]) -> Result<Matrix> {
    place_observer_poles(sys.a(), sys.c(), poles)
}

/// `x̂ = Πξ̂`.
pub fn lift_state(pi: &Matrix, xi_hat: &Vector) -> Result<Vector> {
    if pi.ncols() != xi_hat.len() {
        return Err(Error::InvalidInput(format!(
            "Π has {} columns but ξ̂ has length {}",
            pi.ncols(),
            xi_hat.len()
        )));
    }
    Ok(pi * xi_hat)
}

/// Error dynamics `ė = Ξe + Ψ(u − Lω)` with `e = [x − Πω; ξ̂ − ω]` and the
/// Lyapunov certificate `PΞ + ΞᵀP = −Q`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorSystem {
    #[serde(skip)]
    pub xi: Matrix,
    #[serde(skip)]
    pub psi: Matrix,
    #[serde(skip)]
    pub phi: Matrix,
    #[serde(skip)]
    pub p: Matrix,
    #[serde(skip)]
    pub q: Matrix,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `‖Φ‖₂ = √(1 + ‖Π‖₂²)`.
    pub phi_norm: f64,
    pub p_psi_norm: f64,
    pub lambda_min_p: f64,
    pub lambda_max_p: f64,
    pub lambda_min_q: f64,
    pub lyapunov_residual: f64,
    /// Spectral abscissa of `Ξ`, the larger of the plant and observer abscissas.
    pub spectral_abscissa: f64,
}

impl ErrorSystem {
    /// `e = [x − Πω; ξ̂ − ω]`.
    pub fn error_state(&self, x: &Vector, omega: &Vector, xi_hat: &Vector) -> Vector {
        let n = x.len();
        let nu = omega.len();
        let pi = self.phi.columns(n, nu) * -1.0;
        let mut e = Vector::zeros(n + nu);
        e.rows_mut(0, n).copy_from(&(x - &pi * omega));
        e.rows_mut(n, nu).copy_from(&(xi_hat - omega));
        e
    }

    /// Both sides of the dissipation inequality
    /// `2eᵀP(Ξe + Ψw) ≤ −(λmin(Q)/2)‖e‖² + (2‖PΨ‖²/λmin(Q))w²`.
    pub fn dissipation(&self, e: &Vector, w: f64) -> (f64, f64) {
        let flow = &self.xi * e + self.psi.column(0) * w;
        let lhs = 2.0 * e.dot(&(&self.p * flow));
        let rhs =
            -0.5 * self.lambda_min_q * e.norm_squared() + 2.0 * self.p_psi_norm.powi(2) / self.lambda_min_q * w * w;
        (lhs, rhs)
    }
}

/// Assembles `Ξ = [A, 0; KC, S − GL − KCΠ]`, `Ψ = [B; G]`, `Φ = [I, −Π]`,
/// solves for `P` and evaluates
///
/// * `c1 = ‖Φ‖·√(λmax(P)/λmin(P))`
/// * `c2 = λmin(Q)/(4λmax(P))`
/// * `c3 = (2‖Φ‖‖PΨ‖/λmin(Q))·√(λmax(P)/λmin(P))`
pub fn assemble_error_system(
    sys: &StateSpaceSystem,
    rom: &ReducedOrderModel,
    k: &Matrix,
    q: &Matrix,
) -> Result<ErrorSystem> {
    let n = sys.n();
    let nu = rom.nu();
    check_shape(k, nu, 1, "K")?;
    check_shape(q, n + nu, n + nu, "Q")?;
    if !linalg::is_spd(q) {
        return Err(Error::InvalidInput("Q must be symmetric positive definite".into()));
    }
    let obs_matrix = rom.f() - k * rom.h();
    let abscissa = sys.spectrum()?.abscissa().max(spectral_abscissa(&obs_matrix)?);
    if !(abscissa < 0.0) {
        return Err(Error::Uncertified(abscissa));
    }

    let mut xi = Matrix::zeros(n + nu, n + nu);
    xi.view_mut((0, 0), (n, n)).copy_from(sys.a());
    xi.view_mut((n, 0), (nu, n)).copy_from(&(k * sys.c()));
    xi.view_mut((n, n), (nu, nu)).copy_from(&obs_matrix);
    let mut psi = Matrix::zeros(n + nu, 1);
    psi.rows_mut(0, n).copy_from(sys.b());
    psi.rows_mut(n, nu).copy_from(rom.g());
    let mut phi = Matrix::zeros(n, n + nu);
    phi.view_mut((0, 0), (n, n)).fill_with_identity();
    phi.view_mut((0, n), (n, nu)).copy_from(&(-rom.pi()));

    let p = solve_lyapunov(&xi, q)?;
    let lyapunov_residual = (&p * &xi + xi.transpose() * &p + q).norm();
    let (lambda_min_p, lambda_max_p) = sym_eig_extremes(&p);
    let (lambda_min_q, _) = sym_eig_extremes(q);
    let phi_norm = (1.0 + linalg::norm2(rom.pi()).powi(2)).sqrt();
    let p_psi_norm = (&p * &psi).norm();
    let cond = (lambda_max_p / lambda_min_p).sqrt();
    let c1 = phi_norm * cond;
    let c2 = lambda_min_q / (4.0 * lambda_max_p);
    let c3 = 2.0 * phi_norm * p_psi_norm / lambda_min_q * cond;
    if !(c1 > 0.0 && c2 > 0.0 && c3 >= 0.0 && c1.is_finite() && c3.is_finite()) {
        return Err(Error::Internal(format!(
            "ISS constants degenerate: c1={c1}, c2={c2}, c3={c3}"
        )));
    }
    Ok(ErrorSystem {
        xi,
        psi,
        phi,
        p,
        q: q.clone(),
        c1,
        c2,
        c3,
        phi_norm,
        p_psi_norm,
        lambda_min_p,
        lambda_max_p,
        lambda_min_q,
        lyapunov_residual,
        spectral_abscissa: abscissa,
    })
}

/// [`assemble_error_system`] with `Q = I`.
pub fn assemble_error_system_default(
    sys: &StateSpaceSystem,
    rom: &ReducedOrderModel,
    k: &Matrix,
) -> Result<ErrorSystem> {
    let dim = sys.n() + rom.nu();
    assemble_error_system(sys, rom, k, &Matrix::identity(dim, dim))
}
