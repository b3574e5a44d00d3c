//! ω₀ fitting, the ISS error bound and its empirical check.
//!
//! The supremum defining `τ` is taken over the sample grid, not over
//! continuous time; between grid points the true supremum can be larger
//! by an amount that shrinks with the grid spacing.

mod lp;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_exponential, matrix_rank, Matrix, RankTolerance, Vector};
use crate::observer::ErrorSystem;
use crate::simulation::SimTrace;
use crate::systems::SignalGenerator;

pub use lp::{chebyshev_fit, ChebyshevSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    #[default]
    Minimax,
    LeastSquares,
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitMethod::Minimax => "minimax",
            FitMethod::LeastSquares => "least-squares",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Omega0Fit {
    pub omega0: Vec<f64>,
    /// `max_k |u(t_k) − L·exp(S t_k)·ω₀|` over the grid.
    pub tau: f64,
    #[serde(skip)]
    pub grid: Vec<f64>,
    pub method: FitMethod,
}

impl Omega0Fit {
    pub fn omega0_vector(&self) -> Vector {
        Vector::from_column_slice(&self.omega0)
    }
}

/// Rows `L·exp(S t_k)`.
pub fn regressor(gen: &SignalGenerator, times: &[f64]) -> Result<Matrix> {
    let nu = gen.nu();
    let mut rows = Matrix::zeros(times.len(), nu);
    for (k, &t) in times.iter().enumerate() {
        let r = gen.l() * matrix_exponential(gen.s(), t)?;
        rows.row_mut(k).copy_from(&r);
    }
    Ok(rows)
}

/// Grid supremum of `|u_k − r_k ω|`.
pub fn residual_sup(rows: &Matrix, u: &[f64], omega: &Vector) -> f64 {
    let fit = rows * omega;
    u.iter().zip(fit.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Fits `ω₀` so that `L·exp(S t)·ω₀` tracks the samples `(t_k, u_k)`.
pub fn fit_omega0(samples: &[(f64, f64)], gen: &SignalGenerator, method: FitMethod) -> Result<Omega0Fit> {
    let (times, u): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    fit_omega0_series(&times, &u, gen, method)
}

pub fn fit_omega0_series(times: &[f64], u: &[f64], gen: &SignalGenerator, method: FitMethod) -> Result<Omega0Fit> {
    let nu = gen.nu();
    if times.len() != u.len() {
        return Err(Error::InvalidInput(format!(
            "{} times but {} input samples",
            times.len(),
            u.len()
        )));
    }
    if times.len() < nu {
        return Err(Error::InvalidInput(format!(
            "need at least {nu} samples, got {}",
            times.len()
        )));
    }
    if !times.windows(2).all(|w| w[1] > w[0]) || !times.iter().chain(u).all(|v| v.is_finite()) {
        return Err(Error::InvalidInput(
            "sample times must be finite and strictly increasing".into(),
        ));
    }
    let rows = regressor(gen, times)?;
    let rank = matrix_rank(&rows, RankTolerance::default());
    if rank < nu {
        return Err(Error::RankDeficient { rank, expected: nu });
    }
    let omega = match method {
        FitMethod::Minimax => chebyshev_fit(&rows, u)?.omega,
        FitMethod::LeastSquares => {
            let rhs = Vector::from_column_slice(u);
            rows.clone()
                .svd(true, true)
                .solve(&rhs, 0.0)
                .map_err(|e| Error::Internal(format!("least-squares solve failed: {e}")))?
        }
    };
    let tau = residual_sup(&rows, u, &omega);
    Ok(Omega0Fit {
        omega0: omega.iter().copied().collect(),
        tau,
        grid: times.to_vec(),
        method,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `‖e_xω(0)‖ + ‖e_ξ̂ω(0)‖`.
    pub initial_error: f64,
    pub tau: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// `c1·(‖e_xω(0)‖ + ‖e_ξ̂ω(0)‖)·exp(−c2 t) + c3·τ` on the given times.
pub fn evaluate_bound(err: &ErrorSystem, e_x0: &Vector, e_xi0: &Vector, tau: f64, times: &[f64]) -> BoundTrace {
    let initial_error = e_x0.norm() + e_xi0.norm();
    let values = times
        .iter()
        .map(|&t| err.c1 * initial_error * (-err.c2 * t).exp() + err.c3 * tau)
        .collect();
    BoundTrace {
        times: times.to_vec(),
        values,
        initial_error,
        tau,
        c1: err.c1,
        c2: err.c2,
        c3: err.c3,
    }
}

/// Fits `ω₀` over the whole run and evaluates the bound on its grid with
/// `e_xω(0) = x(0) − Πω₀` and `e_ξ̂ω(0) = ξ̂(0) − ω₀`.
pub fn bound_for_trace(
    err: &ErrorSystem,
    gen: &SignalGenerator,
    pi: &Matrix,
    trace: &SimTrace,
    x0: &Vector,
    xi0: &Vector,
    method: FitMethod,
) -> Result<(Omega0Fit, BoundTrace)> {
    let fit = fit_omega0_series(&trace.times, &trace.u, gen, method)?;
    let w0 = fit.omega0_vector();
    let e_x0 = x0 - pi * &w0;
    let e_xi0 = xi0 - &w0;
    let bound = evaluate_bound(err, &e_x0, &e_xi0, fit.tau, &trace.times);
    Ok((fit, bound))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    /// Largest `‖e_xξ̂(t_k)‖ − bound(t_k)`; negative when the bound holds with room.
    pub max_violation: f64,
    pub worst_time: f64,
    /// Points where the excess is above `1e-7·(1 + bound)`.
    pub violations: usize,
    pub passes: bool,
}

pub const BOUND_SLACK: f64 = 1e-7;

/// Compares `‖x − Πξ̂‖` against the bound at every grid point.
pub fn check_bound(trace: &SimTrace, bound: &BoundTrace) -> Result<BoundCheck> {
    if trace.times.len() != bound.times.len()
        || trace
            .times
            .iter()
            .zip(&bound.times)
            .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
    {
        return Err(Error::InvalidInput(
            "trace and bound are on different time grids".into(),
        ));
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_time = 0.0;
    let mut violations = 0;
    for k in 0..trace.len() {
        let excess = trace.norm_e[k] - bound.values[k];
        if excess > max_violation {
            max_violation = excess;
            worst_time = trace.times[k];
        }
        if excess > BOUND_SLACK * (1.0 + bound.values[k]) {
            violations += 1;
        }
    }
    Ok(BoundCheck {
        max_violation,
        worst_time,
        violations,
        passes: violations == 0,
    })
}

/// CSV with header `t,bound,normE`.
pub fn write_bound_csv<W: Write>(trace: &SimTrace, bound: &BoundTrace, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Internal(format!("CSV write failed: {e}"));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["t", "bound", "normE"]).map_err(io)?;
    for k in 0..bound.times.len().min(trace.len()) {
        w.write_record([
            bound.times[k].to_string(),
            bound.values[k].to_string(),
            trace.norm_e[k].to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Internal(format!("CSV write failed: {e}")))?;
    Ok(())
}
