use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::systems::{validate_sa1, StateSpaceSystem};

/// Parameters of the mass-spring-damper chain standing in for a
/// lightly damped flexible structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamParams {
    pub n: usize,
    pub stiffness: f64,
    pub damping: f64,
    pub mass: f64,
}

impl Default for BeamParams {
    fn default() -> Self {
        Self {
            n: 348,
            stiffness: 1000.0,
            damping: 1.6,
            mass: 40.0,
        }
    }
}

/// Chain of `n/2` masses clamped at one end. Neighbours are coupled by
/// springs `k`, each mass has a damper `d` to ground, the force acts on the
/// free end and the output is its displacement. State `[q; q̇]`.
///
/// Every mode has `|λ| < 2√(k/m)`, so the defaults keep the spectral
/// radius below 10 rad/s. The DC gain is `(n/2)/k`.
pub fn surrogate_beam(n: usize, k: f64, d: f64, m: f64) -> Result<StateSpaceSystem> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "state dimension must be even and positive, got {n}"
        )));
    }
    if !(k > 0.0 && d > 0.0 && m > 0.0) || !(k.is_finite() && d.is_finite() && m.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "stiffness, damping and mass must be positive, got {k}, {d}, {m}"
        )));
    }
    let nm = n / 2;
    let mut a = Matrix::zeros(n, n);
    for i in 0..nm {
        a[(i, nm + i)] = 1.0;
        let diag = if i + 1 == nm { k } else { 2.0 * k };
        a[(nm + i, i)] = -diag / m;
        if i > 0 {
            a[(nm + i, i - 1)] = k / m;
        }
        if i + 1 < nm {
            a[(nm + i, i + 1)] = k / m;
        }
        a[(nm + i, nm + i)] = -d / m;
    }
    let mut b = Matrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0 / m;
    let mut c = Matrix::zeros(1, n);
    c[(0, nm - 1)] = 1.0;
    let sys = StateSpaceSystem::new(a, b, c)?;
    let report = validate_sa1(&sys)?;
    if !report.passes() {
        return Err(Error::Assumption(format!(
            "surrogate chain fails the plant assumptions: {}",
            report.failures().join("; ")
        )));
    }
    Ok(sys)
}

pub fn surrogate_beam_from(params: &BeamParams) -> Result<StateSpaceSystem> {
    surrogate_beam(params.n, params.stiffness, params.damping, params.mass)
}
