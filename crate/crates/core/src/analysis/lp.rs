//! Discrete Chebyshev fit `min_ω max_k |u_k − r_kω|` through the dual
//! linear program
//!
//! ```text
//! max Σ u_k(α_k − β_k)  s.t.  Σ r_kᵀ(α_k − β_k) = 0,  Σ (α_k + β_k) = 1,  α, β ≥ 0,
//! ```
//!
//! solved by a dense revised simplex whose basis has only `ν + 1` columns.
//! The optimal simplex multipliers are `(ω, t)`.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone)]
pub struct ChebyshevSolution {
    pub omega: Vector,
    /// Optimal objective reported by the LP.
    pub level: f64,
    pub iterations: usize,
}

/// Column `j` of the dual: sample `j / 2`, sign `+` for even `j`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Col {
    Sample(usize),
    Artificial(usize),
}

struct Problem<'a> {
    rows: &'a Matrix,
    u: &'a [f64],
    nu: usize,
}

impl Problem<'_> {
    fn m(&self) -> usize {
        self.nu + 1
    }

    fn column(&self, c: Col) -> Vector {
        let m = self.m();
        let mut a = Vector::zeros(m);
        match c {
            Col::Sample(j) => {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let k = j / 2;
                for i in 0..self.nu {
                    a[i] = sign * self.rows[(k, i)];
                }
                a[self.nu] = 1.0;
            }
            Col::Artificial(i) => a[i] = 1.0,
        }
        a
    }

    fn cost(&self, c: Col, phase1: bool) -> f64 {
        match (c, phase1) {
            (Col::Artificial(_), true) => -1.0,
            (Col::Artificial(_), false) => 0.0,
            (Col::Sample(_), true) => 0.0,
            (Col::Sample(j), false) => {
                if j % 2 == 0 {
                    self.u[j / 2]
                } else {
                    -self.u[j / 2]
                }
            }
        }
    }
}

fn col_index(c: Col, m: usize) -> usize {
    match c {
        Col::Artificial(i) => i,
        Col::Sample(j) => m + j,
    }
}

const MAX_ITER_FACTOR: usize = 50;

pub fn chebyshev_fit(rows: &Matrix, u: &[f64]) -> Result<ChebyshevSolution> {
    let samples = rows.nrows();
    let nu = rows.ncols();
    if u.len() != samples || samples == 0 {
        return Err(Error::Lp(format!("{} samples but {} regressor rows", u.len(), samples)));
    }
    let prob = Problem { rows, u, nu };
    let m = prob.m();
    let scale_u = 1.0 + u.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let scale_r = 1.0 + rows.amax();
    let tol = 1e-11 * scale_u * scale_r;
    let pivot_tol = 1e-9;

    let mut basis: Vec<Col> = (0..m).map(Col::Artificial).collect();
    let max_iter = MAX_ITER_FACTOR * (m + 10) * (1 + (samples as f64).log2() as usize) + 1000;
    let mut iterations = 0;
    // Consecutive degenerate pivots; past a threshold Bland's rule takes
    // over until progress resumes, which rules out cycling.
    let mut stalled = 0usize;

    for phase1 in [true, false] {
        loop {
            let bland = stalled > 2 * m + 10;
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::Lp(format!("simplex did not terminate in {max_iter} iterations")));
            }
            let bmat = Matrix::from_columns(&basis.iter().map(|&c| prob.column(c)).collect::<Vec<_>>());
            let lu = bmat.clone().lu();
            let mut rhs = Vector::zeros(m);
            rhs[nu] = 1.0;
            let x_b = lu.solve(&rhs).ok_or_else(|| Error::Lp("singular basis".into()))?;
            let c_b = Vector::from_iterator(m, basis.iter().map(|&c| prob.cost(c, phase1)));
            let y = bmat
                .transpose()
                .lu()
                .solve(&c_b)
                .ok_or_else(|| Error::Lp("singular basis".into()))?;

            // Artificials never re-enter once they have left.
            // Pricing: reduced cost of sample column ±k is ±(u_k − r_kω)·[phase 2] − t.
            let (omega, level) = (y.rows(0, nu), y[nu]);
            let mut best: Option<(Col, f64)> = None;
            for (k, &uk) in u.iter().enumerate() {
                let fit = rows.row(k).transpose().dot(&omega);
                let resid = if phase1 { -fit } else { uk - fit };
                for (j, d) in [(2 * k, resid - level), (2 * k + 1, -resid - level)] {
                    let col = Col::Sample(j);
                    if d > tol && best.is_none_or(|(_, bd)| !bland && d > bd) && !basis.contains(&col) {
                        best = Some((col, d));
                    }
                }
            }
            let Some((entering, _)) = best else {
                if phase1 {
                    let infeasibility: f64 = basis
                        .iter()
                        .zip(x_b.iter())
                        .filter(|(c, _)| matches!(c, Col::Artificial(_)))
                        .map(|(_, v)| v.abs())
                        .sum();
                    if infeasibility > 1e-9 {
                        return Err(Error::Lp(format!(
                            "dual infeasible (artificial mass {infeasibility:.3e})"
                        )));
                    }
                    drive_out_artificials(&prob, &mut basis, samples)?;
                    break;
                }
                return Ok(ChebyshevSolution {
                    omega: omega.into_owned(),
                    level,
                    iterations,
                });
            };

            let w = lu
                .solve(&prob.column(entering))
                .ok_or_else(|| Error::Lp("singular basis".into()))?;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if w[i] > pivot_tol {
                    let ratio = x_b[i].max(0.0) / w[i];
                    // Ties prefer artificials, then the larger pivot; under
                    // Bland's rule the lowest column index.
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            let tie = ratio <= lr + 1e-15;
                            ratio < lr - 1e-15
                                || (tie && bland && col_index(basis[i], m) < col_index(basis[li], m))
                                || (tie
                                    && !bland
                                    && (matches!(basis[i], Col::Artificial(_))
                                        && !matches!(basis[li], Col::Artificial(_))
                                        || w[i] > w[li]))
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let (row, ratio) = leave.ok_or_else(|| Error::Lp("dual unbounded".into()))?;
            stalled = if ratio == 0.0 { stalled + 1 } else { 0 };
            basis[row] = entering;
        }
    }
    unreachable!("phase loop always returns")
}

/// Replaces zero-valued artificials left in the basis after phase 1.
fn drive_out_artificials(prob: &Problem, basis: &mut [Col], samples: usize) -> Result<()> {
    let m = prob.m();
    while let Some(row) = basis.iter().position(|c| matches!(c, Col::Artificial(_))) {
        let bmat = Matrix::from_columns(&basis.iter().map(|&c| prob.column(c)).collect::<Vec<_>>());
        let lu = bmat.lu();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..2 * samples {
            let col = Col::Sample(j);
            if basis.contains(&col) {
                continue;
            }
            let w = lu
                .solve(&prob.column(col))
                .ok_or_else(|| Error::Lp("singular basis".into()))?;
            let p = w[row].abs();
            if p > 1e-9 && best.is_none_or(|(_, bp)| p > bp) {
                best = Some((j, p));
            }
            // Any pivot of reasonable size will do.
            if p > 0.1 {
                break;
            }
        }
        let (j, _) = best.ok_or_else(|| {
            Error::Lp(format!(
                "constraint {row} of {m} is redundant; regressor lacks full column rank"
            ))
        })?;
        basis[row] = Col::Sample(j);
    }
    Ok(())
}
