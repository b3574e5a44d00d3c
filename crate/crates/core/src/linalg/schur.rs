//! Real Schur decomposition `M = Z T Zᵀ` by Householder Hessenberg reduction
//! followed by Francis double-shift QR iteration.

use nalgebra::Complex;

use super::{ensure_finite, ensure_square, Matrix};
use crate::error::LinalgError;

/// Result of [`real_schur`].
///
/// `t` is upper quasi-triangular: every diagonal block listed in `blocks` is
/// either 1x1 (a real eigenvalue) or 2x2 with a complex-conjugate eigenvalue
/// pair. Entries below the block diagonal are exactly zero.
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub t: Matrix,
    pub z: Matrix,
    /// `(start, size)` of each diagonal block, in ascending order.
    pub blocks: Vec<(usize, usize)>,
    /// Eigenvalues aligned with the diagonal of `t`.
    pub eigenvalues: Vec<Complex<f64>>,
}

/// Total QR sweeps allowed per unit of dimension before giving up.
pub const MAX_ITER_PER_DIM: usize = 100;

pub fn real_schur(m: &Matrix) -> Result<RealSchur, LinalgError> {
    let n = ensure_square(m)?;
    ensure_finite(m)?;
    if n == 0 {
        return Ok(RealSchur {
            t: Matrix::zeros(0, 0),
            z: Matrix::zeros(0, 0),
            blocks: vec![],
            eigenvalues: vec![],
        });
    }
    if n == 1 {
        return Ok(RealSchur {
            t: m.clone(),
            z: Matrix::identity(1, 1),
            blocks: vec![(0, 1)],
            eigenvalues: vec![Complex::new(m[(0, 0)], 0.0)],
        });
    }

    let (z, h) = m.clone().hessenberg().unpack();
    let mut h = h;
    for j in 0..n {
        for i in (j + 2)..n {
            h[(i, j)] = 0.0;
        }
    }
    let mut z = z;
    let mut eig = vec![Complex::new(0.0, 0.0); n];
    let mut blocks = Vec::with_capacity(n);
    francis_qr(&mut h, &mut z, &mut eig, &mut blocks)?;

    blocks.sort_unstable();
    // Clean everything outside the block structure.
    for j in 0..n {
        for i in (j + 1)..n {
            let inside = blocks.iter().any(|&(s, sz)| sz == 2 && s == j && i == j + 1);
            if !inside {
                h[(i, j)] = 0.0;
            }
        }
    }
    Ok(RealSchur {
        t: h,
        z,
        blocks,
        eigenvalues: eig,
    })
}

/// Francis double-shift QR on an upper Hessenberg matrix, accumulating the
/// orthogonal transformations into `v`. Follows the structure of the EISPACK
/// `hqr2` routine without the eigenvector back-substitution.
fn francis_qr(
    h: &mut Matrix,
    v: &mut Matrix,
    eig: &mut [Complex<f64>],
    blocks: &mut Vec<(usize, usize)>,
) -> Result<(), LinalgError> {
    let nn = h.nrows();
    let low = 0usize;
    let high = nn - 1;
    let eps = f64::EPSILON;
    let max_total = MAX_ITER_PER_DIM * nn;

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total = 0usize;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);

    while n >= low as isize {
        let nu = n as usize;
        // Look for a single small sub-diagonal element.
        let mut l = nu;
        while l > low {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                h[(l, l - 1)] = 0.0;
                break;
            }
            l -= 1;
        }

        if l == nu {
            // One root.
            h[(nu, nu)] += exshift;
            eig[nu] = Complex::new(h[(nu, nu)], 0.0);
            blocks.push((nu, 1));
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            // Two roots.
            let m1 = nu - 1;
            w = h[(nu, m1)] * h[(m1, nu)];
            p = (h[(m1, m1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(m1, m1)] += exshift;
            x = h[(nu, nu)];

            if q >= 0.0 {
                // Real pair: rotate the block to upper-triangular form.
                z = if p >= 0.0 { p + z } else { p - z };
                x = h[(nu, m1)];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in m1..nn {
                    z = h[(m1, j)];
                    h[(m1, j)] = q * z + p * h[(nu, j)];
                    h[(nu, j)] = q * h[(nu, j)] - p * z;
                }
                for i in 0..=nu {
                    z = h[(i, m1)];
                    h[(i, m1)] = q * z + p * h[(i, nu)];
                    h[(i, nu)] = q * h[(i, nu)] - p * z;
                }
                for i in low..=high {
                    z = v[(i, m1)];
                    v[(i, m1)] = q * z + p * v[(i, nu)];
                    v[(i, nu)] = q * v[(i, nu)] - p * z;
                }
                h[(nu, m1)] = 0.0;
                eig[m1] = Complex::new(h[(m1, m1)], 0.0);
                eig[nu] = Complex::new(h[(nu, nu)], 0.0);
                blocks.push((m1, 1));
                blocks.push((nu, 1));
            } else {
                eig[m1] = Complex::new(x + p, z);
                eig[nu] = Complex::new(x + p, -z);
                blocks.push((m1, 2));
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet: form shift.
            x = h[(nu, nu)];
            y = 0.0;
            w = 0.0;
            if l < nu {
                y = h[(nu - 1, nu - 1)];
                w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            }

            // Wilkinson's exceptional shift.
            if iter == 10 {
                exshift += x;
                for i in low..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }

            // Second exceptional shift.
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }

            iter += 1;
            total += 1;
            if total > max_total {
                return Err(LinalgError::NoConvergence(total));
            }

            // Look for two consecutive small sub-diagonal elements.
            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..n and columns m..n.
            let mut k = m;
            while k < nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                    for i in low..=high {
                        p = x * v[(i, k)] + y * v[(i, k + 1)];
                        if notlast {
                            p += z * v[(i, k + 2)];
                            v[(i, k + 2)] -= p * r;
                        }
                        v[(i, k)] -= p;
                        v[(i, k + 1)] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(())
}
