//! Dense linear algebra for small symmetric problems.
//!
//! Two classics, sized for matrices of order at most a few hundred:
//!
//! * QL iteration with implicit shifts for symmetric tridiagonal matrices,
//!   tracking only the first row of the accumulated eigenvector matrix. That
//!   row is exactly what Gaussian quadrature needs: the weight of node `j` is
//!   `(first component of eigenvector j)^2` times the total mass.
//! * Cyclic Jacobi rotations for full symmetric matrices, eigenvalues only,
//!   used to check positive semidefiniteness of small Gram matrices.

use crate::{Error, Result};

/// Eigendecomposition data of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// First component of the orthonormal eigenvector for each eigenvalue,
    /// in the same order.
    pub first_components: Vec<f64>,
}

/// Diagonalizes the symmetric tridiagonal matrix with diagonal `diag` and
/// subdiagonal `offdiag` (`offdiag[i]` couples rows `i` and `i+1`).
pub fn tridiag_eigen(diag: &[f64], offdiag: &[f64]) -> Result<TridiagEigen> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty tridiagonal matrix".into()));
    }
    if offdiag.len() + 1 != n {
        return Err(Error::ShapeMismatch(format!(
            "offdiagonal length {} does not match order {n}",
            offdiag.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z0 = vec![0.0; n];
    z0[0] = 1.0;

    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::Numerical(
                    "tridiagonal QL failed to converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(if g == 0.0 { 1.0 } else { g }));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let t = (d[i] - g) * s + 2.0 * c * b;
                p = s * t;
                d[i + 1] = g + p;
                g = c * t - b;
                f = z0[i + 1];
                z0[i + 1] = s * z0[i] + c * f;
                z0[i] = c * z0[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok(TridiagEigen {
        values: order.iter().map(|&i| d[i]).collect(),
        first_components: order.iter().map(|&i| z0[i]).collect(),
    })
}

/// Eigenvalues (ascending) of a dense symmetric matrix, by cyclic Jacobi
/// rotations. `a` is row-major of order `n`; only the lower triangle is read.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if a.len() != n * n {
        return Err(Error::ShapeMismatch(format!(
            "matrix storage {} does not match order {n}",
            a.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let mut m = a.to_vec();
    let idx = |r: usize, c: usize| r * n + c;
    for sweep in 0..200 {
        let mut off = 0.0;
        for r in 1..n {
            for c in 0..r {
                off += m[idx(r, c)] * m[idx(r, c)];
            }
        }
        if off.sqrt() <= 1e-14 * (1.0 + frobenius(&m)) {
            break;
        }
        if sweep == 199 {
            return Err(Error::Numerical("Jacobi sweeps failed to converge".into()));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[idx(q, p)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[idx(p, p)];
                let aqq = m[idx(q, q)];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k != p && k != q {
                        let akp = m[idx(k, p)];
                        let akq = m[idx(k, q)];
                        let new_kp = c * akp - s * akq;
                        let new_kq = s * akp + c * akq;
                        m[idx(k, p)] = new_kp;
                        m[idx(p, k)] = new_kp;
                        m[idx(k, q)] = new_kq;
                        m[idx(q, k)] = new_kq;
                    }
                }
                let new_pp = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                let new_qq = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                m[idx(p, p)] = new_pp;
                m[idx(q, q)] = new_qq;
                m[idx(p, q)] = 0.0;
                m[idx(q, p)] = 0.0;
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| m[idx(i, i)]).collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn frobenius(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}
