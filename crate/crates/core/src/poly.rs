//! One-dimensional polynomial side of the family.
//!
//! For intensity `t > 0` the monic polynomials `P_n` obey
//!
//! ```text
//! x P_n(x) = P_{n+1}(x) + (lambda n + c t) P_n(x) + n (n - 1 + t) P_{n-1}(x),
//! ```
//!
//! with `P_0 = 1`, so `a_n = lambda n + c t` and `b_n = n (n - 1 + t)`. They
//! are orthogonal with respect to the one-dimensional law of the noise over a
//! set of intensity `t`, with `||P_n||^2 = b_1 b_2 ... b_n`. Everything else
//! here is standard machinery riding on those coefficients: the symmetric
//! Jacobi matrix, exact power moments via its `(0,0)` entries, Gaussian
//! quadrature via its spectral decomposition (Golub-Welsch), the exponential
//! generating function in both truncated and closed form, and the auxiliary
//! family `Q_n` orthogonal with respect to `s^2 nu(ds)`, the quadratic
//! normalization of the Levy measure.

use num_complex::Complex64;

use crate::linalg::tridiag_eigen;
use crate::params::MeixnerParams;
use crate::{Error, Result};

/// Largest polynomial degree / moment order the recurrences accept.
pub const MAX_DEGREE_1D: usize = 64;

fn check_degree(n: usize) -> Result<()> {
    if n > MAX_DEGREE_1D {
        return Err(Error::BudgetExceeded(format!(
            "degree {n} exceeds the 1-d cap {MAX_DEGREE_1D}"
        )));
    }
    Ok(())
}

fn check_intensity(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "intensity t must be finite and > 0, got {t}"
        )));
    }
    Ok(())
}

/// Recurrence coefficients `(a_n, b_n)` at index `n` for intensity `t`.
pub fn recurrence(params: &MeixnerParams, t: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    (
        params.lambda() * nf + params.c_lambda() * t,
        nf * (nf - 1.0 + t),
    )
}

/// Evaluates the monic orthogonal polynomial `P_n(x)` by forward recurrence.
pub fn eval_poly(params: &MeixnerParams, t: f64, n: usize, x: f64) -> Result<f64> {
    check_degree(n)?;
    check_intensity(t)?;
    if !x.is_finite() {
        return Err(Error::InvalidParameter("x must be finite".into()));
    }
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = x - params.c_lambda() * t;
    for k in 1..n {
        let (a, b) = recurrence(params, t, k);
        let next = (x - a) * cur - b * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `||P_n||^2 = prod_{k=1..n} k (k - 1 + t)` in the orthogonality law.
///
/// Independent of `lambda`: the off-diagonal recurrence data do not see it.
pub fn poly_norm_sq(t: f64, n: usize) -> Result<f64> {
    check_degree(n)?;
    check_intensity(t)?;
    let mut acc = 1.0;
    for k in 1..=n {
        let kf = k as f64;
        acc *= kf * (kf - 1.0 + t);
    }
    Ok(acc)
}

/// Truncated symmetric Jacobi matrix of the family at intensity `t`.
///
/// Diagonal `a_n = lambda n + c t`; off-diagonal between `n` and `n+1` equal
/// to `sqrt(b_{n+1}) = sqrt((n+1)(n+t))`.
#[derive(Debug, Clone)]
pub struct JacobiMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(params: &MeixnerParams, t: f64, size: usize) -> Result<Self> {
        check_intensity(t)?;
        if size == 0 || size > MAX_DEGREE_1D + 1 {
            return Err(Error::BudgetExceeded(format!(
                "Jacobi matrix size {size} outside 1..={}",
                MAX_DEGREE_1D + 1
            )));
        }
        let diag = (0..size).map(|n| recurrence(params, t, n).0).collect();
        let offdiag = (0..size - 1)
            .map(|n| recurrence(params, t, n + 1).1.sqrt())
            .collect();
        Ok(Self { diag, offdiag })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Applies the matrix to a vector.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.size();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * v[i + 1];
            }
            out[i] = acc;
        }
        out
    }
}

/// Exact `k`-th power moment of the orthogonality law: the `(0,0)` entry of
/// the `k`-th power of the Jacobi matrix truncated at size `k + 1`.
pub fn moment(params: &MeixnerParams, t: f64, k: usize) -> Result<f64> {
    check_degree(k)?;
    let j = JacobiMatrix::new(params, t, k + 1)?;
    let mut v = vec![0.0; k + 1];
    v[0] = 1.0;
    for _ in 0..k {
        v = j.matvec(&v);
    }
    Ok(v[0])
}

/// Gaussian quadrature rule exact on polynomials of degree `<= 2n - 1`
/// against the orthogonality law.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Integrates a function against the rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Golub-Welsch rule with `n` nodes: eigenvalues of the order-`n` Jacobi
/// matrix, weights from the squared first eigenvector components (total mass
/// is 1, the law being a probability measure).
pub fn quadrature(params: &MeixnerParams, t: f64, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one node".into()));
    }
    let j = JacobiMatrix::new(params, t, n)?;
    let eig = tridiag_eigen(j.diag(), j.offdiag())?;
    let weights = eig.first_components.iter().map(|z| z * z).collect();
    Ok(QuadratureRule {
        nodes: eig.values,
        weights,
    })
}

/// One evaluation of the exponential generating function
/// `sum_n u^n / n! * P_n(x)`.
#[derive(Debug, Clone, Copy)]
pub struct GenFunEval {
    /// Partial sum through degree `n_max`.
    pub truncated: Complex64,
    /// Closed form, analytic on `|u| < params.psi_radius()`.
    pub closed: Complex64,
}

/// Evaluates the generating function at complex `u` inside the disk
/// `|u| < psi_radius()`, both as a truncated sum and in closed form.
///
/// The closed form is assembled in log space,
///
/// ```text
/// lambda != 2:  exp[ -t/(alpha-beta) * (log(1-beta u)/beta - log(1-alpha u)/alpha)
///                    + (x - c t)/(alpha-beta) * (log(1-beta u) - log(1-alpha u)) ]
/// lambda  = 2:  exp[ -t log(1+u) + x u/(u+1) ]
/// ```
///
/// which keeps every log argument in the right half plane on the whole disk.
pub fn gen_fun(
    params: &MeixnerParams,
    t: f64,
    x: f64,
    u: Complex64,
    n_max: usize,
) -> Result<GenFunEval> {
    check_degree(n_max)?;
    check_intensity(t)?;
    if u.norm() >= params.psi_radius() {
        return Err(Error::OutsideDomain(format!(
            "|u| = {} is outside the open disk of radius {}",
            u.norm(),
            params.psi_radius()
        )));
    }

    let mut truncated = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut p_prev = 1.0;
    let mut p_cur = x - params.c_lambda() * t;
    for n in 1..=n_max {
        term *= u / n as f64;
        truncated += term * p_cur;
        let (a, b) = recurrence(params, t, n);
        let p_next = (x - a) * p_cur - b * p_prev;
        p_prev = p_cur;
        p_cur = p_next;
    }

    let closed = if params.is_gamma() {
        let one = Complex64::new(1.0, 0.0);
        (-t * (one + u).ln() + x * u / (u + one)).exp()
    } else {
        let one = Complex64::new(1.0, 0.0);
        let alpha = params.alpha();
        let beta = params.beta();
        let la = (one - alpha * u).ln();
        let lb = (one - beta * u).ln();
        let denom = alpha - beta;
        let drift = x - params.c_lambda() * t;
        ((-t / denom) * (lb / beta - la / alpha) + (drift / denom) * (lb - la)).exp()
    };

    Ok(GenFunEval { truncated, closed })
}

/// Evaluates the auxiliary monic polynomial `Q_n(s)` with recurrence
/// `s Q_n = Q_{n+1} + lambda (n+1) Q_n + n (n+1) Q_{n-1}`; the family is
/// orthogonal with respect to the probability measure `s^2 nu(ds)` built
/// from the Levy measure `nu`.
pub fn q_poly(params: &MeixnerParams, n: usize, s: f64) -> Result<f64> {
    check_degree(n)?;
    if !s.is_finite() {
        return Err(Error::InvalidParameter("s must be finite".into()));
    }
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = s - params.lambda();
    for k in 1..n {
        let kf = k as f64;
        let a = params.lambda() * (kf + 1.0);
        let b = kf * (kf + 1.0);
        let next = (s - a) * cur - b * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `||Q_n||^2 = prod_{k=1..n} k (k + 1) = n! (n+1)!` in `s^2 nu(ds)`.
pub fn q_norm_sq(n: usize) -> Result<f64> {
    check_degree(n)?;
    let mut acc = 1.0;
    for k in 1..=n {
        let kf = k as f64;
        acc *= kf * (kf + 1.0);
    }
    Ok(acc)
}
