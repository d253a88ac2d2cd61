//! Adaptive Simpson quadrature and finite-difference weights.
//!
//! All integrands in this crate are smooth on the interiors of their
//! intervals (endpoints singularities are removed by substitution before
//! calling in here), so classic adaptive Simpson with the Richardson error
//! estimate `|S_fine - S_coarse|/15` is plenty. The interval is first cut
//! into a fixed number of panels so that structure narrower than a panel
//! cannot hide from the refinement test.
//!
//! The difference weights come from Fornberg's recursion. They are exact
//! for polynomials of degree below the node count, which is how the
//! functional operators differentiate: every functional they touch is a
//! polynomial of known degree along any one-atom line, so a stencil with
//! one more node than the degree recovers derivatives without any step-size
//! tuning.

use num_complex::Complex64;

use crate::{Error, Result};

const INITIAL_PANELS: usize = 16;
const MAX_DEPTH: u32 = 48;

/// Integrates a complex-valued integrand over `[a, b]` to absolute target
/// accuracy `tol` (per the Richardson estimate; the true error is typically
/// far below it).
pub fn adaptive<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(
            "integration endpoints must be finite".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(
            "integration tolerance must be positive".into(),
        ));
    }
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let panel = (b - a) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..INITIAL_PANELS {
        let lo = a + panel * k as f64;
        let hi = if k + 1 == INITIAL_PANELS {
            b
        } else {
            a + panel * (k + 1) as f64
        };
        let flo = eval(&f, lo)?;
        let fmid = eval(&f, 0.5 * (lo + hi))?;
        let fhi = eval(&f, hi)?;
        let whole = simpson(lo, hi, flo, fmid, fhi);
        total += refine(&f, lo, hi, flo, fmid, fhi, whole, panel_tol, 0)?;
    }
    Ok(total)
}

/// Real-valued convenience wrapper over [`adaptive`].
pub fn adaptive_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    adaptive(|x| Complex64::new(f(x), 0.0), a, b, tol).map(|v| v.re)
}

fn eval<F: Fn(f64) -> Complex64>(f: &F, x: f64) -> Result<Complex64> {
    let v = f(x);
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!(
            "integrand is not finite at x = {x}"
        )))
    }
}

fn simpson(a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64) -> Complex64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Result<Complex64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(f, lm)?;
    let frm = eval(f, rm)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.norm() <= 15.0 * tol || depth >= MAX_DEPTH {
        return Ok(left + right + delta / 15.0);
    }
    let l = refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let r = refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

/// Weights for approximating derivatives at `z` from samples on `nodes`.
///
/// Returns one row per derivative order `0..=max_order`; row `k` dotted
/// with the sample values approximates the `k`-th derivative at `z`,
/// exactly so when the sampled function is a polynomial of degree below
/// `nodes.len()`.
pub fn difference_weights(nodes: &[f64], z: f64, max_order: usize) -> Result<Vec<Vec<f64>>> {
    let n = nodes.len();
    if n == 0 {
        return Err(Error::InvalidParameter("at least one node is needed".into()));
    }
    if max_order >= n {
        return Err(Error::InvalidParameter(format!(
            "order {max_order} needs more than {n} nodes"
        )));
    }
    if nodes.iter().any(|x| !x.is_finite()) || !z.is_finite() {
        return Err(Error::InvalidParameter("nodes must be finite".into()));
    }
    for (i, a) in nodes.iter().enumerate() {
        if nodes[..i].contains(a) {
            return Err(Error::InvalidParameter("nodes must be distinct".into()));
        }
    }

    let mut c = vec![vec![0.0; max_order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }

    Ok((0..=max_order)
        .map(|k| c.iter().map(|row| row[k]).collect())
        .collect())
}
