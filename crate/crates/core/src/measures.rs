//! One-dimensional orthogonality laws, their Fourier transforms, the Levy
//! measures behind them, and samplers.
//!
//! For intensity `t > 0` the law `mu_{lambda,t}` of the noise over a set of
//! that intensity is
//!
//! * `lambda > 2`: negative binomial on the lattice `sqrt(lambda^2-4) * k`,
//!   `k >= 0`, with pmf `(1-p)^t (t)_k / k! * p^k`;
//! * `lambda = 2`: Gamma with shape `t`, density `s^(t-1) e^(-s) / Gamma(t)`
//!   on `[0, inf)`;
//! * `lambda < 2`: Meixner law on the line, density
//!   `(4-lambda^2)^((t-1)/2) / (2 pi Gamma(t)) * |Gamma(t/2 + i s/a)|^2
//!    * exp(2 s asin(lambda/2) / a)` with `a = sqrt(4-lambda^2)`.
//!
//! The positive sign in the Meixner tilt is forced by the recurrence: the
//! mean of the law is `c * t > 0` for `lambda > 0`, and the `|Gamma|^2`
//! factor is even in `s`, so only the tilt can carry the mean.
//!
//! The Levy measure `nu_lambda` is normalized so `int s^2 nu(ds) = 1`:
//! atoms `p^k / k` at `sqrt(lambda^2-4) * k` for `lambda > 2`, density
//! `e^(-s)/s` on `(0, inf)` for `lambda = 2`, and for `lambda < 2` the
//! density whose quadratic normalization `s^2 nu(ds)` is exactly the
//! intensity-2 law `mu_{lambda,2}`. The cumulant integral
//! `int (e^(s theta) - 1 - s theta) nu(ds)` has the closed form
//! `-log((alpha e^(-beta theta) - beta e^(-alpha theta))/(alpha-beta))`
//! (for `lambda = 2`: `-log(1-theta) - theta`), whose derivative is `psi_inv`.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::integrate::adaptive;
use crate::params::{MeixnerParams, Regime};
use crate::special::{gamma_abs2, ln_gamma_real, ln_rising};
use crate::{Error, Result};

/// Lattice tail truncation: sums over Pascal atoms stop once the remaining
/// mass is below this.
pub const TAIL_MASS: f64 = 1e-12;

/// Absolute tolerance handed to the adaptive quadrature used internally.
pub const QUAD_TOL: f64 = 1e-10;

fn check_intensity(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "intensity t must be finite and > 0, got {t}"
        )));
    }
    Ok(())
}

/// The law of the noise over a set of intensity `t`.
#[derive(Debug, Clone)]
pub struct Measure1D {
    params: MeixnerParams,
    t: f64,
}

impl Measure1D {
    pub fn new(params: MeixnerParams, t: f64) -> Result<Self> {
        check_intensity(t)?;
        Ok(Self { params, t })
    }

    pub fn params(&self) -> &MeixnerParams {
        &self.params
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// True in the Pascal regime, where the law lives on a lattice.
    pub fn is_lattice(&self) -> bool {
        self.params.regime() == Regime::Pascal
    }

    pub fn mean(&self) -> f64 {
        self.params.c_lambda() * self.t
    }

    /// `k`-th lattice point `sqrt(lambda^2-4) * k` (Pascal regime only).
    pub fn lattice_point(&self, k: u64) -> Result<f64> {
        let h = self.params.lattice_step().ok_or_else(|| {
            Error::InvalidParameter("lattice points exist only for lambda > 2".into())
        })?;
        Ok(h * k as f64)
    }

    /// Probability of the `k`-th lattice point (Pascal regime only):
    /// `(1-p)^t (t)_k / k! * p^k`.
    pub fn pmf(&self, k: u64) -> Result<f64> {
        let p = self.params.p_lambda().ok_or_else(|| {
            Error::InvalidParameter("pmf exists only for lambda > 2".into())
        })?;
        let t = self.t;
        let kf = k as f64;
        Ok((t * (1.0 - p).ln() + ln_rising(t, k) - ln_gamma_real(kf + 1.0) + kf * p.ln()).exp())
    }

    /// Density of the law at `s`.
    ///
    /// In the Pascal regime, `s` is snapped to the nearest lattice point;
    /// if it is farther than `1e-9` from the lattice the result is 0, and
    /// otherwise the point mass there is returned.
    pub fn density(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter("s must be finite".into()));
        }
        match self.params.regime() {
            Regime::Pascal => {
                let h = self.params.lattice_step().unwrap();
                let k = (s / h).round();
                if k < 0.0 || (s - k * h).abs() > 1e-9 {
                    return Ok(0.0);
                }
                self.pmf(k as u64)
            }
            Regime::Gamma => {
                let t = self.t;
                if s < 0.0 {
                    Ok(0.0)
                } else if s == 0.0 {
                    Ok(if t < 1.0 {
                        f64::INFINITY
                    } else if t == 1.0 {
                        1.0
                    } else {
                        0.0
                    })
                } else {
                    Ok(((t - 1.0) * s.ln() - s - ln_gamma_real(t)).exp())
                }
            }
            Regime::Meixner => {
                let lambda = self.params.lambda();
                let t = self.t;
                let a = (4.0 - lambda * lambda).sqrt();
                let pref =
                    ((t - 1.0) / 2.0 * (4.0 - lambda * lambda).ln() - ln_gamma_real(t)).exp()
                        / (2.0 * std::f64::consts::PI);
                let g2 = gamma_abs2(Complex64::new(t / 2.0, s / a));
                let tilt = (2.0 * s * (lambda / 2.0).asin() / a).exp();
                Ok(pref * g2 * tilt)
            }
        }
    }

    /// Modulus condition controlling the closed Fourier form for
    /// `lambda != 2`: the value `|alpha (e^(-i beta u) - 1) -
    /// beta (e^(-i alpha u) - 1)| / |alpha - beta|`, which must be `< 1`.
    ///
    /// `None` in the gamma regime, where the Fourier transform
    /// `(1 - i u)^(-t)` is branch-safe for every real `u`.
    pub fn char_fun_condition(&self, u: f64) -> Option<f64> {
        if self.params.is_gamma() {
            return None;
        }
        let alpha = self.params.alpha();
        let beta = self.params.beta();
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let w = (alpha * ((-i * beta * u).exp() - one) - beta * ((-i * alpha * u).exp() - one))
            / (alpha - beta);
        Some(w.norm())
    }

    /// Largest `U` such that the whole interval `(-U, U)` satisfies the
    /// modulus condition (infinite in the gamma regime).
    pub fn safe_u_bound(&self) -> f64 {
        if self.params.is_gamma() {
            return f64::INFINITY;
        }
        let cond = |u: f64| self.char_fun_condition(u).unwrap() - 1.0;
        let step = 0.01 / (1.0 + self.params.lambda());
        let mut u = 0.0;
        for _ in 0..2_000_000 {
            let next = u + step;
            if cond(next) >= 0.0 {
                let (mut lo, mut hi) = (u, next);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if cond(mid) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return lo;
            }
            u = next;
        }
        u
    }

    /// Fourier transform `E[e^(i u S)]` of the law.
    ///
    /// Outside the gamma regime, `u` must satisfy the modulus condition
    /// (see [`Measure1D::char_fun_condition`]); the evaluation itself uses a
    /// per-regime form whose principal logarithm is safe on the whole
    /// condition region.
    pub fn char_fun(&self, u: f64) -> Result<Complex64> {
        if !u.is_finite() {
            return Err(Error::InvalidParameter("u must be finite".into()));
        }
        let t = self.t;
        match self.params.regime() {
            Regime::Gamma => Ok((-t * Complex64::new(1.0, -u).ln()).exp()),
            regime => {
                if self.char_fun_condition(u).unwrap() >= 1.0 {
                    return Err(Error::OutsideDomain(format!(
                        "u = {u} violates the modulus condition of the closed Fourier form"
                    )));
                }
                if regime == Regime::Pascal {
                    let p = self.params.p_lambda().unwrap();
                    let h = self.params.lattice_step().unwrap();
                    let rot = Complex64::new(0.0, u * h).exp();
                    let log_val = t * ((1.0 - p).ln() - (Complex64::new(1.0, 0.0) - p * rot).ln());
                    Ok(log_val.exp())
                } else {
                    let lambda = self.params.lambda();
                    // alpha = e^{i theta}: sin(theta) = sqrt(4-lambda^2)/2,
                    // cos(theta) = -lambda/2
                    let sin_t = (4.0 - lambda * lambda).sqrt() / 2.0;
                    let cos_t = -lambda / 2.0;
                    let d = Complex64::new(
                        (u * sin_t).cosh(),
                        (u * sin_t).sinh() * cos_t / sin_t,
                    );
                    Ok((-t * d.ln()).exp())
                }
            }
        }
    }

    /// Draws `count` samples, reproducibly in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::InvalidParameter("count must be >= 1".into()));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        match self.params.regime() {
            Regime::Pascal => Ok(self.sample_lattice(count, &mut rng)),
            Regime::Gamma => Ok((0..count).map(|_| sample_gamma(self.t, &mut rng)).collect()),
            Regime::Meixner => self.sample_meixner(count, &mut rng),
        }
    }

    fn sample_lattice(&self, count: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let h = self.params.lattice_step().unwrap();
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        let mut k = 0u64;
        while acc < 1.0 - 1e-15 {
            acc += self.pmf(k).unwrap();
            cdf.push(acc);
            k += 1;
            if k > 1_000_000 {
                break;
            }
        }
        (0..count)
            .map(|_| {
                let u: f64 = rng.gen();
                let idx = cdf.partition_point(|&c| c < u);
                h * idx.min(cdf.len() - 1) as f64
            })
            .collect()
    }

    fn sample_meixner(&self, count: usize, rng: &mut ChaCha12Rng) -> Result<Vec<f64>> {
        let (lo, hi) = self.support_window();
        let n = 8192usize;
        let step = (hi - lo) / n as f64;
        let mut cdf = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        let mut prev = self.density(lo)?;
        cdf.push(0.0);
        for i in 1..=n {
            let x = lo + step * i as f64;
            let cur = self.density(x)?;
            acc += 0.5 * (prev + cur) * step;
            cdf.push(acc);
            prev = cur;
        }
        let total = *cdf.last().unwrap();
        if !(total.is_finite() && total > 0.9) {
            return Err(Error::Numerical(format!(
                "density grid captured mass {total}, expected about 1"
            )));
        }
        for c in &mut cdf {
            *c /= total;
        }
        Ok((0..count)
            .map(|_| {
                let u: f64 = rng.gen();
                let idx = cdf.partition_point(|&c| c < u).clamp(1, n);
                let (c0, c1) = (cdf[idx - 1], cdf[idx]);
                let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                lo + step * ((idx - 1) as f64 + frac)
            })
            .collect())
    }

    /// Interval carrying all but a negligible sliver of the continuous law's
    /// mass, found by walking outward from the mean until the density decays.
    fn support_window(&self) -> (f64, f64) {
        let mean = self.mean();
        let peak = self.density(mean).unwrap_or(1.0).max(1e-300);
        let mut hi = mean + 1.0;
        while self.density(hi).unwrap_or(0.0) > 1e-16 * peak && hi < mean + 1e4 {
            hi += 1.0;
        }
        let mut lo = mean - 1.0;
        while self.density(lo).unwrap_or(0.0) > 1e-16 * peak && lo > mean - 1e4 {
            lo -= 1.0;
        }
        (lo, hi + 1.0)
    }
}

fn sample_normal(rng: &mut ChaCha12Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        if u1 > 0.0 {
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

/// Marsaglia-Tsang gamma sampler for shape `t`; the `t < 1` case boosts a
/// shape `t + 1` draw by `U^(1/t)`.
fn sample_gamma(t: f64, rng: &mut ChaCha12Rng) -> f64 {
    if t < 1.0 {
        let u: f64 = rng.gen();
        return sample_gamma(t + 1.0, rng) * u.powf(1.0 / t);
    }
    let d = t - 1.0 / 3.0;
    let c = 1.0 / (3.0 * d.sqrt());
    loop {
        let x = sample_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v3 = v * v * v;
        let u: f64 = rng.gen();
        if u < 1.0 - 0.0331 * x.powi(4) || u.ln() < 0.5 * x * x + d * (1.0 - v3 + v3.ln()) {
            return d * v3;
        }
    }
}

/// The Levy measure `nu_lambda`, normalized so `int s^2 nu(ds) = 1`.
#[derive(Debug, Clone)]
pub struct LevyMeasure {
    params: MeixnerParams,
}

impl LevyMeasure {
    pub fn new(params: MeixnerParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &MeixnerParams {
        &self.params
    }

    /// `k`-th atom `(position, mass) = (sqrt(lambda^2-4) k, p^k / k)`,
    /// `k >= 1` (Pascal regime only).
    pub fn atom(&self, k: u64) -> Result<(f64, f64)> {
        if k == 0 {
            return Err(Error::InvalidParameter("atoms are indexed from k = 1".into()));
        }
        let p = self.params.p_lambda().ok_or_else(|| {
            Error::InvalidParameter("atomic representation exists only for lambda > 2".into())
        })?;
        let h = self.params.lattice_step().unwrap();
        let kf = k as f64;
        Ok((h * kf, p.powi(k as i32) / kf))
    }

    /// Density at `s != 0` (continuous regimes only): `e^(-s)/s` on
    /// `(0, inf)` for `lambda = 2`, and for `lambda < 2`
    /// `(a / 2 pi) |Gamma(1 + i s/a)|^2 exp(2 s asin(lambda/2) / a) / s^2`
    /// with `a = sqrt(4 - lambda^2)`.
    pub fn density(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Err(Error::OutsideDomain(
                "the Levy density is singular at s = 0".into(),
            ));
        }
        if !s.is_finite() {
            return Err(Error::InvalidParameter("s must be finite".into()));
        }
        match self.params.regime() {
            Regime::Pascal => Err(Error::InvalidParameter(
                "lambda > 2: the Levy measure is purely atomic, use atom()".into(),
            )),
            Regime::Gamma => Ok(if s < 0.0 { 0.0 } else { (-s).exp() / s }),
            Regime::Meixner => Ok(self.s2_density(s)? / (s * s)),
        }
    }

    /// Density of the probability measure `s^2 nu(ds)` (continuous regimes);
    /// unlike [`LevyMeasure::density`] this is regular at `s = 0`.
    pub fn s2_density(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter("s must be finite".into()));
        }
        match self.params.regime() {
            Regime::Pascal => Err(Error::InvalidParameter(
                "lambda > 2: the Levy measure is purely atomic, use atom()".into(),
            )),
            Regime::Gamma => Ok(if s <= 0.0 { 0.0 } else { s * (-s).exp() }),
            Regime::Meixner => {
                let lambda = self.params.lambda();
                let a = (4.0 - lambda * lambda).sqrt();
                let g2 = gamma_abs2(Complex64::new(1.0, s / a));
                Ok(a / (2.0 * std::f64::consts::PI) * g2 * (2.0 * s * (lambda / 2.0).asin() / a).exp())
            }
        }
    }

    /// Levy exponent rebuilt numerically from the measure itself:
    /// `int (e^(i u s) - 1) nu(ds)` for `lambda >= 2`, and for `lambda < 2`
    /// the compensated `int (e^(i u s) - 1 - i u s) nu(ds)`.
    ///
    /// Scaled by intensity `t`, the uncompensated exponent is exactly
    /// `log char_fun(u)` for `lambda >= 2`; for `lambda < 2` the compensated
    /// exponent satisfies `t * exponent + i c t u = log char_fun(u)`.
    pub fn exponent(&self, u: f64) -> Result<Complex64> {
        if !u.is_finite() {
            return Err(Error::InvalidParameter("u must be finite".into()));
        }
        match self.params.regime() {
            Regime::Pascal => {
                let p = self.params.p_lambda().unwrap();
                let mut acc = Complex64::new(0.0, 0.0);
                let mut k = 1u64;
                loop {
                    let (s, mass) = self.atom(k)?;
                    acc += mass * (Complex64::new(0.0, u * s).exp() - 1.0);
                    // remaining mass <= p^(k+1) / ((k+1)(1-p))
                    if p.powi(k as i32 + 1) / ((k as f64 + 1.0) * (1.0 - p)) < 1e-16 {
                        break;
                    }
                    k += 1;
                }
                Ok(acc)
            }
            Regime::Gamma => {
                let f = |s: f64| (Complex64::new(0.0, u * s).exp() - 1.0) / s * (-s).exp();
                adaptive(f, 1e-12, 60.0, QUAD_TOL)
            }
            Regime::Meixner => {
                let g = |s: f64| {
                    let us = u * s;
                    if us.abs() < 1e-4 {
                        // (e^{ius} - 1 - ius)/s^2 by series in us
                        let iu = Complex64::new(0.0, u);
                        let ius = Complex64::new(0.0, us);
                        iu * iu * (0.5 + ius / 6.0 + ius * ius / 24.0 + ius * ius * ius / 120.0)
                    } else {
                        (Complex64::new(0.0, us).exp() - 1.0 - Complex64::new(0.0, us)) / (s * s)
                    }
                };
                let f = |s: f64| g(s) * self.s2_density(s).unwrap();
                let (lo, hi) = self.window();
                adaptive(f, lo, hi, QUAD_TOL)
            }
        }
    }

    fn window(&self) -> (f64, f64) {
        let lambda = self.params.lambda();
        let a = (4.0 - lambda * lambda).sqrt();
        // |Gamma(1+ib)|^2 decays like e^{-pi b}; the tilt eats part of that
        let rate_pos = (std::f64::consts::PI - 2.0 * (lambda / 2.0).asin()) / a;
        let rate_neg = (std::f64::consts::PI + 2.0 * (lambda / 2.0).asin()) / a;
        (-40.0 / rate_neg.max(0.05), 40.0 / rate_pos.max(0.05))
    }
}

/// Closed form of the compensated cumulant integral
/// `int (e^(s theta) - 1 - s theta) nu_lambda(ds)`:
///
/// ```text
/// lambda != 2: -log((alpha e^(-beta theta) - beta e^(-alpha theta)) / (alpha - beta))
/// lambda  = 2: -log(1 - theta) - theta
/// ```
///
/// valid on `|theta| < params.psi_inv_radius()` (the denominator's nearest
/// zero); its derivative in `theta` is `psi_inv(theta)`.
pub fn cumulant(params: &MeixnerParams, theta: Complex64) -> Result<Complex64> {
    if !theta.re.is_finite() || !theta.im.is_finite() {
        return Err(Error::InvalidParameter("theta must be finite".into()));
    }
    let radius = params.psi_inv_radius();
    if theta.norm() >= radius {
        return Err(Error::OutsideDomain(format!(
            "|theta| = {} is outside the open disk of radius {radius}",
            theta.norm()
        )));
    }
    if params.is_gamma() {
        let one = Complex64::new(1.0, 0.0);
        return Ok(-(one - theta).ln() - theta);
    }
    let alpha = params.alpha();
    let beta = params.beta();
    let d = (alpha * (-beta * theta).exp() - beta * (-alpha * theta).exp()) / (alpha - beta);
    Ok(-d.ln())
}
