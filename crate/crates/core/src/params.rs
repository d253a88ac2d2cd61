//! Parameter pack for one member of the Meixner family.
//!
//! The family is indexed by a single real `lambda >= 0`. All closed forms
//! downstream are driven by the roots of the quadratic
//!
//! ```text
//! 1 + lambda*z + z^2 = (1 - alpha*z)(1 - beta*z),
//! ```
//!
//! so `alpha + beta = -lambda` and `alpha * beta = 1`. The discriminant
//! changes sign at `lambda = 2`, which splits the family into three regimes:
//!
//! * `lambda < 2`: conjugate roots on the unit circle, Meixner regime
//!   (continuous law with density built from `|Gamma|^2`);
//! * `lambda = 2`: double root `alpha = beta = -1`, gamma regime;
//! * `lambda > 2`: distinct negative real roots, Pascal regime (lattice law).
//!
//! Two scalar constants ride along: the drift scale `c = lambda/2` for
//! `lambda <= 2` and `c = 2/(lambda + sqrt(lambda^2-4))` above (equivalently
//! `c = -max(alpha, beta)` there), and, in the Pascal regime only, the lattice
//! success probability `p = (lambda - sqrt(lambda^2-4))/(lambda + sqrt(lambda^2-4))`.
//!
//! The module also carries the analytic change of variable `psi` and its
//! inverse `psi_inv`, normalized so that `psi(0) = 0` and `psi'(0) = 1`; they
//! exchange plain exponentials and Wick exponentials of the noise.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Qualitative regime of the family, decided by comparing `lambda` with 2.
///
/// The comparison is exact floating-point equality: `lambda = 2.0` is the
/// gamma case, everything below is Meixner, everything above is Pascal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Meixner,
    Gamma,
    Pascal,
}

/// Derived constants for one value of `lambda`.
///
/// Construct through [`MeixnerParams::new`]; the fields are read-only by
/// convention and jointly satisfy `alpha + beta = -lambda`, `alpha*beta = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeixnerParams {
    lambda: f64,
    c_lambda: f64,
    alpha: Complex64,
    beta: Complex64,
    p_lambda: Option<f64>,
    regime: Regime,
}

impl MeixnerParams {
    /// Builds the parameter pack for `lambda >= 0`.
    ///
    /// Root convention: for `lambda < 2`, `alpha` is the root with positive
    /// imaginary part; for `lambda >= 2` it is the root with the larger real
    /// value (the one closer to zero). `beta` is the other root.
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        let (regime, alpha, beta, c_lambda, p_lambda) = if lambda < 2.0 {
            let im = (4.0 - lambda * lambda).sqrt() / 2.0;
            let alpha = Complex64::new(-lambda / 2.0, im);
            (Regime::Meixner, alpha, alpha.conj(), lambda / 2.0, None)
        } else if lambda == 2.0 {
            let root = Complex64::new(-1.0, 0.0);
            (Regime::Gamma, root, root, 1.0, None)
        } else {
            let disc = (lambda * lambda - 4.0).sqrt();
            let alpha = Complex64::new((-lambda + disc) / 2.0, 0.0);
            let beta = Complex64::new((-lambda - disc) / 2.0, 0.0);
            let c = 2.0 / (lambda + disc);
            let p = (lambda - disc) / (lambda + disc);
            (Regime::Pascal, alpha, beta, c, Some(p))
        };
        Ok(Self {
            lambda,
            c_lambda,
            alpha,
            beta,
            p_lambda,
            regime,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Drift scale `c`: the mean of the unit-intensity law is `c * t`.
    pub fn c_lambda(&self) -> f64 {
        self.c_lambda
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// Lattice success probability; `Some` only in the Pascal regime.
    pub fn p_lambda(&self) -> Option<f64> {
        self.p_lambda
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn is_gamma(&self) -> bool {
        self.regime == Regime::Gamma
    }

    /// Lattice spacing `sqrt(lambda^2 - 4)` of the Pascal-regime law.
    pub fn lattice_step(&self) -> Option<f64> {
        match self.regime {
            Regime::Pascal => Some((self.lambda * self.lambda - 4.0).sqrt()),
            _ => None,
        }
    }

    /// Radius of the disk on which `psi` (and the closed generating-function
    /// forms) are analytic: `1/max(|alpha|, |beta|)`, i.e. 1 for
    /// `lambda <= 2` and `c` above.
    pub fn psi_radius(&self) -> f64 {
        1.0 / self.alpha.norm().max(self.beta.norm())
    }

    /// Radius of the disk on which `psi_inv` is analytic: the distance from
    /// the origin to the nearest zero of `alpha*e^(alpha z) - beta*e^(beta z)`
    /// (for `lambda = 2`, the pole of `z/(1-z)` at 1).
    pub fn psi_inv_radius(&self) -> f64 {
        match self.regime {
            Regime::Gamma => 1.0,
            Regime::Pascal => {
                // zeros at (log(beta/alpha) + 2*pi*i*k)/(alpha - beta); the
                // k = 0 zero is the closest and purely real
                let ratio = (self.beta.re / self.alpha.re).ln();
                ratio.abs() / (self.alpha.re - self.beta.re)
            }
            Regime::Meixner => {
                // alpha = e^{i theta}: real zeros at (2(pi - theta) + 2 pi k)
                // / sqrt(4 - lambda^2); k = 0 is the closest
                let theta = self.alpha.arg();
                2.0 * (std::f64::consts::PI - theta) / (4.0 - self.lambda * self.lambda).sqrt()
            }
        }
    }

    fn check_disk(&self, z: Complex64, radius: f64, what: &str) -> Result<()> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::OutsideDomain(format!("{what}: non-finite argument")));
        }
        if z.norm() >= radius {
            return Err(Error::OutsideDomain(format!(
                "{what}: |z| = {} is outside the open disk of radius {radius}",
                z.norm()
            )));
        }
        Ok(())
    }

    /// Analytic change of variable
    /// `psi(z) = log((1 - beta z)/(1 - alpha z)) / (alpha - beta)`
    /// (`z/(1+z)` in the gamma case), normalized to `psi(0) = 0`,
    /// `psi'(0) = 1`; the series starts `z - (lambda/2) z^2 + ...`.
    ///
    /// Defined on the open disk `|z| < psi_radius()`.
    pub fn psi(&self, z: Complex64) -> Result<Complex64> {
        self.check_disk(z, self.psi_radius(), "psi")?;
        if self.is_gamma() {
            return Ok(z / (z + 1.0));
        }
        let num = (Complex64::new(1.0, 0.0) - self.beta * z).ln();
        let den = (Complex64::new(1.0, 0.0) - self.alpha * z).ln();
        Ok((num - den) / (self.alpha - self.beta))
    }

    /// Inverse of [`MeixnerParams::psi`]:
    /// `psi_inv(z) = (e^(alpha z) - e^(beta z)) / (alpha e^(alpha z) - beta e^(beta z))`
    /// (`z/(1-z)` in the gamma case), defined on `|z| < psi_inv_radius()`.
    pub fn psi_inv(&self, z: Complex64) -> Result<Complex64> {
        self.check_disk(z, self.psi_inv_radius(), "psi_inv")?;
        if self.is_gamma() {
            return Ok(z / (Complex64::new(1.0, 0.0) - z));
        }
        let ea = (self.alpha * z).exp();
        let eb = (self.beta * z).exp();
        Ok((ea - eb) / (self.alpha * ea - self.beta * eb))
    }
}

/// Wire shape: complex numbers as `[re, im]`, `p_lambda` null outside the
/// Pascal regime.
#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    lambda: f64,
    c_lambda: f64,
    alpha: [f64; 2],
    beta: [f64; 2],
    p_lambda: Option<f64>,
    regime: Regime,
}

impl Serialize for MeixnerParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ParamsRepr {
            lambda: self.lambda,
            c_lambda: self.c_lambda,
            alpha: [self.alpha.re, self.alpha.im],
            beta: [self.beta.re, self.beta.im],
            p_lambda: self.p_lambda,
            regime: self.regime,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MeixnerParams {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ParamsRepr::deserialize(deserializer)?;
        let rebuilt = MeixnerParams::new(repr.lambda).map_err(D::Error::custom)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        let consistent = close(rebuilt.c_lambda, repr.c_lambda)
            && close(rebuilt.alpha.re, repr.alpha[0])
            && close(rebuilt.alpha.im, repr.alpha[1])
            && close(rebuilt.beta.re, repr.beta[0])
            && close(rebuilt.beta.im, repr.beta[1])
            && rebuilt.regime == repr.regime
            && match (rebuilt.p_lambda, repr.p_lambda) {
                (Some(a), Some(b)) => close(a, b),
                (None, None) => true,
                _ => false,
            };
        if !consistent {
            return Err(D::Error::custom(
                "derived fields are inconsistent with lambda",
            ));
        }
        Ok(rebuilt)
    }
}
