//! Raising and lowering operators on polynomial functionals of the noise.
//!
//! A [`TestFunctional`] is a finite Wick expansion: one coefficient tensor
//! per degree, evaluated at a configuration by pairing against the kernel
//! tower. The lowering operator at an atom pins one kernel argument there;
//! its adjoint under the dual pairing tensors a point mass onto the
//! coefficients. Both admit independent realizations that never touch the
//! coefficients: the lowering operator as an integral of mass shifts
//! against the Levy measure of the noise, the raising operator as a
//! difference expression in one atom's mass (with a purely imaginary shift
//! when the roots form a conjugate pair, and a derivative limit in the
//! gamma regime). The module carries all four forms plus the translation
//! helpers used to cross them: restriction of a functional to one atom's
//! mass line, exact difference stencils for Gateaux derivatives, and
//! complex mass shifts.

use num_complex::Complex64;

use crate::fock::{self, DiscreteSpace, FockVector, SymTensor};
use crate::integrate;
use crate::measures::LevyMeasure;
use crate::params::{MeixnerParams, Regime};
use crate::wick::{self, PointConfiguration};
use crate::{Error, Result};

const ZERO_C: Complex64 = Complex64::new(0.0, 0.0);

/// A polynomial functional of the noise, stored through its Wick
/// coefficients: `phi(omega) = sum_n <K_n(omega), f_n>` with the weighted
/// pairing over the atoms.
#[derive(Debug, Clone)]
pub struct TestFunctional {
    coeffs: FockVector,
}

impl TestFunctional {
    pub fn new(coeffs: FockVector) -> Self {
        Self { coeffs }
    }

    /// The constant functional with the given value.
    pub fn constant(m: usize, value: Complex64) -> Self {
        Self {
            coeffs: FockVector::vacuum(m).scale(value),
        }
    }

    pub fn m(&self) -> usize {
        self.coeffs.m()
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.max_degree()
    }

    pub fn coefficients(&self) -> &FockVector {
        &self.coeffs
    }

    pub fn component(&self, degree: usize) -> Option<&SymTensor> {
        self.coeffs.component(degree)
    }

    pub fn scale(&self, value: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.scale(value),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            coeffs: self.coeffs.add(&other.coeffs)?,
        })
    }

    /// Evaluates the functional at a configuration.
    pub fn eval(
        &self,
        space: &DiscreteSpace,
        params: &MeixnerParams,
        omega: &PointConfiguration,
    ) -> Result<Complex64> {
        let stack = wick::wick_kernels(space, params, omega, self.max_degree())?;
        self.eval_with(space, &stack)
    }

    /// Evaluates on complex atom masses: each kernel entry is a polynomial
    /// in the masses, so this is the entire extension of [`Self::eval`].
    pub fn eval_masses(
        &self,
        space: &DiscreteSpace,
        params: &MeixnerParams,
        masses: &[Complex64],
    ) -> Result<Complex64> {
        let stack = wick::wick_kernels_complex(space, params, masses, self.max_degree())?;
        self.eval_with(space, &stack)
    }

    fn eval_with(&self, space: &DiscreteSpace, stack: &wick::WickKernelStack) -> Result<Complex64> {
        let mut total = ZERO_C;
        for f in self.coeffs.components() {
            if f.max_abs() == 0.0 {
                continue;
            }
            total += wick::pair(space, stack, f)?;
        }
        Ok(total)
    }
}

/// Coefficient sequence of a dual element, paired against functionals
/// degree by degree.
#[derive(Debug, Clone)]
pub struct DualVector {
    coeffs: FockVector,
}

impl DualVector {
    pub fn new(coeffs: FockVector) -> Self {
        Self { coeffs }
    }

    pub fn m(&self) -> usize {
        self.coeffs.m()
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.max_degree()
    }

    pub fn coefficients(&self) -> &FockVector {
        &self.coeffs
    }

    pub fn component(&self, degree: usize) -> Option<&SymTensor> {
        self.coeffs.component(degree)
    }
}

fn check_atom(space: &DiscreteSpace, atom: usize) -> Result<()> {
    if atom >= space.len() {
        return Err(Error::InvalidParameter(format!(
            "atom {atom} is out of range for {} atoms",
            space.len()
        )));
    }
    Ok(())
}

fn check_m(space: &DiscreteSpace, m: usize, what: &str) -> Result<()> {
    if m != space.len() {
        return Err(Error::ShapeMismatch(format!(
            "{what} over {m} atoms against a space of {}",
            space.len()
        )));
    }
    Ok(())
}

/// Dual pairing `sum_n n! <conj(F_n), phi_n>` with the plain weighted tensor
/// pairing. The loop corrections belong to the inner product of the noise
/// space, not to this duality; with the plain pairing, raising and lowering
/// are exact adjoints.
pub fn dual_pair(
    space: &DiscreteSpace,
    f: &DualVector,
    phi: &TestFunctional,
) -> Result<Complex64> {
    check_m(space, f.m(), "dual vector")?;
    check_m(space, phi.m(), "functional")?;
    let top = f.max_degree().min(phi.max_degree());
    let mut total = ZERO_C;
    let mut factorial = 1.0;
    for n in 0..=top {
        if n > 0 {
            factorial *= n as f64;
        }
        let a = f.component(n).expect("degrees up to top are present");
        let b = phi.component(n).expect("degrees up to top are present");
        let mut term = ZERO_C;
        fock::for_each_index(space.len(), n, |idx, flat| {
            let w: f64 = idx.iter().map(|&i| space.weight(i)).product();
            term += a.data()[flat].conj() * b.data()[flat] * w;
        });
        total += factorial * term;
    }
    Ok(total)
}

/// Lowering operator at an atom: the degree-`n` coefficient becomes
/// `n * f_n(x, ...)` of degree `n - 1`.
pub fn lower(space: &DiscreteSpace, atom: usize, phi: &TestFunctional) -> Result<TestFunctional> {
    check_atom(space, atom)?;
    check_m(space, phi.m(), "functional")?;
    let m = space.len();
    let top = phi.max_degree();
    if top == 0 {
        return Ok(TestFunctional::new(FockVector::zero(m)));
    }
    let mut components = Vec::with_capacity(top);
    for n in 1..=top {
        let src = phi.component(n).expect("degrees up to top are present");
        let block = src.data().len() / m;
        let data: Vec<Complex64> = src.data()[atom * block..(atom + 1) * block]
            .iter()
            .map(|&v| n as f64 * v)
            .collect();
        components.push(SymTensor::new(m, n - 1, data)?);
    }
    Ok(TestFunctional::new(FockVector::from_components(components)?))
}

/// Raising operator at an atom: tensors the point mass at the atom (density
/// `1/sigma_x`) onto each coefficient. The adjoint of [`lower`] under
/// [`dual_pair`].
pub fn raise(space: &DiscreteSpace, atom: usize, f: &DualVector) -> Result<DualVector> {
    check_atom(space, atom)?;
    check_m(space, f.m(), "dual vector")?;
    let m = space.len();
    let mut delta = vec![0.0; m];
    delta[atom] = 1.0 / space.weight(atom);
    let mut components = vec![SymTensor::zero(m, 0)?];
    for c in f.coefficients().components() {
        components.push(c.sym_outer_vector(&delta)?);
    }
    Ok(DualVector::new(FockVector::from_components(components)?))
}

/// Evaluates `phi` with the mass at one atom shifted by a complex amount:
/// the entire extension of the restriction of `phi` to that atom's mass
/// line.
pub fn shift_eval(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    phi: &TestFunctional,
    omega: &PointConfiguration,
    shift: Complex64,
    atom: usize,
) -> Result<Complex64> {
    check_atom(space, atom)?;
    check_m(space, phi.m(), "functional")?;
    check_m(space, omega.len(), "configuration")?;
    let mut masses: Vec<Complex64> = omega
        .masses()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    masses[atom] += shift;
    phi.eval_masses(space, params, &masses)
}

/// First Gateaux derivative of `phi` at `omega` along the point mass at an
/// atom.
pub fn gateaux(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    phi: &TestFunctional,
    omega: &PointConfiguration,
    atom: usize,
) -> Result<Complex64> {
    Ok(gateaux_derivatives(space, params, phi, omega, atom, 1)?[1])
}

/// Derivatives of orders `0..=order` of the one-atom mass restriction of
/// `phi`, taken at shift zero.
///
/// The restriction is a polynomial of degree at most `phi.max_degree()`, so
/// a difference stencil on one more node than that is exact; no step-size
/// tuning is involved.
pub fn gateaux_derivatives(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    phi: &TestFunctional,
    omega: &PointConfiguration,
    atom: usize,
    order: usize,
) -> Result<Vec<Complex64>> {
    check_atom(space, atom)?;
    check_m(space, phi.m(), "functional")?;
    check_m(space, omega.len(), "configuration")?;
    let points = (phi.max_degree() + 1).max(order + 1);
    let nodes: Vec<f64> = (0..points)
        .map(|j| j as f64 - 0.5 * (points - 1) as f64)
        .collect();
    let weights = integrate::difference_weights(&nodes, 0.0, order)?;
    let mut values = Vec::with_capacity(points);
    for &z in &nodes {
        let mut masses = omega.masses().to_vec();
        masses[atom] += z;
        values.push(phi.eval(space, params, &PointConfiguration::new(masses)?)?);
    }
    Ok(weights
        .iter()
        .map(|row| row.iter().zip(&values).map(|(&w, &v)| w * v).sum())
        .collect())
}

/// Monomial coefficients of `z -> phi(omega + z at the atom)`, recovered by
/// interpolation on integer-spaced nodes (exact, the restriction being a
/// polynomial of degree at most `phi.max_degree()`).
fn shift_polynomial(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    phi: &TestFunctional,
    omega: &PointConfiguration,
    atom: usize,
) -> Result<Vec<Complex64>> {
    let count = phi.max_degree() + 1;
    let nodes: Vec<f64> = (0..count)
        .map(|j| j as f64 - 0.5 * (count - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(count);
    for &z in &nodes {
        let mut masses = omega.masses().to_vec();
        masses[atom] += z;
        values.push(phi.eval(space, params, &PointConfiguration::new(masses)?)?);
    }
    Ok(polynomial_from_samples(&nodes, &values))
}

/// Newton divided differences expanded into the monomial basis.
fn polynomial_from_samples(nodes: &[f64], values: &[Complex64]) -> Vec<Complex64> {
    let n = nodes.len();
    let mut dd = values.to_vec();
    for level in 1..n {
        for j in (level..n).rev() {
            dd[j] = (dd[j] - dd[j - 1]) / (nodes[j] - nodes[j - level]);
        }
    }
    let mut coeffs = vec![ZERO_C; n];
    for k in (0..n).rev() {
        for j in (1..n).rev() {
            coeffs[j] = coeffs[j - 1] - nodes[k] * coeffs[j];
        }
        coeffs[0] = dd[k] - nodes[k] * coeffs[0];
    }
    coeffs
}

/// `int_0^eps s^k e^(-s) ds` by the alternating series in `eps`.
fn lower_incomplete_weight(k: usize, eps: f64) -> f64 {
    let mut total = 0.0;
    let mut j_factorial = 1.0;
    for j in 0..60 {
        if j > 0 {
            j_factorial *= j as f64;
        }
        let term = eps.powi((k + j + 1) as i32) / (j_factorial * (k + j + 1) as f64)
            * if j % 2 == 0 { 1.0 } else { -1.0 };
        total += term;
        if term.abs() < 1e-20 {
            break;
        }
    }
    total
}

/// The lowering operator realized through the Levy measure `nu` of the
/// noise: `int (phi(omega + s at the atom) - phi(omega)) s nu(ds)`.
///
/// Pascal regime: the measure is atomic on the lattice, so the integral is
/// a sum, truncated once the remaining `s^2`-mass (unit in total) drops
/// below `1e-12`. Gamma regime: the integrand `diff(s) e^(-s)` is split at
/// `s = 1/2`; below, the shift polynomial is integrated term by term
/// against exact incomplete-gamma weights, above, adaptive quadrature runs
/// to a cutoff where the polynomial times the exponential tail is far below
/// the target. Meixner regime: `diff(s)/s` is the shift polynomial divided
/// by `s`, integrated against the `s^2`-density over a window sized by its
/// exponential decay rates and the polynomial degree.
pub fn levy_lower(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    atom: usize,
    phi: &TestFunctional,
    omega: &PointConfiguration,
) -> Result<Complex64> {
    check_atom(space, atom)?;
    check_m(space, phi.m(), "functional")?;
    check_m(space, omega.len(), "configuration")?;
    match params.regime() {
        Regime::Pascal => {
            let levy = LevyMeasure::new(params.clone());
            let p = params.p_lambda().expect("pascal regime");
            let step = params.lattice_step().expect("pascal regime");
            let base = phi.eval(space, params, omega)?;
            let mut total = ZERO_C;
            let mut k = 1u64;
            loop {
                let (s, mass) = levy.atom(k)?;
                let mut masses = omega.masses().to_vec();
                masses[atom] += s;
                let shifted = phi.eval(space, params, &PointConfiguration::new(masses)?)?;
                total += (shifted - base) * (s * mass);
                let ahead = k as f64 + 1.0;
                let remainder = step * step * p.powf(ahead) * (ahead * (1.0 - p) + p)
                    / ((1.0 - p) * (1.0 - p));
                if remainder < 1e-12 {
                    break;
                }
                k += 1;
            }
            Ok(total)
        }
        Regime::Gamma => {
            let coeffs = shift_polynomial(space, params, phi, omega, atom)?;
            let eps = 0.5;
            let mut head = ZERO_C;
            for (k, &a) in coeffs.iter().enumerate().skip(1) {
                head += a * lower_incomplete_weight(k, eps);
            }
            let degree = coeffs.len() - 1;
            let mut cutoff: f64 = 46.0;
            for _ in 0..6 {
                cutoff = 46.0 + degree as f64 * cutoff.ln();
            }
            let tail = integrate::adaptive(
                |s| {
                    let mut quotient = ZERO_C;
                    for &coef in coeffs.iter().skip(1).rev() {
                        quotient = quotient * s + coef;
                    }
                    quotient * s * (-s).exp()
                },
                eps,
                cutoff,
                1e-10,
            )?;
            Ok(head + tail)
        }
        Regime::Meixner => {
            let coeffs = shift_polynomial(space, params, phi, omega, atom)?;
            let levy = LevyMeasure::new(params.clone());
            let lambda = params.lambda();
            let a = (4.0 - lambda * lambda).sqrt();
            let half_angle = (lambda / 2.0).asin();
            let degree = coeffs.len() - 1;
            let window = |rate: f64| {
                let mut s: f64 = 46.0 / rate;
                for _ in 0..6 {
                    s = (46.0 + degree as f64 * s.ln().max(0.0)) / rate;
                }
                s
            };
            let hi = window((std::f64::consts::PI - 2.0 * half_angle) / a);
            let lo = -window((std::f64::consts::PI + 2.0 * half_angle) / a);
            integrate::adaptive(
                |s| {
                    let mut quotient = ZERO_C;
                    for &coef in coeffs.iter().skip(1).rev() {
                        quotient = quotient * s + coef;
                    }
                    quotient * levy.s2_density(s).unwrap_or(f64::NAN)
                },
                lo,
                hi,
                1e-10,
            )
        }
    }
}

/// The raising operator summed against a real function `xi`, evaluated
/// without touching the coefficients: per atom, a difference expression in
/// that atom's mass.
///
/// Away from the gamma point the shift is `alpha - beta` (purely imaginary
/// for a conjugate root pair, where the two complex evaluations enter in
/// conjugate-invariant combinations, so real functionals give real values
/// up to rounding). At the gamma point the roots collide and the shifts
/// degenerate into first and second Gateaux derivatives.
pub fn creation_via_fd(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    xi: &[f64],
    phi: &TestFunctional,
    omega: &PointConfiguration,
) -> Result<Complex64> {
    check_m(space, xi.len(), "direction")?;
    check_m(space, phi.m(), "functional")?;
    check_m(space, omega.len(), "configuration")?;
    let c = params.c_lambda();
    let mut total = ZERO_C;
    if params.is_gamma() {
        for (i, &x) in xi.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let d = gateaux_derivatives(space, params, phi, omega, i, 2)?;
            let mass = omega.mass(i);
            let weight = space.weight(i);
            total += x * (mass * (d[2] - 2.0 * d[1] + d[0]) + weight * (d[1] - d[0]));
        }
    } else {
        let alpha = params.alpha();
        let h = alpha - params.beta();
        let base = phi.eval(space, params, omega)?;
        for (i, &x) in xi.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let up = shift_eval(space, params, phi, omega, h, i)?;
            let down = shift_eval(space, params, phi, omega, -h, i)?;
            let d1 = (base - down) / h;
            let d2 = (up - 2.0 * base + down) / (h * h);
            let f_i = down + 2.0 * alpha * d1 + alpha * alpha * d2;
            let g_i = d1 + alpha * d2;
            let mass = omega.mass(i);
            let weight = space.weight(i);
            total += x * ((mass - c * weight) * f_i - weight * g_i);
        }
    }
    Ok(total)
}

/// Truncated exponential vector: coefficients `u^(tensor n) / n!` for
/// degrees `0..=depth`.
pub fn exponential_functional(m: usize, u: &[f64], depth: usize) -> Result<TestFunctional> {
    if u.len() != m {
        return Err(Error::ShapeMismatch(
            "direction length must match the atom count".into(),
        ));
    }
    let mut components = Vec::with_capacity(depth + 1);
    let mut factorial = 1.0;
    for n in 0..=depth {
        if n > 0 {
            factorial *= n as f64;
        }
        components.push(SymTensor::power(u, n)?.scale(Complex64::new(1.0 / factorial, 0.0)));
    }
    Ok(TestFunctional::new(FockVector::from_components(components)?))
}

/// Pointwise inverse of the noise exponent applied to a real field. The
/// exponential vector in the direction of the result represents, up to
/// truncation, the normalized exponential of the field paired with the
/// noise; lowering it multiplies by the result's value at the atom, while
/// the Gateaux derivative multiplies by the original field's value there.
pub fn psi_inverse_field(params: &MeixnerParams, phi: &[f64]) -> Result<Vec<f64>> {
    phi.iter()
        .map(|&v| {
            let w = params.psi_inv(Complex64::new(v, 0.0))?;
            if w.im.abs() > 1e-12 * (1.0 + w.re.abs()) {
                return Err(Error::Numerical(format!(
                    "psi_inv of the real value {v} came out non-real"
                )));
            }
            Ok(w.re)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn space3() -> DiscreteSpace {
        DiscreteSpace::new(vec![0.5, 1.1, 0.8]).unwrap()
    }

    fn random_functional(m: usize, top: usize, real: bool, seed: u64) -> TestFunctional {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut components = Vec::with_capacity(top + 1);
        for n in 0..=top {
            let len = m.pow(n as u32);
            let data: Vec<Complex64> = (0..len)
                .map(|_| {
                    let re = rng.gen_range(-1.0..1.0);
                    let im = if real { 0.0 } else { rng.gen_range(-1.0..1.0) };
                    Complex64::new(re, im)
                })
                .collect();
            components.push(SymTensor::new(m, n, data).unwrap());
        }
        TestFunctional::new(FockVector::from_components(components).unwrap())
    }

    fn random_omega(m: usize, seed: u64) -> PointConfiguration {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        PointConfiguration::new((0..m).map(|_| rng.gen_range(-1.5..1.5)).collect()).unwrap()
    }

    #[test]
    fn constant_functional_evaluates_to_its_value() {
        let space = space3();
        let params = MeixnerParams::new(1.3).unwrap();
        let phi = TestFunctional::constant(3, Complex64::new(2.5, -0.5));
        let omega = random_omega(3, 11);
        let v = phi.eval(&space, &params, &omega).unwrap();
        assert!((v - Complex64::new(2.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn degree_one_evaluation_matches_the_field() {
        let space = space3();
        let params = MeixnerParams::new(2.5).unwrap();
        let f = [0.4, -1.2, 0.7];
        let phi = TestFunctional::new(
            FockVector::from_tensor(SymTensor::from_real(3, 1, f.to_vec()).unwrap()).unwrap(),
        );
        let omega = random_omega(3, 5);
        let expected: f64 = (0..3)
            .map(|i| (omega.mass(i) - params.c_lambda() * space.weight(i)) * f[i])
            .sum();
        let v = phi.eval(&space, &params, &omega).unwrap();
        assert!((v - expected).norm() < 1e-13);
    }

    #[test]
    fn lowering_pins_one_argument() {
        let space = space3();
        let phi = random_functional(3, 2, false, 21);
        let lowered = lower(&space, 1, &phi).unwrap();
        assert_eq!(lowered.max_degree(), 1);
        let src = phi.component(2).unwrap();
        let out = lowered.component(1).unwrap();
        for j in 0..3 {
            let expected = 2.0 * src.get(&[1, j]);
            assert!((out.get(&[j]) - expected).norm() < 1e-15);
        }
        let from_one = lowered.component(0).unwrap().get(&[]);
        assert!((from_one - phi.component(1).unwrap().get(&[1])).norm() < 1e-15);
    }

    #[test]
    fn lowering_weighted_by_xi_matches_annihilation() {
        let space = space3();
        let phi = random_functional(3, 4, false, 33);
        let xi = [0.8, -0.3, 1.4];
        let mut summed = FockVector::zero(3);
        for (i, &x) in xi.iter().enumerate() {
            let lowered = lower(&space, i, &phi).unwrap();
            summed = summed
                .add(
                    &lowered
                        .coefficients()
                        .scale(Complex64::new(x * space.weight(i), 0.0)),
                )
                .unwrap();
        }
        let direct = fock::annihilate1(&space, &xi, phi.coefficients()).unwrap();
        assert!(summed.max_abs_diff(&direct) < 1e-13);
    }

    #[test]
    fn raising_the_vacuum_gives_a_point_mass() {
        let space = space3();
        let f = DualVector::new(FockVector::vacuum(3));
        let raised = raise(&space, 2, &f).unwrap();
        assert_eq!(raised.max_degree(), 1);
        let one = raised.component(1).unwrap();
        assert!((one.get(&[2]) - 1.0 / space.weight(2)).norm() < 1e-15);
        assert_eq!(one.get(&[0]), ZERO_C);
        assert!((raised.component(0).unwrap().get(&[])).norm() == 0.0);
    }

    #[test]
    fn raising_and_lowering_are_dual_adjoints() {
        let space = space3();
        for seed in 0..8 {
            let f = DualVector::new(random_functional(3, 3, false, 100 + seed).coeffs);
            let phi = random_functional(3, 4, false, 200 + seed);
            for atom in 0..3 {
                let left = dual_pair(&space, &raise(&space, atom, &f).unwrap(), &phi).unwrap();
                let right = dual_pair(&space, &f, &lower(&space, atom, &phi).unwrap()).unwrap();
                assert!(
                    (left - right).norm() < 1e-12,
                    "atom {atom}: {left} vs {right}"
                );
            }
        }
    }

    #[test]
    fn multiplication_by_the_field_matches_the_operator_sum() {
        let space = space3();
        let xi = [0.6, -0.9, 0.4];
        for &lambda in &[0.0, 1.4, 2.0, 3.0] {
            let params = MeixnerParams::new(lambda).unwrap();
            let phi = random_functional(3, 3, true, 71);
            let image = TestFunctional::new(
                fock::field_op(&space, &params, &xi, phi.coefficients()).unwrap(),
            );
            for seed in 0..10 {
                let omega = random_omega(3, 300 + seed);
                let direct = omega.pair(&xi) * phi.eval(&space, &params, &omega).unwrap();
                let through = image.eval(&space, &params, &omega).unwrap();
                assert!(
                    (direct - through).norm() < 1e-9,
                    "lambda {lambda}: {direct} vs {through}"
                );
            }
        }
    }

    #[test]
    fn shift_eval_extends_the_real_restriction() {
        let space = space3();
        let params = MeixnerParams::new(1.0).unwrap();
        let phi = random_functional(3, 3, false, 55);
        let omega = random_omega(3, 56);
        let at_zero = shift_eval(&space, &params, &phi, &omega, ZERO_C, 1).unwrap();
        assert!((at_zero - phi.eval(&space, &params, &omega).unwrap()).norm() < 1e-14);
        let z = 0.37;
        let mut masses = omega.masses().to_vec();
        masses[1] += z;
        let shifted_config = phi
            .eval(&space, &params, &PointConfiguration::new(masses).unwrap())
            .unwrap();
        let through = shift_eval(&space, &params, &phi, &omega, Complex64::new(z, 0.0), 1).unwrap();
        assert!((through - shifted_config).norm() < 1e-13);
    }

    #[test]
    fn gateaux_of_a_linear_functional_is_its_density() {
        let space = space3();
        let params = MeixnerParams::new(0.7).unwrap();
        let f = [0.9, -0.2, 0.5];
        let phi = TestFunctional::new(
            FockVector::from_tensor(SymTensor::from_real(3, 1, f.to_vec()).unwrap()).unwrap(),
        );
        let omega = random_omega(3, 77);
        for atom in 0..3 {
            let d = gateaux(&space, &params, &phi, &omega, atom).unwrap();
            assert!((d - f[atom]).norm() < 1e-12);
        }
    }

    #[test]
    fn second_derivative_of_a_squared_mass_is_two() {
        let space = space3();
        let params = MeixnerParams::new(2.0).unwrap();
        let atom = 1;
        let mut data = vec![Complex64::new(0.0, 0.0); 9];
        data[atom * 3 + atom] = Complex64::new(1.0, 0.0);
        let phi = TestFunctional::new(
            FockVector::from_tensor(SymTensor::new(3, 2, data).unwrap()).unwrap(),
        );
        let omega = random_omega(3, 78);
        let d = gateaux_derivatives(&space, &params, &phi, &omega, atom, 2).unwrap();
        assert!((d[2] - 2.0).norm() < 1e-10);
        let other = gateaux_derivatives(&space, &params, &phi, &omega, 0, 2).unwrap();
        assert!(other[2].norm() < 1e-10);
    }

    #[test]
    fn shift_polynomial_reproduces_shifted_values() {
        let space = space3();
        let params = MeixnerParams::new(2.7).unwrap();
        let phi = random_functional(3, 3, false, 91);
        let omega = random_omega(3, 92);
        let coeffs = shift_polynomial(&space, &params, &phi, &omega, 2).unwrap();
        for &z in &[-1.7, 0.0, 0.44, 2.3] {
            let mut poly = ZERO_C;
            for &a in coeffs.iter().rev() {
                poly = poly * z + a;
            }
            let direct = shift_eval(&space, &params, &phi, &omega, Complex64::new(z, 0.0), 2)
                .unwrap();
            assert!((poly - direct).norm() < 1e-11);
        }
    }

    #[test]
    fn levy_lowering_matches_the_coefficient_form() {
        let space = space3();
        for &lambda in &[0.0, 1.0, 2.0, 3.0] {
            let params = MeixnerParams::new(lambda).unwrap();
            let phi = random_functional(3, 3, true, 40);
            let omega = random_omega(3, 41);
            for atom in 0..3 {
                let through = levy_lower(&space, &params, atom, &phi, &omega).unwrap();
                let direct = lower(&space, atom, &phi)
                    .unwrap()
                    .eval(&space, &params, &omega)
                    .unwrap();
                assert!(
                    (through - direct).norm() < 1e-6,
                    "lambda {lambda} atom {atom}: {through} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn creation_by_differences_matches_the_coefficient_form() {
        let space = space3();
        let xi = [0.5, 1.1, -0.7];
        for &lambda in &[0.0, 1.0, 1.2, 2.0, 3.0] {
            let params = MeixnerParams::new(lambda).unwrap();
            let phi = random_functional(3, 2, true, 60);
            let image = TestFunctional::new(
                fock::create(&space, &xi, phi.coefficients()).unwrap(),
            );
            for seed in 0..5 {
                let omega = random_omega(3, 500 + seed);
                let through = creation_via_fd(&space, &params, &xi, &phi, &omega).unwrap();
                let direct = image.eval(&space, &params, &omega).unwrap();
                assert!(
                    (through - direct).norm() < 1e-9,
                    "lambda {lambda}: {through} vs {direct}"
                );
                if lambda < 2.0 {
                    assert!(
                        through.im.abs() < 1e-10,
                        "lambda {lambda}: imaginary part {}",
                        through.im
                    );
                }
            }
        }
    }

    #[test]
    fn creation_on_the_constant_gives_the_centered_field() {
        let space = space3();
        let xi = [1.0, -0.5, 0.25];
        for &lambda in &[2.0, 3.0] {
            let params = MeixnerParams::new(lambda).unwrap();
            let phi = TestFunctional::constant(3, Complex64::new(1.0, 0.0));
            let omega = random_omega(3, 64);
            let expected: f64 = (0..3)
                .map(|i| xi[i] * (omega.mass(i) - params.c_lambda() * space.weight(i)))
                .sum();
            let v = creation_via_fd(&space, &params, &xi, &phi, &omega).unwrap();
            assert!((v - expected).norm() < 1e-11, "lambda {lambda}");
        }
    }

    #[test]
    fn exponential_vector_lowering_is_exact() {
        let space = space3();
        let u = [0.3, -0.2, 0.15];
        let depth = 6;
        let e_full = exponential_functional(3, &u, depth).unwrap();
        let e_less = exponential_functional(3, &u, depth - 1).unwrap();
        for atom in 0..3 {
            let lowered = lower(&space, atom, &e_full).unwrap();
            let expected = e_less.scale(Complex64::new(u[atom], 0.0));
            let diff = lowered
                .coefficients()
                .max_abs_diff(expected.coefficients());
            assert!(diff < 1e-14, "atom {atom}: {diff}");
        }
    }

    #[test]
    fn exponential_vector_gateaux_tracks_the_field() {
        let space = space3();
        let params = MeixnerParams::new(1.5).unwrap();
        let phi_field = [0.09, -0.06, 0.05];
        let u = psi_inverse_field(&params, &phi_field).unwrap();
        let omega = PointConfiguration::new(vec![0.4, -0.3, 0.6]).unwrap();
        let atom = 0;
        let residual = |depth: usize| -> f64 {
            let e = exponential_functional(3, &u, depth).unwrap();
            let d = gateaux(&space, &params, &e, &omega, atom).unwrap();
            let v = e.eval(&space, &params, &omega).unwrap();
            (d - phi_field[atom] * v).norm()
        };
        let r4 = residual(4);
        let r8 = residual(8);
        assert!(r8 < 1e-8, "residual at depth 8: {r8}");
        assert!(r8 < 1e-2 * r4, "no decay: {r4} -> {r8}");
    }

    #[test]
    fn psi_inverse_field_requires_real_values_in_the_disk() {
        let params = MeixnerParams::new(2.0).unwrap();
        let u = psi_inverse_field(&params, &[0.1, -0.1]).unwrap();
        assert!((u[0] - 0.1 / 0.9).abs() < 1e-14);
        assert!((u[1] + 0.1 / 1.1).abs() < 1e-14);
        assert!(psi_inverse_field(&params, &[2.0]).is_err());
    }

    #[test]
    fn shape_and_range_violations_are_rejected() {
        let space = space3();
        let params = MeixnerParams::new(1.0).unwrap();
        let phi = random_functional(3, 2, false, 1);
        let omega = random_omega(3, 2);
        assert!(lower(&space, 3, &phi).is_err());
        assert!(lower(&space, 0, &random_functional(2, 2, false, 3)).is_err());
        assert!(gateaux(&space, &params, &phi, &omega, 5).is_err());
        assert!(creation_via_fd(&space, &params, &[1.0, 0.0], &phi, &omega).is_err());
        let deep = DualVector::new(
            FockVector::from_tensor(SymTensor::power(&[1.0, 0.0, 0.0], 12).unwrap()).unwrap(),
        );
        assert!(matches!(
            raise(&space, 0, &deep),
            Err(Error::BudgetExceeded(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn adjointness_is_generic(seed in 0u64..1000, atom in 0usize..3, top_f in 0usize..3, top_phi in 1usize..4) {
            let space = space3();
            let f = DualVector::new(random_functional(3, top_f, false, seed).coeffs);
            let phi = random_functional(3, top_phi, false, seed.wrapping_add(7919));
            let left = dual_pair(&space, &raise(&space, atom, &f).unwrap(), &phi).unwrap();
            let right = dual_pair(&space, &f, &lower(&space, atom, &phi).unwrap()).unwrap();
            prop_assert!((left - right).norm() < 1e-11);
        }
    }
}
