//! Wick kernels of the discrete noise field and their pairings.
//!
//! For a point configuration `omega` (a mass on each atom), the degree-`n`
//! Wick kernel is the symmetric tensor obtained from the five-term
//! recurrence
//!
//! ```text
//! K(n+1) = sym[ K(n) w(i_{n+1})
//!             - n K(n-1) dh(i_{n+1}, i_n)
//!             - n(n-1) K(n-1) dh(i_n, i_{n-1}) dh(i_{n+1}, i_n)
//!             - lambda n K(n) dh(i_{n+1}, i_n)
//!             - c K(n) ],        K(0) = 1,  K(1) = w - c,
//! ```
//!
//! where kernels are stored as densities against the weights, `w(i)` is
//! `mass_i / sigma_i`, and a delta contraction `dh(i, j)` contributes
//! `[i == j] / sigma_i`. Pairing a kernel with a test tensor `f` sums
//! `K[idx] f[idx]` against the product of the weights along `idx`; on
//! indicator towers this reproduces the one-dimensional orthogonal
//! polynomials, and over disjoint atom sets pairings factor.
//!
//! The same recurrence run over polynomials in the masses gives the kernel
//! entries symbolically; expectations of products of pairings then reduce,
//! by independence across atoms, to products of one-dimensional moments.
//! That path is the exact (sampling-free) side of the unitarity checks.

use num_complex::Complex64;

use crate::fock::{self, DiscreteSpace, FockVector, SymTensor};
use crate::mpoly::{Dd, MPoly};
use crate::params::MeixnerParams;
use crate::poly::GenFunEval;
use crate::{Error, Result};

/// Hard cap on the polynomial degree a single atom may carry inside an
/// exact expectation.
pub const MAX_ATOM_MOMENT_DEGREE: usize = 12;

const ZERO_C: Complex64 = Complex64::new(0.0, 0.0);
const ONE_C: Complex64 = Complex64::new(1.0, 0.0);

/// Masses a discrete measure places on the atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    masses: Vec<f64>,
}

impl PointConfiguration {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidParameter(
                "a point configuration needs at least one atom".into(),
            ));
        }
        if masses.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "point configuration masses must be finite".into(),
            ));
        }
        Ok(PointConfiguration { masses })
    }

    pub fn zero(m: usize) -> Result<Self> {
        Self::new(vec![0.0; m])
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, atom: usize) -> f64 {
        self.masses[atom]
    }

    /// The pairing of the measure with a function: `sum_i mass_i xi_i`.
    pub fn pair(&self, xi: &[f64]) -> f64 {
        self.masses.iter().zip(xi).map(|(m, x)| m * x).sum()
    }
}

/// Wick kernels of one configuration for every degree `0..=depth`.
#[derive(Debug, Clone)]
pub struct WickKernelStack {
    kernels: Vec<SymTensor>,
}

impl WickKernelStack {
    pub fn m(&self) -> usize {
        self.kernels[0].m()
    }

    pub fn depth(&self) -> usize {
        self.kernels.len() - 1
    }

    pub fn kernel(&self, degree: usize) -> Option<&SymTensor> {
        self.kernels.get(degree)
    }

    pub fn kernels(&self) -> &[SymTensor] {
        &self.kernels
    }
}

fn check_atom_count(space: &DiscreteSpace, len: usize, what: &str) -> Result<()> {
    if len != space.len() {
        return Err(Error::ShapeMismatch(format!(
            "{what} over {len} atoms against a space of {}",
            space.len()
        )));
    }
    Ok(())
}

/// Kernel stack at the given configuration, degrees `0..=n_max`.
pub fn wick_kernels(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    omega: &PointConfiguration,
    n_max: usize,
) -> Result<WickKernelStack> {
    check_atom_count(space, omega.len(), "configuration")?;
    let densities: Vec<Complex64> = omega
        .masses()
        .iter()
        .enumerate()
        .map(|(i, &mass)| Complex64::new(mass / space.weight(i), 0.0))
        .collect();
    wick_kernels_from_densities(space, params, &densities, n_max)
}

/// Kernel stack for complex masses, used by entire extensions of test
/// functionals to complex configurations.
pub(crate) fn wick_kernels_complex(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    masses: &[Complex64],
    n_max: usize,
) -> Result<WickKernelStack> {
    check_atom_count(space, masses.len(), "configuration")?;
    let densities: Vec<Complex64> = masses
        .iter()
        .enumerate()
        .map(|(i, &mass)| mass / space.weight(i))
        .collect();
    wick_kernels_from_densities(space, params, &densities, n_max)
}

fn wick_kernels_from_densities(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    w: &[Complex64],
    n_max: usize,
) -> Result<WickKernelStack> {
    let m = space.len();
    fock::checked_len(m, n_max)?;
    let c = params.c_lambda();
    let lambda = params.lambda();

    let mut kernels = Vec::with_capacity(n_max + 1);
    kernels.push(SymTensor::scalar(m, ONE_C));
    if n_max >= 1 {
        let first: Vec<Complex64> = w.iter().map(|&wi| wi - c).collect();
        kernels.push(SymTensor::new(m, 1, first)?);
    }
    for n in 1..n_max {
        let len = fock::checked_len(m, n + 1)?;
        let mut data = vec![ZERO_C; len];
        {
            let kn = kernels[n].data();
            let knm1 = kernels[n - 1].data();
            let nf = n as f64;
            fock::for_each_index(m, n + 1, |idx, flat| {
                let last = idx[n];
                let prev = idx[n - 1];
                let head = flat / m;
                let base = kn[head];
                let mut value = base * w[last] - c * base;
                if last == prev {
                    let dh = 1.0 / space.weight(last);
                    value -= lambda * nf * dh * base;
                    let mut dropped = nf * knm1[head / m];
                    if n >= 2 && prev == idx[n - 2] {
                        dropped += nf * (nf - 1.0) / space.weight(prev) * knm1[head / m];
                    }
                    value -= dh * dropped;
                }
                data[flat] = value;
            });
        }
        kernels.push(SymTensor::new(m, n + 1, data)?);
    }
    Ok(WickKernelStack { kernels })
}

fn weight_product(space: &DiscreteSpace, idx: &[usize]) -> f64 {
    idx.iter().map(|&i| space.weight(i)).product()
}

/// Dual pairing of a kernel with a test tensor of the same degree. Bilinear:
/// neither side is conjugated.
pub fn pair(space: &DiscreteSpace, stack: &WickKernelStack, f: &SymTensor) -> Result<Complex64> {
    check_atom_count(space, f.m(), "tensor")?;
    check_atom_count(space, stack.m(), "stack")?;
    let kernel = stack.kernel(f.degree()).ok_or_else(|| {
        Error::BudgetExceeded(format!(
            "tensor degree {} exceeds stack depth {}",
            f.degree(),
            stack.depth()
        ))
    })?;
    let mut acc = ZERO_C;
    fock::for_each_index(space.len(), f.degree(), |idx, flat| {
        acc += kernel.data()[flat] * f.data()[flat] * weight_product(space, idx);
    });
    Ok(acc)
}

/// Residual of the degree-`n` multiplication identity behind the kernel
/// recurrence: pairing `<omega, xi>` against the degree-`n` kernel power of
/// `xi` must split into the degree `n+1`, `n`, and `n-1` pairings.
pub fn verify_recurrence_identity(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    omega: &PointConfiguration,
    xi: &[f64],
    n: usize,
) -> Result<f64> {
    check_atom_count(space, xi.len(), "direction")?;
    let stack = wick_kernels(space, params, omega, n + 1)?;
    let c = params.c_lambda();
    let lambda = params.lambda();

    let xi_sq: Vec<f64> = xi.iter().map(|x| x * x).collect();
    let xi_cu: Vec<f64> = xi.iter().map(|x| x * x * x).collect();
    let mean_xi = space.pair(xi);
    let mean_xi_sq = space.pair(&xi_sq);

    let lhs = omega.pair(xi) * pair(space, &stack, &SymTensor::power(xi, n)?)?;

    let mut rhs = pair(space, &stack, &SymTensor::power(xi, n + 1)?)?;

    let mut middle = SymTensor::power(xi, n)?.scale(Complex64::new(c * mean_xi, 0.0));
    if n >= 1 {
        let diag = SymTensor::power(xi, n - 1)?.sym_outer_vector(&xi_sq)?;
        middle = middle.add(&diag.scale(Complex64::new(lambda * n as f64, 0.0)))?;
    }
    rhs += pair(space, &stack, &middle)?;

    if n >= 1 {
        let mut low = SymTensor::power(xi, n - 1)?.scale(Complex64::new(
            n as f64 * mean_xi_sq,
            0.0,
        ));
        if n >= 2 {
            let triple = SymTensor::power(xi, n - 2)?.sym_outer_vector(&xi_cu)?;
            low = low.add(&triple.scale(Complex64::new((n * (n - 1)) as f64, 0.0)))?;
        }
        rhs += pair(space, &stack, &low)?;
    }
    Ok((lhs - rhs).norm())
}

/// Truncated and closed generating function of the field at `omega` in the
/// direction of a complex field `phi` over the atoms.
pub fn gen_fun_field(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    omega: &PointConfiguration,
    phi: &[Complex64],
    n_max: usize,
) -> Result<GenFunEval> {
    check_atom_count(space, phi.len(), "field")?;
    check_atom_count(space, omega.len(), "configuration")?;
    if phi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter("field must be finite".into()));
    }
    let radius = params.psi_radius();
    let sup = phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if sup >= radius {
        return Err(Error::OutsideDomain(format!(
            "field sup-norm {sup} is outside the open disk of radius {radius}"
        )));
    }

    let stack = wick_kernels(space, params, omega, n_max)?;
    let weighted: Vec<Complex64> = phi
        .iter()
        .enumerate()
        .map(|(i, &z)| z * space.weight(i))
        .collect();
    let mut truncated = ZERO_C;
    let mut factorial = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            factorial *= n as f64;
        }
        let kernel = stack.kernel(n).expect("stack depth covers n_max");
        let mut term = ZERO_C;
        fock::for_each_index(space.len(), n, |idx, flat| {
            let mut prod = ONE_C;
            for &i in idx {
                prod *= weighted[i];
            }
            term += kernel.data()[flat] * prod;
        });
        truncated += term / factorial;
    }

    let closed = if params.is_gamma() {
        let mut log_g = ZERO_C;
        for (i, &z) in phi.iter().enumerate() {
            let sigma = space.weight(i);
            let mass = omega.mass(i);
            log_g += -sigma * (ONE_C + z).ln() + mass * z / (ONE_C + z);
        }
        log_g.exp()
    } else {
        let alpha = params.alpha();
        let beta = params.beta();
        let gap = alpha - beta;
        let c = params.c_lambda();
        let mut log_g = ZERO_C;
        for (i, &z) in phi.iter().enumerate() {
            let sigma = space.weight(i);
            let mass = omega.mass(i);
            let log_a = (ONE_C - alpha * z).ln();
            let log_b = (ONE_C - beta * z).ln();
            log_g += -sigma / gap * (log_b / beta - log_a / alpha)
                + (mass - c * sigma) / gap * (log_b - log_a);
        }
        log_g.exp()
    };

    Ok(GenFunEval { truncated, closed })
}

/// Total variation of a kernel against the product of the weights,
/// `sum |K[idx]| sigma_{i_1} .. sigma_{i_n}`.
pub fn kernel_variation(space: &DiscreteSpace, kernel: &SymTensor) -> Result<f64> {
    check_atom_count(space, kernel.m(), "kernel")?;
    let mut acc = 0.0;
    fock::for_each_index(space.len(), kernel.degree(), |idx, flat| {
        acc += kernel.data()[flat].norm() * weight_product(space, idx);
    });
    Ok(acc)
}

fn decode_index(m: usize, degree: usize, flat: usize, out: &mut [usize]) {
    let mut rest = flat;
    for pos in (0..degree).rev() {
        out[pos] = rest % m;
        rest /= m;
    }
}

/// Kernel entries as polynomials in the atom masses, degrees `0..=n_max`.
pub(crate) fn wick_kernels_symbolic(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    n_max: usize,
) -> Result<Vec<Vec<MPoly>>> {
    let m = space.len();
    fock::checked_len(m, n_max)?;
    let c = params.c_lambda();
    let lambda = params.lambda();

    let mut stack = vec![vec![MPoly::constant(m, 1.0)]];
    if n_max >= 1 {
        let mut first = Vec::with_capacity(m);
        for i in 0..m {
            let mut p = MPoly::var(m, i)?.scale_dd(Dd::from_quotient(1.0, space.weight(i)));
            p.add_scaled(&MPoly::constant(m, 1.0), Dd::from_f64(-c))?;
            first.push(p);
        }
        stack.push(first);
    }
    for n in 1..n_max {
        let len = fock::checked_len(m, n + 1)?;
        let mut data = Vec::with_capacity(len);
        let nf = n as f64;
        let mut idx = vec![0usize; n + 1];
        for flat in 0..len {
            decode_index(m, n + 1, flat, &mut idx);
            let last = idx[n];
            let prev = idx[n - 1];
            let head = flat / m;
            let base = &stack[n][head];

            let mut exps = vec![0u16; m];
            exps[last] = 1;
            let mut value =
                base.mul_term(&exps, Dd::from_quotient(1.0, space.weight(last)))?;
            value.add_scaled(base, Dd::from_f64(-c))?;
            if last == prev {
                let dh = Dd::from_quotient(1.0, space.weight(last));
                value.add_scaled(base, dh.mul_f64(-lambda * nf))?;
                let lower = &stack[n - 1][head / m];
                value.add_scaled(lower, dh.mul_f64(-nf))?;
                if n >= 2 && prev == idx[n - 2] {
                    let dh2 = Dd::from_quotient(1.0, space.weight(prev));
                    value.add_scaled(lower, dh.mul(dh2).mul_f64(-nf * (nf - 1.0)))?;
                }
            }
            data.push(value);
        }
        stack.push(symmetrize_polys(m, n + 1, data));
    }
    Ok(stack)
}

fn symmetrize_polys(m: usize, degree: usize, data: Vec<MPoly>) -> Vec<MPoly> {
    use std::collections::HashMap;
    let mut buckets: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    let mut idx = vec![0usize; degree];
    for flat in 0..data.len() {
        decode_index(m, degree, flat, &mut idx);
        let mut key = idx.clone();
        key.sort_unstable();
        buckets.entry(key).or_default().push(flat);
    }
    let mut out = vec![MPoly::zero(m); data.len()];
    for flats in buckets.values() {
        let mut mean = MPoly::zero(m);
        for &flat in flats {
            mean.add_scaled(&data[flat], Dd::ONE)
                .expect("bucket members share the atom count");
        }
        let mean = mean.scale_dd(Dd::from_quotient(1.0, flats.len() as f64));
        for &flat in flats {
            out[flat] = mean.clone();
        }
    }
    out
}

/// Moments `0..=depth` of the one-dimensional law with shape `t`, carried
/// in double-double arithmetic. Expands powers of the variable in the monic
/// orthogonal basis; the coefficient of the constant term is the moment.
pub(crate) fn moment_table(params: &MeixnerParams, t: f64, depth: usize) -> Result<Vec<Dd>> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "shape t = {t} must be positive"
        )));
    }
    let lambda = params.lambda();
    let c = params.c_lambda();
    let diag = |j: usize| -> Dd {
        Dd::from_f64(lambda)
            .mul_f64(j as f64)
            .add(Dd::from_f64(c).mul_f64(t))
    };
    let sub = |j: usize| -> Dd {
        Dd::from_f64(t)
            .add_f64((j - 1) as f64)
            .mul_f64(j as f64)
    };

    let mut moments = Vec::with_capacity(depth + 1);
    moments.push(Dd::ONE);
    let mut cur = vec![Dd::ZERO; depth + 2];
    cur[0] = Dd::ONE;
    let mut next = vec![Dd::ZERO; depth + 2];
    for step in 1..=depth {
        for (j, slot) in next.iter_mut().enumerate().take(step + 1) {
            let mut v = cur[j].mul(diag(j));
            if j >= 1 {
                v = v.add(cur[j - 1]);
            }
            v = v.add(cur[j + 1].mul(sub(j + 1)));
            *slot = v;
        }
        for slot in next.iter_mut().skip(step + 1) {
            *slot = Dd::ZERO;
        }
        std::mem::swap(&mut cur, &mut next);
        moments.push(cur[0]);
    }
    Ok(moments)
}

fn weight_product_dd(space: &DiscreteSpace, idx: &[usize]) -> Dd {
    let mut acc = Dd::ONE;
    for &i in idx {
        acc = acc.mul_f64(space.weight(i));
    }
    acc
}

fn expand_pairing(
    space: &DiscreteSpace,
    symbolic: &[Vec<MPoly>],
    vector: &FockVector,
) -> Result<(MPoly, MPoly)> {
    let m = space.len();
    let mut re = MPoly::zero(m);
    let mut im = MPoly::zero(m);
    let mut idx = Vec::new();
    for n in 0..=vector.max_degree() {
        let Some(component) = vector.component(n) else {
            continue;
        };
        if component.max_abs() == 0.0 {
            continue;
        }
        let kernels = &symbolic[n];
        idx.resize(n, 0);
        for (flat, kernel) in kernels.iter().enumerate() {
            decode_index(m, n, flat, &mut idx);
            let weight = weight_product_dd(space, &idx);
            let value = component.data()[flat];
            if value.re != 0.0 {
                re.add_scaled(kernel, weight.mul_f64(value.re))?;
            }
            if value.im != 0.0 {
                im.add_scaled(kernel, weight.mul_f64(value.im))?;
            }
        }
    }
    Ok((re, im))
}

fn expect_pair(a: &MPoly, b: &MPoly, tables: &[Vec<Dd>]) -> Result<Dd> {
    if a.is_zero() || b.is_zero() {
        return Ok(Dd::ZERO);
    }
    a.mul(b)?.expectation(tables)
}

/// Exact expectation of the product of two truncated Wick expansions under
/// the product law of the space. Bilinear: no conjugation is applied.
pub fn expect_product(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    f: &FockVector,
    g: &FockVector,
) -> Result<Complex64> {
    check_atom_count(space, f.m(), "left expansion")?;
    check_atom_count(space, g.m(), "right expansion")?;
    let depth = f.max_degree().max(g.max_degree());
    let symbolic = wick_kernels_symbolic(space, params, depth)?;
    let (fr, fi) = expand_pairing(space, &symbolic, f)?;
    let (gr, gi) = expand_pairing(space, &symbolic, g)?;

    let m = space.len();
    let mut tables = Vec::with_capacity(m);
    for i in 0..m {
        let df = fr.var_degree(i).max(fi.var_degree(i));
        let dg = gr.var_degree(i).max(gi.var_degree(i));
        if df + dg > MAX_ATOM_MOMENT_DEGREE {
            return Err(Error::BudgetExceeded(format!(
                "atom {i} carries polynomial degree {} in the product (cap {})",
                df + dg,
                MAX_ATOM_MOMENT_DEGREE
            )));
        }
        tables.push(moment_table(params, space.weight(i), df + dg)?);
    }

    let re = expect_pair(&fr, &gr, &tables)?.sub(expect_pair(&fi, &gi, &tables)?);
    let im = expect_pair(&fr, &gi, &tables)?.add(expect_pair(&fi, &gr, &tables)?);
    Ok(Complex64::new(re.to_f64(), im.to_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn space3() -> DiscreteSpace {
        DiscreteSpace::new(vec![0.5, 1.0, 2.0]).unwrap()
    }

    fn params(lambda: f64) -> MeixnerParams {
        MeixnerParams::new(lambda).unwrap()
    }

    #[test]
    fn first_kernels_shift_the_density() {
        let space = DiscreteSpace::new(vec![0.5, 2.0]).unwrap();
        let p = params(1.0);
        let omega = PointConfiguration::new(vec![0.3, -1.1]).unwrap();
        let stack = wick_kernels(&space, &p, &omega, 1).unwrap();
        assert_eq!(stack.kernel(0).unwrap().data()[0], ONE_C);
        let k1 = stack.kernel(1).unwrap();
        assert!((k1.data()[0].re - (0.3 / 0.5 - 0.5)).abs() < 1e-15);
        assert!((k1.data()[1].re - (-1.1 / 2.0 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn zero_configuration_reduces_to_contractions() {
        let space = DiscreteSpace::new(vec![0.5, 2.0]).unwrap();
        let p = params(0.0);
        let omega = PointConfiguration::zero(2).unwrap();
        let stack = wick_kernels(&space, &p, &omega, 2).unwrap();
        assert_eq!(stack.kernel(1).unwrap().max_abs(), 0.0);
        let k2 = stack.kernel(2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { -1.0 / space.weight(i) } else { 0.0 };
                assert!((k2.get(&[i, j]).re - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_set_towers_match_the_polynomials() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for lambda in [0.0, 1.0, 2.0, 2.5, 3.0] {
            let p = params(lambda);
            let t = 1.7;
            let space = DiscreteSpace::new(vec![t]).unwrap();
            for _ in 0..10 {
                let mass: f64 = rng.gen_range(-3.0..3.0);
                let omega = PointConfiguration::new(vec![mass]).unwrap();
                let stack = wick_kernels(&space, &p, &omega, 6).unwrap();
                for n in 0..=6 {
                    let f = SymTensor::power(&[1.0], n).unwrap();
                    let got = pair(&space, &stack, &f).unwrap();
                    let want = poly::eval_poly(&p, t, n, mass).unwrap();
                    assert!(
                        (got.re - want).abs() < 1e-10 * (1.0 + want.abs()),
                        "lambda {lambda} degree {n}: {} vs {want}",
                        got.re
                    );
                    assert_eq!(got.im, 0.0);
                }
            }
        }
    }

    #[test]
    fn disjoint_blocks_factor_into_polynomials() {
        let space = space3();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for lambda in [0.0, 1.0, 2.0, 3.0] {
            let p = params(lambda);
            let masses: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let omega = PointConfiguration::new(masses.clone()).unwrap();
            let stack = wick_kernels(&space, &p, &omega, 3).unwrap();

            let left = space.indicator(&[0, 1]);
            let right = space.indicator(&[2]);
            let mut data = vec![ZERO_C; 27];
            fock::for_each_index(3, 3, |idx, flat| {
                data[flat] = Complex64::new(
                    left[idx[0]] * left[idx[1]] * right[idx[2]],
                    0.0,
                );
            });
            let f = SymTensor::new(3, 3, data).unwrap();

            let got = pair(&space, &stack, &f).unwrap();
            let t_left = space.mass_of(&[0, 1]);
            let mass_left = masses[0] + masses[1];
            let want = poly::eval_poly(&p, t_left, 2, mass_left).unwrap()
                * poly::eval_poly(&p, space.weight(2), 1, masses[2]).unwrap();
            assert!(
                (got.re - want).abs() < 1e-12 * (1.0 + want.abs()),
                "lambda {lambda}: {} vs {want}",
                got.re
            );
        }
    }

    #[test]
    fn recurrence_identity_holds_across_regimes() {
        let space = space3();
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        for lambda in [0.0, 1.0, 2.0, 2.5, 3.0] {
            let p = params(lambda);
            for n in 0..=4 {
                for _ in 0..20 {
                    let omega = PointConfiguration::new(
                        (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                    )
                    .unwrap();
                    let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let residual =
                        verify_recurrence_identity(&space, &p, &omega, &xi, n).unwrap();
                    assert!(
                        residual < 1e-10,
                        "lambda {lambda} degree {n}: residual {residual}"
                    );
                }
            }
        }
    }

    #[test]
    fn generating_function_at_zero_field_is_one() {
        let space = space3();
        let p = params(1.0);
        let omega = PointConfiguration::new(vec![0.4, -0.2, 1.0]).unwrap();
        let eval = gen_fun_field(&space, &p, &omega, &[ZERO_C; 3], 4).unwrap();
        assert!((eval.truncated - ONE_C).norm() < 1e-15);
        assert!((eval.closed - ONE_C).norm() < 1e-15);
    }

    #[test]
    fn generating_function_restricts_to_one_dimension() {
        let space = space3();
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        for lambda in [0.0, 1.0, 2.0, 2.5, 3.0] {
            let p = params(lambda);
            let u = Complex64::new(0.21, -0.13) * p.psi_radius();
            let masses: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let omega = PointConfiguration::new(masses.clone()).unwrap();

            let phi: Vec<Complex64> = vec![u, u, ZERO_C];
            let field = gen_fun_field(&space, &p, &omega, &phi, 8).unwrap();

            let t = space.mass_of(&[0, 1]);
            let one_d = poly::gen_fun(&p, t, masses[0] + masses[1], u, 8).unwrap();
            assert!(
                (field.closed - one_d.closed).norm() < 1e-12 * (1.0 + one_d.closed.norm()),
                "lambda {lambda} closed forms disagree"
            );
            assert!(
                (field.truncated - one_d.truncated).norm()
                    < 1e-12 * (1.0 + one_d.truncated.norm()),
                "lambda {lambda} truncations disagree"
            );
        }
    }

    #[test]
    fn generating_function_truncation_converges() {
        let space = space3();
        let p = params(2.0);
        let omega = PointConfiguration::new(vec![0.05, -0.04, 0.08]).unwrap();
        let phi = [
            Complex64::new(0.06, 0.01),
            Complex64::new(-0.05, 0.02),
            Complex64::new(0.04, -0.03),
        ];
        let eval = gen_fun_field(&space, &p, &omega, &phi, 8).unwrap();
        assert!((eval.truncated - eval.closed).norm() < 1e-8);
    }

    #[test]
    fn generating_function_rejects_fields_outside_the_disk() {
        let space = space3();
        let p = params(3.0);
        let phi = [Complex64::new(p.psi_radius(), 0.0); 3];
        let omega = PointConfiguration::zero(3).unwrap();
        assert!(gen_fun_field(&space, &p, &omega, &phi, 4).is_err());
    }

    #[test]
    fn symbolic_kernels_evaluate_to_numeric_kernels() {
        let space = DiscreteSpace::new(vec![0.5, 1.5]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(45);
        for lambda in [1.0, 2.0, 3.0] {
            let p = params(lambda);
            let symbolic = wick_kernels_symbolic(&space, &p, 4).unwrap();
            for _ in 0..5 {
                let masses: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let omega = PointConfiguration::new(masses.clone()).unwrap();
                let stack = wick_kernels(&space, &p, &omega, 4).unwrap();
                for n in 0..=4 {
                    let numeric = stack.kernel(n).unwrap();
                    for (flat, poly_entry) in symbolic[n].iter().enumerate() {
                        let sym_value = poly_entry.eval(&masses).unwrap();
                        let diff = (sym_value - numeric.data()[flat].re).abs();
                        assert!(
                            diff < 1e-12 * (1.0 + sym_value.abs()),
                            "lambda {lambda} degree {n} entry {flat}: {diff}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn moment_tables_match_the_jacobi_route() {
        for lambda in [0.0, 1.0, 2.0, 3.0] {
            let p = params(lambda);
            for t in [0.5, 2.0] {
                let table = moment_table(&p, t, 8).unwrap();
                for (k, dd) in table.iter().enumerate() {
                    let reference = poly::moment(&p, t, k).unwrap();
                    assert!(
                        (dd.to_f64() - reference).abs() < 1e-12 * (1.0 + reference.abs()),
                        "lambda {lambda} t {t} k {k}"
                    );
                }
            }
        }
    }

    #[test]
    fn expectation_of_the_vacuum_is_one() {
        let space = space3();
        let p = params(1.0);
        let one = FockVector::vacuum(3);
        let value = expect_product(&space, &p, &one, &one).unwrap();
        assert!((value - ONE_C).norm() < 1e-15);
    }

    #[test]
    fn expectations_are_unitary_on_small_tensors() {
        let space = DiscreteSpace::new(vec![0.5, 1.5]).unwrap();
        let p = params(1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(46);
        let random_tensor = |rng: &mut ChaCha12Rng, degree: usize| {
            let len = 2usize.pow(degree as u32);
            let data: Vec<f64> = (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect();
            SymTensor::from_real(2, degree, data).unwrap()
        };
        for _ in 0..5 {
            let f = random_tensor(&mut rng, 2);
            let g = random_tensor(&mut rng, 2);
            let fv = FockVector::from_tensor(f.clone()).unwrap();
            let gv = FockVector::from_tensor(g.clone()).unwrap();
            let got = expect_product(&space, &p, &fv, &gv).unwrap();
            let want = 2.0 * fock::ext_inner(&space, &f, &g).unwrap();
            assert!((got - want).norm() < 1e-10, "{got} vs {want}");

            let h = random_tensor(&mut rng, 1);
            let hv = FockVector::from_tensor(h).unwrap();
            let cross = expect_product(&space, &p, &fv, &hv).unwrap();
            assert!(cross.norm() < 1e-10, "cross degree leak {cross}");
        }
    }

    #[test]
    fn expectation_rejects_atom_degree_overflow() {
        let space = DiscreteSpace::new(vec![1.0]).unwrap();
        let p = params(1.0);
        let f = FockVector::from_tensor(SymTensor::power(&[1.0], 7).unwrap()).unwrap();
        assert!(matches!(
            expect_product(&space, &p, &f, &f),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn kernel_variation_growth_settles() {
        let space = space3();
        let p = params(1.0);
        let omega = PointConfiguration::new(vec![0.8, -0.3, 1.2]).unwrap();
        let stack = wick_kernels(&space, &p, &omega, 8).unwrap();
        let mut rates = Vec::new();
        let mut factorial = 1.0;
        for n in 1..=8 {
            factorial *= n as f64;
            let variation = kernel_variation(&space, stack.kernel(n).unwrap()).unwrap();
            rates.push((variation / factorial).ln() / n as f64);
        }
        let early = rates[2..5].iter().cloned().fold(f64::MIN, f64::max);
        let late = rates[5..].iter().cloned().fold(f64::MIN, f64::max);
        assert!(late < early + 1.0, "variation rate drifts: {rates:?}");
        assert!(late.is_finite());
    }

    #[test]
    fn shape_violations_are_rejected() {
        let space = space3();
        let p = params(1.0);
        let omega = PointConfiguration::new(vec![1.0, 2.0]).unwrap();
        assert!(wick_kernels(&space, &p, &omega, 2).is_err());
        assert!(PointConfiguration::new(vec![]).is_err());
        assert!(PointConfiguration::new(vec![f64::NAN]).is_err());

        let good = PointConfiguration::zero(3).unwrap();
        let stack = wick_kernels(&space, &p, &good, 1).unwrap();
        let deep = SymTensor::power(&[1.0, 0.0, 0.0], 2).unwrap();
        assert!(pair(&space, &stack, &deep).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn recurrence_identity_is_generic(
            lambda in prop_oneof![Just(0.0), Just(1.3), Just(2.0), Just(2.9)],
            m0 in -2.0f64..2.0,
            m1 in -2.0f64..2.0,
            x0 in -1.0f64..1.0,
            x1 in -1.0f64..1.0,
            n in 0usize..4,
        ) {
            let space = DiscreteSpace::new(vec![0.7, 1.4]).unwrap();
            let p = params(lambda);
            let omega = PointConfiguration::new(vec![m0, m1]).unwrap();
            let residual = verify_recurrence_identity(&space, &p, &omega, &[x0, x1], n).unwrap();
            prop_assert!(residual < 1e-9);
        }
    }
}
