//! Sparse real polynomials in the atom masses, on compensated arithmetic.
//!
//! Exact expectations of products of Wick pairings cancel by five to six
//! orders of magnitude against their largest intermediate terms, so plain
//! doubles would eat most of a 1e-9 residual budget. Every coefficient here
//! is a double-double value (an unevaluated sum `hi + lo` carrying roughly
//! 31 significant digits), which keeps the algebra effectively exact and
//! leaves the budget to the inputs themselves.
//!
//! A polynomial is a map from exponent vectors (one exponent per atom) to
//! coefficients. Variable `i` stands for the mass `omega` places on atom
//! `i`. The only consumers are the symbolic Wick kernel stack and the
//! moment-table expectation, so the operation set is deliberately small.

use std::collections::BTreeMap;

use crate::{Error, Result};

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Double-double scalar: the exact sum `hi + lo` with `|lo|` below one ulp
/// of `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// The quotient `a / b` to double-double accuracy.
    pub fn from_quotient(a: f64, b: f64) -> Self {
        let q1 = a / b;
        let (p, e) = two_prod(q1, b);
        let q2 = ((a - p) - e) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> f64 {
        self.to_f64().abs()
    }

    pub fn is_zero(self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }

    pub fn neg(self) -> Self {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn add(self, other: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    pub fn add_f64(self, x: f64) -> Self {
        let (s1, s2) = two_sum(self.hi, x);
        let (hi, lo) = quick_two_sum(s1, s2 + self.lo);
        Dd { hi, lo }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }

    pub fn mul(self, other: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, x: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, x);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * x);
        Dd { hi, lo }
    }

    pub fn div_f64(self, x: f64) -> Self {
        let q1 = self.hi / x;
        let (p, e) = two_prod(q1, x);
        let q2 = ((self.hi - p) - e + self.lo) / x;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }
}

/// Sparse polynomial in the masses of `m` atoms with `Dd` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MPoly {
    m: usize,
    terms: BTreeMap<Vec<u16>, Dd>,
}

impl MPoly {
    pub fn zero(m: usize) -> Self {
        MPoly {
            m,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(m: usize, value: f64) -> Self {
        Self::constant_dd(m, Dd::from_f64(value))
    }

    pub fn constant_dd(m: usize, value: Dd) -> Self {
        let mut terms = BTreeMap::new();
        if !value.is_zero() {
            terms.insert(vec![0; m], value);
        }
        MPoly { m, terms }
    }

    /// The mass variable of atom `i`.
    pub fn var(m: usize, i: usize) -> Result<Self> {
        if i >= m {
            return Err(Error::ShapeMismatch(format!(
                "variable index {i} outside {m} atoms"
            )));
        }
        let mut exps = vec![0u16; m];
        exps[i] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(exps, Dd::ONE);
        Ok(MPoly { m, terms })
    }

    pub fn n_vars(&self) -> usize {
        self.m
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[u16]) -> Dd {
        self.terms.get(exps).copied().unwrap_or(Dd::ZERO)
    }

    pub fn total_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&p| p as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// Largest exponent variable `i` carries in any term.
    pub fn var_degree(&self, i: usize) -> usize {
        self.terms.keys().map(|e| e[i] as usize).max().unwrap_or(0)
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.m != other.m {
            return Err(Error::ShapeMismatch(format!(
                "polynomials over {} and {} atoms",
                self.m, other.m
            )));
        }
        Ok(())
    }

    fn insert_scaled(&mut self, exps: &[u16], value: Dd) {
        if value.is_zero() {
            return;
        }
        match self.terms.get_mut(exps) {
            Some(c) => {
                *c = c.add(value);
                if c.is_zero() {
                    self.terms.remove(exps);
                }
            }
            None => {
                self.terms.insert(exps.to_vec(), value);
            }
        }
    }

    /// In-place `self += factor * other`.
    pub fn add_scaled(&mut self, other: &Self, factor: Dd) -> Result<()> {
        self.check_shape(other)?;
        if factor.is_zero() {
            return Ok(());
        }
        for (exps, &c) in &other.terms {
            self.insert_scaled(exps, c.mul(factor));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(other, Dd::ONE)?;
        Ok(out)
    }

    pub fn scale_dd(&self, factor: Dd) -> Self {
        let mut out = MPoly::zero(self.m);
        if factor.is_zero() {
            return out;
        }
        for (exps, &c) in &self.terms {
            out.terms.insert(exps.clone(), c.mul(factor));
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.scale_dd(Dd::from_f64(factor))
    }

    /// In-place multiplication by the single term `factor * prod x_i^exps[i]`.
    pub fn mul_term(&self, exps: &[u16], factor: Dd) -> Result<Self> {
        if exps.len() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "term over {} variables against {} atoms",
                exps.len(),
                self.m
            )));
        }
        let mut out = MPoly::zero(self.m);
        if factor.is_zero() {
            return Ok(out);
        }
        for (e, &c) in &self.terms {
            let shifted: Vec<u16> = e.iter().zip(exps).map(|(&a, &b)| a + b).collect();
            out.terms.insert(shifted, c.mul(factor));
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = MPoly::zero(self.m);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let exps: Vec<u16> = ea.iter().zip(eb).map(|(&a, &b)| a + b).collect();
                out.insert_scaled(&exps, ca.mul(cb));
            }
        }
        Ok(out)
    }

    /// Value at a point, accumulated in double-double arithmetic.
    pub fn eval(&self, masses: &[f64]) -> Result<f64> {
        if masses.len() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "point over {} atoms against {} variables",
                masses.len(),
                self.m
            )));
        }
        let mut acc = Dd::ZERO;
        for (exps, &c) in &self.terms {
            let mut term = c;
            for (i, &p) in exps.iter().enumerate() {
                for _ in 0..p {
                    term = term.mul_f64(masses[i]);
                }
            }
            acc = acc.add(term);
        }
        Ok(acc.to_f64())
    }

    /// Expectation under independent atoms: monomial `prod x_i^{k_i}` maps
    /// to `prod moments[i][k_i]`.
    pub fn expectation(&self, moments: &[Vec<Dd>]) -> Result<Dd> {
        if moments.len() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "moment tables for {} atoms against {} variables",
                moments.len(),
                self.m
            )));
        }
        let mut acc = Dd::ZERO;
        for (exps, &c) in &self.terms {
            let mut term = c;
            for (i, &p) in exps.iter().enumerate() {
                let table = &moments[i];
                let p = p as usize;
                if p >= table.len() {
                    return Err(Error::BudgetExceeded(format!(
                        "moment of order {p} for atom {i} not tabulated (table depth {})",
                        table.len()
                    )));
                }
                if p > 0 {
                    term = term.mul(table[p]);
                }
            }
            acc = acc.add(term);
        }
        Ok(acc)
    }

    /// Largest coefficient magnitude by which the two polynomials differ.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for (exps, &c) in &self.terms {
            worst = worst.max(c.sub(other.coefficient(exps)).abs());
        }
        for (exps, &c) in &other.terms {
            if !self.terms.contains_key(exps) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }
}
