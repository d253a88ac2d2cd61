//! Extended Fock space over a finite discrete base space.
//!
//! The base space is a finite set of atoms with strictly positive weights
//! `sigma_i`. Degree-`n` vectors are symmetric dense tensors over the atoms.
//! The extended inner product sums over loop collections: partitions of the
//! `n` tensor slots into blocks, each block carrying a cyclic order. A
//! collection with `l` blocks contributes the integral of `conj(f) * g` over
//! one variable per block, every slot of a block pinned to that block's
//! variable:
//!
//! ```text
//! <f, g>_ext = sum over collections  sum over (j_1..j_l) in atoms^l
//!              conj(f)[pinned] g[pinned] sigma_{j_1} ... sigma_{j_l}.
//! ```
//!
//! There are exactly `n!` collections (cycle decompositions of permutations),
//! and the summand depends only on the underlying partition, so the
//! evaluation walks distinct partitions weighted by the number of cyclic
//! orders, `prod (|block| - 1)!`.
//!
//! On top of the inner product sit the ladder operators: creation
//! `xi (sym-tensor) f`, the two annihilation parts (trace against
//! `xi sigma` in one slot, and the diagonal-doubling part), the neutral
//! operator, and their Jacobi-field combination
//! `a(xi) = a+ + lambda a0 + a1- + a2- + c <xi> id`, which on indicator
//! towers reproduces the one-dimensional recurrence exactly.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::params::MeixnerParams;
use crate::{Error, Result};

/// Hard cap on the degree of anything passing through loop-collection sums.
pub const MAX_LOOP_DEGREE: usize = 8;

/// Hard cap on the degree of a stored tensor.
pub const MAX_TENSOR_DEGREE: usize = 12;

/// Hard cap on dense tensor storage: `m^degree` entries.
pub const MAX_DENSE_ENTRIES: usize = 1 << 20;

/// Finite base space: atoms `0..m` with strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpace {
    weights: Vec<f64>,
}

impl DiscreteSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("need at least one atom".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "atom weights must be finite and > 0, got {w}"
            )));
        }
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weight(&self, atom: usize) -> f64 {
        self.weights[atom]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `sigma(Delta)` for a subset of atoms.
    pub fn mass_of(&self, atoms: &[usize]) -> f64 {
        atoms.iter().map(|&i| self.weights[i]).sum()
    }

    /// `<xi> = sum_i xi_i sigma_i`.
    pub fn pair(&self, xi: &[f64]) -> f64 {
        xi.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    /// Indicator vector of a subset of atoms.
    pub fn indicator(&self, atoms: &[usize]) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        for &i in atoms {
            v[i] = 1.0;
        }
        v
    }
}

pub(crate) fn checked_len(m: usize, degree: usize) -> Result<usize> {
    if degree > MAX_TENSOR_DEGREE {
        return Err(Error::BudgetExceeded(format!(
            "tensor degree {degree} exceeds the cap {MAX_TENSOR_DEGREE}"
        )));
    }
    let mut len = 1usize;
    for _ in 0..degree {
        len = len.saturating_mul(m);
        if len > MAX_DENSE_ENTRIES {
            return Err(Error::BudgetExceeded(format!(
                "{m}^{degree} dense entries exceed the cap {MAX_DENSE_ENTRIES}"
            )));
        }
    }
    Ok(len)
}

/// Walks all index tuples of `atoms^degree` in row-major order, handing the
/// tuple and its flat offset to `visit`.
pub(crate) fn for_each_index<F: FnMut(&[usize], usize)>(m: usize, degree: usize, mut visit: F) {
    let mut idx = vec![0usize; degree];
    let total = m.pow(degree as u32);
    for flat in 0..total {
        visit(&idx, flat);
        for d in (0..degree).rev() {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
        }
    }
}

pub(crate) fn flat_of(m: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * m + i)
}

/// Dense symmetric tensor of fixed degree over the atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    m: usize,
    degree: usize,
    data: Vec<Complex64>,
}

impl SymTensor {
    pub fn zero(m: usize, degree: usize) -> Result<Self> {
        let len = checked_len(m, degree)?;
        Ok(Self {
            m,
            degree,
            data: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    /// Builds a tensor from dense data, symmetrizing it.
    pub fn new(m: usize, degree: usize, data: Vec<Complex64>) -> Result<Self> {
        let len = checked_len(m, degree)?;
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "expected {len} entries for degree {degree} over {m} atoms, got {}",
                data.len()
            )));
        }
        let mut out = Self { m, degree, data };
        out.symmetrize();
        Ok(out)
    }

    pub fn from_real(m: usize, degree: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(
            m,
            degree,
            data.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn scalar(m: usize, value: Complex64) -> Self {
        Self {
            m,
            degree: 0,
            data: vec![value],
        }
    }

    /// Rank-one power `xi^(tensor n)`.
    pub fn power(xi: &[f64], degree: usize) -> Result<Self> {
        let m = xi.len();
        let mut out = Self::zero(m, degree)?;
        for_each_index(m, degree, |idx, flat| {
            let v: f64 = idx.iter().map(|&i| xi[i]).product();
            out.data[flat] = Complex64::new(v, 0.0);
        });
        Ok(out)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        debug_assert_eq!(idx.len(), self.degree);
        self.data[flat_of(self.m, idx)]
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            m: self.m,
            degree: self.degree,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.m != other.m || self.degree != other.degree {
            return Err(Error::ShapeMismatch(
                "tensor addition needs matching atoms and degree".into(),
            ));
        }
        Ok(Self {
            m: self.m,
            degree: self.degree,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Symmetric tensor product with a vector: `xi (sym-tensor) self`,
    /// raising the degree by one.
    pub fn sym_outer_vector(&self, xi: &[f64]) -> Result<Self> {
        if xi.len() != self.m {
            return Err(Error::ShapeMismatch(
                "vector length must match the atom count".into(),
            ));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); checked_len(self.m, self.degree + 1)?];
        for_each_index(self.m, self.degree + 1, |idx, flat| {
            data[flat] = xi[idx[0]] * self.data[flat_of(self.m, &idx[1..])];
        });
        Self::new(self.m, self.degree + 1, data)
    }

    fn symmetrize(&mut self) {
        if self.degree < 2 {
            return;
        }
        let m = self.m;
        let mut buckets: HashMap<usize, (Complex64, u32)> = HashMap::new();
        let mut sorted = vec![0usize; self.degree];
        for_each_index(m, self.degree, |idx, flat| {
            sorted.copy_from_slice(idx);
            sorted.sort_unstable();
            let key = flat_of(m, &sorted);
            let e = buckets
                .entry(key)
                .or_insert((Complex64::new(0.0, 0.0), 0));
            e.0 += self.data[flat];
            e.1 += 1;
        });
        for_each_index(m, self.degree, |idx, flat| {
            sorted.copy_from_slice(idx);
            sorted.sort_unstable();
            let (sum, count) = buckets[&flat_of(m, &sorted)];
            self.data[flat] = sum / count as f64;
        });
    }
}

/// One loop collection: a partition of `{0..n}` into blocks, each block a
/// cyclic order written with its smallest element first; blocks sorted by
/// their smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LoopCollection {
    blocks: Vec<Vec<usize>>,
}

impl LoopCollection {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n_loops(&self) -> usize {
        self.blocks.len()
    }

    fn from_permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut seen = vec![false; n];
        let mut blocks = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut cur = perm[start];
            while cur != start {
                seen[cur] = true;
                cycle.push(cur);
                cur = perm[cur];
            }
            blocks.push(cycle);
        }
        Self { blocks }
    }
}

fn check_loop_degree(n: usize) -> Result<()> {
    if n == 0 || n > MAX_LOOP_DEGREE {
        return Err(Error::BudgetExceeded(format!(
            "loop collections are enumerated for 1 <= n <= {MAX_LOOP_DEGREE}, got {n}"
        )));
    }
    Ok(())
}

/// All `n!` loop collections on `{0..n}`, memoized per degree.
pub fn enumerate_loop_collections(n: usize) -> Result<&'static [LoopCollection]> {
    check_loop_degree(n)?;
    const EMPTY: OnceLock<Vec<LoopCollection>> = OnceLock::new();
    static CACHE: [OnceLock<Vec<LoopCollection>>; MAX_LOOP_DEGREE] = [EMPTY; MAX_LOOP_DEGREE];
    Ok(CACHE[n - 1].get_or_init(|| {
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..n).collect();
        permute(&mut perm, 0, &mut |p| {
            out.push(LoopCollection::from_permutation(p));
        });
        out
    }))
}

fn permute<F: FnMut(&[usize])>(items: &mut Vec<usize>, k: usize, visit: &mut F) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// One distinct partition underlying the loop collections: which block each
/// slot belongs to, with the number of cyclic orders as multiplicity.
struct DiagonalPattern {
    block_of: Vec<usize>,
    n_blocks: usize,
    multiplicity: f64,
}

fn diagonal_patterns(n: usize) -> &'static [DiagonalPattern] {
    const EMPTY: OnceLock<Vec<DiagonalPattern>> = OnceLock::new();
    static CACHE: [OnceLock<Vec<DiagonalPattern>>; MAX_LOOP_DEGREE] = [EMPTY; MAX_LOOP_DEGREE];
    CACHE[n - 1].get_or_init(|| {
        let mut out = Vec::new();
        let mut block_of = vec![0usize; n];
        let mut sizes: Vec<usize> = Vec::new();
        build_partitions(n, 0, &mut block_of, &mut sizes, &mut out);
        out
    })
}

fn build_partitions(
    n: usize,
    slot: usize,
    block_of: &mut Vec<usize>,
    sizes: &mut Vec<usize>,
    out: &mut Vec<DiagonalPattern>,
) {
    if slot == n {
        let multiplicity = sizes
            .iter()
            .map(|&s| (1..s).map(|k| k as f64).product::<f64>())
            .product();
        out.push(DiagonalPattern {
            block_of: block_of.clone(),
            n_blocks: sizes.len(),
            multiplicity,
        });
        return;
    }
    for b in 0..sizes.len() {
        block_of[slot] = b;
        sizes[b] += 1;
        build_partitions(n, slot + 1, block_of, sizes, out);
        sizes[b] -= 1;
    }
    block_of[slot] = sizes.len();
    sizes.push(1);
    build_partitions(n, slot + 1, block_of, sizes, out);
    sizes.pop();
}

/// Extended inner product of two tensors of equal degree.
pub fn ext_inner(space: &DiscreteSpace, f: &SymTensor, g: &SymTensor) -> Result<Complex64> {
    if f.degree != g.degree {
        return Err(Error::ShapeMismatch(format!(
            "degree mismatch: {} vs {}",
            f.degree, g.degree
        )));
    }
    if f.m != space.len() || g.m != space.len() {
        return Err(Error::ShapeMismatch(
            "tensor atom count must match the space".into(),
        ));
    }
    let n = f.degree;
    if n == 0 {
        return Ok(f.data[0].conj() * g.data[0]);
    }
    check_loop_degree(n)?;
    let m = space.len();
    let mut total = Complex64::new(0.0, 0.0);
    for pat in diagonal_patterns(n) {
        let l = pat.n_blocks;
        let mut strides = vec![0usize; l];
        for pos in 0..n {
            strides[pat.block_of[pos]] += m.pow((n - 1 - pos) as u32);
        }
        let mut digits = vec![0usize; l];
        let mut flat = 0usize;
        let mut acc = Complex64::new(0.0, 0.0);
        'outer: loop {
            let w: f64 = digits.iter().map(|&d| space.weight(d)).product();
            acc += w * f.data[flat].conj() * g.data[flat];
            for b in 0..l {
                if digits[b] + 1 < m {
                    digits[b] += 1;
                    flat += strides[b];
                    continue 'outer;
                }
                flat -= digits[b] * strides[b];
                digits[b] = 0;
            }
            break;
        }
        total += pat.multiplicity * acc;
    }
    Ok(total)
}

/// Finite vector in the extended Fock space: one symmetric tensor per degree.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    m: usize,
    components: Vec<SymTensor>,
}

impl FockVector {
    pub fn vacuum(m: usize) -> Self {
        Self {
            m,
            components: vec![SymTensor::scalar(m, Complex64::new(1.0, 0.0))],
        }
    }

    pub fn zero(m: usize) -> Self {
        Self {
            m,
            components: vec![SymTensor::scalar(m, Complex64::new(0.0, 0.0))],
        }
    }

    /// Builds a vector from components for degrees `0, 1, ...` in order.
    pub fn from_components(components: Vec<SymTensor>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "a Fock vector needs at least the degree-0 component".into(),
            ));
        }
        let m = components[0].m;
        for (n, c) in components.iter().enumerate() {
            if c.degree != n {
                return Err(Error::ShapeMismatch(format!(
                    "component at position {n} has degree {}",
                    c.degree
                )));
            }
            if c.m != m {
                return Err(Error::ShapeMismatch(
                    "all components must share the atom count".into(),
                ));
            }
        }
        Ok(Self { m, components })
    }

    /// A single-degree vector `(0, ..., 0, f, 0, ...)`.
    pub fn from_tensor(f: SymTensor) -> Result<Self> {
        let m = f.m;
        let mut components: Vec<SymTensor> =
            (0..f.degree).map(|d| SymTensor::zero(m, d).unwrap()).collect();
        components.push(f);
        Self::from_components(components)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn max_degree(&self) -> usize {
        self.components.len() - 1
    }

    pub fn component(&self, degree: usize) -> Option<&SymTensor> {
        self.components.get(degree)
    }

    pub fn components(&self) -> &[SymTensor] {
        &self.components
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            m: self.m,
            components: self.components.iter().map(|f| f.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::ShapeMismatch("atom counts differ".into()));
        }
        let top = self.max_degree().max(other.max_degree());
        let mut components = Vec::with_capacity(top + 1);
        for n in 0..=top {
            let c = match (self.component(n), other.component(n)) {
                (Some(a), Some(b)) => a.add(b)?,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            };
            components.push(c);
        }
        Self::from_components(components)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let top = self.max_degree().max(other.max_degree());
        (0..=top)
            .map(|n| match (self.component(n), other.component(n)) {
                (Some(a), Some(b)) => a.max_abs_diff(b),
                (Some(a), None) | (None, Some(a)) => a.max_abs(),
                (None, None) => 0.0,
            })
            .fold(0.0, f64::max)
    }
}

/// Full inner product `sum_n n! <f_n, g_n>_ext`.
pub fn fock_inner(space: &DiscreteSpace, f: &FockVector, g: &FockVector) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut factorial = 1.0;
    let top = f.max_degree().min(g.max_degree());
    for n in 0..=top {
        if n > 0 {
            factorial *= n as f64;
        }
        let a = f.component(n).unwrap();
        let b = g.component(n).unwrap();
        if a.max_abs() == 0.0 || b.max_abs() == 0.0 {
            continue;
        }
        total += factorial * ext_inner(space, a, b)?;
    }
    Ok(total)
}

pub fn fock_norm_sq(space: &DiscreteSpace, f: &FockVector) -> Result<f64> {
    Ok(fock_inner(space, f, f)?.re)
}

fn check_xi(space: &DiscreteSpace, xi: &[f64]) -> Result<()> {
    if xi.len() != space.len() {
        return Err(Error::ShapeMismatch(
            "xi length must match the atom count".into(),
        ));
    }
    Ok(())
}

/// Creation operator: degree-wise `xi (sym-tensor) f_n`.
pub fn create(space: &DiscreteSpace, xi: &[f64], f: &FockVector) -> Result<FockVector> {
    check_xi(space, xi)?;
    let m = space.len();
    let mut components = vec![SymTensor::zero(m, 0)?];
    for c in &f.components {
        components.push(c.sym_outer_vector(xi)?);
    }
    FockVector::from_components(components)
}

/// First annihilation part: `n * sum_j xi_j sigma_j f_n(j, ...)`.
pub fn annihilate1(space: &DiscreteSpace, xi: &[f64], f: &FockVector) -> Result<FockVector> {
    check_xi(space, xi)?;
    let m = space.len();
    let top = f.max_degree();
    let mut components = Vec::new();
    for n in 1..=top {
        let src = f.component(n).unwrap();
        let out_len = checked_len(m, n - 1)?;
        let mut data = vec![Complex64::new(0.0, 0.0); out_len];
        for (j, (&xj, &wj)) in xi.iter().zip(space.weights()).enumerate() {
            let base = j * out_len;
            let scale = n as f64 * xj * wj;
            for (slot, value) in data.iter_mut().zip(&src.data[base..base + out_len]) {
                *slot += scale * value;
            }
        }
        components.push(SymTensor::new(m, n - 1, data)?);
    }
    if components.is_empty() {
        return Ok(FockVector::zero(m));
    }
    FockVector::from_components(components)
}

/// Second annihilation part:
/// `n (n-1) * sym[xi(k_1) f_n(k_1, k_1, k_2, ..., k_{n-1})]`.
pub fn annihilate2(space: &DiscreteSpace, xi: &[f64], f: &FockVector) -> Result<FockVector> {
    check_xi(space, xi)?;
    let m = space.len();
    let top = f.max_degree();
    let mut components = Vec::new();
    for n in 1..=top {
        let src = f.component(n).unwrap();
        let out_len = checked_len(m, n - 1)?;
        let mut data = vec![Complex64::new(0.0, 0.0); out_len];
        if n >= 2 {
            let scale = (n * (n - 1)) as f64;
            let mut full = vec![0usize; n];
            for_each_index(m, n - 1, |idx, flat| {
                full[0] = idx[0];
                full[1] = idx[0];
                full[2..n].copy_from_slice(&idx[1..]);
                data[flat] = scale * xi[idx[0]] * src.data[flat_of(m, &full)];
            });
        }
        components.push(SymTensor::new(m, n - 1, data)?);
    }
    if components.is_empty() {
        return Ok(FockVector::zero(m));
    }
    FockVector::from_components(components)
}

/// Both annihilation parts together: the adjoint of [`create`].
pub fn annihilate(space: &DiscreteSpace, xi: &[f64], f: &FockVector) -> Result<FockVector> {
    annihilate1(space, xi, f)?.add(&annihilate2(space, xi, f)?)
}

/// Neutral operator: `n * sym[xi(k_1) f_n(k_1, ..., k_n)]`.
pub fn neutral(space: &DiscreteSpace, xi: &[f64], f: &FockVector) -> Result<FockVector> {
    check_xi(space, xi)?;
    let m = space.len();
    let mut components = Vec::new();
    for (n, src) in f.components.iter().enumerate() {
        let mut data = vec![Complex64::new(0.0, 0.0); src.data.len()];
        if n >= 1 {
            for_each_index(m, n, |idx, flat| {
                data[flat] = n as f64 * xi[idx[0]] * src.data[flat];
            });
        }
        components.push(SymTensor::new(m, n, data)?);
    }
    FockVector::from_components(components)
}

/// The Jacobi field operator
/// `a(xi) = a+(xi) + lambda a0(xi) + a1-(xi) + a2-(xi) + c <xi> id`.
pub fn field_op(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    xi: &[f64],
    f: &FockVector,
) -> Result<FockVector> {
    let lambda = Complex64::new(params.lambda(), 0.0);
    let drift = Complex64::new(params.c_lambda() * space.pair(xi), 0.0);
    let mut out = create(space, xi, f)?;
    out = out.add(&neutral(space, xi, f)?.scale(lambda))?;
    out = out.add(&annihilate(space, xi, f)?)?;
    out.add(&f.scale(drift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::poly_norm_sq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn space2() -> DiscreteSpace {
        DiscreteSpace::new(vec![0.7, 1.4]).unwrap()
    }

    fn space3() -> DiscreteSpace {
        DiscreteSpace::new(vec![0.5, 1.1, 0.8]).unwrap()
    }

    fn random_tensor(m: usize, degree: usize, seed: u64) -> SymTensor {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let len = m.pow(degree as u32);
        let data: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SymTensor::from_real(m, degree, data).unwrap()
    }

    #[test]
    fn loop_collection_census_matches_factorials() {
        let mut expect = 1usize;
        for n in 1..=MAX_LOOP_DEGREE {
            expect *= n;
            let all = enumerate_loop_collections(n).unwrap();
            assert_eq!(all.len(), expect, "n={n}");
            let distinct: std::collections::HashSet<_> = all.iter().collect();
            assert_eq!(distinct.len(), expect, "n={n} has duplicates");
        }
        assert!(enumerate_loop_collections(0).is_err());
        assert!(enumerate_loop_collections(MAX_LOOP_DEGREE + 1).is_err());
    }

    #[test]
    fn degree_three_collections_are_the_expected_six() {
        let all = enumerate_loop_collections(3).unwrap();
        let blocks: Vec<Vec<Vec<usize>>> = all.iter().map(|c| c.blocks.clone()).collect();
        let want = vec![
            vec![vec![0], vec![1], vec![2]],
            vec![vec![0], vec![1, 2]],
            vec![vec![0, 1], vec![2]],
            vec![vec![0, 2], vec![1]],
            vec![vec![0, 1, 2]],
            vec![vec![0, 2, 1]],
        ];
        for w in &want {
            assert!(blocks.contains(w), "missing {w:?}");
        }
        assert_eq!(blocks.len(), 6);
    }

    #[test]
    fn canonical_form_starts_blocks_at_their_minimum() {
        for c in enumerate_loop_collections(5).unwrap() {
            let mut prev_min = None;
            for b in c.blocks() {
                let min = *b.iter().min().unwrap();
                assert_eq!(b[0], min);
                if let Some(p) = prev_min {
                    assert!(min > p);
                }
                prev_min = Some(min);
            }
        }
    }

    #[test]
    fn ext_inner_degree_one_is_the_weighted_dot() {
        let sp = space2();
        let f = SymTensor::from_real(2, 1, vec![1.0, 2.0]).unwrap();
        let g = SymTensor::from_real(2, 1, vec![3.0, -1.0]).unwrap();
        let got = ext_inner(&sp, &f, &g).unwrap();
        let want = 1.0 * 3.0 * 0.7 + 2.0 * (-1.0) * 1.4;
        assert!((got - Complex64::new(want, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn ext_inner_degree_two_has_the_diagonal_correction() {
        let sp = space2();
        let f = random_tensor(2, 2, 1);
        let g = random_tensor(2, 2, 2);
        let mut want = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                want += f.get(&[i, j]).conj()
                    * g.get(&[i, j])
                    * sp.weight(i)
                    * sp.weight(j);
            }
        }
        for i in 0..2 {
            want += f.get(&[i, i]).conj() * g.get(&[i, i]) * sp.weight(i);
        }
        let got = ext_inner(&sp, &f, &g).unwrap();
        assert!((got - want).norm() < 1e-13);
    }

    #[test]
    fn off_diagonal_tensors_see_the_plain_inner_product() {
        let sp = space2();
        let f = SymTensor::from_real(2, 2, vec![0.0, 0.4, 0.4, 0.0]).unwrap();
        let got = ext_inner(&sp, &f, &f).unwrap().re;
        let want = 2.0 * 0.4 * 0.4 * sp.weight(0) * sp.weight(1);
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn ext_inner_is_conjugate_symmetric_and_positive() {
        let sp = space3();
        let mut f = random_tensor(3, 3, 5);
        let mut g = random_tensor(3, 3, 6);
        // give them imaginary parts
        let h1 = random_tensor(3, 3, 7);
        let h2 = random_tensor(3, 3, 8);
        f = f.add(&h1.scale(Complex64::new(0.0, 1.0))).unwrap();
        g = g.add(&h2.scale(Complex64::new(0.0, 1.0))).unwrap();
        let fg = ext_inner(&sp, &f, &g).unwrap();
        let gf = ext_inner(&sp, &g, &f).unwrap();
        assert!((fg - gf.conj()).norm() < 1e-12);
        let ff = ext_inner(&sp, &f, &f).unwrap();
        assert!(ff.im.abs() < 1e-12);
        assert!(ff.re > 0.0);
    }

    #[test]
    fn gram_matrices_of_monomials_are_positive_semidefinite() {
        use crate::linalg::symmetric_eigenvalues;
        let sp = space2();
        for degree in 1..=3usize {
            let len = 2usize.pow(degree as u32);
            let basis: Vec<SymTensor> = (0..len)
                .map(|k| {
                    let mut data = vec![0.0; len];
                    data[k] = 1.0;
                    SymTensor::from_real(2, degree, data).unwrap()
                })
                .collect();
            let mut gram = vec![0.0; len * len];
            for i in 0..len {
                for j in 0..len {
                    gram[i * len + j] = ext_inner(&sp, &basis[i], &basis[j]).unwrap().re;
                }
            }
            let eigs = symmetric_eigenvalues(&gram, len).unwrap();
            for e in eigs {
                assert!(e >= -1e-10, "degree={degree} eigenvalue={e}");
            }
        }
    }

    #[test]
    fn indicator_tower_norm_matches_the_one_dimensional_norm() {
        let sp = space3();
        let delta = [0usize, 2];
        let t = sp.mass_of(&delta);
        let chi = sp.indicator(&delta);
        let mut factorial = 1.0;
        for n in 1..=6usize {
            factorial *= n as f64;
            let f = SymTensor::power(&chi, n).unwrap();
            let got = factorial * ext_inner(&sp, &f, &f).unwrap().re;
            let want = poly_norm_sq(t, n).unwrap();
            assert!(
                (got - want).abs() < 1e-10 * want,
                "n={n} got={got} want={want}"
            );
        }
    }

    #[test]
    fn ext_inner_rejects_mismatches() {
        let sp = space2();
        let f = random_tensor(2, 2, 1);
        let g = random_tensor(2, 3, 1);
        assert!(ext_inner(&sp, &f, &g).is_err());
        let h = random_tensor(3, 2, 1);
        assert!(ext_inner(&sp, &f, &h).is_err());
    }

    #[test]
    fn create_on_vacuum_gives_the_vector() {
        let sp = space2();
        let xi = vec![0.3, -0.8];
        let out = create(&sp, &xi, &FockVector::vacuum(2)).unwrap();
        assert_eq!(out.max_degree(), 1);
        assert_eq!(out.component(0).unwrap().data()[0], Complex64::new(0.0, 0.0));
        let c1 = out.component(1).unwrap();
        assert!((c1.get(&[0]) - Complex64::new(0.3, 0.0)).norm() < 1e-15);
        assert!((c1.get(&[1]) - Complex64::new(-0.8, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn create_extends_indicator_towers() {
        let sp = space3();
        let chi = sp.indicator(&[1, 2]);
        let f = FockVector::from_tensor(SymTensor::power(&chi, 3).unwrap()).unwrap();
        let out = create(&sp, &chi, &f).unwrap();
        let want = SymTensor::power(&chi, 4).unwrap();
        assert!(out.component(4).unwrap().max_abs_diff(&want) < 1e-13);
    }

    #[test]
    fn annihilators_small_degree_closed_forms() {
        let sp = space2();
        let xi = vec![0.5, 2.0];
        let f1 = FockVector::from_tensor(random_tensor(2, 1, 3)).unwrap();
        let a1 = annihilate1(&sp, &xi, &f1).unwrap();
        let want: Complex64 = (0..2)
            .map(|i| xi[i] * sp.weight(i) * f1.component(1).unwrap().get(&[i]))
            .sum();
        assert!((a1.component(0).unwrap().data()[0] - want).norm() < 1e-14);
        // a2 on degree-2: 2 xi_i f_ii at atom i
        let f2 = FockVector::from_tensor(random_tensor(2, 2, 4)).unwrap();
        let a2 = annihilate2(&sp, &xi, &f2).unwrap();
        for i in 0..2 {
            let want = 2.0 * xi[i] * f2.component(2).unwrap().get(&[i, i]);
            assert!((a2.component(1).unwrap().get(&[i]) - want).norm() < 1e-14);
        }
        // neutral on degree-1 multiplies entrywise by xi
        let n1 = neutral(&sp, &xi, &f1).unwrap();
        for i in 0..2 {
            let want = xi[i] * f1.component(1).unwrap().get(&[i]);
            assert!((n1.component(1).unwrap().get(&[i]) - want).norm() < 1e-14);
        }
        // annihilators send the vacuum to zero
        let vac = FockVector::vacuum(2);
        assert_eq!(annihilate(&sp, &xi, &vac).unwrap().max_abs_diff(&FockVector::zero(2)), 0.0);
    }

    #[test]
    fn creation_is_adjoint_to_the_two_part_annihilation() {
        let sp = space3();
        let xi = vec![0.4, -1.1, 0.7];
        for degree in 1..=4usize {
            let f = FockVector::from_tensor(random_tensor(3, degree - 1, 10 + degree as u64))
                .unwrap();
            let g = FockVector::from_tensor(random_tensor(3, degree, 20 + degree as u64)).unwrap();
            let lhs = fock_inner(&sp, &create(&sp, &xi, &f).unwrap(), &g).unwrap();
            let rhs = fock_inner(&sp, &f, &annihilate(&sp, &xi, &g).unwrap()).unwrap();
            let scale = 1.0 + lhs.norm().max(rhs.norm());
            assert!(
                (lhs - rhs).norm() < 1e-12 * scale,
                "degree={degree} lhs={lhs} rhs={rhs}"
            );
        }
    }

    #[test]
    fn field_op_on_vacuum_is_drift_plus_vector() {
        let sp = space2();
        let params = MeixnerParams::new(2.5).unwrap();
        let xi = vec![1.2, -0.4];
        let out = field_op(&sp, &params, &xi, &FockVector::vacuum(2)).unwrap();
        let want0 = params.c_lambda() * sp.pair(&xi);
        assert!((out.component(0).unwrap().data()[0].re - want0).abs() < 1e-14);
        for i in 0..2 {
            assert!((out.component(1).unwrap().get(&[i]).re - xi[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn field_op_reproduces_the_recurrence_on_indicator_towers() {
        let sp = space3();
        let delta = [0usize, 1];
        let chi = sp.indicator(&delta);
        let t = sp.mass_of(&delta);
        for &lambda in &[0.0, 1.0, 2.0, 3.0] {
            let params = MeixnerParams::new(lambda).unwrap();
            for n in 1..=4usize {
                let f = FockVector::from_tensor(SymTensor::power(&chi, n).unwrap()).unwrap();
                let got = field_op(&sp, &params, &chi, &f).unwrap();
                let up = SymTensor::power(&chi, n + 1).unwrap();
                let mid = SymTensor::power(&chi, n)
                    .unwrap()
                    .scale(Complex64::new(lambda * n as f64 + params.c_lambda() * t, 0.0));
                let down = SymTensor::power(&chi, n - 1)
                    .unwrap()
                    .scale(Complex64::new(n as f64 * (n as f64 - 1.0 + t), 0.0));
                let mut want = FockVector::from_tensor(up).unwrap();
                want = want.add(&FockVector::from_tensor(mid).unwrap()).unwrap();
                want = want.add(&FockVector::from_tensor(down).unwrap()).unwrap();
                assert!(
                    got.max_abs_diff(&want) < 1e-12,
                    "lambda={lambda} n={n} diff={}",
                    got.max_abs_diff(&want)
                );
            }
        }
    }

    #[test]
    fn field_op_is_hermitian() {
        let sp = space2();
        let xi = vec![0.9, 0.3];
        for &lambda in &[1.0, 2.0, 2.5] {
            let params = MeixnerParams::new(lambda).unwrap();
            let f = FockVector::from_components(vec![
                SymTensor::scalar(2, Complex64::new(0.4, 0.0)),
                random_tensor(2, 1, 31),
                random_tensor(2, 2, 32),
            ])
            .unwrap();
            let g = FockVector::from_components(vec![
                SymTensor::scalar(2, Complex64::new(-0.2, 0.0)),
                random_tensor(2, 1, 41),
                random_tensor(2, 2, 42),
            ])
            .unwrap();
            let lhs = fock_inner(&sp, &field_op(&sp, &params, &xi, &f).unwrap(), &g).unwrap();
            let rhs = fock_inner(&sp, &f, &field_op(&sp, &params, &xi, &g).unwrap()).unwrap();
            assert!(
                (lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()),
                "lambda={lambda}"
            );
        }
    }

    #[test]
    fn budgets_and_shapes_are_enforced() {
        assert!(DiscreteSpace::new(vec![]).is_err());
        assert!(DiscreteSpace::new(vec![1.0, 0.0]).is_err());
        assert!(DiscreteSpace::new(vec![1.0, -2.0]).is_err());
        assert!(SymTensor::zero(2, MAX_TENSOR_DEGREE + 1).is_err());
        assert!(SymTensor::zero(4, 12).is_err());
        assert!(SymTensor::from_real(2, 1, vec![1.0, 2.0, 3.0]).is_err());
        let sp = space2();
        let f = FockVector::vacuum(2);
        assert!(create(&sp, &[1.0], &f).is_err());
    }

    #[test]
    fn symmetrization_averages_over_permuted_slots() {
        let t = SymTensor::from_real(2, 2, vec![0.0, 1.0, 3.0, 0.0]).unwrap();
        assert!((t.get(&[0, 1]) - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((t.get(&[1, 0]) - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn adjointness_holds_for_random_spaces(
            w0 in 0.2f64..2.0,
            w1 in 0.2f64..2.0,
            x0 in -1.5f64..1.5,
            x1 in -1.5f64..1.5,
            seed in 0u64..1000,
        ) {
            let sp = DiscreteSpace::new(vec![w0, w1]).unwrap();
            let xi = vec![x0, x1];
            let f = FockVector::from_tensor(random_tensor(2, 2, seed)).unwrap();
            let g = FockVector::from_tensor(random_tensor(2, 3, seed + 1)).unwrap();
            let lhs = fock_inner(&sp, &create(&sp, &xi, &f).unwrap(), &g).unwrap();
            let rhs = fock_inner(&sp, &f, &annihilate(&sp, &xi, &g).unwrap()).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-11 * (1.0 + lhs.norm()));
        }
    }
}
