//! Named verification suites bundling the structural identities into
//! reportable pass/fail runs.
//!
//! Each suite draws randomized inputs from a seeded generator, measures the
//! worst residual of one identity, and compares it against a tolerance. The
//! suites exist so the command line can re-run any identity on user-chosen
//! parameters with a machine-readable verdict; the library tests pin the
//! same identities at fixed settings.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::fock::{self, DiscreteSpace, FockVector, SymTensor};
use crate::functional::{self, DualVector, TestFunctional};
use crate::params::MeixnerParams;
use crate::poly;
use crate::wick::{self, PointConfiguration};
use crate::{Error, Result};

const GEN_DEPTH: usize = 12;
const EXP_DEPTH: usize = 8;

/// The named verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    /// Expectations of products of Wick pairings against the extended inner
    /// product.
    Orthogonality,
    /// The three-level splitting of a field pairing times a kernel pairing.
    Recurrence,
    /// Kernel pairings on indicator towers and their factorization over
    /// disjoint atom sets.
    Product,
    /// Truncated generating-function series against the closed form.
    GenFun,
    /// Raising/lowering duality and creation/annihilation adjointness.
    Adjoint,
    /// Lowering against the shift integral over the Levy measure.
    LevyLower,
    /// Raising against the one-atom difference expression.
    CreationFd,
    /// Lowering of truncated exponential vectors along the inverted field.
    PsiInvNabla,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 8] = [
        SuiteKind::Orthogonality,
        SuiteKind::Recurrence,
        SuiteKind::Product,
        SuiteKind::GenFun,
        SuiteKind::Adjoint,
        SuiteKind::LevyLower,
        SuiteKind::CreationFd,
        SuiteKind::PsiInvNabla,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "orthogonality" => Ok(SuiteKind::Orthogonality),
            "recurrence" => Ok(SuiteKind::Recurrence),
            "product" => Ok(SuiteKind::Product),
            "genfun" => Ok(SuiteKind::GenFun),
            "adjoint" => Ok(SuiteKind::Adjoint),
            "levy-lower" => Ok(SuiteKind::LevyLower),
            "creation-fd" => Ok(SuiteKind::CreationFd),
            "psi-inv-nabla" => Ok(SuiteKind::PsiInvNabla),
            other => Err(Error::InvalidParameter(format!(
                "unknown suite '{other}'; expected one of orthogonality, recurrence, \
                 product, genfun, adjoint, levy-lower, creation-fd, psi-inv-nabla"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SuiteKind::Orthogonality => "orthogonality",
            SuiteKind::Recurrence => "recurrence",
            SuiteKind::Product => "product",
            SuiteKind::GenFun => "genfun",
            SuiteKind::Adjoint => "adjoint",
            SuiteKind::LevyLower => "levy-lower",
            SuiteKind::CreationFd => "creation-fd",
            SuiteKind::PsiInvNabla => "psi-inv-nabla",
        }
    }

    /// One-line statement of the identity the suite measures.
    pub fn anchor(&self) -> &'static str {
        match self {
            SuiteKind::Orthogonality => {
                "expectation of a product of Wick pairings is delta_mn n! times \
                 the extended inner product"
            }
            SuiteKind::Recurrence => {
                "field pairing times a degree-n kernel pairing splits into \
                 degrees n+1, n, n-1"
            }
            SuiteKind::Product => {
                "kernel pairings on indicator towers reduce to the orthogonal \
                 polynomials and factor over disjoint atom sets"
            }
            SuiteKind::GenFun => {
                "truncated generating-function series matches the closed \
                 product form inside the convergence disk"
            }
            SuiteKind::Adjoint => {
                "raising is the dual adjoint of lowering and creation is the \
                 Fock adjoint of annihilation"
            }
            SuiteKind::LevyLower => {
                "lowering equals the mass-shift integral against the Levy \
                 measure"
            }
            SuiteKind::CreationFd => {
                "raising equals the one-atom difference expression in the \
                 configuration"
            }
            SuiteKind::PsiInvNabla => {
                "lowering a truncated exponential vector multiplies it by the \
                 inverted field at the atom"
            }
        }
    }

    /// Tolerance used when the caller does not pick one.
    pub fn default_tol(&self) -> f64 {
        match self {
            SuiteKind::Orthogonality => 1e-9,
            SuiteKind::Recurrence => 1e-10,
            SuiteKind::Product => 1e-10,
            SuiteKind::GenFun => 1e-8,
            SuiteKind::Adjoint => 1e-12,
            SuiteKind::LevyLower => 1e-6,
            SuiteKind::CreationFd => 1e-9,
            SuiteKind::PsiInvNabla => 1e-9,
        }
    }
}

/// Shared knobs of a suite run.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub lambda: f64,
    pub atoms: usize,
    pub max_degree: usize,
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Atom weights; geometric `0.5 * 2^i` when absent.
    pub weights: Option<Vec<f64>>,
}

impl SuiteConfig {
    pub fn new(kind: SuiteKind, lambda: f64) -> Self {
        Self {
            lambda,
            atoms: 3,
            max_degree: 4,
            trials: 25,
            tol: kind.default_tol(),
            seed: 0,
            weights: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.atoms == 0 {
            return Err(Error::InvalidParameter("at least one atom is needed".into()));
        }
        if self.max_degree == 0 {
            return Err(Error::InvalidParameter("max_degree must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("at least one trial is needed".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(
                "tolerance must be positive and finite".into(),
            ));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.atoms {
                return Err(Error::ShapeMismatch(format!(
                    "{} weights given for {} atoms",
                    w.len(),
                    self.atoms
                )));
            }
        }
        Ok(())
    }

    fn space(&self) -> Result<DiscreteSpace> {
        match &self.weights {
            Some(w) => DiscreteSpace::new(w.clone()),
            None => DiscreteSpace::new(
                (0..self.atoms).map(|i| 0.5 * 2f64.powi(i as i32)).collect(),
            ),
        }
    }
}

/// Outcome of one suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub anchor: String,
    pub lambda: f64,
    pub atoms: usize,
    pub max_degree: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_residual: f64,
    pub pass: bool,
}

/// Runs one suite and reports the worst residual against the tolerance.
pub fn run_suite(kind: SuiteKind, config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let space = config.space()?;
    let params = MeixnerParams::new(config.lambda)?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let max_residual = match kind {
        SuiteKind::Orthogonality => orthogonality_residual(&space, &params, config, &mut rng)?,
        SuiteKind::Recurrence => recurrence_residual(&space, &params, config, &mut rng)?,
        SuiteKind::Product => product_residual(&space, &params, config, &mut rng)?,
        SuiteKind::GenFun => genfun_residual(&space, &params, config, &mut rng)?,
        SuiteKind::Adjoint => adjoint_residual(&space, config, &mut rng)?,
        SuiteKind::LevyLower => levy_lower_residual(&space, &params, config, &mut rng)?,
        SuiteKind::CreationFd => creation_fd_residual(&space, &params, config, &mut rng)?,
        SuiteKind::PsiInvNabla => psi_inv_nabla_residual(&space, &params, config, &mut rng)?,
    };
    Ok(SuiteReport {
        suite: kind.name().to_string(),
        anchor: kind.anchor().to_string(),
        lambda: config.lambda,
        atoms: config.atoms,
        max_degree: config.max_degree,
        trials: config.trials,
        seed: config.seed,
        tol: config.tol,
        max_residual,
        pass: max_residual.is_finite() && max_residual <= config.tol,
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn random_real_tensor(m: usize, degree: usize, rng: &mut ChaCha12Rng) -> Result<SymTensor> {
    let len = m.pow(degree as u32);
    let data: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SymTensor::from_real(m, degree, data)
}

fn random_vector(m: usize, top: usize, real: bool, rng: &mut ChaCha12Rng) -> Result<FockVector> {
    let mut components = Vec::with_capacity(top + 1);
    for n in 0..=top {
        let len = m.pow(n as u32);
        let data: Vec<Complex64> = (0..len)
            .map(|_| {
                Complex64::new(
                    rng.gen_range(-1.0..1.0),
                    if real { 0.0 } else { rng.gen_range(-1.0..1.0) },
                )
            })
            .collect();
        components.push(SymTensor::new(m, n, data)?);
    }
    FockVector::from_components(components)
}

fn random_omega(m: usize, rng: &mut ChaCha12Rng) -> Result<PointConfiguration> {
    PointConfiguration::new((0..m).map(|_| rng.gen_range(-1.5..1.5)).collect())
}

fn random_direction(m: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn orthogonality_residual(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    config: &SuiteConfig,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    let m = space.len();
    let mut worst: f64 = 0.0;
    for dm in 0..=config.max_degree {
        for dn in dm..=config.max_degree {
            for _ in 0..config.trials {
                let f = random_real_tensor(m, dm, rng)?;
                let g = random_real_tensor(m, dn, rng)?;
                let got = wick::expect_product(
                    space,
                    params,
                    &FockVector::from_tensor(f.clone())?,
                    &FockVector::from_tensor(g.clone())?,
                )?;
                let want = if dm == dn {
                    factorial(dn) * fock::ext_inner(space, &f, &g)?
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((got - want).norm());
            }
        }
    }
    Ok(worst)
}

fn recurrence_residual(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    config: &SuiteConfig,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    let m = space.len();
    let mut worst: f64 = 0.0;
    for trial in 0..config.trials {
        let omega = random_omega(m, rng)?;
        let xi = random_direction(m, rng);
        let n = trial % config.max_degree + 1;
        worst = worst.max(wick::verify_recurrence_identity(
            space, params, &omega, &xi, n,
        )?);
        worst = worst.max(wick::verify_recurrence_identity(
            space, params, &omega, &xi, 0,
        )?);
    }
    Ok(worst)
}

fn product_residual(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    config: &SuiteConfig,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    let m = space.len();
    let mut worst: f64 = 0.0;
    for _ in 0..config.trials {
        let omega = random_omega(m, rng)?;
        let stack = wick::wick_kernels(space, params, &omega, config.max_degree)?;

        let subset: Vec<usize> = {
            let picked: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
            if picked.is_empty() {
                vec![rng.gen_range(0..m)]
            } else {
                picked
            }
        };
        let k = rng.gen_range(1..=config.max_degree);
        let chi = space.indicator(&subset);
        let tower = SymTensor::power(&chi, k)?;
        let got = wick::pair(space, &stack, &tower)?;
        let t = space.mass_of(&subset);
        let x: f64 = subset.iter().map(|&i| omega.mass(i)).sum();
        let want = poly::eval_poly(params, t, k, x)?;
        worst = worst.max((got - want).norm());

        if m >= 2 && config.max_degree >= 2 {
            let mut left: Vec<usize> = Vec::new();
            let mut right: Vec<usize> = Vec::new();
            for i in 0..m {
                if rng.gen_bool(0.5) {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            if left.is_empty() {
                left.push(right.pop().expect("m >= 2"));
            }
            if right.is_empty() {
                right.push(left.pop().expect("m >= 2"));
            }
            let k1 = rng.gen_range(1..config.max_degree);
            let k2 = rng.gen_range(1..=(config.max_degree - k1));
            let chi1 = space.indicator(&left);
            let chi2 = space.indicator(&right);
            let mut tensor = SymTensor::power(&chi1, k1)?;
            for _ in 0..k2 {
                tensor = tensor.sym_outer_vector(&chi2)?;
            }
            let got = wick::pair(space, &stack, &tensor)?;
            let t1 = space.mass_of(&left);
            let t2 = space.mass_of(&right);
            let x1: f64 = left.iter().map(|&i| omega.mass(i)).sum();
            let x2: f64 = right.iter().map(|&i| omega.mass(i)).sum();
            let want = poly::eval_poly(params, t1, k1, x1)? * poly::eval_poly(params, t2, k2, x2)?;
            worst = worst.max((got - want).norm());
        }
    }
    Ok(worst)
}

fn genfun_residual(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    config: &SuiteConfig,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    let m = space.len();
    let cap = 0.2 * params.psi_radius();
    let mut worst: f64 = 0.0;
    for _ in 0..config.trials {
        let omega = random_omega(m, rng)?;
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let scale = cap * rng.gen_range(0.5..1.0);
        let u = Complex64::new(angle.cos(), angle.sin()) * scale;
        let phi: Vec<Complex64> = (0..m).map(|_| u * rng.gen_range(0.2..1.0)).collect();
        let eval = wick::gen_fun_field(space, params, &omega, &phi, GEN_DEPTH)?;
        worst = worst.max((eval.truncated - eval.closed).norm());
    }
    Ok(worst)
}

fn adjoint_residual(
    space: &DiscreteSpace,
    config: &SuiteConfig,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    let m = space.len();
    let lower_top = config.max_degree.saturating_sub(1);
    let mut worst: f64 = 0.0;
    for _ in 0..config.trials {
        let f = DualVector::new(random_vector(m, lower_top, false, rng)?);
        let phi = TestFunctional::new(random_vector(m, config.max_degree, false, rng)?);
        for atom in 0..m {
            let left =
                functional::dual_pair(space, &functional::raise(space, atom, &f)?, &phi)?;
            let right =
                functional::dual_pair(space, &f, &functional::lower(space, atom, &phi)?)?;
            worst = worst.max((left - right).norm());
        }

        let u = random_vector(m, lower_top, false, rng)?;
        let v = random_vector(m, config.max_degree, false, rng)?;
        let xi = random_direction(m, rng);
        let created = fock::create(space, &xi, &u)?;
        let annihilated = fock::annihilate(space, &xi, &v)?;
        let left = fock::fock_inner(space, &created, &v)?;
        let right = fock::fock_inner(space, &u, &annihilated)?;
        worst = worst.max((left - right).norm());
    }
    Ok(worst)
}

fn levy_lower_residual(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    config: &SuiteConfig,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    let m = space.len();
    let top = config.max_degree.min(3);
    let mut worst: f64 = 0.0;
    for _ in 0..config.trials {
        let phi = TestFunctional::new(random_vector(m, top, true, rng)?);
        let omega = random_omega(m, rng)?;
        let atom = rng.gen_range(0..m);
        let through = functional::levy_lower(space, params, atom, &phi, &omega)?;
        let direct = functional::lower(space, atom, &phi)?.eval(space, params, &omega)?;
        worst = worst.max((through - direct).norm());
    }
    Ok(worst)
}

fn creation_fd_residual(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    config: &SuiteConfig,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    let m = space.len();
    let top = config.max_degree.min(3);
    let mut worst: f64 = 0.0;
    for _ in 0..config.trials {
        let phi = TestFunctional::new(random_vector(m, top, true, rng)?);
        let omega = random_omega(m, rng)?;
        let xi = random_direction(m, rng);
        let through = functional::creation_via_fd(space, params, &xi, &phi, &omega)?;
        let image = TestFunctional::new(fock::create(space, &xi, phi.coefficients())?);
        let direct = image.eval(space, params, &omega)?;
        worst = worst.max((through - direct).norm());
    }
    Ok(worst)
}

fn psi_inv_nabla_residual(
    space: &DiscreteSpace,
    params: &MeixnerParams,
    config: &SuiteConfig,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    let m = space.len();
    let field_cap = 0.15 * params.psi_inv_radius().min(1.0);
    let mut worst: f64 = 0.0;
    let mut worst_shallow: f64 = 0.0;
    let mut worst_full: f64 = 0.0;
    for _ in 0..config.trials {
        let field: Vec<f64> = (0..m)
            .map(|_| rng.gen_range(-field_cap..field_cap))
            .collect();
        let u = functional::psi_inverse_field(params, &field)?;
        let deep = functional::exponential_functional(m, &u, EXP_DEPTH)?;
        let less = functional::exponential_functional(m, &u, EXP_DEPTH - 1)?;
        for atom in 0..m {
            let lowered = functional::lower(space, atom, &deep)?;
            let expected = less.scale(Complex64::new(u[atom], 0.0));
            worst = worst.max(
                lowered
                    .coefficients()
                    .max_abs_diff(expected.coefficients()),
            );
        }

        let omega = PointConfiguration::new((0..m).map(|_| rng.gen_range(-0.8..0.8)).collect())?;
        let atom = rng.gen_range(0..m);
        let eval_residual = |depth: usize| -> Result<f64> {
            let e = functional::exponential_functional(m, &u, depth)?;
            let d = functional::gateaux(space, params, &e, &omega, atom)?;
            let v = e.eval(space, params, &omega)?;
            Ok((d - field[atom] * v).norm())
        };
        worst_shallow = worst_shallow.max(eval_residual(EXP_DEPTH - 2)?);
        worst_full = worst_full.max(eval_residual(EXP_DEPTH)?);
    }
    // The eval-side identity holds only up to the truncation tail, so the
    // gate is decay of the remainder, not its size: two extra degrees must
    // at least halve the worst remainder over the batch. Single draws can
    // cancel accidentally, the batch maximum cannot.
    if worst_full > config.tol && worst_full > 0.5 * worst_shallow {
        worst = worst.max(worst_full);
    }
    Ok(worst)
}
