//! Command-line front door for the Meixner noise library: parameter
//! inspection, polynomial and quadrature tables, law densities, reproducible
//! sampling, Fourier-transform comparison, a noise-space demo, and the
//! verification suites.
//!
//! Reports are machine-readable: tabular commands emit CSV with every float
//! in full double precision, the rest emit a JSON document with the fixed
//! shape `{command, inputs, results[], pass}`. Identical invocations produce
//! byte-identical output. Exit code 0 means every requested check passed,
//! 1 means a check failed its tolerance, 2 means the configuration was
//! rejected. Set `MEIXNER_LOG={error|info|debug}` to control logging.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use meixner_core::fock::{self, DiscreteSpace, SymTensor};
use meixner_core::measures::Measure1D;
use meixner_core::params::MeixnerParams;
use meixner_core::poly;
use meixner_core::verify::{run_suite, SuiteConfig, SuiteKind};

#[derive(Parser)]
#[command(
    name = "meixner",
    version,
    about = "Meixner-class polynomials, measures, and noise operators on a finite base space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived parameter pack for one lambda as JSON.
    Params(ParamsArgs),
    /// Tabulate orthogonal polynomials on a grid (CSV: degree,x,value).
    PolyTable(PolyTableArgs),
    /// Gaussian quadrature rule of the law (CSV: node,weight).
    Quad(QuadArgs),
    /// Density of the law on a grid (CSV: s,density).
    Measure(MeasureArgs),
    /// Draw reproducible samples of the law (CSV: s).
    Sample(SampleArgs),
    /// Fourier transform on a u-grid, optionally next to an empirical one
    /// rebuilt from a sample file (CSV: u,re,im[,emp_re,emp_im]).
    Charfun(CharfunArgs),
    /// Loop census and the Gram matrix of the symmetric monomial basis (JSON).
    FockDemo(FockDemoArgs),
    /// Run one named verification suite, or all of them (JSON report).
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long)]
    lambda: f64,
}

#[derive(Args)]
struct PolyTableArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    max_degree: usize,
    /// Evaluation grid a:b:h, endpoint-inclusive within h/2.
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuadArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    t: f64,
    /// Node count of the rule.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    t: f64,
    /// Evaluation grid a:b:h, endpoint-inclusive within h/2.
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    t: f64,
    /// Sample count.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CharfunArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    t: f64,
    /// Evaluation grid a:b:h, endpoint-inclusive within h/2.
    #[arg(long, allow_hyphen_values = true)]
    u_grid: String,
    /// CSV of samples (as written by `sample`); adds emp_re,emp_im columns.
    #[arg(long)]
    empirical: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FockDemoArgs {
    #[arg(long)]
    atoms: usize,
    /// Comma-separated atom weights, one per atom.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    /// Tensor degree of the monomial basis; the loop census runs to here.
    #[arg(long)]
    degree: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of: orthogonality, recurrence, product, genfun, adjoint,
    /// levy-lower, creation-fd, psi-inv-nabla, or `all`.
    #[arg(long)]
    suite: String,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 3)]
    atoms: usize,
    #[arg(long, default_value_t = 4)]
    max_degree: usize,
    #[arg(long, default_value_t = 25)]
    trials: usize,
    /// Residual tolerance; each suite's own default when omitted.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: u64,
    /// Comma-separated atom weights; geometric 0.5*2^i when omitted.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct Report {
    command: String,
    inputs: Value,
    results: Vec<Value>,
    pass: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("MEIXNER_LOG", "error"),
    )
    .format_timestamp(None)
    .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<bool, String> {
    match command {
        Command::Params(args) => run_params(args),
        Command::PolyTable(args) => run_poly_table(args),
        Command::Quad(args) => run_quad(args),
        Command::Measure(args) => run_measure(args),
        Command::Sample(args) => run_sample(args),
        Command::Charfun(args) => run_charfun(args),
        Command::FockDemo(args) => run_fock_demo(args),
        Command::Verify(args) => run_verify(args),
    }
}

fn fail(err: meixner_core::Error) -> String {
    err.to_string()
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Points `a + k h` for `k = 0, 1, ...`; the far end `b` is included when it
/// lies within `h/2` of a grid point.
fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid must look like a:b:h, got `{spec}`"));
    }
    let read = |label: &str, text: &str| -> Result<f64, String> {
        text.parse::<f64>()
            .map_err(|_| format!("grid {label} `{text}` is not a number"))
    };
    let a = read("start", parts[0])?;
    let b = read("end", parts[1])?;
    let h = read("step", parts[2])?;
    if !a.is_finite() || !b.is_finite() || !h.is_finite() {
        return Err("grid bounds and step must be finite".into());
    }
    if h <= 0.0 {
        return Err(format!("grid step must be positive, got {h}"));
    }
    if b < a {
        return Err(format!("grid end {b} lies before start {a}"));
    }
    let count = ((b - a) / h + 0.5).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(format!("grid would hold {count} points, cap is 1000000"));
    }
    Ok((0..count).map(|k| a + h * k as f64).collect())
}

fn write_csv(out: &Option<PathBuf>, header: &str, rows: &[String]) -> Result<(), String> {
    let mut text = String::with_capacity(rows.len() * 40 + header.len() + 2);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|err| format!("cannot write {}: {err}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_report(report: &Report) -> Result<(), String> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|err| format!("cannot serialize report: {err}"))?;
    println!("{text}");
    Ok(())
}

fn run_params(args: ParamsArgs) -> Result<bool, String> {
    let params = MeixnerParams::new(args.lambda).map_err(fail)?;
    log::info!("parameter pack at lambda {}", args.lambda);
    let mut result = serde_json::to_value(&params)
        .map_err(|err| format!("cannot serialize parameters: {err}"))?;
    let extras = result
        .as_object_mut()
        .expect("parameters serialize to an object");
    extras.insert("lattice_step".into(), json!(params.lattice_step()));
    extras.insert("psi_radius".into(), json!(params.psi_radius()));
    extras.insert("psi_inv_radius".into(), json!(params.psi_inv_radius()));
    print_report(&Report {
        command: "params".into(),
        inputs: json!({ "lambda": args.lambda }),
        results: vec![result],
        pass: true,
    })?;
    Ok(true)
}

fn run_poly_table(args: PolyTableArgs) -> Result<bool, String> {
    let params = MeixnerParams::new(args.lambda).map_err(fail)?;
    let grid = parse_grid(&args.grid)?;
    log::info!(
        "tabulating degrees 0..={} on {} grid points",
        args.max_degree,
        grid.len()
    );
    let mut rows = Vec::with_capacity((args.max_degree + 1) * grid.len());
    for degree in 0..=args.max_degree {
        for &x in &grid {
            let value = poly::eval_poly(&params, args.t, degree, x).map_err(fail)?;
            rows.push(format!("{degree},{},{}", num(x), num(value)));
        }
    }
    write_csv(&args.out, "degree,x,value", &rows)?;
    Ok(true)
}

fn run_quad(args: QuadArgs) -> Result<bool, String> {
    let params = MeixnerParams::new(args.lambda).map_err(fail)?;
    let rule = poly::quadrature(&params, args.t, args.n).map_err(fail)?;
    log::info!("quadrature rule with {} nodes", args.n);
    let rows: Vec<String> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| format!("{},{}", num(x), num(w)))
        .collect();
    write_csv(&args.out, "node,weight", &rows)?;
    Ok(true)
}

fn run_measure(args: MeasureArgs) -> Result<bool, String> {
    let params = MeixnerParams::new(args.lambda).map_err(fail)?;
    let measure = Measure1D::new(params, args.t).map_err(fail)?;
    let grid = parse_grid(&args.grid)?;
    log::info!("density on {} grid points", grid.len());
    let rows: Vec<String> = grid
        .iter()
        .map(|&s| {
            measure
                .density(s)
                .map(|d| format!("{},{}", num(s), num(d)))
                .map_err(fail)
        })
        .collect::<Result<_, _>>()?;
    write_csv(&args.out, "s,density", &rows)?;
    Ok(true)
}

fn run_sample(args: SampleArgs) -> Result<bool, String> {
    let params = MeixnerParams::new(args.lambda).map_err(fail)?;
    let measure = Measure1D::new(params, args.t).map_err(fail)?;
    log::info!("drawing {} samples with seed {}", args.n, args.seed);
    let samples = measure.sample(args.n, args.seed).map_err(fail)?;
    let rows: Vec<String> = samples.iter().map(|&s| num(s)).collect();
    write_csv(&args.out, "s", &rows)?;
    Ok(true)
}

fn read_sample_file(path: &PathBuf) -> Result<Vec<f64>, String> {
    let text = fs::read_to_string(path)
        .map_err(|err| format!("cannot read {}: {err}", path.display()))?;
    let mut values = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if index == 0 => continue,
            Err(_) => {
                return Err(format!(
                    "{} line {}: `{trimmed}` is not a number",
                    path.display(),
                    index + 1
                ));
            }
        }
    }
    if values.is_empty() {
        return Err(format!("{} holds no samples", path.display()));
    }
    Ok(values)
}

fn run_charfun(args: CharfunArgs) -> Result<bool, String> {
    let params = MeixnerParams::new(args.lambda).map_err(fail)?;
    let measure = Measure1D::new(params, args.t).map_err(fail)?;
    let grid = parse_grid(&args.u_grid)?;
    let empirical = args
        .empirical
        .as_ref()
        .map(read_sample_file)
        .transpose()?;
    log::info!(
        "Fourier transform on {} grid points{}",
        grid.len(),
        if empirical.is_some() {
            " with an empirical comparison"
        } else {
            ""
        }
    );
    let mut rows = Vec::with_capacity(grid.len());
    for &u in &grid {
        let value = measure.char_fun(u).map_err(fail)?;
        match &empirical {
            None => rows.push(format!("{},{},{}", num(u), num(value.re), num(value.im))),
            Some(samples) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for &s in samples {
                    acc += Complex64::new(0.0, u * s).exp();
                }
                let emp = acc / samples.len() as f64;
                rows.push(format!(
                    "{},{},{},{},{}",
                    num(u),
                    num(value.re),
                    num(value.im),
                    num(emp.re),
                    num(emp.im)
                ));
            }
        }
    }
    let header = if empirical.is_some() {
        "u,re,im,emp_re,emp_im"
    } else {
        "u,re,im"
    };
    write_csv(&args.out, header, &rows)?;
    Ok(true)
}

/// Nondecreasing index tuples of length `n` over `0..m`, lexicographically.
fn multisets(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        out.push(cur.clone());
        let mut i = n;
        while i > 0 && cur[i - 1] + 1 >= m {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let next = cur[i - 1] + 1;
        for slot in cur.iter_mut().skip(i - 1) {
            *slot = next;
        }
    }
}

fn monomial_tensor(space: &DiscreteSpace, multiset: &[usize]) -> Result<SymTensor, String> {
    let m = space.len();
    let mut tensor = SymTensor::scalar(m, Complex64::new(1.0, 0.0));
    for &atom in multiset {
        let mut unit = vec![0.0; m];
        unit[atom] = 1.0;
        tensor = tensor.sym_outer_vector(&unit).map_err(fail)?;
    }
    Ok(tensor)
}

fn run_fock_demo(args: FockDemoArgs) -> Result<bool, String> {
    if args.weights.len() != args.atoms {
        return Err(format!(
            "{} weights given for {} atoms",
            args.weights.len(),
            args.atoms
        ));
    }
    if args.degree == 0 {
        return Err("degree must be at least 1".into());
    }
    let space = DiscreteSpace::new(args.weights.clone()).map_err(fail)?;
    let census: Vec<usize> = (1..=args.degree)
        .map(|n| fock::enumerate_loop_collections(n).map(|c| c.len()))
        .collect::<meixner_core::Result<_>>()
        .map_err(fail)?;
    let basis = multisets(args.atoms, args.degree);
    log::info!(
        "Gram matrix of {} monomials at degree {}",
        basis.len(),
        args.degree
    );
    let tensors: Vec<SymTensor> = basis
        .iter()
        .map(|multiset| monomial_tensor(&space, multiset))
        .collect::<Result<_, _>>()?;
    let mut gram = Vec::with_capacity(tensors.len());
    for left in &tensors {
        let mut row = Vec::with_capacity(tensors.len());
        for right in &tensors {
            let value = fock::ext_inner(&space, left, right).map_err(fail)?;
            row.push(value.re);
        }
        gram.push(row);
    }
    print_report(&Report {
        command: "fock-demo".into(),
        inputs: json!({
            "atoms": args.atoms,
            "weights": args.weights,
            "degree": args.degree,
        }),
        results: vec![json!({
            "loop_census": census,
            "basis": basis,
            "gram": gram,
        })],
        pass: true,
    })?;
    Ok(true)
}

fn run_verify(args: VerifyArgs) -> Result<bool, String> {
    let kinds: Vec<SuiteKind> = if args.suite == "all" {
        SuiteKind::ALL.to_vec()
    } else {
        vec![SuiteKind::parse(&args.suite).map_err(fail)?]
    };
    let mut results = Vec::with_capacity(kinds.len());
    let mut pass = true;
    for kind in kinds {
        let mut config = SuiteConfig::new(kind, args.lambda);
        config.atoms = args.atoms;
        config.max_degree = args.max_degree;
        config.trials = args.trials;
        config.seed = args.seed;
        config.weights = args.weights.clone();
        if let Some(tol) = args.tol {
            config.tol = tol;
        }
        log::info!("running the {} suite at lambda {}", kind.name(), args.lambda);
        let report = run_suite(kind, &config).map_err(fail)?;
        log::debug!(
            "{}: residual {:.3e} against tolerance {:.3e}",
            report.suite,
            report.max_residual,
            report.tol
        );
        pass &= report.pass;
        results.push(
            serde_json::to_value(&report)
                .map_err(|err| format!("cannot serialize report: {err}"))?,
        );
    }
    print_report(&Report {
        command: "verify".into(),
        inputs: json!({
            "suite": args.suite,
            "lambda": args.lambda,
            "atoms": args.atoms,
            "max_degree": args.max_degree,
            "trials": args.trials,
            "tol": args.tol,
            "seed": args.seed,
            "weights": args.weights,
        }),
        results,
        pass,
    })?;
    Ok(pass)
}
