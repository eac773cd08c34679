//! Command-line front end for the eigensolver: `generate` writes test
//! matrices with a prescribed spectrum, `solve` runs the subspace
//! iteration on a simulated process grid and emits eigenvalues,
//! eigenvectors, and per-kernel profiling CSVs.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chebeig::grid::{Distribution, GridShape};
use chebeig::lanczos::LanczosOptions;
use chebeig::matgen::{generate, read_matrix, write_matrix, SpectrumSpec};
use chebeig::profiler::export_csv;
use chebeig::solver::{solve, QrPolicy, SolveStatus, SolverConfig, TraceLevel};
use chebeig::{Complex64, DenseMatrix, Error, Scalar};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "chebeig", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dense Hermitian matrix with a prescribed spectrum.
    Generate(GenerateArgs),
    /// Compute the lowest eigenpairs of a Hermitian matrix.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScalarKind {
    /// Real double precision.
    R64,
    /// Complex double precision.
    C128,
}

impl ScalarKind {
    fn tag(self) -> &'static str {
        match self {
            ScalarKind::R64 => "r64",
            ScalarKind::C128 => "c128",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QrArg {
    /// Condition-estimate dispatch.
    Auto,
    /// Householder QR every iteration.
    Hhqr,
    /// Single CholeskyQR every iteration.
    Chol1,
    /// CholeskyQR2 every iteration.
    Chol2,
    /// Shifted CholeskyQR2 every iteration.
    Shifted,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistArg {
    Block,
    BlockCyclic,
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower endpoint: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper endpoint: {e}"))?;
    Ok((lo, hi))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (p, q) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected `PxQ`, got `{s}`"))?;
    let p: usize = p.trim().parse().map_err(|e| format!("bad grid rows: {e}"))?;
    let q: usize = q.trim().parse().map_err(|e| format!("bad grid cols: {e}"))?;
    if p == 0 || q == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((p, q))
}

#[derive(Args)]
struct GenerateArgs {
    /// Matrix dimension N.
    #[arg(long)]
    n: usize,
    /// Spectrum interval `lo,hi` (eigenvalues placed uniformly).
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    uniform: (f64, f64),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ScalarKind::R64)]
    scalar: ScalarKind,
    /// Output path (raw column-major little-endian).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix dimension N.
    #[arg(long)]
    n: usize,
    /// Generate the input matrix with this uniform spectrum `lo,hi`.
    #[arg(
        long,
        value_parser = parse_interval,
        allow_hyphen_values = true,
        conflicts_with = "matrix_file",
        required_unless_present = "matrix_file"
    )]
    uniform: Option<(f64, f64)>,
    /// Read the input matrix from a raw matrix file instead.
    #[arg(long)]
    matrix_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScalarKind::R64)]
    scalar: ScalarKind,
    /// Number of desired eigenpairs.
    #[arg(long)]
    nev: usize,
    /// Search-space increment.
    #[arg(long)]
    nex: usize,
    /// Residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Initial Chebyshev degree (even).
    #[arg(long, default_value_t = 20)]
    deg: usize,
    /// Maximal Chebyshev degree (even).
    #[arg(long, default_value_t = 36)]
    deg_max: usize,
    #[arg(long, default_value_t = 25)]
    max_iter: usize,
    /// Disable per-vector degree optimization.
    #[arg(long)]
    no_opt: bool,
    /// QR variant policy.
    #[arg(long, value_enum, default_value_t = QrArg::Auto)]
    qr: QrArg,
    /// Process grid `PxQ`.
    #[arg(long, value_parser = parse_grid, default_value = "1x1")]
    grid: (usize, usize),
    #[arg(long, value_enum, default_value_t = DistArg::Block)]
    dist: DistArg,
    /// Row block size for block-cyclic distribution.
    #[arg(long, default_value_t = 32)]
    mb: usize,
    /// Column block size for block-cyclic distribution.
    #[arg(long, default_value_t = 32)]
    nb: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Eigenvalue output (text, one per line, ascending).
    #[arg(long)]
    out_evals: Option<PathBuf>,
    /// Eigenvector output (raw matrix file, N×nev).
    #[arg(long)]
    out_evecs: Option<PathBuf>,
    /// Per-kernel profiling CSV.
    #[arg(long)]
    stats: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.cmd {
        Cmd::Generate(args) => cmd_generate(args),
        Cmd::Solve(args) => cmd_solve(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify(&err))
        }
    }
}

fn classify(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::FileSize { .. } => EXIT_IO,
        Error::Config(_)
        | Error::UnsupportedRedistribution { .. }
        | Error::Dimension { .. }
        | Error::NotHermitian { .. }
        | Error::InvalidRoot { .. } => EXIT_USAGE,
        _ => EXIT_IO,
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<u8, Error> {
    let spec = SpectrumSpec::uniform(args.uniform.0, args.uniform.1, args.n)?;
    let bytes = match args.scalar {
        ScalarKind::R64 => {
            let m = generate::<f64>(&spec, args.seed);
            write_matrix(&m, &args.out)?;
            m.data().len() * f64::ELEM_BYTES
        }
        ScalarKind::C128 => {
            let m = generate::<Complex64>(&spec, args.seed);
            write_matrix(&m, &args.out)?;
            m.data().len() * Complex64::ELEM_BYTES
        }
    };
    println!(
        "n={} uniform=[{},{}] seed={} scalar={} -> {} ({bytes} bytes)",
        args.n,
        args.uniform.0,
        args.uniform.1,
        args.seed,
        args.scalar.tag(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_solve(args: SolveArgs) -> Result<u8, Error> {
    match args.scalar {
        ScalarKind::R64 => solve_typed::<f64>(&args),
        ScalarKind::C128 => solve_typed::<Complex64>(&args),
    }
}

fn load_matrix<T: Scalar>(args: &SolveArgs) -> Result<DenseMatrix<T>, Error> {
    if let Some(path) = &args.matrix_file {
        return read_matrix::<T>(path, args.n, args.n);
    }
    let (lo, hi) = args.uniform.expect("clap enforces uniform xor matrix-file");
    let spec = SpectrumSpec::uniform(lo, hi, args.n)?;
    Ok(generate::<T>(&spec, args.seed))
}

fn solve_typed<T: Scalar>(args: &SolveArgs) -> Result<u8, Error> {
    let h = load_matrix::<T>(args)?;
    let mut cfg = SolverConfig::new(args.nev, args.nex);
    cfg.tol = args.tol;
    cfg.deg_init = args.deg;
    cfg.deg_max = args.deg_max;
    cfg.max_iter = args.max_iter;
    cfg.opt = !args.no_opt;
    cfg.seed = args.seed;
    cfg.shape = GridShape::new(args.grid.0, args.grid.1);
    cfg.dist = match args.dist {
        DistArg::Block => Distribution::Block,
        DistArg::BlockCyclic => Distribution::BlockCyclic {
            mb: args.mb,
            nb: args.nb,
        },
    };
    cfg.qr_policy = match args.qr {
        QrArg::Auto => QrPolicy::Auto,
        QrArg::Hhqr => QrPolicy::ForceHouseholder,
        QrArg::Chol1 => QrPolicy::ForceChol1,
        QrArg::Chol2 => QrPolicy::ForceChol2,
        QrArg::Shifted => QrPolicy::ForceShifted,
    };
    cfg.lanczos = LanczosOptions::default();
    cfg.trace = TraceLevel::Off;

    let res = solve(&h, &cfg)?;

    if let Some(path) = &args.out_evals {
        let mut text = String::new();
        for lam in &res.lambda {
            text.push_str(&format!("{lam:.16e}\n"));
        }
        std::fs::write(path, text)?;
    }
    if let Some(path) = &args.out_evecs {
        write_matrix(&res.eigenvectors, path)?;
    }
    if let Some(path) = &args.stats {
        export_csv(&res.stats.records, T::KIND_TAG, path)?;
    }

    println!(
        "iters={} matvecs={} locked={} time_s={:.3}",
        res.stats.iterations, res.stats.matvecs, res.stats.locked, res.stats.wall_s
    );
    match res.status {
        SolveStatus::Converged => Ok(EXIT_OK),
        SolveStatus::MaxIterReached => {
            eprintln!(
                "not converged after {} iterations (locked {} of {})",
                res.stats.iterations, res.stats.locked, args.nev
            );
            Ok(EXIT_NOT_CONVERGED)
        }
    }
}
