mod config;

use clap::{Parser, Subcommand, ValueEnum};
use config::ConfigFile;
use hankel_tw::dpp::{bessel_dpp, sample_many, validate_dpp, verify_dpp, SAMPLER_TAG};
use hankel_tw::factorize::{builtin_system, factorize_system, stable_vectors, SystemParams};
use hankel_tw::linalg::{read_matrix_csv, sym_eigen, write_matrix_csv, write_sequence_csv, SymMatrix, DEFAULT_EIG_TOL};
use hankel_tw::models::{almost_mathieu_model, bessel_model, laguerre_model, mathieu_model, ModelReport, T_INFTY_STEPS};
use hankel_tw::report::{write_samples_csv, Report};
use hankel_tw::specfun::GOLDEN_FREQ;
use hankel_tw::spectra::{decay_fit, multiplicity_profile, DecayFit, MultiplicityProfile};
use hankel_tw::suite::{run_suite, SuiteOptions, DEFAULT_SEED};
use hankel_tw::Error;
use serde::Serialize;
use serde_json::Value;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hankel-tw", version, about = "Integrable kernels from transfer recurrences, their Hankel factorizations and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discrete Bessel kernel (default theta 1, size 32, tail 96).
    Bessel(Opts),
    /// Laguerre-type kernel with Toeplitz remainder (theta 1, size 64, tail 1e6).
    Laguerre(Opts),
    /// Mathieu Fourier kernel (beta 1, branch 0, size 32, tail 64).
    Mathieu(Opts),
    /// Almost Mathieu eigenvector kernel (lambda 10, golden freq, phase 0.3, size 48).
    AlmostMathieu(Opts),
    /// Certificate and Hankel-square check for a built-in transfer system.
    Factorize(Opts),
    /// Eigenvalues, decay fit and multiplicities of a model kernel or a CSV matrix.
    Spectrum(Opts),
    /// Draw samples from the discrete Bessel point process.
    DppSample(Opts),
    /// Monte Carlo checks of the discrete Bessel point process.
    DppVerify(Opts),
    /// Run the full acceptance suite.
    VerifyAll(Opts),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(clap::Args, Clone, Debug)]
struct Opts {
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Frequency of the almost Mathieu potential.
    #[arg(long)]
    freq: Option<f64>,
    /// Phase of the almost Mathieu potential.
    #[arg(long)]
    phase: Option<f64>,
    /// Mathieu characteristic branch (0 = lowest even).
    #[arg(long)]
    branch: Option<usize>,
    /// Kernel size N, or DPP window.
    #[arg(long)]
    size: Option<usize>,
    /// Extra symbol entries beyond 2N - 1.
    #[arg(long)]
    tail: Option<usize>,
    /// Tolerance for `factorize`; cluster tolerance for `spectrum`.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials for the DPP commands.
    #[arg(long)]
    trials: Option<usize>,
    /// Model whose kernel `spectrum` analyses.
    #[arg(long)]
    model: Option<String>,
    /// Transfer system for `factorize` (bessel, laguerre, mathieu, identity).
    #[arg(long)]
    system: Option<String>,
    /// Matrix CSV for `spectrum` instead of a model.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Reduced sizes (N = 16) for `verify-all`.
    #[arg(long)]
    quick: bool,
    /// Leave timestamps and timings out of the report.
    #[arg(long)]
    deterministic: bool,
    /// key = value file; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Options after merging the config file.
#[derive(Clone)]
struct Run {
    theta: Option<f64>,
    beta: Option<f64>,
    lambda: Option<f64>,
    freq: Option<f64>,
    phase: Option<f64>,
    branch: Option<usize>,
    size: Option<usize>,
    tail: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    trials: Option<usize>,
    model: Option<String>,
    system: Option<String>,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    format: Option<Format>,
    quick: bool,
    deterministic: bool,
}

impl Run {
    fn resolve(o: Opts) -> Result<Run, String> {
        let c = match &o.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(Run {
            theta: c.pick(o.theta, "theta")?,
            beta: c.pick(o.beta, "beta")?,
            lambda: c.pick(o.lambda, "lambda")?,
            freq: c.pick(o.freq, "freq")?,
            phase: c.pick(o.phase, "phase")?,
            branch: c.pick(o.branch, "branch")?,
            size: c.pick(o.size, "size")?,
            tail: c.pick(o.tail, "tail")?,
            tol: c.pick(o.tol, "tol")?,
            seed: c.pick(o.seed, "seed")?,
            trials: c.pick(o.trials, "trials")?,
            model: c.pick(o.model, "model")?,
            system: c.pick(o.system, "system")?,
            input: c.pick(o.input, "input")?,
            out: c.pick(o.out, "out")?,
            format: c.pick(o.format, "format")?,
            quick: c.switch(o.quick, "quick")?,
            deterministic: c.switch(o.deterministic, "deterministic")?,
        })
    }
}

/// What a command produced: the JSON report and, where it has one, a CSV view.
struct Output {
    report: Report,
    csv: Option<Vec<u8>>,
    default_format: Format,
}

impl Output {
    fn json(report: Report) -> Self {
        Output { report, csv: None, default_format: Format::Json }
    }

    fn with_csv(report: Report, csv: Vec<u8>) -> Self {
        Output { report, csv: Some(csv), default_format: Format::Json }
    }
}

enum Failure {
    Usage(String),
    Model(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl Failure {
    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Model(e) => e.to_string(),
        }
    }

    /// 2 for bad input, 1 for a computation that ran but failed a check.
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Model(e) => match e {
                Error::InvalidParameter(_)
                | Error::InvalidIndexSet(_)
                | Error::NotLocalized { .. }
                | Error::TooLarge { .. }
                | Error::DimensionMismatch { .. }
                | Error::NotSymmetric { .. }
                | Error::SpectrumOutOfBand(_)
                | Error::TailNotNegligible { .. }
                | Error::SymbolTooShort { .. }
                | Error::Io(_) => 2,
                _ => 1,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, opts) = match cli.command {
        Command::Bessel(o) => ("bessel", o),
        Command::Laguerre(o) => ("laguerre", o),
        Command::Mathieu(o) => ("mathieu", o),
        Command::AlmostMathieu(o) => ("almost-mathieu", o),
        Command::Factorize(o) => ("factorize", o),
        Command::Spectrum(o) => ("spectrum", o),
        Command::DppSample(o) => ("dpp-sample", o),
        Command::DppVerify(o) => ("dpp-verify", o),
        Command::VerifyAll(o) => ("verify-all", o),
    };
    let run = match Run::resolve(opts) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match dispatch(name, &run) {
        Ok(out) => {
            let pass = out.report.pass;
            if let Err(e) = emit(&run, out) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            eprintln!("{name}: {}", if pass { "PASS" } else { "FAIL" });
            ExitCode::from(if pass { 0 } else { 1 })
        }
        Err(f) => {
            let msg = f.message();
            eprintln!("error: {msg}");
            // A report is still written when there is somewhere to put it.
            if run.out.is_some() {
                let body = serde_json::json!({ "error": msg });
                if let Ok(report) = Report::new(name, &body, false) {
                    let out = Output::json(stamp(report, &run));
                    let _ = emit(&Run { format: Some(Format::Json), ..run.clone() }, out);
                }
            }
            ExitCode::from(f.code())
        }
    }
}

fn emit(run: &Run, out: Output) -> Result<(), String> {
    let bytes = match (run.format.or(Some(out.default_format)), out.csv) {
        (Some(Format::Csv), Some(csv)) => csv,
        (Some(Format::Csv), None) => return Err("this command has no CSV output; use --format json".into()),
        (_, _) => out.report.to_json().map_err(|e| e.to_string())?.into_bytes(),
    };
    match &run.out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    }
}

fn stamp(r: Report, run: &Run) -> Report {
    if run.deterministic {
        r
    } else {
        r.stamped()
    }
}

fn model_output(name: &str, r: ModelReport, run: &Run, config: Vec<(&str, Value)>) -> Result<Output, Failure> {
    let mut csv = Vec::new();
    let tag = format!("{name},N={}", r.n);
    write_matrix_csv(&mut csv, r.kernel.matrix.as_matrix(), &tag)?;
    let mut report = Report::new(name, &r, r.pass)?;
    for (k, v) in config {
        report = report.with_config(k, v);
    }
    Ok(Output::with_csv(stamp(report, run), csv))
}

fn dispatch(name: &str, run: &Run) -> Result<Output, Failure> {
    match name {
        "bessel" => {
            let (theta, n, tail) = (run.theta.unwrap_or(1.0), run.size.unwrap_or(32), run.tail.unwrap_or(96));
            let r = bessel_model(theta, n, tail)?;
            model_output(name, r, run, vec![("theta", theta.into()), ("size", n.into()), ("tail", tail.into())])
        }
        "laguerre" => {
            let (theta, n, tail) = (run.theta.unwrap_or(1.0), run.size.unwrap_or(64), run.tail.unwrap_or(1_000_000));
            let r = laguerre_model(theta, n, tail, T_INFTY_STEPS)?;
            model_output(name, r, run, vec![("theta", theta.into()), ("size", n.into()), ("tail", tail.into())])
        }
        "mathieu" => {
            let (beta, branch) = (run.beta.unwrap_or(1.0), run.branch.unwrap_or(0));
            let (n, tail) = (run.size.unwrap_or(32), run.tail.unwrap_or(64));
            let r = mathieu_model(beta, branch, n, tail)?;
            let cfg = vec![("beta", beta.into()), ("branch", branch.into()), ("size", n.into()), ("tail", tail.into())];
            model_output(name, r, run, cfg)
        }
        "almost-mathieu" => {
            let (lambda, freq, phase) = (run.lambda.unwrap_or(10.0), run.freq.unwrap_or(GOLDEN_FREQ), run.phase.unwrap_or(0.3));
            let n = run.size.unwrap_or(48);
            let tail = run.tail.unwrap_or(2 * n);
            let r = almost_mathieu_model(lambda, freq, phase, n, tail)?;
            let cfg = vec![
                ("lambda", lambda.into()),
                ("freq", freq.into()),
                ("phase", phase.into()),
                ("size", n.into()),
                ("tail", tail.into()),
            ];
            model_output(name, r, run, cfg)
        }
        "factorize" => factorize(run),
        "spectrum" => spectrum(run),
        "dpp-sample" => dpp_sample(run),
        "dpp-verify" => {
            let (theta, window) = (run.theta.unwrap_or(1.0), run.size.unwrap_or(48));
            let (trials, seed) = (run.trials.unwrap_or(200_000), run.seed.unwrap_or(DEFAULT_SEED));
            let v = verify_dpp(theta, window, trials, seed)?;
            let report = Report::new(name, &v, v.pass)?
                .with_config("theta", theta)
                .with_config("size", window)
                .with_config("trials", trials)
                .with_config("seed", seed);
            Ok(Output::json(stamp(report, run)))
        }
        "verify-all" => {
            let opts = SuiteOptions { quick: run.quick, seed: run.seed.unwrap_or(DEFAULT_SEED), deterministic: run.deterministic };
            let s = run_suite(&opts)?;
            for c in &s.criteria {
                eprintln!("criterion {:>2} {:<38} {}", c.id, c.name, if c.pass { "PASS" } else { "FAIL" });
                for f in &c.failures {
                    eprintln!("    failed: {f}");
                }
            }
            let report = Report::new(name, &s, s.pass)?
                .with_config("quick", opts.quick)
                .with_config("seed", opts.seed);
            Ok(Output::json(stamp(report, run)))
        }
        other => Err(Failure::Usage(format!("unknown command {other}"))),
    }
}

fn factorize(run: &Run) -> Result<Output, Failure> {
    let system = run.system.clone().unwrap_or_else(|| "bessel".into());
    let p = SystemParams { theta: run.theta.unwrap_or(1.0), beta: run.beta.unwrap_or(1.0), branch: run.branch.unwrap_or(0) };
    let (n, tail, tol) = (run.size.unwrap_or(32), run.tail.unwrap_or(96), run.tol.unwrap_or(1e-10));
    if !(tol > 0.0) {
        return Err(Failure::Usage(format!("tol must be positive, got {tol}")));
    }
    let sys = builtin_system(&system, p)?;
    let a = stable_vectors(&system, p, 2 * n.max(2) - 1 + tail)?;
    let f = factorize_system(&sys, a, n, tail, tol)?;
    let mut csv = Vec::new();
    write_sequence_csv(&mut csv, f.symbol.iter().enumerate().map(|(i, v)| (i as i64 + 1, *v)))?;
    let report = Report::new("factorize", &f, f.pass)?
        .with_config("system", system)
        .with_config("theta", p.theta)
        .with_config("beta", p.beta)
        .with_config("branch", p.branch)
        .with_config("size", n)
        .with_config("tail", tail)
        .with_config("tol", tol);
    Ok(Output::with_csv(stamp(report, run), csv))
}

#[derive(Serialize)]
struct SpectrumResult {
    source: String,
    dim: usize,
    eigenvalues: Vec<f64>,
    singular_numbers: Vec<f64>,
    trace: f64,
    eigen_residual: f64,
    orthogonality: f64,
    decay_fit: Option<DecayFit>,
    decay_fit_skipped: Option<String>,
    multiplicities: MultiplicityProfile,
    pass: bool,
}

fn spectrum(run: &Run) -> Result<Output, Failure> {
    let (kernel, source) = match &run.input {
        Some(path) => {
            let f = std::fs::File::open(path).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
            let (m, tag) = read_matrix_csv(std::io::BufReader::new(f))?;
            (SymMatrix::try_from_matrix(m, 1e-12)?, format!("file:{} ({tag})", path.display()))
        }
        None => {
            let model = run.model.clone().unwrap_or_else(|| "bessel".into());
            let n = run.size;
            let r = match model.as_str() {
                "bessel" => bessel_model(run.theta.unwrap_or(1.0), n.unwrap_or(32), run.tail.unwrap_or(96))?,
                "laguerre" => laguerre_model(run.theta.unwrap_or(1.0), n.unwrap_or(64), run.tail.unwrap_or(1_000_000), T_INFTY_STEPS)?,
                "mathieu" => mathieu_model(run.beta.unwrap_or(1.0), run.branch.unwrap_or(0), n.unwrap_or(32), run.tail.unwrap_or(64))?,
                "almost-mathieu" => {
                    let n = n.unwrap_or(48);
                    almost_mathieu_model(
                        run.lambda.unwrap_or(10.0),
                        run.freq.unwrap_or(GOLDEN_FREQ),
                        run.phase.unwrap_or(0.3),
                        n,
                        run.tail.unwrap_or(2 * n),
                    )?
                }
                other => {
                    return Err(Failure::Usage(format!(
                        "unknown model '{other}' (expected bessel, laguerre, mathieu or almost-mathieu)"
                    )))
                }
            };
            (r.kernel.matrix, format!("model:{model}"))
        }
    };
    let tol = run.tol.unwrap_or(1e-8);
    let eig = sym_eigen(&kernel, DEFAULT_EIG_TOL)?;
    let singular = eig.singular_numbers();
    let (decay, skipped) = match decay_fit(&singular) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let norm = singular.first().copied().unwrap_or(0.0);
    let result = SpectrumResult {
        source: source.clone(),
        dim: kernel.dim(),
        multiplicities: multiplicity_profile(&eig.eigenvalues, tol),
        trace: kernel.trace(),
        eigen_residual: eig.residual,
        orthogonality: eig.orthogonality,
        pass: eig.residual <= 1e-10 * norm.max(1.0) && eig.orthogonality <= 1e-10,
        eigenvalues: eig.eigenvalues,
        singular_numbers: singular,
        decay_fit: decay,
        decay_fit_skipped: skipped,
    };
    let mut csv = Vec::new();
    write_sequence_csv(&mut csv, result.eigenvalues.iter().enumerate().map(|(i, v)| (i as i64 + 1, *v)))?;
    let report = Report::new("spectrum", &result, result.pass)?.with_config("source", source).with_config("tol", tol);
    Ok(Output::with_csv(stamp(report, run), csv))
}

#[derive(Serialize)]
struct SampleResult {
    theta: f64,
    window: usize,
    trials: usize,
    seed: u64,
    algorithm: &'static str,
    expected_count: f64,
    mean_count: f64,
    samples: Vec<Vec<usize>>,
}

fn dpp_sample(run: &Run) -> Result<Output, Failure> {
    let (window, trials, seed) = (run.size.unwrap_or(48), run.trials.unwrap_or(1000), run.seed.unwrap_or(DEFAULT_SEED));
    let (dpp, theta) = match &run.input {
        Some(path) => {
            let f = std::fs::File::open(path).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
            let (m, _) = read_matrix_csv(std::io::BufReader::new(f))?;
            (validate_dpp(SymMatrix::try_from_matrix(m, 1e-12)?, 1)?, f64::NAN)
        }
        None => {
            let theta = run.theta.unwrap_or(1.0);
            (bessel_dpp(theta, window)?, theta)
        }
    };
    let samples = sample_many(&dpp, trials, seed);
    let mut csv = Vec::new();
    write_samples_csv(&mut csv, &samples)?;
    let mean_count = samples.iter().map(|s| s.len()).sum::<usize>() as f64 / trials.max(1) as f64;
    let result = SampleResult {
        theta,
        window: dpp.dim(),
        trials,
        seed,
        algorithm: SAMPLER_TAG,
        expected_count: dpp.expected_count(),
        mean_count,
        samples,
    };
    let report = Report::new("dpp-sample", &result, true)?.with_config("seed", seed).with_config("trials", trials);
    // Sample dumps default to CSV.
    Ok(Output { report: stamp(report, run), csv: Some(csv), default_format: Format::Csv })
}
