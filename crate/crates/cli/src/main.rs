//! Command-line front end: build and verify measures, compute extension
//! spectra and summability reports, and run half-line boundary-problem
//! analyses. Outputs are plain JSON/CSV plot data.
//!
//! Exit codes: 0 success/PASS, 1 analytic-check failure, 2 bad arguments,
//! 3 I/O or malformed-file failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use thiserror::Error;

use weyl_spectra::counterexample::{
    build, essential_spectrum_accumulation, verify_counterexample, CounterexampleSpec,
};
use weyl_spectra::extension::{
    condition18_check, extension_eigenvalues, nowhere_dense_witness, ExtensionError, Tau,
    TruncatedModel,
};
use weyl_spectra::herglotz::{nevanlinna_sweep, HerglotzFunction};
use weyl_spectra::io;
use weyl_spectra::sturm_liouville::{
    count_l2_solutions, deficiency_indices, default_eta_ladder,
    fourier_transform, solve_ivp, spectral_measure_estimate, weyl_m, Potential, SLProblem,
    SampledFunction, DEFAULT_T_MATCH,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    BadArgs(String),
    #[error("analytic check failed: {0}")]
    CheckFailed(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::BadArgs(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ExtensionError> for CliError {
    fn from(e: ExtensionError) -> Self {
        match e {
            ExtensionError::WindowOnAtom { .. }
            | ExtensionError::EmptyWindow(..)
            | ExtensionError::NonScalar { .. }
            | ExtensionError::TooFewAtoms { .. } => CliError::BadArgs(e.to_string()),
            other => CliError::BadArgs(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "weyl-spectra", version, about = "Spectral analysis of discrete measure models and half-line boundary problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or verify measure files.
    Measure {
        #[command(subcommand)]
        action: MeasureCmd,
    },
    /// Extension spectra and set diagnostics of truncated models.
    Extension {
        #[command(subcommand)]
        action: ExtensionCmd,
    },
    /// Half-line boundary-problem analyses.
    Sl {
        #[command(subcommand)]
        action: SlCmd,
    },
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Build a counterexample measure file.
    Build(BuildArgs),
    /// Verify the certificates of a built measure file.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, allow_negative_numbers = true)]
    mu1: f64,
    /// Upper interval end; "inf" selects the unbounded construction.
    #[arg(long, allow_negative_numbers = true)]
    mu2: String,
    /// Number of accumulation points.
    #[arg(long = "K")]
    k: usize,
    /// Satellites per accumulation point.
    #[arg(long = "J")]
    j: usize,
    #[arg(long, default_value_t = 1)]
    defect: usize,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random samples for the positivity/symmetry sweep.
    #[arg(long, default_value_t = 200)]
    nevanlinna_samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum ExtensionCmd {
    /// Eigenvalues of the tau-extension of a truncated model (CSV).
    Eigs(EigsArgs),
    /// Summability report sum c_k/(l_k - lambda)^2 (JSON).
    Condition18(Cond18Args),
    /// Nowhere-density gap witnesses for an extension spectrum (JSON).
    Gaps(GapsArgs),
}

#[derive(Args)]
struct EigsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Extension parameter; "inf" selects the multiplication operator.
    #[arg(long, default_value = "0", allow_negative_numbers = true)]
    tau: String,
    /// Search window (two values); defaults to a span padding the atoms.
    #[arg(long, num_args = 2, allow_negative_numbers = true)]
    window: Option<Vec<f64>>,
    /// Number of atoms kept from the file (all by default).
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Cond18Args {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    /// Which point set carries the weights: the measure's atoms
    /// ("satellites") or the accumulation points from the meta block.
    #[arg(long, default_value = "satellites")]
    points: String,
    #[arg(long, default_value_t = 1e12)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GapsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "0", allow_negative_numbers = true)]
    tau: String,
    #[arg(long, num_args = 2, allow_negative_numbers = true)]
    window: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-3)]
    resolution: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SlCmd {
    /// Integrate one initial value problem.
    Ivp(IvpArgs),
    /// Count square-integrable solutions.
    CountL2(CountArgs),
    /// Deficiency indices (counts at lambda = +/- i).
    Deficiency(DeficiencyArgs),
    /// Titchmarsh-Weyl m-function at a nonreal point.
    M(MArgs),
    /// Spectral mass of an interval by Stieltjes inversion.
    Specmeasure(SpecMeasureArgs),
    /// Generalized Fourier transform of a sampled function.
    Transform(TransformArgs),
}

#[derive(Args)]
struct PotentialArgs {
    /// Potential: `expr:<formula>` or a path to a potential JSON file.
    #[arg(long, default_value = "expr:0")]
    potential: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IvpArgs {
    #[command(flatten)]
    common: PotentialArgs,
    /// Spectral parameter (real and optional imaginary part).
    #[arg(long, num_args = 1..=2, required = true, allow_negative_numbers = true)]
    lambda: Vec<f64>,
    #[arg(long, num_args = 2, default_values_t = [1.0, 0.0], allow_negative_numbers = true)]
    init: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    common: PotentialArgs,
    #[arg(long, num_args = 1..=2, required = true, allow_negative_numbers = true)]
    lambda: Vec<f64>,
    #[arg(long, num_args = 1.., default_values_t = [10.0, 20.0, 40.0, 80.0])]
    t_ladder: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct DeficiencyArgs {
    #[command(flatten)]
    common: PotentialArgs,
    #[arg(long, num_args = 1.., default_values_t = [10.0, 20.0, 40.0, 80.0])]
    t_ladder: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct MArgs {
    #[command(flatten)]
    common: PotentialArgs,
    #[arg(long, num_args = 2, required = true, allow_negative_numbers = true)]
    z: Vec<f64>,
    #[arg(long, num_args = 1.., default_values_t = [10.0, 20.0, 40.0])]
    t_ladder: Vec<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct SpecMeasureArgs {
    #[command(flatten)]
    common: PotentialArgs,
    #[arg(long, num_args = 2, required = true, allow_negative_numbers = true)]
    window: Vec<f64>,
    #[arg(long, num_args = 1..)]
    eta_ladder: Option<Vec<f64>>,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_T_MATCH)]
    t_match: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    common: PotentialArgs,
    /// Path to a JSON array of [t, f] samples of the input function.
    #[arg(long)]
    function: PathBuf,
    /// Evaluation points (at least one).
    #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
    lambda_grid: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(e.to_string())),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout();
            let res = if text.ends_with('\n') {
                write!(stdout, "{text}")
            } else {
                writeln!(stdout, "{text}")
            };
            match res {
                Ok(()) => Ok(()),
                // A closed pipe downstream is not our failure.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(CliError::Io(e.to_string())),
            }
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_tau(s: &str) -> Result<Tau, CliError> {
    if s == "inf" || s == "+inf" {
        return Ok(Tau::Infinity);
    }
    s.parse::<f64>()
        .map(Tau::Finite)
        .map_err(|_| CliError::BadArgs(format!("bad tau '{s}'")))
}

fn parse_mu2(s: &str) -> Result<f64, CliError> {
    if s == "inf" || s == "+inf" {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>()
        .map_err(|_| CliError::BadArgs(format!("bad mu2 '{s}'")))
}

fn load_potential(spec: &str) -> Result<Potential, CliError> {
    if let Some(formula) = spec.strip_prefix("expr:") {
        return Potential::parse(formula).map_err(|e| CliError::BadArgs(e.to_string()));
    }
    io::potential_from_str(&read_file(&PathBuf::from(spec))?).map_err(CliError::from)
}

fn load_model(path: &PathBuf, truncation: Option<usize>) -> Result<TruncatedModel, CliError> {
    let text = read_file(path)?;
    let phi = io::herglotz_from_str(&text)?;
    let n = truncation.unwrap_or(phi.measure.len());
    // Attach accumulation metadata when the file carries it.
    let generator = io::counterexample_from_str(&text)
        .ok()
        .map(|cm| cm.accumulation_points);
    let model = TruncatedModel::new(&phi.measure, n, phi.c0.clone(), phi.c1.clone())?;
    Ok(match generator {
        Some(pts) => model.with_generator_accumulation(pts),
        None => model,
    })
}

fn default_window(model: &TruncatedModel) -> (f64, f64) {
    let atoms = model.measure.atoms();
    let lo = atoms.first().map(|a| a.t).unwrap_or(0.0);
    let hi = atoms.last().map(|a| a.t).unwrap_or(1.0);
    let pad = (hi - lo).max(1.0);
    (lo - pad, hi + pad)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Measure { action } => match action {
            MeasureCmd::Build(args) => {
                let spec = CounterexampleSpec {
                    mu1: args.mu1,
                    mu2: parse_mu2(&args.mu2)?,
                    k_points: args.k,
                    j_satellites: args.j,
                    defect: args.defect,
                };
                let cm = build(&spec).map_err(|e| CliError::BadArgs(e.to_string()))?;
                write_out(&args.out, &io::counterexample_to_string(&cm))
            }
            MeasureCmd::Verify(args) => {
                let cm = io::counterexample_from_str(&read_file(&args.input)?)?;
                let report = verify_counterexample(&cm);
                let sweep = nevanlinna_sweep(
                    &HerglotzFunction::pure(cm.measure.clone()),
                    args.nevanlinna_samples,
                    args.seed,
                );
                let accumulation = essential_spectrum_accumulation(&cm, 1e-3);
                let doc = serde_json::json!({
                    "verify": report,
                    "nevanlinna_sweep": sweep,
                    "detected_accumulation_points": accumulation,
                });
                write_out(&args.out, &serde_json::to_string_pretty(&doc).unwrap())?;
                if report.pass && sweep.pass {
                    Ok(())
                } else {
                    Err(CliError::CheckFailed("verification report has failures".into()))
                }
            }
        },
        Command::Extension { action } => match action {
            ExtensionCmd::Eigs(args) => {
                let model = load_model(&args.input, args.truncation)?;
                let tau = parse_tau(&args.tau)?;
                let window = match &args.window {
                    Some(w) => (w[0], w[1]),
                    None => default_window(&model),
                };
                let spectrum = extension_eigenvalues(&model, tau, window)?;
                let mut csv = String::from("tau,lambda,left_bracket,right_bracket,residual\n");
                for i in 0..spectrum.eigenvalues.len() {
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        spectrum.tau,
                        spectrum.eigenvalues[i],
                        spectrum.brackets[i].0,
                        spectrum.brackets[i].1,
                        spectrum.residuals[i]
                    ));
                }
                write_out(&args.out, &csv)
            }
            ExtensionCmd::Condition18(args) => {
                let text = read_file(&args.input)?;
                let points = match args.points.as_str() {
                    "satellites" => io::herglotz_from_str(&text)?.measure,
                    "accumulation" => {
                        let cm = io::counterexample_from_str(&text)?;
                        cm.accumulation_measure()
                            .map_err(|e| CliError::BadArgs(e.to_string()))?
                    }
                    other => {
                        return Err(CliError::BadArgs(format!(
                            "--points must be 'satellites' or 'accumulation', got '{other}'"
                        )))
                    }
                };
                let n = points.len();
                let report = condition18_check(&points, args.lambda, n, args.threshold)?;
                write_out(&args.out, &serde_json::to_string_pretty(&report).unwrap())
            }
            ExtensionCmd::Gaps(args) => {
                let model = load_model(&args.input, None)?;
                let tau = parse_tau(&args.tau)?;
                let window = match &args.window {
                    Some(w) => (w[0], w[1]),
                    None => default_window(&model),
                };
                let spectrum = extension_eigenvalues(&model, tau, window)?;
                let report = nowhere_dense_witness(&spectrum.eigenvalues, window, args.resolution);
                write_out(&args.out, &serde_json::to_string_pretty(&report).unwrap())
            }
        },
        Command::Sl { action } => run_sl(action),
    }
}

fn complex_arg(v: &[f64]) -> Complex64 {
    Complex64::new(v[0], v.get(1).copied().unwrap_or(0.0))
}

struct CsvRows(String);

impl CsvRows {
    fn new() -> Self {
        CsvRows("lambda_re,lambda_im,quantity,value_re,value_im,error\n".into())
    }

    fn push(&mut self, lambda: Complex64, quantity: &str, value: Complex64, error: f64) {
        self.0.push_str(&format!(
            "{},{},{},{},{},{}\n",
            lambda.re, lambda.im, quantity, value.re, value.im, error
        ));
    }
}

fn sl_problem(common: &PotentialArgs) -> Result<SLProblem, CliError> {
    Ok(SLProblem::new(load_potential(&common.potential)?, common.theta))
}

fn map_sl_err(e: weyl_spectra::sturm_liouville::SlError) -> CliError {
    use weyl_spectra::sturm_liouville::SlError as E;
    match e {
        E::InvalidParameter(_) | E::Expr(_) => CliError::BadArgs(e.to_string()),
        other => CliError::CheckFailed(other.to_string()),
    }
}

fn run_sl(action: SlCmd) -> Result<(), CliError> {
    match action {
        SlCmd::Ivp(args) => {
            let problem = sl_problem(&args.common)?;
            let lambda = complex_arg(&args.lambda);
            let init = (
                Complex64::new(args.init[0], 0.0),
                Complex64::new(args.init[1], 0.0),
            );
            let sol =
                solve_ivp(&problem, lambda, init, args.t_end, args.tol).map_err(map_sl_err)?;
            let mut csv = CsvRows::new();
            let n = sol.grid.len();
            let stride = (n / 10).max(1);
            for i in (0..n).step_by(stride).chain([n - 1]) {
                let t = sol.grid[i];
                csv.push(lambda, &format!("y@{t}"), sol.y[i], sol.error_estimate);
                csv.push(lambda, &format!("dy@{t}"), sol.dy[i], sol.error_estimate);
            }
            csv.push(
                lambda,
                "wronskian_drift",
                Complex64::new(sol.wronskian_drift, 0.0),
                0.0,
            );
            write_out(&args.common.out, &csv.0)
        }
        SlCmd::CountL2(args) => {
            let problem = sl_problem(&args.common)?;
            let lambda = complex_arg(&args.lambda);
            let count = count_l2_solutions(&problem, lambda, &args.t_ladder, args.tol)
                .map_err(map_sl_err)?;
            let mut csv = CsvRows::new();
            csv.push(lambda, "count", Complex64::new(count.count as f64, 0.0), 0.0);
            for row in &count.table {
                if let Some(r) = row.radius {
                    csv.push(lambda, &format!("radius@{}", row.t), Complex64::new(r, 0.0), 0.0);
                }
                if let (Some(qmin), Some(qmax)) = (row.q_min, row.q_max) {
                    csv.push(lambda, &format!("q_min@{}", row.t), Complex64::new(qmin, 0.0), 0.0);
                    csv.push(lambda, &format!("q_max@{}", row.t), Complex64::new(qmax, 0.0), 0.0);
                }
            }
            csv.push(
                lambda,
                "wronskian_drift",
                Complex64::new(count.wronskian_drift, 0.0),
                0.0,
            );
            write_out(&args.common.out, &csv.0)
        }
        SlCmd::Deficiency(args) => {
            let problem = sl_problem(&args.common)?;
            let d = deficiency_indices(&problem, &args.t_ladder, args.tol).map_err(map_sl_err)?;
            let mut csv = CsvRows::new();
            csv.push(
                Complex64::new(0.0, 1.0),
                "n_plus",
                Complex64::new(d.n_plus as f64, 0.0),
                0.0,
            );
            csv.push(
                Complex64::new(0.0, -1.0),
                "n_minus",
                Complex64::new(d.n_minus as f64, 0.0),
                0.0,
            );
            write_out(&args.common.out, &csv.0)
        }
        SlCmd::M(args) => {
            let problem = sl_problem(&args.common)?;
            let z = complex_arg(&args.z);
            let m = weyl_m(&problem, z, &args.t_ladder, args.tol).map_err(map_sl_err)?;
            let mut csv = CsvRows::new();
            csv.push(z, "m", m.value, m.disk_radius);
            for d in &m.disks {
                csv.push(
                    z,
                    &format!("disk_radius@{}", d.t),
                    Complex64::new(d.radius, 0.0),
                    0.0,
                );
            }
            csv.push(z, "wronskian_drift", Complex64::new(m.wronskian_drift, 0.0), 0.0);
            write_out(&args.common.out, &csv.0)
        }
        SlCmd::Specmeasure(args) => {
            let problem = sl_problem(&args.common)?;
            let ladder = args.eta_ladder.clone().unwrap_or_else(default_eta_ladder);
            let (a, b) = (args.window[0], args.window[1]);
            let sm = spectral_measure_estimate(&problem, (a, b), &ladder, args.grid, args.t_match, args.tol)
                .map_err(map_sl_err)?;
            let mut csv = CsvRows::new();
            csv.push(
                Complex64::new(a, 0.0),
                &format!("mass({a},{b})"),
                Complex64::new(sm.value, 0.0),
                sm.error,
            );
            for (eta, v) in &sm.ladder {
                csv.push(
                    Complex64::new(a, *eta),
                    &format!("mass@eta={eta}"),
                    Complex64::new(*v, 0.0),
                    0.0,
                );
            }
            write_out(&args.common.out, &csv.0)
        }
        SlCmd::Transform(args) => {
            let problem = sl_problem(&args.common)?;
            let samples: Vec<[f64; 2]> = serde_json::from_str(&read_file(&args.function)?)
                .map_err(|e| CliError::Io(format!("bad function file: {e}")))?;
            let f = SampledFunction::new(
                samples.iter().map(|s| s[0]).collect(),
                samples.iter().map(|s| s[1]).collect(),
            )
            .map_err(map_sl_err)?;
            let out =
                fourier_transform(&problem, &f, &args.lambda_grid, args.tol).map_err(map_sl_err)?;
            let mut csv = CsvRows::new();
            for p in out {
                csv.push(Complex64::new(p.lambda, 0.0), "Vf", p.value, p.error);
            }
            write_out(&args.common.out, &csv.0)
        }
    }
}
