use std::path::PathBuf;
use std::process::ExitCode;

use backflow::certify::ClaimedType;
use backflow::Tolerances;
use clap::{Args, Parser, Subcommand};

mod checks;
mod commands;
mod error;
mod example;
mod report;
mod spec;

use error::CliError;

/// Memory effects of quantum dynamical maps: divisibility, information
/// backflow, elementary maps and witness certificates.
#[derive(Debug, Parser)]
#[command(name = "backflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run checks on a map specification and write a report.
    Classify(ClassifyArgs),
    /// Reproduce a built-in example (ex1, ex2, ex3).
    Example(ExampleArgs),
    /// Evaluate the c-c witness on a two-qubit state or a qubit channel.
    Witness(WitnessArgs),
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Map specification (JSON).
    #[arg(long)]
    pub map: PathBuf,
    /// Comma-separated checks, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "blp,cpdiv,elementary")]
    pub checks: Vec<String>,
    /// Basis for elementary/coherence checks: computational, x, y, z or axis:X,Y,Z. Repeatable.
    #[arg(long)]
    pub basis: Vec<String>,
    /// Restrict to [A, B].
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Grid points on the interval.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Report path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Series CSV path.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Claimed type for the decomposition check: 0, I, II or strong-none.
    #[arg(long, default_value = "strong-none")]
    pub claimed_type: String,
    /// Times s < w for the strong certificate.
    #[arg(long, num_args = 2, value_names = ["S", "W"])]
    pub strong_times: Option<Vec<f64>>,
    /// Directions on the sphere grid of the strong certificate.
    #[arg(long, default_value_t = backflow::certify::DEFAULT_SPHERE_SIZE)]
    pub sphere: usize,
    /// Record wall time per check (reports are then not reproducible).
    #[arg(long)]
    pub timings: bool,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    /// ex1, ex2 or ex3.
    pub name: String,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub t0: Option<f64>,
    /// Output directory for map.json, report.json and series.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub timings: bool,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    /// Two-qubit density matrix (JSON complex matrix, or {"choi": matrix}).
    #[arg(long, conflicts_with_all = ["map", "time"], required_unless_present = "map")]
    pub choi: Option<PathBuf>,
    /// Qubit map specification; needs --time.
    #[arg(long, requires = "time")]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub time: Option<f64>,
    /// Report path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tol: TolArgs,
}

/// Tolerance overrides; flags take precedence over environment variables.
#[derive(Debug, Args)]
pub struct TolArgs {
    /// Choi eigenvalues down to minus this count as positive.
    #[arg(long, env = "BACKFLOW_TOL_EIG")]
    pub tol_eig: Option<f64>,
    /// Trace-preservation residual.
    #[arg(long, env = "BACKFLOW_TOL_CPTP")]
    pub tol_cptp: Option<f64>,
    #[arg(long)]
    pub tol_derivative: Option<f64>,
    #[arg(long)]
    pub tol_cp_divisibility: Option<f64>,
    #[arg(long)]
    pub tol_structure: Option<f64>,
    #[arg(long)]
    pub tol_witness: Option<f64>,
    #[arg(long)]
    pub tol_extremal: Option<f64>,
    #[arg(long)]
    pub tol_kink: Option<f64>,
}

impl TolArgs {
    pub fn resolve(&self) -> Result<Tolerances, CliError> {
        let mut t = Tolerances::default();
        let fields: [(Option<f64>, &mut f64, &str); 8] = [
            (self.tol_eig, &mut t.cptp, "tol-eig"),
            (self.tol_cptp, &mut t.reconstruction, "tol-cptp"),
            (self.tol_derivative, &mut t.derivative, "tol-derivative"),
            (
                self.tol_cp_divisibility,
                &mut t.cp_divisibility,
                "tol-cp-divisibility",
            ),
            (self.tol_structure, &mut t.structure, "tol-structure"),
            (self.tol_witness, &mut t.witness, "tol-witness"),
            (self.tol_extremal, &mut t.extremal_gram, "tol-extremal"),
            (self.tol_kink, &mut t.kink, "tol-kink"),
        ];
        for (value, slot, name) in fields {
            if let Some(v) = value {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(CliError::Input(format!(
                        "--{name} must be a nonnegative number, got {v}"
                    )));
                }
                *slot = v;
            }
        }
        Ok(t)
    }
}

pub fn parse_claimed(s: &str) -> Result<ClaimedType, CliError> {
    s.parse::<ClaimedType>().map_err(|_| {
        CliError::Input(format!(
            "unknown claimed type `{s}` (0, I, II, strong-none)"
        ))
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BACKFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| {
        CliError::Input(format!(
            "BACKFLOW_THREADS must be a positive integer, got `{value}`"
        ))
    })?;
    if n == 0 {
        return Err(CliError::Input("BACKFLOW_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Classify(args) => commands::classify(&args),
        Command::Example(args) => example::run(&args),
        Command::Witness(args) => commands::witness(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
