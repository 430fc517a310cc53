use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use opcalc::harness::{
    cmd_derivative, cmd_remainder, cmd_smooth, cmd_truncate, parse_range, run_suite, write_report, CommandOutput,
    PathSpec, ReportFormat, SuiteConfig,
};
use opcalc::linalg::set_structure_tolerance;
use opcalc::Error;

#[derive(Parser)]
#[command(name = "opcalc", version, about = "Operator calculus on finite-dimensional Hilbert spaces")]
struct Cli {
    /// Base seed; OPCALC_SEED takes precedence when set.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Hermitian/unitary structure tolerance.
    #[arg(long, global = true)]
    tol_structure: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity and finite-difference suite.
    Verify {
        #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8])]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
        orders: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0])]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values = ["trig", "triangle"])]
        families: Vec<String>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol_identity: f64,
        #[arg(long = "tol-fd1", default_value_t = 1e-6)]
        tol_fd1: f64,
        /// Finite-difference tolerance for orders ≥ 2.
        #[arg(long, default_value_t = 1e-4)]
        tol_fd: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Derivative of f along a path, term by term.
    Derivative {
        #[arg(long, default_value = "exp")]
        path: String,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "trig:3")]
        f: String,
        #[arg(long, default_value_t = 0.1)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        norm_scale: f64,
        /// Full path description as JSON; overrides --path/--dim/--norm-scale.
        #[arg(long)]
        path_json: Option<String>,
        #[arg(long, default_value_t = 1e-4)]
        tol_fd: f64,
    },
    /// Taylor remainder under generator scaling.
    Remainder {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0])]
        scales: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value = "trig:3")]
        f: String,
    },
    /// Fejér and Steklov approximation sweep.
    Smooth {
        #[arg(long, default_value = "triangle:2")]
        family: String,
        #[arg(long, default_value = "4,8,16,32,64")]
        j: String,
        /// Derivative order of the sup-distance.
        #[arg(long, default_value_t = 0)]
        k: usize,
    },
    /// Spectral truncation convergence sweep.
    Truncate {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value = "5..50")]
        j: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value = "trig:3")]
        f: String,
    },
}

fn effective_seed(cli_seed: u64) -> Result<u64, Error> {
    match std::env::var("OPCALC_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Error::Config {
                field: "OPCALC_SEED".into(),
                reason: format!("`{text}` is not an unsigned integer"),
            }),
        Err(_) => Ok(cli_seed),
    }
}

fn print(output: CommandOutput) -> io::Result<bool> {
    io::stdout().lock().write_all(output.table.as_bytes())?;
    Ok(output.pass)
}

fn run(cli: Cli) -> Result<bool, Error> {
    let seed = effective_seed(cli.seed)?;
    if let Some(tol) = cli.tol_structure {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Config {
                field: "tol-structure".into(),
                reason: "must be positive".into(),
            });
        }
        set_structure_tolerance(Some(tol));
    }
    match cli.command {
        Command::Verify {
            dims,
            orders,
            p,
            families,
            trials,
            tol_identity,
            tol_fd1,
            tol_fd,
            format,
            out,
            jobs,
        } => {
            let format = match format {
                Format::Csv => ReportFormat::Csv,
                Format::Json => ReportFormat::Json,
            };
            let cfg = SuiteConfig {
                dims,
                orders,
                ps: p,
                families,
                trials,
                seed,
                tol_identity,
                tol_fd1,
                tol_fd,
                format,
                jobs,
            };
            let outcome = run_suite(&cfg)?;
            match out {
                Some(path) => write_report(&outcome.records, format, BufWriter::new(File::create(path)?))?,
                None => write_report(&outcome.records, format, io::stdout().lock())?,
            }
            eprintln!("{} records, {} failed", outcome.records.len(), outcome.failures());
            Ok(outcome.all_pass())
        }
        Command::Derivative {
            path,
            dim,
            k,
            f,
            t,
            norm_scale,
            path_json,
            tol_fd,
        } => {
            let spec = match path_json {
                Some(text) => PathSpec::from_json(&text)?,
                None => PathSpec {
                    kind: path,
                    dim,
                    seed,
                    norm_scale,
                },
            };
            Ok(print(cmd_derivative(&spec, &f, k, t, tol_fd)?)?)
        }
        Command::Remainder { n, p, scales, dim, f } => Ok(print(cmd_remainder(&f, dim, n, p, &scales, seed)?)?),
        Command::Smooth { family, j, k } => Ok(print(cmd_smooth(&family, &parse_range(&j)?, k, seed)?)?),
        Command::Truncate { dim, j, n, p, f } => Ok(print(cmd_truncate(&f, dim, n, p, &parse_range(&j)?, seed)?)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err @ Error::Config { .. }) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
