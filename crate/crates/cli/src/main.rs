//! `singosc` — numerical toolkit for the singular oscillator
//! (|u'|^l u')' + c|u'|^alpha u' + d|u|^beta u = 0.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use singosc_cli::commands::{self, EmpiricalRun, Series};
use singosc_cli::json::Json;
use singosc_cli::CliError;

#[derive(Parser)]
#[command(
    name = "singosc",
    version,
    about = "Simulate, classify and certify solutions of (|u'|^l u')' + c|u'|^a u' + d|u|^b u = 0"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct ParamArgs {
    /// Exponent of the singular leading term (l >= 0)
    #[arg(long)]
    l: f64,
    /// Damping exponent (> 0)
    #[arg(long)]
    alpha: f64,
    /// Stiffness exponent (> 0)
    #[arg(long)]
    beta: f64,
    /// Damping coefficient (> 0)
    #[arg(long)]
    c: f64,
    /// Stiffness coefficient (> 0)
    #[arg(long)]
    d: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one trajectory and emit CSV (t,u,du,p,E)
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        u0: f64,
        #[arg(long)]
        du0: f64,
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long, default_value_t = commands::default_tol())]
        tol: f64,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Theoretical regime of the parameters, optionally checked empirically
    #[command(allow_negative_numbers = true)]
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        /// Also integrate and classify the resulting trajectory
        #[arg(long)]
        empirical: bool,
        #[arg(long, requires = "empirical")]
        u0: Option<f64>,
        #[arg(long, requires = "empirical")]
        du0: Option<f64>,
        #[arg(long = "t-end", default_value_t = commands::default_t_end())]
        t_end: f64,
        #[arg(long, default_value_t = commands::default_tol())]
        tol: f64,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Fit a power law to a stored trajectory column over a window
    #[command(allow_negative_numbers = true)]
    Rate {
        /// Trajectory CSV produced by `simulate`
        #[arg(long)]
        traj: PathBuf,
        /// Column to fit: E, u or du (u and du in absolute value)
        #[arg(long, value_parser = parse_series)]
        series: Series,
        /// Fit window as LO,HI
        #[arg(long, value_parser = parse_window)]
        window: (f64, f64),
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Construct a fast solution by the integral fixed point (c = d = 1)
    #[command(allow_negative_numbers = true)]
    ConstructFast {
        #[arg(long)]
        l: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Initial value v(1); the literal `cap` picks the admissible maximum
        #[arg(long, default_value = "cap")]
        phi: String,
        #[arg(long, default_value_t = 1e4)]
        tmax: f64,
        /// Source strength; AUTO picks half the admissible maximum
        #[arg(long = "eps-fp", default_value = "AUTO")]
        eps_fp: String,
        /// Fixed-point iteration cap
        #[arg(long = "max-iter", default_value_t = 50)]
        max_iter: usize,
        /// Fixed-point sup-change tolerance
        #[arg(long = "fp-tol", default_value_t = 1e-8)]
        fp_tol: f64,
        /// Write {prefix}v.csv, {prefix}u.csv, {prefix}du.csv
        #[arg(long = "out-prefix")]
        out_prefix: Option<String>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Certify the invariant sector S_{eps,M} and optionally simulate it
    #[command(allow_negative_numbers = true)]
    RegionCheck {
        #[command(flatten)]
        params: ParamArgs,
        /// Slope bound of the sector
        #[arg(long = "M")]
        slope: f64,
        /// Disc radius of the sector
        #[arg(long = "eps-r")]
        eps_r: f64,
        /// Boundary samples per piece
        #[arg(long = "n-samples", default_value_t = 400)]
        n_samples: usize,
        /// Also integrate sampled interior initial conditions
        #[arg(long)]
        invariance: bool,
        #[arg(long = "n-ics", default_value_t = 20, requires = "invariance")]
        n_ics: usize,
        #[arg(long = "t-end", default_value_t = commands::default_t_end(), requires = "invariance")]
        t_end: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a parameter grid concurrently and emit one CSV row per entry
    #[command(allow_negative_numbers = true)]
    Sweep {
        /// Grid JSON file with explicit value lists
        #[arg(long)]
        grid: PathBuf,
        /// Worker threads
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_series(s: &str) -> Result<Series, String> {
    match s {
        "E" => Ok(Series::Energy),
        "u" => Ok(Series::U),
        "du" => Ok(Series::Du),
        _ => Err(format!("unknown series `{s}` (expected E, u or du)")),
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| "expected LO,HI".to_string())?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("window LO: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("window HI: {e}"))?;
    Ok((lo, hi))
}

fn write_text(path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(singosc_cli::io_err(p)),
        None => {
            let mut out = std::io::stdout();
            match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
                Ok(()) => Ok(()),
                // a closed downstream pipe is not our failure
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(CliError::Io(format!("stdout: {e}"))),
            }
        }
    }
}

fn emit_json(path: &Option<PathBuf>, value: &Json) -> Result<(), CliError> {
    write_text(path, &value.to_line())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Simulate {
            params,
            u0,
            du0,
            t_end,
            tol,
            out,
        } => {
            let p = commands::make_params(params.l, params.alpha, params.beta, params.c, params.d)?;
            // write whatever was produced even if the run ended in a numerical
            // failure, then report the failure through the exit code
            match commands::simulate(&p, u0, du0, t_end, tol) {
                Ok(csv) => write_text(&out, &csv),
                Err(e) => Err(e),
            }
        }
        Cmd::Classify {
            params,
            empirical,
            u0,
            du0,
            t_end,
            tol,
            json,
        } => {
            let p = commands::make_params(params.l, params.alpha, params.beta, params.c, params.d)?;
            let run = if empirical {
                let (u0, du0) = match (u0, du0) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(CliError::Validation(
                            "--empirical needs --u0 and --du0".into(),
                        ))
                    }
                };
                Some(EmpiricalRun {
                    u0,
                    du0,
                    t_end,
                    tol,
                })
            } else {
                None
            };
            let report = commands::classify(&p, run.as_ref())?;
            emit_json(&json, &report)
        }
        Cmd::Rate {
            traj,
            series,
            window,
            json,
        } => {
            let report = commands::rate(&traj, series, window)?;
            emit_json(&json, &report)
        }
        Cmd::ConstructFast {
            l,
            alpha,
            beta,
            phi,
            tmax,
            eps_fp,
            max_iter,
            fp_tol,
            out_prefix,
            json,
        } => {
            let phi_val = match phi.as_str() {
                "cap" | "CAP" => None,
                s => Some(
                    s.parse::<f64>()
                        .map_err(|e| CliError::Validation(format!("--phi: {e}")))?,
                ),
            };
            let eps_val = match eps_fp.as_str() {
                "AUTO" | "auto" => None,
                s => Some(
                    s.parse::<f64>()
                        .map_err(|e| CliError::Validation(format!("--eps-fp: {e}")))?,
                ),
            };
            let artifacts = commands::construct_fast(
                l,
                alpha,
                beta,
                phi_val,
                tmax,
                eps_val,
                max_iter,
                fp_tol,
                out_prefix.as_deref(),
            )?;
            for (path, text) in &artifacts.csvs {
                fs::write(path, text)
                    .map_err(|e| CliError::Io(format!("{path}: {e}")))?;
            }
            emit_json(&json, &artifacts.summary)
        }
        Cmd::RegionCheck {
            params,
            slope,
            eps_r,
            n_samples,
            invariance,
            n_ics,
            t_end,
            json,
        } => {
            let p = commands::make_params(params.l, params.alpha, params.beta, params.c, params.d)?;
            let inv = invariance.then_some((n_ics, t_end));
            let report = commands::region_check(&p, eps_r, slope, n_samples, inv)?;
            emit_json(&json, &report)
        }
        Cmd::Sweep { grid, jobs, out } => {
            let csv = commands::sweep(&grid, jobs)?;
            fs::write(&out, csv).map_err(singosc_cli::io_err(&out))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
