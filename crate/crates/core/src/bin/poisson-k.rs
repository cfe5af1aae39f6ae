use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use poisson_k::commands::{
    cmd_critical, cmd_figure, cmd_pmf, cmd_scan, cmd_summary, exit_code_for, PmfRequest,
    ScanRequest,
};
use poisson_k::output::{Format, OutputRecord};
use poisson_k::Error;

/// Poisson distribution of order k: pmf tables, summaries, critical points,
/// bound scans and figure data.
#[derive(Parser, Debug)]
#[command(name = "poisson-k", version)]
struct Cli {
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv, global = true)]
    format: OutputFormat,

    /// Output file; for `figure`, a directory for the per-series CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel scans.
    #[arg(long, env = "POISSON_K_WORKERS", global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Table of f(n) or the scaled h(n) for n = 0..=n_max.
    Pmf {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        scaled: bool,
        #[arg(long)]
        log_space: bool,
    },
    /// Mean, variance, median, modes and shape.
    Summary {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        lambda: f64,
        /// Relative gap below the peak height still counted as a mode.
        #[arg(long, default_value_t = poisson_k::DEFAULT_TIE_TOLERANCE)]
        tie_tolerance: f64,
    },
    /// r_k, the first double mode and all mode jumps for lambda in (0, 2].
    Critical {
        #[arg(long)]
        k: u32,
    },
    /// Check bounds and conjectures over a parameter grid.
    Scan {
        #[arg(long, default_value_t = 2)]
        k_min: u32,
        #[arg(long, default_value_t = 20)]
        k_max: u32,
        #[arg(long, requires = "lambda_max")]
        lambda_min: Option<f64>,
        #[arg(long, requires = "lambda_min")]
        lambda_max: Option<f64>,
        /// Comma-separated claim names; all claims when omitted.
        #[arg(long, value_delimiter = ',')]
        claims: Vec<String>,
        /// Lambda points per k.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Seeded uniform sampling instead of the stratified grid.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 12)]
        asymptotic_k_max: u32,
        #[arg(long, default_value_t = 5_000_000)]
        max_evaluations: u64,
        /// Emit every report rather than per-claim tallies.
        #[arg(long)]
        reports: bool,
    },
    /// Data behind figure 1..=10.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=10))]
        id: u8,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: worker count must be positive");
            return ExitCode::from(1);
        }
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}

fn format(cli: &Cli) -> Format {
    match cli.format {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Json => Format::Json,
    }
}

fn emit(cli: &Cli, record: &OutputRecord) -> Result<(), Error> {
    let text = record.render(format(cli));
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::InvalidParameter(format!("stdout: {e}")))
        }
    }
}

fn io_error(path: &std::path::Path, e: std::io::Error) -> Error {
    Error::InvalidParameter(format!("{}: {e}", path.display()))
}

fn run(cli: &Cli) -> Result<u8, Error> {
    match &cli.command {
        &Command::Pmf {
            k,
            lambda,
            n_max,
            scaled,
            log_space,
        } => {
            emit(
                cli,
                &cmd_pmf(&PmfRequest {
                    k,
                    lambda,
                    n_max,
                    scaled,
                    log_space,
                })?,
            )?;
        }
        &Command::Summary {
            k,
            lambda,
            tie_tolerance,
        } => emit(cli, &cmd_summary(k, lambda, tie_tolerance)?)?,
        &Command::Critical { k } => emit(cli, &cmd_critical(k)?)?,
        Command::Scan {
            k_min,
            k_max,
            lambda_min,
            lambda_max,
            claims,
            grid,
            seed,
            asymptotic_k_max,
            max_evaluations,
            reports,
        } => {
            let req = ScanRequest {
                k_min: *k_min,
                k_max: *k_max,
                lambda_range: lambda_min.zip(*lambda_max),
                claims: claims.clone(),
                grid: *grid,
                seed: *seed,
                asymptotic_k_max: *asymptotic_k_max,
                max_evaluations: *max_evaluations,
                reports: *reports,
            };
            let (record, summary) = cmd_scan(&req)?;
            emit(cli, &record)?;
            for r in summary.reports.iter().filter(|r| r.is_violation()) {
                eprintln!(
                    "{}: {} violated at k = {}, lambda = {:?}, n = {:?}",
                    if r.kind == poisson_k::ClaimKind::Proved {
                        "error"
                    } else {
                        "warning"
                    },
                    r.claim.name(),
                    r.k,
                    r.lambda,
                    r.n
                );
            }
            return Ok(summary.exit_code() as u8);
        }
        &Command::Figure { id } => {
            let fig = cmd_figure(id)?;
            match &cli.out {
                Some(dir) => {
                    for path in fig.write_to_dir(dir).map_err(|e| io_error(dir, e))? {
                        eprintln!("wrote {}", path.display());
                    }
                }
                None => emit(cli, &fig.to_record())?,
            }
        }
    }
    Ok(0)
}
