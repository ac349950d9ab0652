use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsoq_cli::error::{exit, CliError};
use fsoq_cli::figures::{write_figure, Figure};
use fsoq_cli::sweep::{run_sweep, write_csv};
use fsoq_cli::{evaluate, Axis, EvalContext, Scenario};
use fsoq_core::QuadratureSpec;

#[derive(Debug, Parser)]
#[command(name = "fsoq", version, about = "Free-space quantum link budgets, capacity bounds and CV-QKD key rates")]
struct Cli {
    /// Worker threads for sweeps and figures (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Seed for Monte-Carlo estimation checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Relative tolerance of the adaptive quadrature.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one scenario point and print a JSON report.
    Eval {
        scenario: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a scenario over one of its declared grids and write CSV.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one of the preset data sets as CSV.
    Figure {
        #[arg(value_enum)]
        name: Figure,
        #[arg(long, env = "FSOQ_OUT_DIR", default_value = ".")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| CliError::io(p, e))?;
            Ok(Box::new(std::io::BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let quadrature = QuadratureSpec::default();
    let quadrature = QuadratureSpec::new(cli.tolerance, quadrature.absolute_tolerance, quadrature.max_subdivisions)
        .map_err(|e| CliError::schema("--tolerance", e.to_string()))?;
    let ctx = EvalContext { quadrature, seed: cli.seed };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .expect("thread pool builds");

    match cli.command {
        Command::Eval { scenario, out } => {
            let s = Scenario::load(&scenario)?;
            let report = pool.install(|| evaluate(&s, &ctx));
            for (quantity, e) in report.errors() {
                eprintln!("warning: {quantity}: {}", e.message);
            }
            let mut w = open_output(&out)?;
            let target = out.clone().unwrap_or_else(|| "<stdout>".into());
            serde_json::to_writer_pretty(&mut w, &report).map_err(|e| CliError::io(&target, e.into()))?;
            writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(&target, e))?;
            Ok(report.exit_code())
        }
        Command::Sweep { scenario, axis, out } => {
            let s = Scenario::load(&scenario)?;
            let result = pool.install(|| run_sweep(&s, axis, &ctx))?;
            let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("warning: {failed} of {} points reported errors", result.rows.len());
            }
            write_csv(&result.rows, open_output(&out)?)?;
            Ok(result.exit_code)
        }
        Command::Figure { name, out_dir } => {
            let written = pool.install(|| write_figure(name, &out_dir, &ctx.quadrature))?;
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            Ok(exit::OK)
        }
    }
}
