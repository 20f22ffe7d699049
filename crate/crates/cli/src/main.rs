use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semiclassical::bounds::CalibrationStatus;
use semiclassical::experiment::{
    bound_context, bound_table, evaluate_checks, report, run_sweep, selftest, summary_text, CheckOutcome,
    ExperimentConfig, BOUNDS_HEADER,
};
use semiclassical::Error;

/// Semiclassical propagation experiments: exact Heisenberg evolution against
/// the hbar^2 expansion, with calibrated bounds.
#[derive(Parser, Debug)]
#[command(name = "semiclab", version)]
struct Cli {
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full sweep and write errors.csv, bounds.csv, summary.txt.
    Run { config: PathBuf },
    /// Evaluate the bound tables only, with uncalibrated constants.
    Bounds { config: PathBuf },
    /// Measure the calibration cell and print the fitted constants.
    Calibrate { config: PathBuf },
    /// Quick internal consistency checks.
    Selftest,
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn print_checks(checks: &[CheckOutcome]) -> bool {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.passed)
}

fn write_bounds(path: &Path, rows: &[semiclassical::experiment::BoundRow]) -> Result<(), Error> {
    let err = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(err)?;
    w.write_record(BOUNDS_HEADER).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let sweep = run_sweep(&cfg)?;
            let rows = bound_table(&cfg, &sweep.context)?;
            let checks = evaluate_checks(&cfg, &sweep)?;
            let dir = out_dir(cli, &cfg);
            report(&dir, &sweep, &rows, &checks)?;
            if cli.verbose {
                eprint!("{}", summary_text(&sweep, &checks));
            }
            let ok = print_checks(&checks);
            println!("wrote {}", dir.display());
            Ok(ok)
        }
        Command::Bounds { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let ctx = bound_context(&cfg)?;
            let rows = bound_table(&cfg, &ctx)?;
            let dir = out_dir(cli, &cfg);
            std::fs::create_dir_all(&dir)?;
            write_bounds(&dir.join("bounds.csv"), &rows)?;
            println!("alpha = {}, b_bar = {}; {} rows written to {}", ctx.alpha, ctx.b_bar, rows.len(), dir.display());
            Ok(true)
        }
        Command::Calibrate { config } => {
            let mut cfg = ExperimentConfig::load(config)?;
            let cell = cfg.calibration.ok_or_else(|| Error::Config("no [calibration] cell in the config".into()))?;
            cfg.sweep.hbar = vec![cell.hbar];
            cfg.sweep.times = vec![cell.t];
            cfg.sweep.orders = vec![cell.order];
            let sweep = run_sweep(&cfg)?;
            let cal = sweep.calibration.ok_or_else(|| {
                let why = sweep.failures.first().map_or("no measurement".to_string(), |f| f.reason.clone());
                Error::InfeasibleCalibration(why)
            })?;
            let text = toml::to_string(&cal.context).map_err(|e| Error::Format(e.to_string()))?;
            let dir = out_dir(cli, &cfg);
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("calibration.toml"), &text)?;
            print!("{text}");
            Ok(cal.status == CalibrationStatus::Calibrated)
        }
        Command::Selftest => Ok(print_checks(&selftest()?)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
