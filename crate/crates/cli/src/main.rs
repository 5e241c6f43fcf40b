//! `pme`: command-line driver for single runs, m-sweeps, refinement studies
//! and the operator check suite.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for
//! numerical failures (a `failure.json` dump is written to the output
//! directory).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pme_core::harness::{
    export_refinement, export_sweep, presets, run_m_sweep, run_operator_suite,
    run_refinement_study, RunConfig,
};
use pme_core::Error;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "pme",
    version,
    about = "Porous medium / chemotaxis simulator and m → ∞ harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides the config's `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for independent runs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized initial data (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single exponent.
    Run {
        config: PathBuf,
        /// Exponent to run; defaults to the first in the config.
        #[arg(long)]
        m: Option<f64>,
    },
    /// Run every exponent in the config and compute cross-m metrics.
    Sweep { config: PathBuf },
    /// Grid refinement study at the config's first exponent.
    Refine {
        config: PathBuf,
        /// Comma-separated cell counts; defaults to the config's `refine_cells`.
        #[arg(long, value_delimiter = ',')]
        cells: Vec<usize>,
    },
    /// Operator and identity check suite.
    Check,
    /// Print a preset configuration.
    ExportConfig {
        /// One of: default_sweep, mass_balance, barenblatt_1d, barenblatt_2d.
        #[arg(long, default_value = "default_sweep")]
        preset: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_numerical() {
                if let Some(dir) = failure_dir(&cli) {
                    dump_failure(&dir, &err);
                }
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig, Error> {
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn out_dir(cli: &Cli, config: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn failure_dir(cli: &Cli) -> Option<PathBuf> {
    let config = match &cli.command {
        Command::Run { config, .. }
        | Command::Sweep { config }
        | Command::Refine { config, .. } => config,
        _ => return cli.out.clone(),
    };
    Some(match load(cli, config) {
        Ok(c) => out_dir(cli, &c),
        Err(_) => cli.out.clone()?,
    })
}

fn dump_failure(dir: &Path, err: &Error) {
    let m = match err {
        Error::RunFailed { m, .. } => Some(*m),
        _ => None,
    };
    let dump = json!({
        "error": err.to_string(),
        "m": m,
        "detail": format!("{err:?}"),
    });
    let path = dir.join("failure.json");
    let written = fs::create_dir_all(dir).and_then(|_| {
        fs::write(
            &path,
            serde_json::to_string_pretty(&dump).unwrap_or_default(),
        )
    });
    match written {
        Ok(()) => eprintln!("failure dump written to {}", path.display()),
        Err(e) => eprintln!("could not write {}: {e}", path.display()),
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Run { config, m } => {
            let mut config = load(cli, config)?;
            if let Some(m) = m {
                config.exponents = vec![*m];
            } else {
                config.exponents.truncate(1);
            }
            sweep(cli, &config)
        }
        Command::Sweep { config } => {
            let config = load(cli, config)?;
            sweep(cli, &config)
        }
        Command::Refine { config, cells } => {
            let config = load(cli, config)?;
            let cells = if cells.is_empty() {
                config.refine_cells.clone()
            } else {
                cells.clone()
            };
            let report = run_refinement_study(&config, &cells, cli.threads)?;
            let path = export_refinement(&report, &out_dir(cli, &config))?;
            println!("cells        {:?}", report.cells);
            if !report.exact_orders.is_empty() {
                println!("exact orders {:?}", report.exact_orders);
            }
            println!(
                "self orders  rho {:?}  p {:?}",
                report.self_rho_orders, report.self_p_orders
            );
            if !report.fund1_orders.is_empty() {
                println!("fund1 orders {:?}", report.fund1_orders);
            }
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Check => {
            let results = run_operator_suite()?;
            let mut failed = 0;
            for r in &results {
                let status = if r.passed { "PASS" } else { "FAIL" };
                println!(
                    "{status} {:<36} value {:.3e}  threshold {:.3e}",
                    r.name, r.value, r.threshold
                );
                failed += usize::from(!r.passed);
            }
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
                let path = dir.join("check.json");
                let text = serde_json::to_string_pretty(&results).expect("results serialize");
                fs::write(&path, text).map_err(|e| io_error(&path, e))?;
            }
            if failed > 0 {
                return Err(Error::InvalidParameter(format!("{failed} checks failed")));
            }
            Ok(())
        }
        Command::ExportConfig { preset } => {
            let config = presets::by_name(preset).ok_or_else(|| {
                Error::ConfigInvalid(vec![format!(
                    "preset: unknown name {preset:?}, expected one of {:?}",
                    presets::NAMES
                )])
            })?;
            match &cli.out {
                Some(path) => {
                    fs::write(path, config.to_json() + "\n").map_err(|e| io_error(path, e))?
                }
                None => println!("{}", config.to_json()),
            }
            Ok(())
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

fn sweep(cli: &Cli, config: &RunConfig) -> Result<(), Error> {
    let report = run_m_sweep(config, cli.threads)?;
    let dir = out_dir(cli, config);
    export_sweep(&report, &dir)?;
    println!("{} ({})", dir.display(), report.config.label());
    for run in &report.runs {
        let last = run
            .final_record()
            .expect("every run records at least one sample");
        println!(
            "m = {:<6} steps {:>8}  mass {:.6e}  sup rho {:.4}  sup p {:.4}  R_m {:.4e}{}",
            run.m,
            run.steps,
            last.mass,
            last.sup_rho,
            run.max_sup_p,
            last.comp_residual,
            if run.boundary_flag {
                "  [boundary mass]"
            } else {
                ""
            }
        );
    }
    if report.runs.len() > 1 {
        println!("residual ratios {:?}", report.residual_ratios);
    }
    Ok(())
}
