//! Command-line runner: `evolve` and `bohm` execute config-driven
//! experiments, `debroglie` prints the closed-form fractional de Broglie
//! relations, and `plots` generates gnuplot scripts for a finished run.
//!
//! Exit codes: 0 success, 1 config or usage error, 2 numerical instability,
//! 3 wave function below the node threshold everywhere.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracsim::config::ExperimentConfig;
use fracsim::fraccalc::FracOrder;
use fracsim::grid::{Grid1D, GridFunction};
use fracsim::model::PhysicalParams;
use fracsim::{output, runner, Error};

#[derive(Parser)]
#[command(name = "fracsim", version, about = "Fractional Schrodinger simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a time evolution described by a config file.
    Evolve { config: PathBuf },
    /// Run an evolution with the Bohmian diagnostics forced on.
    Bohm { config: PathBuf },
    /// Print the fractional de Broglie energy and momentum for a mode.
    Debroglie {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        omega: f64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        /// Dimensionless scale of the fractional momentum.
        #[arg(long, default_value_t = 1.0)]
        m_x_alpha: f64,
    },
    /// Generate gnuplot scripts next to the CSVs of a finished run.
    Plots { run_dir: PathBuf },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Instability { .. } | Error::UnstableDt { .. } => 2,
        Error::AllNodes => 3,
        _ => 1,
    }
}

/// Output directory: the config's `output.dir`, placed under
/// FRACSIM_OUTPUT_ROOT when that is set.
fn resolve_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    match std::env::var_os("FRACSIM_OUTPUT_ROOT") {
        Some(root) => Path::new(&root).join(&cfg.output_dir),
        None => cfg.output_dir.clone(),
    }
}

fn run_experiment(config_path: &Path, force_bohm: bool) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::from_file(config_path)?;
    if force_bohm {
        cfg.diagnostics.bohm = true;
    }
    let out_dir = resolve_out_dir(&cfg);
    let summary = runner::run(&cfg, &out_dir)?;
    println!("run complete: {}", out_dir.display());
    for (k, v) in &summary.entries {
        println!("{k} = {v}");
    }
    Ok(())
}

fn run_debroglie(alpha: f64, k: f64, omega: f64, hbar: f64, m_x_alpha: f64) -> Result<(), Error> {
    let alpha = FracOrder::new(alpha)?;
    // only hbar, m_x_alpha and alpha enter the closed forms
    let grid = Grid1D::new(0.0, 1.0, 4)?;
    let params = PhysicalParams {
        hbar,
        mass: 1.0,
        c: 1.0,
        m_x_alpha,
        alpha,
        beta: alpha,
        potential: GridFunction::zeros(grid),
        include_relativistic: false,
    };
    let (e, p) = fracsim::bohm::de_broglie(k, omega, &params)?;
    println!("alpha = {}", alpha.value());
    println!("k = {k}");
    println!("omega = {omega}");
    println!("E = {e:.16e}");
    println!("p = {p:.16e}");
    Ok(())
}

fn run_plots(run_dir: &Path) -> Result<(), Error> {
    let written = output::generate_plot_scripts(run_dir)?;
    if written.is_empty() {
        return Err(Error::Config(format!(
            "no plottable CSV files in {}",
            run_dir.display()
        )));
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evolve { config } => run_experiment(&config, false),
        Command::Bohm { config } => run_experiment(&config, true),
        Command::Debroglie {
            alpha,
            k,
            omega,
            hbar,
            m_x_alpha,
        } => run_debroglie(alpha, k, omega, hbar, m_x_alpha),
        Command::Plots { run_dir } => run_plots(&run_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
