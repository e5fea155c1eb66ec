use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use soisim::control::{control_cost, decompose_control, run_control, write_impulses_csv, write_trajectory_csv};
use soisim::harness::{
    drf_sweep, dynkin_check, parse_config, run_trials, write_sweep_csv, DynkinConfig, ExperimentConfig,
};
use soisim::{ProcessModel, SimError};

#[derive(Parser)]
#[command(name = "soisim", version, about = "Threshold sampling and sign-of-innovation coding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one Monte Carlo experiment and write a JSON report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical against analytic distortion over a list of rates.
    DrfSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export one closed-loop trajectory and its impulse decomposition.
    Control {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        impulses: PathBuf,
    },
    /// Check the OU exit-time and exit-area identities by simulation.
    Dynkin {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug)]
enum CliError {
    Sim(SimError),
    Output(PathBuf, io::Error),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Sim(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Sim(e) => e.exit_code() as u8,
            CliError::Output(..) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Sim(e) => write!(f, "{e}"),
            CliError::Output(p, e) => write!(f, "cannot write {}: {e}", p.display()),
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn write_file<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let wrap = |e| CliError::Output(path.to_path_buf(), e);
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    f(&mut w).and_then(|_| w.flush()).map_err(wrap)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let report = run_trials(&cfg)?;
            if report.degenerate_ci {
                eprintln!("warning: a single trial gives no confidence interval; half-widths are 0");
            }
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            match out {
                Some(path) => write_file(&path, |w| writeln!(w, "{json}"))?,
                None => println!("{json}"),
            }
        }
        Command::DrfSweep { config, rates, out } => {
            let cfg = load_config(&config)?;
            let rows = drf_sweep(&cfg, &rates)?;
            write_file(&out, |w| write_sweep_csv(&rows, w))?;
        }
        Command::Control { config, out, impulses } => {
            let cfg = load_config(&config)?;
            let policy = cfg.resolve_policy()?;
            let traj = run_control(&cfg.model, &policy, cfg.horizon, cfg.dt, cfg.master_seed)?;
            let decomp = decompose_control(&traj);
            write_file(&out, |w| write_trajectory_csv(&traj, w))?;
            write_file(&impulses, |w| write_impulses_csv(&decomp, w))?;
            println!("cost {}", control_cost(&traj));
            println!("impulses {}", decomp.impulses.len());
        }
        Command::Dynkin { theta, sigma, threshold, episodes, dt, seed } => {
            let model = ProcessModel::ornstein_uhlenbeck(theta, 0.0, sigma)
                .map_err(|e| SimError::Config(e.to_string()))?;
            let report = dynkin_check(&DynkinConfig::new(model, threshold, episodes, dt, seed))?;
            println!("rel_err_time {}", report.rel_err_time);
            println!("rel_err_area {}", report.rel_err_area);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
