use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wirelattice::cli_io::{lattice_export, read_config, run_experiment, write_outputs, Experiment, ExperimentConfig};
use wirelattice::Error;

#[derive(Parser, Debug)]
#[command(name = "wirelattice", version, about = "Transition costs and rigidity constants of discrete nanowires")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    restarts: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// The four transition constants for one thickness.
    Gamma,
    /// Growth of the interface transition cost with the thickness.
    Scaling,
    /// Interfacial density from cube Dirichlet problems.
    G2,
    /// Two-simplex cost of an orientation change.
    InversionCost,
    /// Comparison constant between well distance and cell energy.
    RigidityProbe,
    /// Folded vs unfolded competitors under boundary loads.
    ForcesDemo,
    /// Transitions from perturbed boundary data to the well.
    BoundaryGamma,
    /// Write the configured lattice in plain text.
    ExportLattice,
}

fn experiment(c: Command) -> Option<Experiment> {
    Some(match c {
        Command::Gamma => Experiment::GammaTable,
        Command::Scaling => Experiment::Scaling,
        Command::G2 => Experiment::G2,
        Command::InversionCost => Experiment::InversionCost,
        Command::RigidityProbe => Experiment::RigidityProbe,
        Command::ForcesDemo => Experiment::ForcesDemo,
        Command::BoundaryGamma => Experiment::BoundaryGamma,
        Command::ExportLattice => return None,
    })
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, Error> {
    let mut config = match &cli.config {
        Some(path) => read_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(e) = experiment(cli.command) {
        config.experiment = e;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(t) = cli.tol {
        config.tol = t;
    }
    if let Some(m) = cli.max_iters {
        config.max_iters = m;
    }
    if let Some(r) = cli.restarts {
        config.restarts = r;
    }
    config.validate()?;
    let outputs = match cli.command {
        Command::ExportLattice => vec![lattice_export(&config)?],
        _ => run_experiment(&config)?,
    };
    write_outputs(&cli.out, &outputs)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
