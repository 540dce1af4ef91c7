use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use roaming::config::RunConfig;
use roaming::M_H;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "roaming", version, about = "Roaming bounds and phase-space structures of the CH4+ model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Critical points of the potential and radial sections at theta = pi/2.
    CriticalPoints,
    /// Inner, middle and outer periodic orbits over the grid.
    Orbits,
    /// Manifold intersections with the outward annulus of DSa and their areas.
    ManifoldSection,
    /// Upper bound on roaming, one table per energy.
    BoundTable,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Energy grid value (repeatable); replaces the configured grid.
    #[arg(long, global = true)]
    energy: Vec<f64>,
    /// Free-atom mass (repeatable); `mH` stands for hydrogen.
    #[arg(long, global = true, value_parser = parse_mass)]
    mass: Vec<f64>,
    /// Coupling parameter a (repeatable).
    #[arg(long, global = true)]
    coupling: Vec<f64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trajectories per cell (0 disables).
    #[arg(long = "mc-samples", global = true)]
    mc_samples: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

fn parse_mass(s: &str) -> Result<f64, String> {
    match s {
        "mH" | "m_H" | "H" => Ok(M_H),
        _ => s.parse().map_err(|e| format!("{e}")),
    }
}

fn build_config(c: &Common) -> roaming::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if !c.energy.is_empty() {
        cfg.energies = c.energy.clone();
    }
    if !c.mass.is_empty() {
        cfg.masses = c.mass.clone();
    }
    if !c.coupling.is_empty() {
        cfg.couplings = c.coupling.clone();
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(n) = c.mc_samples {
        cfg.mc_samples = n;
    }
    if c.jobs.is_some() {
        cfg.jobs = c.jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = match build_config(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cfg.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match cli.command {
        Command::CriticalPoints => commands::critical_points(&cfg),
        Command::Orbits => commands::orbits(&cfg),
        Command::ManifoldSection => commands::manifold_section(&cfg),
        Command::BoundTable => commands::bound_table(&cfg),
    };
    match result {
        Ok(summary) => {
            log::info!("{summary}");
            if summary.failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
