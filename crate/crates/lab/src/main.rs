use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use metastab_lab::commands;
use metastab_lab::config::{parse_schedule, ExperimentConfig, Overrides};
use metastab_lab::LabResult;

#[derive(Debug, Parser)]
#[command(name = "metastab", version, about = "Transfer-operator experiments for a metastable intermittent map")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Single ε for `mc`, `graph` and the dumps.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, global = true, value_parser = parse_schedule)]
    eps_schedule: Option<Vec<f64>>,
    /// Cells on [1/4, 1].
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    cylinders: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `key = value` TOML file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    mc_steps: Option<u64>,
    #[arg(long, global = true)]
    k_max: Option<usize>,
    /// Add wall-clock columns (outputs are then no longer reproducible byte for byte).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// L¹ distance of h_ε to h_p along the schedule.
    Converge,
    /// Hole-measure ratios along the schedule.
    Ratio,
    /// Density blow-up and distortion checks at ε = 0.
    Asymptotics,
    /// Birkhoff histogram against the pulled-back density.
    Mc,
    /// Accessibility graph and its closed classes.
    Graph,
    /// Branch table of the map.
    DumpMap,
    /// Cylinder table and boundary orbit.
    DumpCylinders,
}

fn run(cli: &Cli) -> LabResult<()> {
    let ov = Overrides {
        alpha: cli.alpha,
        eps: cli.eps,
        eps_schedule: cli.eps_schedule.clone(),
        grid_m: cli.grid,
        cylinders: cli.cylinders,
        seed: cli.seed,
        output_dir: cli.out.clone(),
        mc_steps: cli.mc_steps,
        k_max: cli.k_max,
        timings: cli.timings,
    };
    let cfg = ExperimentConfig::resolve(cli.config.as_deref(), &ov)?;
    let files = match cli.command {
        Command::Converge => commands::converge(&cfg)?,
        Command::Ratio => commands::ratio(&cfg)?,
        Command::Asymptotics => commands::asymptotics(&cfg)?,
        Command::Mc => commands::montecarlo(&cfg)?,
        Command::Graph => {
            let (report, files) = commands::graph(&cfg)?;
            print!("{}", report.to_text());
            files
        }
        Command::DumpMap => commands::dump_map(&cfg)?,
        Command::DumpCylinders => commands::dump_cylinders(&cfg)?,
    };
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
