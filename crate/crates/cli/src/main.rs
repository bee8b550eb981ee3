//! `h4bp` — staged pipeline: equilibria → family → manifolds → connections
//! → chart → verify / pseudo. Outputs go to `--out` as CSV/JSON/text.

mod cache;
mod commands;
mod config;
mod output;
mod reference;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_grid, parse_range, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] h4bp::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("missing {artifact}; run `h4bp {command}` first")]
    Missing { artifact: String, command: &'static str },
}

#[derive(Parser)]
#[command(name = "h4bp", version, about = "Arnold diffusion toolkit for the Hill four-body problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Anchor abscissae A:B:STEP
    #[arg(long, global = true)]
    range: Option<String>,
    /// hom-z1, hom-z2, het-z1 or het-z2
    #[arg(long, global = true)]
    channel: Option<String>,
    /// single or two-map
    #[arg(long, global = true)]
    mechanism: Option<String>,
    /// Regenerate the benchmark tables with reference values and deltas
    #[arg(long, global = true)]
    tables: bool,
    /// Chart resolution NxM (x* rows × θ columns)
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Manifold seeds per branch
    #[arg(long = "seed-count", global = true)]
    seed_count: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Equilibrium points, energies and linear stability
    Equilibria,
    /// Lyapunov family over the anchor range
    Family,
    /// Unstable/stable manifold cuts and tangency curves
    Manifolds,
    /// Symmetric connections, foot-points and phase shifts of a channel
    Connections,
    /// Melnikov chart S and −∂S/∂θ∘σ₀ over (x*, θ)
    Chart,
    /// Diffusion criteria (or, with --tables, the benchmark tables)
    Verify,
    /// Pseudo-orbit of the first-order scattering maps
    Pseudo,
}

fn build_config(o: &Opts) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &o.config {
        cfg.apply_text(&std::fs::read_to_string(p)?)?;
    }
    if let Some(v) = &o.out {
        cfg.out = v.clone();
    }
    if let Some(v) = o.mu {
        cfg.mu = v;
    }
    if let Some(v) = o.eps {
        cfg.eps = v;
    }
    if let Some(v) = &o.range {
        cfg.range = parse_range(v)?;
    }
    if let Some(v) = &o.channel {
        cfg.channel = v.parse()?;
    }
    if let Some(v) = &o.mechanism {
        cfg.mechanism = v.parse()?;
    }
    if let Some(v) = &o.grid {
        cfg.grid = parse_grid(v)?;
    }
    if let Some(v) = o.seed_count {
        cfg.seed_count = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = build_config(&cli.opts)?;
    std::fs::create_dir_all(&cfg.out)?;
    match cli.command {
        Command::Equilibria => commands::equilibria(&cfg),
        Command::Family => commands::family(&cfg),
        Command::Manifolds => commands::manifolds(&cfg),
        Command::Connections => commands::connections(&cfg),
        Command::Chart => commands::chart(&cfg),
        Command::Verify => commands::verify(&cfg, cli.opts.tables),
        Command::Pseudo => commands::pseudo(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
