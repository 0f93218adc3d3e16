use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use shssa_cli::config::{
    parse_groups_flag, parse_method_flag, parse_topology_flag, parse_window_flag, JobConfig,
};
use shssa_cli::error::Result;
use shssa_cli::manifest;
use shssa_cli::runner::{run_job, Task};

/// Singular spectrum analysis for shaped 2D arrays on planar,
/// cylindrical and toroidal grids.
#[derive(Parser)]
#[command(name = "shssa", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a grid and write the eigentriple report.
    Decompose(JobArgs),
    /// Decompose and write per-group reconstruction CSVs.
    Reconstruct(JobArgs),
    /// Decompose and estimate component frequencies, rates and periods.
    Esprit(JobArgs),
    /// Print the rank of the trajectory matrix (small inputs only).
    Rank(JobArgs),
    /// Generate a synthetic grid from a manifest.
    Gen(GenArgs),
}

#[derive(Args)]
struct JobArgs {
    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input grid, CSV (rows are x) or 8-bit PGM.
    #[arg(long)]
    input: Option<PathBuf>,
    /// CSV mask restricting the region (0 = outside).
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Axis periods, e.g. "12,inf" or "inf,inf".
    #[arg(long, value_name = "TX,TY")]
    topology: Option<String>,
    /// Window: rect:LX,LY | circle:R | mask:PATH.
    #[arg(long)]
    window: Option<String>,
    /// Number of eigentriples to compute.
    #[arg(long)]
    neig: Option<usize>,
    /// Triple grouping, e.g. "1-6;7,8". Default: each triple alone.
    #[arg(long)]
    groups: Option<String>,
    /// Assumed component rank for esprit.
    #[arg(long)]
    esprit_r: Option<usize>,
    /// Shift-equation solver: ls or tls.
    #[arg(long)]
    esprit_method: Option<String>,
    /// RNG seed for the iterative eigensolver.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default ".").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write PNG heatmaps of input, groups and residual.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct GenArgs {
    /// Generation manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (default ".").
    #[arg(long)]
    out: Option<PathBuf>,
}

fn merge(args: &JobArgs) -> Result<JobConfig> {
    let mut cfg = match &args.config {
        Some(p) => JobConfig::load(p)?,
        None => JobConfig::default(),
    };
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
    }
    if let Some(p) = &args.mask {
        cfg.mask = Some(p.clone());
    }
    if let Some(t) = &args.topology {
        cfg.topology = Some(parse_topology_flag(t)?);
    }
    if let Some(w) = &args.window {
        cfg.window = Some(parse_window_flag(w)?);
    }
    if let Some(n) = args.neig {
        cfg.neig = Some(n);
    }
    if let Some(g) = &args.groups {
        cfg.groups = Some(parse_groups_flag(g)?);
    }
    if args.esprit_r.is_some() || args.esprit_method.is_some() {
        let mut section = cfg.esprit.take().unwrap_or_default();
        if let Some(r) = args.esprit_r {
            section.r = Some(r);
        }
        if let Some(m) = &args.esprit_method {
            section.method = Some(parse_method_flag(m)?);
        }
        cfg.esprit = Some(section);
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &args.out {
        cfg.output_dir = Some(o.clone());
    }
    if args.plots {
        cfg.plots = true;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decompose(a) => run_job(Task::Decompose, &merge(&a)?.resolve(false)?),
        Command::Reconstruct(a) => run_job(Task::Reconstruct, &merge(&a)?.resolve(false)?),
        Command::Esprit(a) => run_job(Task::Esprit, &merge(&a)?.resolve(true)?),
        Command::Rank(a) => run_job(Task::Rank, &merge(&a)?.resolve(false)?),
        Command::Gen(a) => {
            let out = a.out.unwrap_or_else(|| PathBuf::from("."));
            manifest::run_gen(&a.manifest, &out)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
