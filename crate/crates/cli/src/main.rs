use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairrank_cli::commands::{cmd_audit, cmd_rank, cmd_report, cmd_synth};
use fairrank_cli::{AuditConfig, CliError, Format, Overrides};
use fairrank_core::RangeTag;

/// Demographic exposure and visibility audits of face identification rankings.
#[derive(Parser)]
#[command(name = "fairrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic clustered embedding dataset.
    Synth,
    /// Split probes and gallery, then rank every probe.
    Rank,
    /// Compute metrics and significance tests into a report.
    Audit,
    /// Emit plot-ready CSV tables from an existing report.
    Report,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Ranking cutoff.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Images sampled per identity.
    #[arg(long, global = true)]
    l: Option<usize>,
    #[arg(long, global = true)]
    probe_frac: Option<f64>,
    #[arg(long, global = true, value_parser = parse_range)]
    gallery_range: Option<RangeTag>,
    #[arg(long, global = true)]
    exclude_mates: Option<bool>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report formats; repeat for several.
    #[arg(long, global = true, value_enum)]
    format: Vec<Format>,
}

fn parse_range(s: &str) -> Result<RangeTag, String> {
    s.parse()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = cli.common;
    let mut cfg = match &c.config {
        Some(path) => AuditConfig::load(path)?,
        None => AuditConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: c.seed,
        k: c.k,
        l: c.l,
        probe_frac: c.probe_frac,
        gallery_range: c.gallery_range,
        exclude_mates: c.exclude_mates,
        alpha: c.alpha,
        out: c.out,
        formats: c.format,
    });
    match cli.command {
        Command::Synth => cmd_synth(&cfg).map(drop),
        Command::Rank => cmd_rank(&cfg).map(drop),
        Command::Audit => cmd_audit(&cfg).map(drop),
        Command::Report => cmd_report(&cfg).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fairrank: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
