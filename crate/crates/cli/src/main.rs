use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use patcs_cli::{commands, CliError, Ctx, Domain, ExperimentConfig, Method};

/// Compressed-sensing photoacoustic reconstruction pipeline.
#[derive(Parser)]
#[command(name = "patcs", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Derives the phantom, noise and sampling seeds (s, s+1, s+2).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sampling rate override.
    #[arg(long, global = true)]
    rate: Option<f64>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write a PNG next to every array.
    #[arg(long, global = true)]
    export_png: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Phantom and (noisy) full detector data.
    Simulate,
    /// Sensor pattern, sampled traces and their zero-filled form.
    Subsample,
    /// Initial pressure from the sampled traces.
    Reconstruct {
        #[arg(long, value_enum)]
        method: Method,
        /// Full data to time-reverse instead of the sampled traces (tr only).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Quality metrics against the phantom.
    Metrics {
        /// Reconstructions to score; every p0_<method>.f64 present when omitted.
        #[arg(long)]
        rec: Vec<PathBuf>,
    },
    /// Curvelet diagnostics of the data or image.
    Transform {
        #[arg(long, value_enum)]
        domain: Domain,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Every stage in order.
    Pipeline,
    /// Print the effective configuration and its hash.
    Config,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = cli.common;
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.reseed(s);
    }
    if let Some(r) = c.rate {
        cfg.sampling.rate = r;
    }
    if let Some(o) = c.out {
        cfg.out_dir = o;
    }
    let ctx = Ctx::new(cfg, c.export_png);
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Subsample => commands::subsample_cmd(&ctx),
        Command::Reconstruct { method, input } => {
            if input.is_some() && method != Method::Tr {
                return Err(CliError::Config("--input applies to --method tr only".into()));
            }
            if commands::reconstruct(&ctx, method, input.as_deref())? {
                Ok(())
            } else {
                Err(CliError::NonConvergence(vec![method.name().into()]))
            }
        }
        Command::Metrics { rec } => {
            print!("{}", commands::metrics_cmd(&ctx, &rec)?);
            Ok(())
        }
        Command::Transform { domain, input } => {
            println!("{}", commands::transform(&ctx, domain, input.as_deref())?);
            Ok(())
        }
        Command::Pipeline => {
            let (csv, stalled) = commands::pipeline(&ctx)?;
            print!("{csv}");
            if stalled.is_empty() {
                Ok(())
            } else {
                Err(CliError::NonConvergence(stalled))
            }
        }
        Command::Config => {
            print!("# config_hash={}\n{}", ctx.hash, ctx.cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
