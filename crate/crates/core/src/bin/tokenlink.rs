use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};

use tokenlink::pipeline::{cmd_link, cmd_merge, cmd_normalize, cmd_profile, cmd_synth, MergeArgs, RunConfig, RunOutcome};
use tokenlink::synth::SynthConfig;
use tokenlink::SourceLayout;

#[derive(Parser)]
#[command(name = "tokenlink", version, about = "Deterministic linkage of patient records to death master files")]
struct Cli {
    /// Cap on worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides output_dir from the config.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Year bound 2022 and no month/day checks.
    #[arg(long)]
    strict_paper: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest and clean the configured sources.
    Normalize(RunArgs),
    /// Field and token completeness/distinctiveness reports.
    Profile(RunArgs),
    /// Validate rules, rank them and link deaths to patients.
    Link(RunArgs),
    /// Generate a synthetic dataset pair with a truth map.
    Synth {
        /// Synth config (TOML); defaults apply when omitted.
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_persons: Option<usize>,
    },
    /// Fold a monthly update into an existing death-master file.
    Merge {
        /// Source layout (TOML); the standard delimited layout when omitted.
        #[arg(short, long)]
        layout: Option<PathBuf>,
        #[arg(long)]
        existing: PathBuf,
        #[arg(long)]
        update: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        row_error_threshold: u64,
    },
}

fn run_config(args: &RunArgs) -> tokenlink::Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output_dir = std::env::current_dir()?.join(out);
    }
    if args.strict_paper {
        cfg.strict_paper = true;
        cfg.apply_strict_paper();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> tokenlink::Result<RunOutcome> {
    match cli.command {
        Command::Normalize(a) => cmd_normalize(&run_config(&a)?),
        Command::Profile(a) => cmd_profile(&run_config(&a)?),
        Command::Link(a) => cmd_link(&run_config(&a)?),
        Command::Synth { config, out, seed, n_persons } => {
            let mut cfg = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| tokenlink::Error::io(&p, e))?;
                    toml::from_str::<SynthConfig>(&text).map_err(|e| tokenlink::Error::Config(e.to_string()))?
                }
                None => SynthConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = n_persons {
                cfg.n_persons = n;
            }
            cmd_synth(&cfg, &out)
        }
        Command::Merge { layout, existing, update, out, row_error_threshold } => {
            let layout = match layout {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| tokenlink::Error::io(&p, e))?;
                    SourceLayout::from_toml(&text)?
                }
                None => SourceLayout::standard_delimited(),
            };
            cmd_merge(&MergeArgs { layout, existing, update, output_dir: out, row_error_threshold })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            warn!("could not size thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(outcome) => {
            for p in &outcome.written {
                info!("wrote {}", p.display());
            }
            if outcome.exit_code() != 0 {
                warn!("{} rows rejected (threshold {})", outcome.row_errors, outcome.row_error_threshold);
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(1)
        }
    }
}
