mod augment;
mod config;
mod error;
mod manifest;
mod preview;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use recapture::banks::{AssetBanks, BankSizes, BANKS_ENV};
use recapture::policy::{sample_policy_with, Registry};
use recapture::sare::train_toy;
use recapture::ImageBuffer;

use crate::augment::{resolve_bank_dir, AugmentJob};
use crate::config::Config;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "recapture", version, about = "Recapture-style augmentation for face anti-spoofing data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Augment every record of a manifest with the epoch's policy.
    Augment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        epoch: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Abort on the first failing record.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's tolerated failure fraction.
        #[arg(long)]
        max_error_rate: Option<f64>,
        #[arg(long, env = BANKS_ENV)]
        banks: Option<PathBuf>,
    },
    /// Generate the ICC, preset, moire and blue-noise banks.
    GenBanks {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Moire texture side length.
        #[arg(long, default_value_t = BankSizes::default().moire)]
        moire_size: usize,
        /// Blue-noise texture side length.
        #[arg(long, default_value_t = BankSizes::default().bluenoise)]
        bluenoise_size: usize,
    },
    /// Render every operation at every magnitude level into one image.
    Preview {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = BANKS_ENV)]
        banks: Option<PathBuf>,
    },
    /// Policy utilities.
    Policy {
        #[command(subcommand)]
        action: PolicyAction,
    },
    /// Train the two-dimensional toy model and write its loss trace.
    TrainToy {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Subcommand)]
enum PolicyAction {
    /// Print the policy for a seed and epoch as JSON.
    Sample {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        epoch: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn registry(config: &Config) -> CliResult<Registry> {
    Registry::from_config(&config.policy).map_err(|e| CliError::Usage(e.to_string()))
}

fn load_banks(flag: Option<PathBuf>, config: &Config) -> CliResult<AssetBanks> {
    let dir = resolve_bank_dir(flag, config.banks.clone())?;
    Ok(AssetBanks::load_dir(&dir)?)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Augment {
            manifest,
            out,
            seed,
            epoch,
            config,
            strict,
            workers,
            max_error_rate,
            banks,
        } => {
            let config = Config::load_opt(config.as_deref())?;
            let registry = registry(&config)?;
            let banks = load_banks(banks, &config)?;
            let summary = augment::run(&AugmentJob {
                manifest: &manifest,
                out: &out,
                seed,
                epoch,
                strict,
                workers,
                max_error_rate: max_error_rate.unwrap_or(config.augment.max_error_rate),
                registry: &registry,
                banks: &banks,
            })?;
            eprintln!(
                "{} records: {} written, {} unchanged, {} failed",
                summary.total, summary.written, summary.unchanged, summary.failed
            );
        }
        Command::GenBanks {
            out,
            seed,
            moire_size,
            bluenoise_size,
        } => {
            let sizes = BankSizes {
                moire: moire_size,
                bluenoise: bluenoise_size,
            };
            let banks = AssetBanks::generate(seed, sizes).map_err(|e| match e {
                recapture::Error::Range(m) => CliError::Usage(m),
                e => e.into(),
            })?;
            banks.write_dir(&out, seed)?;
            eprintln!("banks written to {}", out.display());
        }
        Command::Preview {
            image,
            out,
            seed,
            config,
            banks,
        } => {
            let config = Config::load_opt(config.as_deref())?;
            let registry = registry(&config)?;
            let banks = load_banks(banks, &config)?;
            let img = ImageBuffer::load(&image)?;
            preview::contact_sheet(&img, &registry, &banks, seed)?.save(&out)?;
        }
        Command::Policy {
            action: PolicyAction::Sample { seed, epoch, config },
        } => {
            let config = Config::load_opt(config.as_deref())?;
            println!("{}", sample_policy_with(&registry(&config)?, seed, epoch).to_json());
        }
        Command::TrainToy {
            out,
            config,
            alpha,
            beta,
            epochs,
            seed,
        } => {
            let mut train = Config::load_opt(config.as_deref())?.train;
            train.alpha = alpha.unwrap_or(train.alpha);
            train.beta = beta.unwrap_or(train.beta);
            train.epochs = epochs.unwrap_or(train.epochs);
            train.seed = seed.unwrap_or(train.seed);
            let trace = train_toy(&train)?;
            let mut buf = Vec::new();
            trace.write_jsonl(&mut buf).map_err(|e| CliError::Data(e.to_string()))?;
            fs::write(&out, buf).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
            let last = trace.last();
            println!(
                "{}",
                serde_json::json!({"epoch": last.epoch, "bce": last.bce, "total": last.total, "gap": trace.final_gap()})
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
