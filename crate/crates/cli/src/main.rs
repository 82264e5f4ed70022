//! `gradkernel` — run gradient-kernel regression experiments from the shell.
//!
//! Settings resolve in three layers: built-in defaults, then the `--config`
//! file (flat `key=value` lines), then command-line flags. Flags win.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gradkernel::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "gradkernel",
    about = "Gradient-kernel regression vs SGD, epoch by epoch",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write one CSV row per epoch.
    Run(RunArgs),
    /// Run the experiment, then report the discrete path kernel for a
    /// sample of example pairs.
    Pathkernel(PathKernelArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// IDX image file (implies source=idx).
    #[arg(long)]
    images: Option<PathBuf>,
    /// IDX label file (implies source=idx).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; fans out into init/split/basis/batch substreams.
    #[arg(long)]
    seed: Option<u64>,
    /// Training epochs; records are written for epochs 0..=N.
    #[arg(long)]
    epochs: Option<usize>,
    /// Model architecture, e.g. 784-64-32-1:relu.
    #[arg(long)]
    spec: Option<String>,
    /// Basis examples drawn per class from the training set.
    #[arg(long)]
    basis_per_class: Option<usize>,
    /// Restrict gradients and updates to the last K layers (0 = all).
    #[arg(long)]
    mask_layers: Option<usize>,
    /// Use the synthetic two-blob dataset instead of IDX files.
    #[arg(long)]
    synthetic: bool,
    /// Override any config key directly, e.g. --set learning_rate=0.05.
    /// Repeatable; named flags still win over --set.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct PathKernelArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Example pairs as dataset indices, e.g. 0:1,0:17,5:5.
    #[arg(long)]
    pairs: String,
}

impl RunArgs {
    /// Defaults, then config file, then flags.
    fn experiment_config(&self) -> gradkernel::Result<ExperimentConfig> {
        let mut pairs = Vec::new();
        if let Some(path) = &self.config {
            pairs.extend(harness::parse_config_file(path)?);
        }
        for entry in &self.set {
            let (key, value) = entry.split_once('=').ok_or_else(|| {
                gradkernel::Error::InvalidConfig(format!("--set needs key=value, got {entry:?}"))
            })?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        if self.synthetic {
            pairs.push(("source".into(), "synthetic".into()));
        }
        if let Some(path) = &self.images {
            pairs.push(("images".into(), path.display().to_string()));
        }
        if let Some(path) = &self.labels {
            pairs.push(("labels".into(), path.display().to_string()));
        }
        if let Some(path) = &self.out {
            pairs.push(("out".into(), path.display().to_string()));
        }
        if let Some(seed) = self.seed {
            pairs.push(("seed".into(), seed.to_string()));
        }
        if let Some(epochs) = self.epochs {
            pairs.push(("epochs".into(), epochs.to_string()));
        }
        if let Some(spec) = &self.spec {
            pairs.push(("spec".into(), spec.clone()));
        }
        if let Some(n) = self.basis_per_class {
            pairs.push(("basis_per_class".into(), n.to_string()));
        }
        if let Some(k) = self.mask_layers {
            pairs.push(("mask_layers".into(), k.to_string()));
        }
        harness::config_from_pairs(&pairs)
    }
}

fn parse_pairs(text: &str) -> gradkernel::Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|token| {
            let (i, j) = token.split_once(':').ok_or_else(|| {
                gradkernel::Error::InvalidConfig(format!("pair {token:?} must look like i:j"))
            })?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| gradkernel::Error::InvalidConfig(format!("bad pair index {s:?}")))
            };
            Ok((parse(i)?, parse(j)?))
        })
        .collect()
}

fn run(args: &RunArgs) -> gradkernel::Result<()> {
    let cfg = args.experiment_config()?;
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results.csv"));
    let outcome = harness::run_experiment(&cfg)?;
    harness::emit_csv(&outcome.records, &out)?;
    for record in &outcome.records {
        println!(
            "epoch {:>3}: kernel test acc {:.4}, net test acc {:.4}",
            record.epoch, record.kernel_test_accuracy, record.net_test_accuracy
        );
    }
    println!(
        "wrote {} records to {}",
        outcome.records.len(),
        out.display()
    );
    Ok(())
}

fn pathkernel(args: &PathKernelArgs) -> gradkernel::Result<()> {
    let pairs = parse_pairs(&args.pairs)?;
    let cfg = args.run.experiment_config()?;
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("path_kernel.csv"));
    let outcome = harness::run_experiment(&cfg)?;
    harness::emit_path_kernel_report(
        &cfg.spec,
        &outcome.trail,
        outcome.dataset.examples(),
        &pairs,
        outcome.mask.as_ref(),
        &out,
    )?;
    println!(
        "wrote path kernel for {} pairs over {} epochs to {}",
        pairs.len(),
        outcome.trail.len(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Pathkernel(args) => pathkernel(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
