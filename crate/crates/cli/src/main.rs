use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use iws_core::data::{generate_synthetic_dataset, read_dataset, write_dataset, SynthConfig};
use iws_core::eval::{aggregate, score_predictions, PredictionFile};
use iws_core::pipeline::{self, RunConfig};
use iws_core::Error;

#[derive(Parser)]
#[command(name = "iws", version, about = "Imagined-word segment detection in EEG trials")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset described by a JSON config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate every subject of a dataset and write a JSON report plus a CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score externally predicted bin labels against a dataset's markers.
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config { .. } => 2,
        _ if e.is_data_error() => 3,
        _ => 4,
    }
}

fn generate(config: &Path, out: &Path) -> Result<(), Error> {
    let cfg = SynthConfig::load(config)?;
    let subjects = generate_synthetic_dataset(&cfg)?;
    write_dataset(&subjects, out)?;
    info!(
        "wrote {} subjects x {} trials to {}",
        cfg.n_subjects,
        cfg.trials_per_subject,
        out.display()
    );
    Ok(())
}

fn run(config: &Path, out: &Path) -> Result<(), Error> {
    let cfg = RunConfig::load(config)?;
    // Echo the file as written, so the report does not depend on where it ran.
    let text = std::fs::read_to_string(config).map_err(|e| Error::Io {
        path: config.into(),
        source: e,
    })?;
    let echo: serde_json::Value = pipeline::parse_config(&text)?;
    let datasets = read_dataset(&cfg.dataset_path)?;
    info!("loaded {} subjects from {}", datasets.len(), cfg.dataset_path.display());
    let report = pipeline::run(&cfg, &datasets, echo)?;
    report.write(out)?;
    info!("report written to {}", out.display());
    Ok(())
}

fn score(pred: &Path, dataset: &Path) -> Result<(), Error> {
    let pred = PredictionFile::load(pred)?;
    let datasets = read_dataset(dataset)?;
    let scores = score_predictions(&pred, &datasets)?;
    println!("trial_id\tprecision\trecall\tf1");
    for s in &scores {
        let m = s.metrics;
        println!("{}\t{:.4}\t{:.4}\t{:.4}", s.trial_id, m.precision, m.recall, m.f1);
    }
    let metrics: Vec<_> = scores.iter().map(|s| s.metrics).collect();
    let summary = aggregate(&metrics)?;
    let (m, d) = (summary.mean, summary.std);
    println!(
        "mean\t{:.4} ± {:.4}\t{:.4} ± {:.4}\t{:.4} ± {:.4}",
        m.precision, d.precision, m.recall, d.recall, m.f1, d.f1
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Generate { config, out } => generate(config, out),
        Command::Run { config, out } => run(config, out),
        Command::Score { pred, dataset } => score(pred, dataset),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
