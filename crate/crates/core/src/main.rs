//! Command-line experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use enselect::harness::{parse_checkpoints, parse_eta, run_experiment, ConfigDraft};
use enselect::Error;

/// Replay per-segment quality scores through an online learner and report
/// how quickly the weight ranking converges to the reference ranking.
#[derive(Debug, Parser)]
#[command(name = "enselect", version, about)]
struct Cli {
    /// Flat key-value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Score matrix TSV (segment_id, system_id, raw_scores, fallback_score).
    #[arg(long)]
    corpus: Option<PathBuf>,

    /// Reference ranking TSV (system_id, z_score, raw_score).
    #[arg(long)]
    ranking: Option<PathBuf>,

    /// Learning algorithm: ewaf | exp3.
    #[arg(long)]
    algorithm: Option<String>,

    /// Loss strategy for unassessed cells: human-zero | human-avg | human-comet.
    #[arg(long)]
    loss: Option<String>,

    /// Score-to-loss convention: neg-score | one-minus-score.
    #[arg(long)]
    convention: Option<String>,

    /// Learning rate: `auto` or a positive number.
    #[arg(long)]
    eta: Option<String>,

    /// Number of runs (defaults: 1 for ewaf, 10 for exp3).
    #[arg(long)]
    runs: Option<usize>,

    /// Master seed; drives the shuffle and every run's selection stream.
    #[arg(long)]
    seed: Option<u64>,

    /// Comma-separated snapshot iterations, e.g. 10,50,100.
    #[arg(long)]
    checkpoints: Option<String>,

    /// Output directory (must be empty or absent).
    #[arg(long)]
    out: Option<PathBuf>,

    /// In exp3 mode, also record the full loss matrix (oracle-only
    /// instrumentation) so regret can be reported.
    #[arg(long)]
    oracle_losses: bool,
}

fn draft_from_cli(cli: &Cli) -> Result<ConfigDraft, Error> {
    Ok(ConfigDraft {
        corpus: cli.corpus.clone(),
        ranking: cli.ranking.clone(),
        algorithm: cli.algorithm.as_deref().map(str::parse).transpose()?,
        strategy: cli.loss.as_deref().map(str::parse).transpose()?,
        convention: cli.convention.as_deref().map(str::parse).transpose()?,
        eta: cli.eta.as_deref().map(parse_eta).transpose()?,
        runs: cli.runs,
        master_seed: cli.seed,
        checkpoints: cli
            .checkpoints
            .as_deref()
            .map(parse_checkpoints)
            .transpose()?,
        out_dir: cli.out.clone(),
        oracle_losses: cli.oracle_losses.then_some(true),
    })
}

fn run(cli: &Cli) -> Result<(), Error> {
    let file_draft = match &cli.config {
        Some(path) => ConfigDraft::from_file(path)?,
        None => ConfigDraft::default(),
    };
    let config = file_draft.merged_with(draft_from_cli(cli)?).finalize()?;
    let output = run_experiment(&config)?;

    println!(
        "{}: {} systems x {} segments, coverage {:.2}%",
        output.corpus_label,
        output.num_systems,
        output.num_segments,
        output.coverage * 100.0
    );
    println!(
        "{} / {} / {}, eta {:.6}, {} run(s), seed {}",
        config.algorithm.as_str(),
        config.strategy.as_str(),
        config.convention.as_str(),
        output.eta,
        config.runs,
        config.master_seed
    );
    println!("iteration  top-1  top-3");
    for &checkpoint in &output.checkpoints {
        let mut cells = [None, None];
        for row in &output.aggregate_overlap {
            if row.iteration == checkpoint {
                let slot = if row.n == 1 { 0 } else { 1 };
                cells[slot] = Some(row.overlap_of_mean);
            }
        }
        let fmt = |cell: Option<f64>| match cell {
            Some(v) => format!("{v:.2}"),
            None => "-".to_string(),
        };
        println!(
            "{checkpoint:>9}  {:>5}  {:>5}",
            fmt(cells[0]),
            fmt(cells[1])
        );
    }
    println!(
        "wrote {} files to {}",
        output.written.len(),
        config.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error ({}): {err}", err.category());
            let code = match err {
                Error::Config(_) => 2,
                Error::Data(_) | Error::Load { .. } => 3,
                Error::Contract(_) => 4,
                Error::Io(_) | Error::Csv(_) => 5,
            };
            ExitCode::from(code)
        }
    }
}
