//! Experiment orchestration: wires corpus, feedback, learner, and evaluation
//! together, replays the shuffled test set, and writes all artifacts.
//!
//! The replay loop per iteration: select a system from the current weight
//! distribution, resolve the segment's scores (every system under full
//! information, only the selected one under bandit feedback), convert scores
//! to losses, update the weights, snapshot.
//!
//! Determinism: the test set is shuffled once with the master seed and the
//! shuffle is shared by all runs. Run `r` draws its selections from a stream
//! seeded with `derive_run_seed(master_seed, r)`, which depends only on the
//! master seed and `r`, so adding runs never perturbs earlier ones and any
//! degree of parallelism yields byte-identical outputs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{Corpus, OfficialRanking};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate_runs, empirical_regret, overlap_report, top_n_overlap, write_overlap_csv,
    write_regret_csv, AggregateTrajectory, OverlapRow, ProvenanceCounts, TieBreak, Trajectory,
    OVERLAP_NS,
};
use crate::feedback::{
    resolve_score, score_to_loss, FallbackStrategy, LossConvention, RunningAverageState,
    ScoreSource,
};
use crate::learner::{Algorithm, EtaChoice, Ewaf, Exp3, LearnerConfig, LossVector};
use crate::plot::{
    write_aggregate_csv, write_aggregate_svg, write_trajectory_csv, write_trajectory_svg,
};

/// Checkpoint iterations reported by default, clipped to the horizon and
/// extended with the horizon itself.
pub const DEFAULT_CHECKPOINTS: [usize; 5] = [10, 50, 100, 500, 1000];

/// Everything a replay experiment needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub ranking: PathBuf,
    pub algorithm: Algorithm,
    pub strategy: FallbackStrategy,
    pub convention: LossConvention,
    pub eta: EtaChoice,
    pub runs: usize,
    pub master_seed: u64,
    /// Explicit snapshot iterations; `None` picks the default list.
    pub checkpoints: Option<Vec<usize>>,
    pub out_dir: PathBuf,
    /// Bandit mode only: also resolve every system's loss each iteration
    /// with a separate full-information state so regret can be reported.
    /// Oracle-only instrumentation; it never feeds the learner.
    pub oracle_losses: bool,
}

impl ExperimentConfig {
    /// One run suffices for the deterministic full-information learner;
    /// bandit runs are averaged over ten by default.
    pub fn default_runs(algorithm: Algorithm) -> usize {
        match algorithm {
            Algorithm::Ewaf => 1,
            Algorithm::Exp3 => 10,
        }
    }

    /// The checkpoint list for a horizon of `t` iterations.
    pub fn effective_checkpoints(&self, horizon: usize) -> Result<Vec<usize>> {
        match &self.checkpoints {
            Some(explicit) => {
                if explicit.is_empty() {
                    return Err(Error::Config("checkpoint list is empty".into()));
                }
                for &c in explicit {
                    if c == 0 || c > horizon {
                        return Err(Error::Config(format!(
                            "checkpoint {c} outside the valid range 1..={horizon}"
                        )));
                    }
                }
                let mut list = explicit.clone();
                list.sort_unstable();
                list.dedup();
                Ok(list)
            }
            None => {
                let mut list: Vec<usize> = DEFAULT_CHECKPOINTS
                    .iter()
                    .copied()
                    .filter(|&c| c <= horizon)
                    .collect();
                list.push(horizon);
                list.dedup();
                Ok(list)
            }
        }
    }
}

/// Partially specified configuration, as read from a config file or CLI
/// flags. Merging lets flags override file entries field by field.
#[derive(Debug, Clone, Default)]
pub struct ConfigDraft {
    pub corpus: Option<PathBuf>,
    pub ranking: Option<PathBuf>,
    pub algorithm: Option<Algorithm>,
    pub strategy: Option<FallbackStrategy>,
    pub convention: Option<LossConvention>,
    pub eta: Option<EtaChoice>,
    pub runs: Option<usize>,
    pub master_seed: Option<u64>,
    pub checkpoints: Option<Vec<usize>>,
    pub out_dir: Option<PathBuf>,
    pub oracle_losses: Option<bool>,
}

impl ConfigDraft {
    /// Parse a flat key-value file (`key = value`, `#` comments).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut draft = ConfigDraft::default();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{lineno}: expected `key = value`, got `{line}`",
                    path.display()
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            let context = |err: Error| Error::Config(format!("{}:{lineno}: {err}", path.display()));
            match key {
                "corpus" => draft.corpus = Some(PathBuf::from(value)),
                "ranking" => draft.ranking = Some(PathBuf::from(value)),
                "algorithm" => draft.algorithm = Some(value.parse().map_err(context)?),
                "loss" => draft.strategy = Some(value.parse().map_err(context)?),
                "convention" => draft.convention = Some(value.parse().map_err(context)?),
                "eta" => draft.eta = Some(parse_eta(value).map_err(context)?),
                "runs" => {
                    draft.runs = Some(value.parse().map_err(|_| {
                        context(Error::Config(format!("unparseable run count `{value}`")))
                    })?)
                }
                "seed" => {
                    draft.master_seed = Some(value.parse().map_err(|_| {
                        context(Error::Config(format!("unparseable seed `{value}`")))
                    })?)
                }
                "checkpoints" => {
                    draft.checkpoints = Some(parse_checkpoints(value).map_err(context)?)
                }
                "out" => draft.out_dir = Some(PathBuf::from(value)),
                "oracle_losses" => {
                    draft.oracle_losses = Some(value.parse().map_err(|_| {
                        context(Error::Config(format!(
                            "unparseable boolean `{value}` for oracle_losses"
                        )))
                    })?)
                }
                other => {
                    return Err(Error::Config(format!(
                        "{}:{lineno}: unknown key `{other}`",
                        path.display()
                    )))
                }
            }
        }
        Ok(draft)
    }

    /// Overlay `overrides` on top of `self`; set fields in `overrides` win.
    pub fn merged_with(self, overrides: ConfigDraft) -> ConfigDraft {
        ConfigDraft {
            corpus: overrides.corpus.or(self.corpus),
            ranking: overrides.ranking.or(self.ranking),
            algorithm: overrides.algorithm.or(self.algorithm),
            strategy: overrides.strategy.or(self.strategy),
            convention: overrides.convention.or(self.convention),
            eta: overrides.eta.or(self.eta),
            runs: overrides.runs.or(self.runs),
            master_seed: overrides.master_seed.or(self.master_seed),
            checkpoints: overrides.checkpoints.or(self.checkpoints),
            out_dir: overrides.out_dir.or(self.out_dir),
            oracle_losses: overrides.oracle_losses.or(self.oracle_losses),
        }
    }

    /// Fill defaults and require the mandatory fields.
    pub fn finalize(self) -> Result<ExperimentConfig> {
        let algorithm = self
            .algorithm
            .ok_or_else(|| Error::Config("missing `algorithm` (ewaf or exp3)".into()))?;
        let runs = self
            .runs
            .unwrap_or_else(|| ExperimentConfig::default_runs(algorithm));
        if runs == 0 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        if let Some(list) = &self.checkpoints {
            if list.contains(&0) {
                return Err(Error::Config("checkpoints must be >= 1".into()));
            }
        }
        Ok(ExperimentConfig {
            corpus: self
                .corpus
                .ok_or_else(|| Error::Config("missing `corpus` path".into()))?,
            ranking: self
                .ranking
                .ok_or_else(|| Error::Config("missing `ranking` path".into()))?,
            algorithm,
            strategy: self
                .strategy
                .ok_or_else(|| Error::Config("missing `loss` strategy".into()))?,
            convention: self.convention.unwrap_or(LossConvention::NegScore),
            eta: self.eta.unwrap_or(EtaChoice::Auto),
            runs,
            master_seed: self.master_seed.unwrap_or(0),
            checkpoints: self.checkpoints,
            out_dir: self
                .out_dir
                .ok_or_else(|| Error::Config("missing `out` directory".into()))?,
            oracle_losses: self.oracle_losses.unwrap_or(false),
        })
    }
}

/// `auto` or a positive number.
pub fn parse_eta(value: &str) -> Result<EtaChoice> {
    if value.eq_ignore_ascii_case("auto") {
        return Ok(EtaChoice::Auto);
    }
    let eta: f64 = value
        .parse()
        .map_err(|_| Error::Config(format!("eta must be `auto` or a number, got `{value}`")))?;
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::Config(format!(
            "eta must be positive, got `{value}`"
        )));
    }
    Ok(EtaChoice::Explicit(eta))
}

/// Comma-separated iteration numbers.
pub fn parse_checkpoints(value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("unparseable checkpoint `{part}`")))
        })
        .collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Selection-stream seed for one run. A pure function of the master seed
/// and the run index: adding runs never perturbs earlier runs.
pub fn derive_run_seed(master_seed: u64, run: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(run as u64))
}

/// One run's results.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub overlap: Vec<OverlapRow>,
    /// Present when the full loss matrix was available (always under full
    /// information, only with `oracle_losses` under bandit feedback).
    pub regret: Option<f64>,
}

/// Overlap at a checkpoint computed two ways for multi-run experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateOverlapRow {
    pub iteration: usize,
    pub n: usize,
    /// Overlap of the mean normalized weights (drives headline tables).
    pub overlap_of_mean: f64,
    /// Mean of the per-run overlaps.
    pub mean_overlap: f64,
}

/// Results plus the echo of everything needed to interpret them.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub corpus_label: String,
    pub num_segments: usize,
    pub num_systems: usize,
    pub coverage: f64,
    pub eta: f64,
    pub checkpoints: Vec<usize>,
    pub runs: Vec<RunOutcome>,
    pub aggregate: AggregateTrajectory,
    pub aggregate_overlap: Vec<AggregateOverlapRow>,
    /// Files written to the output directory.
    pub written: Vec<PathBuf>,
}

/// Run the configured experiment end to end and write all artifacts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let corpus = Corpus::load(&config.corpus)?;
    let ranking = OfficialRanking::load(&config.ranking)?;
    let reference_order = validate(config, &corpus, &ranking)?;
    let checkpoints = config.effective_checkpoints(corpus.num_segments())?;
    let learner_config = LearnerConfig {
        algorithm: config.algorithm,
        num_systems: corpus.num_systems(),
        horizon: corpus.num_segments(),
        eta: config.eta,
        action_set_size: None,
    };
    let eta = learner_config.resolved_eta()?;

    // One shuffle with the master seed, shared by every run.
    let shuffled = corpus.shuffled(config.master_seed);

    let runs: Vec<RunOutcome> = (0..config.runs)
        .into_par_iter()
        .map(|run| run_single(config, &shuffled, &reference_order, &checkpoints, eta, run))
        .collect::<Result<Vec<_>>>()?;

    let trajectories: Vec<Trajectory> = runs.iter().map(|r| r.trajectory.clone()).collect();
    let aggregate = aggregate_runs(&trajectories)?;
    let aggregate_overlap =
        aggregate_overlap_rows(&runs, &aggregate, &reference_order, &checkpoints)?;

    let mut output = ExperimentOutput {
        corpus_label: corpus.label().to_string(),
        num_segments: corpus.num_segments(),
        num_systems: corpus.num_systems(),
        coverage: corpus.coverage(),
        eta,
        checkpoints,
        runs,
        aggregate,
        aggregate_overlap,
        written: Vec::new(),
    };
    write_outputs(config, &mut output)?;
    Ok(output)
}

/// Up-front validation; returns the ranking as corpus system indices.
fn validate(
    config: &ExperimentConfig,
    corpus: &Corpus,
    ranking: &OfficialRanking,
) -> Result<Vec<usize>> {
    let mut reference_order = Vec::with_capacity(ranking.len());
    for entry in ranking.entries() {
        let index = corpus.system_index(&entry.system_id).ok_or_else(|| {
            Error::Data(format!(
                "ranking system `{}` does not appear in the corpus",
                entry.system_id
            ))
        })?;
        reference_order.push(index);
    }
    if config.strategy == FallbackStrategy::HumanComet && !corpus.has_complete_fallbacks() {
        return Err(Error::Data(
            "the human-comet strategy needs a fallback score on every record".into(),
        ));
    }
    config.effective_checkpoints(corpus.num_segments())?;
    if config.runs == 0 {
        return Err(Error::Config("runs must be >= 1".into()));
    }
    if config.out_dir.exists() {
        let occupied = config.out_dir.read_dir()?.next().is_some();
        if occupied {
            return Err(Error::Config(format!(
                "output directory `{}` is not empty",
                config.out_dir.display()
            )));
        }
    }
    Ok(reference_order)
}

fn run_single(
    config: &ExperimentConfig,
    corpus: &Corpus,
    reference_order: &[usize],
    checkpoints: &[usize],
    eta: f64,
    run: usize,
) -> Result<RunOutcome> {
    let horizon = corpus.num_segments();
    let num_systems = corpus.num_systems();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_run_seed(config.master_seed, run));
    let mut avg_state = RunningAverageState::new(num_systems);
    let with_context = |err: Error, iteration: usize| match err {
        Error::Data(msg) => Error::Data(format!("run {run}, iteration {}: {msg}", iteration + 1)),
        other => other,
    };

    let mut trajectory = Trajectory::new(
        corpus.systems().to_vec(),
        vec![1.0 / num_systems as f64; num_systems],
    )?;

    let loss_matrix: Option<Vec<LossVector>> = match config.algorithm {
        Algorithm::Ewaf => {
            let mut learner = Ewaf::new(num_systems, eta)?;
            let mut rows = Vec::with_capacity(horizon);
            for t in 0..horizon {
                let chosen = learner.select(&mut rng);
                let mut values = Vec::with_capacity(num_systems);
                let mut observed = Vec::with_capacity(num_systems);
                let mut provenance = ProvenanceCounts::default();
                for system in 0..num_systems {
                    let resolution = resolve_score(
                        corpus.record(t, system),
                        system,
                        config.strategy,
                        &mut avg_state,
                    )
                    .map_err(|e| with_context(e, t))?;
                    provenance.add(resolution.source);
                    values.push(score_to_loss(&resolution, config.convention));
                    observed.push(resolution.source == ScoreSource::Human);
                }
                let losses = LossVector::new(values, observed)?;
                learner.update(&losses)?;
                trajectory.record_iteration(
                    learner.distribution(),
                    chosen,
                    provenance,
                    avg_state.counts().to_vec(),
                )?;
                rows.push(losses);
            }
            Some(rows)
        }
        Algorithm::Exp3 => {
            let mut learner = Exp3::new(num_systems, eta)?;
            // Separate full-information state so the oracle matrix never
            // leaks into the bandit's running averages.
            let mut oracle_state = config.oracle_losses.then(|| {
                (
                    RunningAverageState::new(num_systems),
                    Vec::with_capacity(horizon),
                )
            });
            for t in 0..horizon {
                let (arm, prob) = learner.select(&mut rng);
                let resolution =
                    resolve_score(corpus.record(t, arm), arm, config.strategy, &mut avg_state)
                        .map_err(|e| with_context(e, t))?;
                let loss = score_to_loss(&resolution, config.convention);
                learner.update(arm, loss, prob)?;
                let mut provenance = ProvenanceCounts::default();
                provenance.add(resolution.source);
                if let Some((full_state, rows)) = oracle_state.as_mut() {
                    let mut values = Vec::with_capacity(num_systems);
                    let mut observed = Vec::with_capacity(num_systems);
                    for system in 0..num_systems {
                        let full = resolve_score(
                            corpus.record(t, system),
                            system,
                            config.strategy,
                            full_state,
                        )
                        .map_err(|e| with_context(e, t))?;
                        values.push(score_to_loss(&full, config.convention));
                        observed.push(full.source == ScoreSource::Human);
                    }
                    rows.push(LossVector::new(values, observed)?);
                }
                trajectory.record_iteration(
                    learner.distribution(),
                    arm,
                    provenance,
                    avg_state.counts().to_vec(),
                )?;
            }
            oracle_state.map(|(_, rows)| rows)
        }
    };

    let overlap = overlap_report(&trajectory, reference_order, checkpoints)?;
    let regret = match &loss_matrix {
        Some(rows) => Some(empirical_regret(&trajectory, rows)?),
        None => None,
    };
    Ok(RunOutcome {
        trajectory,
        overlap,
        regret,
    })
}

fn aggregate_overlap_rows(
    runs: &[RunOutcome],
    aggregate: &AggregateTrajectory,
    reference_order: &[usize],
    checkpoints: &[usize],
) -> Result<Vec<AggregateOverlapRow>> {
    let mut mean_by_cell: HashMap<(usize, usize), (f64, usize)> = HashMap::new();
    for run in runs {
        for row in &run.overlap {
            let cell = mean_by_cell
                .entry((row.iteration, row.n))
                .or_insert((0.0, 0));
            cell.0 += row.overlap;
            cell.1 += 1;
        }
    }
    let mut rows = Vec::new();
    for &checkpoint in checkpoints {
        // Tie-break with human counts pooled across runs.
        let mut pooled = vec![0u64; aggregate.num_systems()];
        for run in runs {
            for (total, count) in pooled
                .iter_mut()
                .zip(run.trajectory.human_counts_at(checkpoint)?)
            {
                *total += count;
            }
        }
        let tie = TieBreak::new(&pooled, aggregate.system_ids());
        let mean_weights = aggregate.mean_at(checkpoint)?;
        for n in OVERLAP_NS {
            if n > aggregate.num_systems() || n > reference_order.len() {
                continue;
            }
            let (sum, count) = mean_by_cell[&(checkpoint, n)];
            rows.push(AggregateOverlapRow {
                iteration: checkpoint,
                n,
                overlap_of_mean: top_n_overlap(mean_weights, reference_order, n, tie)?,
                mean_overlap: sum / count as f64,
            });
        }
    }
    Ok(rows)
}

/// Write trajectory CSV and SVG next to each other: `<base>.csv`, `<base>.svg`.
pub fn emit_plot_data(trajectory: &Trajectory, base: &Path) -> Result<[PathBuf; 2]> {
    let csv_path = base.with_extension("csv");
    let svg_path = base.with_extension("svg");
    let title = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "weights".to_string());
    write_trajectory_csv(trajectory, &csv_path)?;
    write_trajectory_svg(trajectory, &title, &svg_path)?;
    Ok([csv_path, svg_path])
}

/// Aggregate flavor of [`emit_plot_data`], with a variance column and
/// whiskers.
pub fn emit_aggregate_plot_data(
    aggregate: &AggregateTrajectory,
    base: &Path,
) -> Result<[PathBuf; 2]> {
    let csv_path = base.with_extension("csv");
    let svg_path = base.with_extension("svg");
    let title = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "weights".to_string());
    write_aggregate_csv(aggregate, &csv_path)?;
    write_aggregate_svg(aggregate, &title, &svg_path)?;
    Ok([csv_path, svg_path])
}

fn write_outputs(config: &ExperimentConfig, output: &mut ExperimentOutput) -> Result<()> {
    let created_dir = !config.out_dir.exists();
    fs::create_dir_all(&config.out_dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = write_outputs_inner(config, output, &mut written);
    match result {
        Ok(()) => {
            output.written = written;
            Ok(())
        }
        Err(err) => {
            // Leave no partial artifacts behind.
            for path in written {
                let _ = fs::remove_file(path);
            }
            if created_dir {
                let _ = fs::remove_dir_all(&config.out_dir);
            }
            Err(err)
        }
    }
}

fn write_outputs_inner(
    config: &ExperimentConfig,
    output: &ExperimentOutput,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let dir = &config.out_dir;
    for (run, outcome) in output.runs.iter().enumerate() {
        let base = dir.join(format!("trajectory_run_{run:03}"));
        let [csv_path, svg_path] = emit_plot_data(&outcome.trajectory, &base)?;
        written.push(csv_path);
        written.push(svg_path);

        let choices_path = dir.join(format!("choices_run_{run:03}.csv"));
        write_choices_csv(&outcome.trajectory, &choices_path)?;
        written.push(choices_path);

        let overlap_path = dir.join(format!("overlap_run_{run:03}.csv"));
        write_overlap_csv(&outcome.overlap, &overlap_path)?;
        written.push(overlap_path);
    }

    if output.runs.len() > 1 {
        let base = dir.join("trajectory_aggregate");
        let [csv_path, svg_path] = emit_aggregate_plot_data(&output.aggregate, &base)?;
        written.push(csv_path);
        written.push(svg_path);

        let aggregate_overlap_path = dir.join("overlap_aggregate.csv");
        write_aggregate_overlap_csv(&output.aggregate_overlap, &aggregate_overlap_path)?;
        written.push(aggregate_overlap_path);
    }

    let regrets: Vec<(usize, f64)> = output
        .runs
        .iter()
        .enumerate()
        .filter_map(|(run, outcome)| outcome.regret.map(|regret| (run, regret)))
        .collect();
    if !regrets.is_empty() {
        let regret_path = dir.join("regret.csv");
        write_regret_csv(&regrets, &regret_path)?;
        written.push(regret_path);
    }

    let manifest_path = dir.join("manifest.txt");
    fs::write(&manifest_path, render_manifest(config, output))?;
    written.push(manifest_path);
    Ok(())
}

fn write_choices_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "iteration",
        "system_id",
        "probability",
        "human",
        "fallback_zero",
        "fallback_running_avg",
        "fallback_precomputed",
    ])?;
    for (t, (&chosen, provenance)) in trajectory
        .chosen()
        .iter()
        .zip(trajectory.provenance())
        .enumerate()
    {
        let played = trajectory.distribution_before(t + 1)?;
        writer.write_record([
            (t + 1).to_string(),
            trajectory.system_ids()[chosen].clone(),
            format!("{}", played[chosen]),
            provenance.human.to_string(),
            provenance.fallback_zero.to_string(),
            provenance.fallback_running_avg.to_string(),
            provenance.fallback_precomputed.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn write_aggregate_overlap_csv(rows: &[AggregateOverlapRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "iteration",
        "top_n",
        "overlap_of_mean_weights",
        "mean_run_overlap",
    ])?;
    for row in rows {
        writer.write_record([
            row.iteration.to_string(),
            row.n.to_string(),
            format!("{:.2}", row.overlap_of_mean),
            format!("{:.2}", row.mean_overlap),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn render_manifest(config: &ExperimentConfig, output: &ExperimentOutput) -> String {
    use std::fmt::Write as _;
    let mut text = String::new();
    let _ = writeln!(text, "# experiment manifest");
    let _ = writeln!(text, "tool = enselect {}", env!("CARGO_PKG_VERSION"));
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let _ = writeln!(text, "created_unix = {created}");
    let _ = writeln!(text, "corpus = {}", config.corpus.display());
    let _ = writeln!(text, "corpus_label = {}", output.corpus_label);
    let _ = writeln!(text, "ranking = {}", config.ranking.display());
    let _ = writeln!(text, "segments = {}", output.num_segments);
    let _ = writeln!(text, "systems = {}", output.num_systems);
    let _ = writeln!(text, "coverage = {:.6}", output.coverage);
    let _ = writeln!(text, "algorithm = {}", config.algorithm.as_str());
    let _ = writeln!(text, "loss = {}", config.strategy.as_str());
    let _ = writeln!(text, "convention = {}", config.convention.as_str());
    let eta_mode = match config.eta {
        EtaChoice::Auto => "auto",
        EtaChoice::Explicit(_) => "explicit",
    };
    let _ = writeln!(text, "eta_mode = {eta_mode}");
    let _ = writeln!(text, "eta = {}", output.eta);
    let _ = writeln!(text, "runs = {}", config.runs);
    let _ = writeln!(text, "master_seed = {}", config.master_seed);
    let _ = writeln!(text, "shuffle_seed = {}", config.master_seed);
    for run in 0..config.runs {
        let _ = writeln!(
            text,
            "run_seed_{run} = {}",
            derive_run_seed(config.master_seed, run)
        );
    }
    let checkpoints: Vec<String> = output.checkpoints.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(text, "checkpoints = {}", checkpoints.join(","));
    let _ = writeln!(text, "oracle_losses = {}", config.oracle_losses);
    for (run, outcome) in output.runs.iter().enumerate() {
        let totals = outcome.trajectory.total_provenance();
        let _ = writeln!(
            text,
            "provenance_run_{run} = human={},fallback_zero={},fallback_running_avg={},fallback_precomputed={}",
            totals.human, totals.fallback_zero, totals.fallback_running_avg, totals.fallback_precomputed
        );
    }
    text
}
